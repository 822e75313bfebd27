//! Unnormalized multi-qubit states with a logarithmic scale ledger.
//!
//! The represented vector is `e^log_scale · amps`. Non-unitary gates push the
//! working amplitudes up or down; [`ScaledState::rescale`] moves the magnitude
//! into `log_scale` so the amplitudes stay near 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Working amplitudes are rescaled when the largest magnitude leaves
/// `[2^-32, 2^32]`.
pub const AUTO_RESCALE_LOW: f64 = 2.328_306_436_538_696_3e-10;
pub const AUTO_RESCALE_HIGH: f64 = 4_294_967_296.0;

/// Largest register the dense representation will allocate.
pub const MAX_QUBITS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledState {
    n_qubits: usize,
    amps: Vec<Complex64>,
    log_scale: f64,
}

/// `d² = mantissa · e^log_part`, `mantissa ∈ [1, e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSquared {
    pub mantissa: f64,
    pub log_part: f64,
}

impl NormSquared {
    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.log_part
    }

    /// Linear value; `inf` or `0` when out of double range.
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_part.exp()
    }

    fn from_ln(ln: f64) -> Self {
        let log_part = ln.floor();
        let mantissa = (ln - log_part).exp();
        // exp of a value just below 1 can round to e.
        if mantissa >= std::f64::consts::E {
            NormSquared {
                mantissa: 1.0,
                log_part: log_part + 1.0,
            }
        } else {
            NormSquared { mantissa, log_part }
        }
    }
}

impl ScaledState {
    /// Computational basis state `|basis_index⟩` on `n_qubits` qubits.
    pub fn init_basis(n_qubits: usize, basis_index: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                n: n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let dim = 1usize << n_qubits;
        if basis_index >= dim {
            return Err(Error::IndexOutOfRange {
                what: "basis",
                index: basis_index,
                limit: dim,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[basis_index] = Complex64::new(1.0, 0.0);
        Ok(ScaledState {
            n_qubits,
            amps,
            log_scale: 0.0,
        })
    }

    pub fn zeros_state(n_qubits: usize) -> Result<Self> {
        Self::init_basis(n_qubits, 0)
    }

    /// Builds a state from explicit amplitudes. The length must be a power of
    /// two and at least one amplitude must be nonzero.
    pub fn from_amplitudes(amps: Vec<Complex64>, log_scale: f64) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) || !log_scale.is_finite() {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        if amps.iter().all(|a| a.norm_sqr() == 0.0) {
            return Err(Error::InvalidArgument("all-zero state".into()));
        }
        Ok(ScaledState {
            n_qubits: len.trailing_zeros() as usize,
            amps,
            log_scale,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn set_log_scale(&mut self, log_scale: f64) {
        self.log_scale = log_scale;
    }

    pub(crate) fn add_log_scale(&mut self, delta: f64) {
        self.log_scale += delta;
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::qubit(qubit, self.n_qubits));
        }
        Ok(())
    }

    /// `Σ |amp|²` of the working amplitudes (ledger not applied).
    pub fn working_norm_sqr(&self) -> f64 {
        par::chunked_sum(&self.amps, par::CHUNK, |_, c| {
            c.iter().map(|a| a.norm_sqr()).sum()
        })
    }

    pub fn norm_squared(&self) -> NormSquared {
        let s = self.working_norm_sqr();
        NormSquared::from_ln(s.ln() + 2.0 * self.log_scale)
    }

    /// Largest `|amp|` in the working amplitudes.
    pub fn max_abs(&self) -> f64 {
        par::map_chunks(&self.amps, par::CHUNK, |_, c| {
            c.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
        .sqrt()
    }

    /// Unnormalized weights `(Σ_{bit=0} |a|², Σ_{bit=1} |a|²)` for `qubit`.
    pub fn qubit_weights(&self, qubit: usize) -> Result<(f64, f64)> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        let parts = par::map_chunks(&self.amps, par::CHUNK, |ci, c| {
            let base = ci * par::CHUNK;
            let (mut w0, mut w1) = (0.0, 0.0);
            for (k, a) in c.iter().enumerate() {
                if (base + k) & mask == 0 {
                    w0 += a.norm_sqr();
                } else {
                    w1 += a.norm_sqr();
                }
            }
            (w0, w1)
        });
        Ok(parts
            .into_iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y)))
    }

    /// Outcome probabilities `(p0, p1)` for measuring `qubit`.
    pub fn measure_probabilities(&self, qubit: usize) -> Result<(f64, f64)> {
        let (w0, w1) = self.qubit_weights(qubit)?;
        let total = w0 + w1;
        Ok((w0 / total, w1 / total))
    }

    /// Projects `qubit` onto `outcome` and rescales.
    pub fn collapse(&self, qubit: usize, outcome: u8) -> Result<Self> {
        let mut s = self.clone();
        s.collapse_in_place(qubit, outcome)?;
        Ok(s)
    }

    pub fn collapse_in_place(&mut self, qubit: usize, outcome: u8) -> Result<()> {
        let (w0, w1) = self.qubit_weights(qubit)?;
        let w = if outcome == 0 { w0 } else { w1 };
        if w == 0.0 {
            return Err(Error::ZeroProbability { qubit, outcome });
        }
        let mask = 1usize << qubit;
        let keep = if outcome == 0 { 0 } else { mask };
        let zero = Complex64::new(0.0, 0.0);
        par::for_each_chunk_mut(&mut self.amps, par::CHUNK, |ci, c| {
            let base = ci * par::CHUNK;
            for (k, a) in c.iter_mut().enumerate() {
                if (base + k) & mask != keep {
                    *a = zero;
                }
            }
        });
        self.rescale_in_place();
        Ok(())
    }

    /// Factors the largest magnitude into the ledger so that `max |amp| = 1`.
    pub fn rescale(&self) -> Self {
        let mut s = self.clone();
        s.rescale_in_place();
        s
    }

    pub fn rescale_in_place(&mut self) {
        let m = self.max_abs();
        if m == 0.0 || (m - 1.0).abs() <= 4.0 * f64::EPSILON {
            return;
        }
        let inv = 1.0 / m;
        if m.log2().fract() == 0.0 {
            // Powers of two divide exactly.
            par::for_each_chunk_mut(&mut self.amps, par::CHUNK, |_, c| {
                c.iter_mut().for_each(|a| *a *= inv)
            });
        } else {
            par::for_each_chunk_mut(&mut self.amps, par::CHUNK, |_, c| {
                c.iter_mut().for_each(|a| *a /= m)
            });
        }
        self.log_scale += m.ln();
    }

    /// Rescales only if the working amplitudes left the safe window.
    pub fn rescale_if_needed(&mut self) {
        let m = self.max_abs();
        if !(AUTO_RESCALE_LOW..=AUTO_RESCALE_HIGH).contains(&m) {
            self.rescale_in_place();
        }
    }

    /// Amplitudes divided by the true norm; phase is kept.
    pub fn normalized_amplitudes(&self) -> Vec<Complex64> {
        let n = self.working_norm_sqr().sqrt();
        self.amps.iter().map(|a| a / n).collect()
    }

    /// True amplitudes `e^log_scale · amps` (may overflow for large ledgers).
    pub fn true_amplitudes(&self) -> Vec<Complex64> {
        let f = self.log_scale.exp();
        self.amps.iter().map(|a| a * f).collect()
    }

    /// Probability of every basis index after normalization.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        let total = self.working_norm_sqr();
        self.amps.iter().map(|a| a.norm_sqr() / total).collect()
    }
}
