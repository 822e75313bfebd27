//! Two-mode many-boson qubit: `c₀|N, 0⟩ + c₁|0, M⟩`.
//!
//! `G(g)` is realized by pumping bosons into mode 0 and draining mode 1,
//! `N → gN`, `M → M/g`, so the boson numbers grow as `gʳ`. Counts are exact
//! big integers; only the final probabilities are floating point, formed
//! from logarithms so that huge counts never overflow.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::PROB_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct BosonQubit {
    pub n: BigUint,
    pub m: BigUint,
    pub c0: Complex64,
    pub c1: Complex64,
}

/// `ρ = diag(N|c₀|², M|c₁|²)` with the integer factors kept exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    pub n: BigUint,
    pub m: BigUint,
    pub w0: f64,
    pub w1: f64,
}

impl ReducedDensity {
    /// Diagonal in floating point; entries may be infinite for huge counts.
    pub fn diagonal(&self) -> [f64; 2] {
        [big_to_f64(&self.n) * self.w0, big_to_f64(&self.m) * self.w1]
    }

    /// `ln` of each diagonal entry, finite whenever the entry is nonzero.
    pub fn ln_diagonal(&self) -> [f64; 2] {
        [
            big_ln(&self.n) + self.w0.ln(),
            big_ln(&self.m) + self.w1.ln(),
        ]
    }

    /// Exact factors equal and weights within `tol`.
    pub fn approx_eq(&self, other: &ReducedDensity, tol: f64) -> bool {
        self.n == other.n
            && self.m == other.m
            && (self.w0 - other.w0).abs() <= tol
            && (self.w1 - other.w1).abs() <= tol
    }
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Natural log of a big integer from its top 64 bits; `-∞` for zero.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return (x.to_u64().expect("fits") as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits") as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn check_weights(w0: f64, w1: f64) -> Result<()> {
    if !(w0.is_finite() && w1.is_finite()) || (w0 + w1 - 1.0).abs() > PROB_TOL {
        return Err(Error::Boson(format!(
            "amplitude weights {w0} + {w1} must sum to 1"
        )));
    }
    Ok(())
}

impl BosonQubit {
    pub fn new(n: BigUint, m: BigUint, c0: Complex64, c1: Complex64) -> Result<Self> {
        check_weights(c0.norm_sqr(), c1.norm_sqr())?;
        Ok(BosonQubit { n, m, c0, c1 })
    }

    pub fn reduced_density(&self) -> ReducedDensity {
        ReducedDensity {
            n: self.n.clone(),
            m: self.m.clone(),
            w0: self.c0.norm_sqr(),
            w1: self.c1.norm_sqr(),
        }
    }

    /// Probabilities of finding one boson in mode 0 or mode 1.
    pub fn single_particle_measure_prob(&self) -> Result<(f64, f64)> {
        mode_probabilities(&self.reduced_density())
    }

    /// `N → gN`, `M → M/g` for an integer `g ≥ 2` dividing `M`.
    pub fn apply_g(&self, g: u64) -> Result<Self> {
        check_boson_g(g)?;
        let g = BigUint::from(g);
        if !(&self.m % &g).is_zero() {
            return Err(Error::Boson(format!(
                "g = {g} does not divide M = {}",
                self.m
            )));
        }
        Ok(BosonQubit {
            n: &self.n * &g,
            m: &self.m / &g,
            c0: self.c0,
            c1: self.c1,
        })
    }
}

fn check_boson_g(g: u64) -> Result<()> {
    if g < 2 {
        return Err(Error::Boson(format!(
            "g must be an integer of at least 2, got {g}"
        )));
    }
    Ok(())
}

/// Parses a boson-model gain, rejecting non-integers rather than rounding.
pub fn parse_boson_g(text: &str) -> Result<u64> {
    let g: u64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Boson(format!("g must be an integer of at least 2, got `{text}`")))?;
    check_boson_g(g)?;
    Ok(g)
}

/// `(p₀, p₁) ∝ (N|c₀|², M|c₁|²)`, via the log-odds.
pub fn mode_probabilities(rho: &ReducedDensity) -> Result<(f64, f64)> {
    let [l0, l1] = rho.ln_diagonal();
    if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
        return Err(Error::Boson("reduced density matrix has zero trace".into()));
    }
    let logit = l0 - l1;
    let logistic = |x: f64| {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    };
    Ok((logistic(logit), logistic(-logit)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceReport {
    pub schema: &'static str,
    pub g: u64,
    pub steps: u64,
    #[serde(rename = "N_initial")]
    pub n_initial: String,
    #[serde(rename = "M_initial")]
    pub m_initial: String,
    #[serde(rename = "N")]
    pub n_final: String,
    #[serde(rename = "M")]
    pub m_final: String,
    /// `(gʳ - 1) N`
    pub pumped: String,
    /// `M - M/gʳ`
    pub removed: String,
    /// `log₂ gʳ`, the exponent of the growth in mode 0.
    pub growth_log2: f64,
    pub rho_diagonal: [f64; 2],
    pub rho_ln_diagonal: [f64; 2],
    pub p_mode0: f64,
    pub p_mode1: f64,
}

/// Applies `G(g)` `r` times and accounts for the bosons moved.
pub fn resource_report(b0: &BosonQubit, g: u64, r: u64) -> Result<(BosonQubit, ResourceReport)> {
    check_boson_g(g)?;
    let gr = num_traits::pow::pow(
        BigUint::from(g),
        usize::try_from(r).map_err(|_| Error::Boson("r too large".into()))?,
    );
    if !(&b0.m % &gr).is_zero() {
        return Err(Error::Boson(format!(
            "g^r = {g}^{r} does not divide M = {}",
            b0.m
        )));
    }
    let mut b = b0.clone();
    for _ in 0..r {
        b = b.apply_g(g)?;
    }
    let pumped = &b0.n * (&gr - BigUint::one());
    let removed = &b0.m - &b0.m / &gr;
    let rho = b.reduced_density();
    let (p0, p1) = if rho.ln_diagonal().iter().all(|l| *l == f64::NEG_INFINITY) {
        (f64::NAN, f64::NAN)
    } else {
        mode_probabilities(&rho)?
    };
    let report = ResourceReport {
        schema: "nqc.boson/1",
        g,
        steps: r,
        n_initial: b0.n.to_string(),
        m_initial: b0.m.to_string(),
        n_final: b.n.to_string(),
        m_final: b.m.to_string(),
        pumped: pumped.to_string(),
        removed: removed.to_string(),
        growth_log2: r as f64 * (g as f64).log2(),
        rho_diagonal: rho.diagonal(),
        rho_ln_diagonal: rho.ln_diagonal(),
        p_mode0: p0,
        p_mode1: p1,
    };
    Ok((b, report))
}

/// `|x⟩|N, 0⟩ + |y⟩|0, M⟩` with `k` register qubits and `⟨x|y⟩ = 0`.
/// The branch weights `⟨x|x⟩`, `⟨y|y⟩` play the roles of `|c₀|²`, `|c₁|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntangledBosonState {
    pub k: usize,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub n: BigUint,
    pub m: BigUint,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(u, v)| u.conj() * v).sum()
}

impl EntangledBosonState {
    pub fn new(
        k: usize,
        x: Vec<Complex64>,
        y: Vec<Complex64>,
        n: BigUint,
        m: BigUint,
    ) -> Result<Self> {
        if k >= usize::BITS as usize || x.len() != 1 << k || y.len() != 1 << k {
            return Err(Error::Boson(format!("branches must have 2^{k} amplitudes")));
        }
        let overlap = inner(&x, &y).norm();
        if overlap > PROB_TOL {
            return Err(Error::Boson(format!(
                "register branches are not orthogonal: |<x|y>| = {overlap:e}"
            )));
        }
        let e = EntangledBosonState { k, x, y, n, m };
        let (w0, w1) = e.weights();
        check_weights(w0, w1)?;
        Ok(e)
    }

    pub fn weights(&self) -> (f64, f64) {
        (inner(&self.x, &self.x).re, inner(&self.y, &self.y).re)
    }

    /// Single-boson density matrix after tracing out the register.
    pub fn reduced_density(&self) -> ReducedDensity {
        let (w0, w1) = self.weights();
        ReducedDensity {
            n: self.n.clone(),
            m: self.m.clone(),
            w0,
            w1,
        }
    }

    /// Product state with the same branch weights.
    pub fn product_equivalent(&self) -> BosonQubit {
        let (w0, w1) = self.weights();
        BosonQubit {
            n: self.n.clone(),
            m: self.m.clone(),
            c0: Complex64::new(w0.sqrt(), 0.0),
            c1: Complex64::new(w1.sqrt(), 0.0),
        }
    }

    /// Register state left after a boson is found in `mode`, normalized.
    pub fn collapse(&self, mode: u8) -> Result<Vec<Complex64>> {
        let (branch, w, count) = match mode {
            0 => (&self.x, self.weights().0, &self.n),
            1 => (&self.y, self.weights().1, &self.m),
            _ => return Err(Error::Boson(format!("mode must be 0 or 1, got {mode}"))),
        };
        if w <= 0.0 || count.is_zero() {
            return Err(Error::Boson(format!(
                "no boson can be found in mode {mode}"
            )));
        }
        let s = 1.0 / w.sqrt();
        Ok(branch.iter().map(|z| z * s).collect())
    }
}

/// `entangled_reduced_density` in free-function form.
pub fn entangled_reduced_density(e: &EntangledBosonState) -> ReducedDensity {
    e.reduced_density()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn half() -> Complex64 {
        c(1.0 / 2f64.sqrt())
    }

    #[test]
    fn density_examples() {
        let b = BosonQubit::new(big(4), big(2), half(), half()).unwrap();
        let d = b.reduced_density().diagonal();
        assert!((d[0] - 2.0).abs() < 1e-15 && (d[1] - 1.0).abs() < 1e-15);
        let (p0, p1) = b.single_particle_measure_prob().unwrap();
        assert!((p0 - 2.0 / 3.0).abs() < 1e-15 && (p1 - 1.0 / 3.0).abs() < 1e-15);

        let b = BosonQubit::new(big(6), big(6), c(0.6), c(0.8)).unwrap();
        let (p0, p1) = b.single_particle_measure_prob().unwrap();
        assert!((p0 - 0.36).abs() < 1e-15 && (p1 - 0.64).abs() < 1e-15);

        let b = BosonQubit::new(big(5), big(3), c(1.0), c(0.0)).unwrap();
        assert_eq!(b.reduced_density().diagonal(), [5.0, 0.0]);
        assert_eq!(b.single_particle_measure_prob().unwrap(), (1.0, 0.0));

        assert!(BosonQubit::new(big(1), big(1), c(1.0), c(1.0)).is_err());
        let zero = BosonQubit::new(big(0), big(0), half(), half()).unwrap();
        assert!(zero.single_particle_measure_prob().is_err());
    }

    #[test]
    fn huge_counts_stay_finite() {
        let b = BosonQubit::new(BigUint::one() << 100usize, big(1), half(), half()).unwrap();
        let (p0, p1) = b.single_particle_measure_prob().unwrap();
        assert!((1.0 - p0).abs() < 1e-30);
        assert!((p1 - 0.5f64.powi(100)).abs() < 1e-40);
        assert!(
            (big_ln(&(BigUint::one() << 1000usize)) - 1000.0 * std::f64::consts::LN_2).abs() < 1e-9
        );
    }

    #[test]
    fn g_examples() {
        let b = BosonQubit::new(big(4), big(4), half(), half()).unwrap();
        let after = b.apply_g(2).unwrap();
        assert_eq!((after.n.clone(), after.m.clone()), (big(8), big(2)));
        assert_eq!((after.c0, after.c1), (b.c0, b.c1));
        // odds scale by g² exactly
        assert_eq!(&after.n * &b.m, big(4) * &b.n * &after.m);

        let odd = BosonQubit::new(big(1), big(3), half(), half()).unwrap();
        assert!(odd.apply_g(2).is_err());
        assert!(b.apply_g(1).is_err());
        assert!(parse_boson_g("2.5").is_err());
        assert_eq!(parse_boson_g("3").unwrap(), 3);

        let mut b = BosonQubit::new(big(1), big(1024), half(), half()).unwrap();
        for _ in 0..10 {
            b = b.apply_g(2).unwrap();
        }
        assert_eq!((b.n, b.m), (big(1024), big(1)));
    }

    #[test]
    fn resource_examples() {
        let b = BosonQubit::new(big(1), big(1024), half(), half()).unwrap();
        let (_, r) = resource_report(&b, 2, 10).unwrap();
        assert_eq!((r.pumped.as_str(), r.removed.as_str()), ("1023", "1023"));
        let (_, r) = resource_report(&b, 2, 0).unwrap();
        assert_eq!((r.pumped.as_str(), r.removed.as_str()), ("0", "0"));

        let b = BosonQubit::new(big(2), BigUint::one() << 64usize, half(), half()).unwrap();
        let (after, r) = resource_report(&b, 2, 64).unwrap();
        let want = ((BigUint::one() << 64usize) - 1u32) * 2u32;
        assert_eq!(r.pumped, want.to_string());
        assert_eq!(after.n, BigUint::one() << 65usize);

        let b = BosonQubit::new(big(4), big(4), half(), half()).unwrap();
        assert!(resource_report(&b, 2, 3).is_err());
        let b = BosonQubit::new(big(4), big(8), half(), half()).unwrap();
        let (after, r) = resource_report(&b, 2, 3).unwrap();
        assert_eq!((after.n, after.m), (big(32), big(1)));
        assert_eq!((r.n_final.as_str(), r.m_final.as_str()), ("32", "1"));
    }

    #[test]
    fn entangled_examples() {
        let z = c(0.0);
        let x = vec![half(), z, z, z];
        let y = vec![z, z, z, half()];
        let e = EntangledBosonState::new(2, x.clone(), y, big(4), big(2)).unwrap();
        let d = entangled_reduced_density(&e);
        let dd = d.diagonal();
        assert!((dd[0] - 2.0).abs() < 1e-15 && (dd[1] - 1.0).abs() < 1e-15);
        assert!(d.approx_eq(&e.product_equivalent().reduced_density(), 1e-12));
        let kept = e.collapse(0).unwrap();
        assert!((kept[0] - c(1.0)).norm() < 1e-15);

        let e =
            EntangledBosonState::new(2, vec![c(1.0), z, z, z], vec![z; 4], big(4), big(2)).unwrap();
        assert_eq!(e.reduced_density().diagonal(), [4.0, 0.0]);
        assert!(e.collapse(1).is_err());

        let y = vec![c(0.5), z, z, c(0.5)];
        assert!(EntangledBosonState::new(2, x, y, big(4), big(2)).is_err());
    }
}
