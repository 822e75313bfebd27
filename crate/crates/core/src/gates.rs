//! The gate set `{H, T, X, CNOT, G, C-G, U2}` and its amplitude kernels.
//!
//! Two-qubit matrices are written in the `(control, target)` basis with the
//! control as the high bit: rows are `|c t⟩ = |00⟩, |01⟩, |10⟩, |11⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{Mat2, Mat4};
use crate::par;
use crate::state::ScaledState;

/// Bounds on the `G` parameter; outside them the ledger arithmetic loses its
/// guarantees.
pub const G_MIN: f64 = 2.328_306_436_538_696_3e-10;
pub const G_MAX: f64 = 4_294_967_296.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    T,
    X,
    Cnot,
    G,
    Cg,
    U2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    H(usize),
    T(usize),
    X(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    G {
        target: usize,
        g: f64,
    },
    Cg {
        control: usize,
        target: usize,
        g: f64,
    },
    U2 {
        target: usize,
        matrix: Mat2,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One(Mat2),
    Two(Mat4),
}

pub fn check_g(g: f64) -> Result<()> {
    if !g.is_finite() || g <= 0.0 {
        return Err(Error::invalid_gate(
            "g",
            format!("{g} must be a finite positive real"),
        ));
    }
    if g == 1.0 {
        return Err(Error::invalid_gate(
            "g",
            "g = 1 is not a G gate (g ≠ 1 required)",
        ));
    }
    if !(G_MIN..=G_MAX).contains(&g) {
        return Err(Error::invalid_gate(
            "g",
            format!("{g} outside [2^-32, 2^32]"),
        ));
    }
    Ok(())
}

impl GateOp {
    pub fn kind(&self) -> GateKind {
        match self {
            GateOp::H(_) => GateKind::H,
            GateOp::T(_) => GateKind::T,
            GateOp::X(_) => GateKind::X,
            GateOp::Cnot { .. } => GateKind::Cnot,
            GateOp::G { .. } => GateKind::G,
            GateOp::Cg { .. } => GateKind::Cg,
            GateOp::U2 { .. } => GateKind::U2,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            GateOp::H(t) | GateOp::T(t) | GateOp::X(t) => t,
            GateOp::Cnot { target, .. }
            | GateOp::G { target, .. }
            | GateOp::Cg { target, .. }
            | GateOp::U2 { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            GateOp::Cnot { control, .. } | GateOp::Cg { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn g(&self) -> Option<f64> {
        match *self {
            GateOp::G { g, .. } | GateOp::Cg { g, .. } => Some(g),
            _ => None,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self.control() {
            Some(c) => vec![c, self.target()],
            None => vec![self.target()],
        }
    }

    /// Checks parameter invariants and, when `n_qubits` is given, indices.
    pub fn validate(&self, n_qubits: Option<usize>) -> Result<()> {
        if let Some(n) = n_qubits {
            for q in self.qubits() {
                if q >= n {
                    return Err(Error::qubit(q, n));
                }
            }
        }
        if let Some(c) = self.control() {
            if c == self.target() {
                return Err(Error::invalid_gate(
                    "control",
                    format!("control equals target ({c})"),
                ));
            }
        }
        if let Some(g) = self.g() {
            check_g(g)?;
        }
        if let GateOp::U2 { matrix, .. } = self {
            if !matrix.is_finite() {
                return Err(Error::invalid_gate("matrix", "non-finite entry"));
            }
        }
        Ok(())
    }

    /// Whether the gate preserves the norm.
    pub fn is_unitary(&self) -> bool {
        match self {
            GateOp::G { .. } | GateOp::Cg { .. } => false,
            GateOp::U2 { matrix, .. } => matrix.unitarity_defect() < 1e-12,
            _ => true,
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        match self.kind() {
            GateKind::H => "h",
            GateKind::T => "t",
            GateKind::X => "x",
            GateKind::Cnot => "cnot",
            GateKind::G => "g",
            GateKind::Cg => "cg",
            GateKind::U2 => "u",
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateOp::H(t) | GateOp::T(t) | GateOp::X(t) => write!(f, "{} {t}", self.mnemonic()),
            GateOp::Cnot { control, target } => write!(f, "cnot {control} {target}"),
            GateOp::G { target, g } => write!(f, "g {target} {g:?}"),
            GateOp::Cg { control, target, g } => write!(f, "cg {control} {target} {g:?}"),
            GateOp::U2 { target, matrix } => {
                write!(f, "u {target}")?;
                for z in matrix.0.iter().flatten() {
                    write!(f, " {:?} {:?}", z.re, z.im)?;
                }
                Ok(())
            }
        }
    }
}

pub fn hadamard() -> Mat2 {
    Mat2::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
}

/// `T = e^{-iπ/8} diag(e^{iπ/8}, e^{-iπ/8})`, with the prefactor multiplied in.
pub fn t_gate() -> Mat2 {
    Mat2::diag(
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, -FRAC_PI_4),
    )
}

pub fn pauli_x() -> Mat2 {
    Mat2::real(0.0, 1.0, 1.0, 0.0)
}

pub fn g_gate(g: f64) -> Mat2 {
    Mat2::real(g, 0.0, 0.0, 1.0 / g)
}

/// Exact matrix of `op`; controlled gates use `(control, target)` ordering.
pub fn gate_matrix(op: &GateOp) -> GateMatrix {
    match *op {
        GateOp::H(_) => GateMatrix::One(hadamard()),
        GateOp::T(_) => GateMatrix::One(t_gate()),
        GateOp::X(_) => GateMatrix::One(pauli_x()),
        GateOp::G { g, .. } => GateMatrix::One(g_gate(g)),
        GateOp::U2 { matrix, .. } => GateMatrix::One(matrix),
        GateOp::Cnot { .. } => GateMatrix::Two(Mat4::controlled(&pauli_x())),
        GateOp::Cg { g, .. } => GateMatrix::Two(Mat4::controlled(&g_gate(g))),
    }
}

/// Applies `op` in place. Non-unitary gates trigger the ledger when the
/// working amplitudes leave the safe window.
pub fn apply(state: &mut ScaledState, op: &GateOp) -> Result<()> {
    op.validate(Some(state.n_qubits()))?;
    let amps = state.amps_mut();
    match *op {
        GateOp::H(t) => kernel_mat2(amps, t, None, &hadamard()),
        GateOp::T(t) => {
            let phase = t_gate().0[1][1];
            kernel_pairs(amps, t, None, |_, b| *b *= phase);
        }
        GateOp::X(t) => kernel_pairs(amps, t, None, std::mem::swap),
        GateOp::Cnot { control, target } => {
            kernel_pairs(amps, target, Some(control), std::mem::swap)
        }
        GateOp::G { target, g } => kernel_pairs(amps, target, None, |a, b| {
            *a *= g;
            *b /= g;
        }),
        GateOp::Cg { control, target, g } => kernel_pairs(amps, target, Some(control), |a, b| {
            *a *= g;
            *b /= g;
        }),
        GateOp::U2 { target, ref matrix } => kernel_mat2(amps, target, None, matrix),
    }
    if !op.is_unitary() {
        state.rescale_if_needed();
    }
    Ok(())
}

/// Returns a fresh state with `op` applied.
pub fn applied(state: &ScaledState, op: &GateOp) -> Result<ScaledState> {
    let mut s = state.clone();
    apply(&mut s, op)?;
    Ok(s)
}

/// `G(g)` applied `r` times to `qubit`, with the gain folded into the ledger
/// so that no intermediate ever overflows.
pub fn apply_g_repeated(state: &mut ScaledState, qubit: usize, g: f64, r: i64) -> Result<()> {
    if r < 0 {
        return Err(Error::InvalidArgument(format!(
            "repeat count {r} is negative"
        )));
    }
    check_g(g)?;
    state.check_qubit(qubit)?;
    if r == 0 {
        return Ok(());
    }
    let mask = 1usize << qubit;
    let (m0, m1) = {
        let parts = par::map_chunks(state.amps(), par::CHUNK, |ci, c| {
            let base = ci * par::CHUNK;
            let (mut a, mut b) = (0.0f64, 0.0f64);
            for (k, z) in c.iter().enumerate() {
                if (base + k) & mask == 0 {
                    a = a.max(z.norm());
                } else {
                    b = b.max(z.norm());
                }
            }
            (a, b)
        });
        let (a, b) = parts
            .into_iter()
            .fold((0.0f64, 0.0f64), |(x, y), (a, b)| (x.max(a), y.max(b)));
        (a, b)
    };
    let gain = r as f64 * g.ln();
    let up = if m0 > 0.0 {
        m0.ln() + gain
    } else {
        f64::NEG_INFINITY
    };
    let down = if m1 > 0.0 {
        m1.ln() - gain
    } else {
        f64::NEG_INFINITY
    };
    let shift = up.max(down);
    // an all-zero half keeps factor 0, never 0 · ∞
    let f0 = if m0 > 0.0 { (gain - shift).exp() } else { 0.0 };
    let f1 = if m1 > 0.0 { (-gain - shift).exp() } else { 0.0 };
    kernel_pairs(state.amps_mut(), qubit, None, |a, b| {
        *a *= f0;
        *b *= f1;
    });
    state.add_log_scale(shift);
    Ok(())
}

fn kernel_mat2(amps: &mut [Complex64], target: usize, control: Option<usize>, m: &Mat2) {
    let m = *m;
    kernel_pairs(amps, target, control, move |a, b| {
        let [x, y] = m.apply([*a, *b]);
        *a = x;
        *b = y;
    });
}

/// Runs `f(a, b)` on every amplitude pair differing only in `target`,
/// restricted to pairs whose `control` bit is set.
fn kernel_pairs<F>(amps: &mut [Complex64], target: usize, control: Option<usize>, f: F)
where
    F: Fn(&mut Complex64, &mut Complex64) + Sync + Send,
{
    for_each_pair(amps, target, control, |_, a, b| f(a, b));
}

/// Like [`kernel_pairs`], also passing the basis index of the `target = 0`
/// member of each pair.
pub(crate) fn for_each_pair<F>(amps: &mut [Complex64], target: usize, control: Option<usize>, f: F)
where
    F: Fn(usize, &mut Complex64, &mut Complex64) + Sync + Send,
{
    let stride = 1usize << target;
    let block = stride << 1;
    let chunk = block.max(par::CHUNK).min(amps.len());
    let cmask = control.map(|c| 1usize << c);
    par::for_each_chunk_mut(amps, chunk, |ci, c| {
        let base = ci * chunk;
        for (bi, blk) in c.chunks_mut(block).enumerate() {
            let (lo, hi) = blk.split_at_mut(stride);
            let blk_base = base + bi * block;
            for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let idx = blk_base + k;
                if let Some(cm) = cmask {
                    if idx & cm == 0 {
                        continue;
                    }
                }
                f(idx, a, b);
            }
        }
    });
}
