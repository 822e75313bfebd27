//! Constructive universality of `{H, T, CNOT, G}`.
//!
//! For a single qubit, `f(c₁, c₂) = √(|g c₁|² + |c₂/g|²)` sweeps exactly
//! `[A/g, g·A]` over the sphere `|c₁|² + |c₂|² = A²`. A target norm `B` inside
//! that band is reached with one `G` after a rotation onto the right point;
//! outside it, `G^r` on `(A, 0)` or `(0, A)` first brings the norm into the
//! band, with `r = ⌊ln(B/A) / ln g⌋` or `⌊-ln(B/A) / ln g⌋`.
//!
//! Rotations are exact 2×2 unitaries. [`approximate_unitary_ht`] is the
//! separate, best-effort search for `{H, T}` words.

use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::{self, check_g, gate_matrix, GateMatrix, GateOp};
use crate::matrix::{Mat2, Mat4};
use crate::par;

pub type Qubit2 = [Complex64; 2];

/// Relative slack used to decide that `B/A` sits on a band edge.
pub const BAND_EDGE_TOL: f64 = 1e-12;

/// Largest word length accepted by [`approximate_unitary_ht`].
pub const MAX_HT_DEPTH: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Case {
    WithinBand,
    Grow,
    Shrink,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesisPlan {
    pub case: Case,
    /// Repeat count of the `G` pre-stage (0 inside the band).
    pub r: u64,
    pub g: f64,
    /// Rotates the input onto `(A, 0)`, `(0, A)`, or is the identity.
    pub pre_rotation: Mat2,
    /// Rotates onto the point with `f(c₁, c₂) = B`.
    pub mid_rotation: Mat2,
    /// Rotates the image of the single `G` onto the final state, phase included.
    pub post_rotation: Mat2,
}

pub fn norm(v: &Qubit2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// `f(c₁, c₂) = √(|g c₁|² + |g⁻¹ c₂|²)`.
pub fn band_function(c1: f64, c2: f64, g: f64) -> f64 {
    ((g * c1).powi(2) + (c2 / g).powi(2)).sqrt()
}

/// `(|c₁|, |c₂|)` on the sphere of radius `a` with `f(c₁, c₂) = b`.
///
/// Solves `g² t + g⁻² (A² - t) = B²` for `t = |c₁|²`.
pub fn norm_match_point(a: f64, b: f64, g: f64) -> Result<(f64, f64)> {
    if !(g.is_finite() && g > 1.0) {
        return Err(Error::InvalidArgument(format!("g must exceed 1, got {g}")));
    }
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("norms must be positive".into()));
    }
    let lo = a / g * (1.0 - BAND_EDGE_TOL);
    let hi = a * g * (1.0 + BAND_EDGE_TOL);
    if b < lo || b > hi {
        return Err(Error::InvalidArgument(format!(
            "B = {b} outside the reachable band [{}, {}]",
            a / g,
            a * g
        )));
    }
    let g2 = g * g;
    let t = ((b * b - a * a / g2) / (g2 - 1.0 / g2)).clamp(0.0, a * a);
    Ok((t.sqrt(), (a * a - t).sqrt()))
}

/// Unitary taking the direction of `from` onto the direction of `to`,
/// phase included: `U from = |from| · to / |to|`.
pub fn rotation_between(from: &Qubit2, to: &Qubit2) -> Mat2 {
    let (nf, nt) = (norm(from), norm(to));
    let u = [from[0] / nf, from[1] / nf];
    let v = [to[0] / nt, to[1] / nt];
    let u_perp = [-u[1].conj(), u[0].conj()];
    let v_perp = [-v[1].conj(), v[0].conj()];
    let mut m = Mat2::IDENTITY;
    for i in 0..2 {
        for j in 0..2 {
            m.0[i][j] = v[i] * u[j].conj() + v_perp[i] * u_perp[j].conj();
        }
    }
    m
}

fn classify(ratio: f64, g: f64) -> Case {
    if ratio > g * (1.0 + BAND_EDGE_TOL) {
        Case::Grow
    } else if ratio < (1.0 - BAND_EDGE_TOL) / g {
        Case::Shrink
    } else {
        Case::WithinBand
    }
}

fn apply_g_power(v: Qubit2, g: f64, r: u64) -> Qubit2 {
    let lg = r as f64 * g.ln();
    [v[0] * lg.exp(), v[1] * (-lg).exp()]
}

/// Plans `initial → final` with rotations and `G(g)` applications, `g > 1`.
pub fn plan_single_qubit(initial: &Qubit2, final_: &Qubit2, g: f64) -> Result<SynthesisPlan> {
    if !(g.is_finite() && g > 1.0) {
        return Err(Error::InvalidArgument(format!("g must exceed 1, got {g}")));
    }
    check_g(g)?;
    let a = norm(initial);
    let b = norm(final_);
    if a == 0.0 || b == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(
            "states must have nonzero finite length".into(),
        ));
    }
    let zero = Complex64::new(0.0, 0.0);
    let ratio = b / a;
    let case = classify(ratio, g);
    let (r, pre_rotation, staged) = match case {
        Case::WithinBand => (0, Mat2::IDENTITY, *initial),
        Case::Grow => {
            let r = (ratio.ln() / g.ln()).floor() as u64;
            let anchor = [Complex64::new(a, 0.0), zero];
            (
                r,
                rotation_between(initial, &anchor),
                apply_g_power(anchor, g, r),
            )
        }
        Case::Shrink => {
            let r = (-ratio.ln() / g.ln()).floor() as u64;
            let anchor = [zero, Complex64::new(a, 0.0)];
            (
                r,
                rotation_between(initial, &anchor),
                apply_g_power(anchor, g, r),
            )
        }
    };
    let a_staged = norm(&staged);
    let (c1, c2) = norm_match_point(a_staged, b, g)?;
    let point = [Complex64::new(c1, 0.0), Complex64::new(c2, 0.0)];
    let mid_rotation = rotation_between(&staged, &point);
    let image = gates::g_gate(g).apply(point);
    let post_rotation = rotation_between(&image, final_);
    Ok(SynthesisPlan {
        case,
        r,
        g,
        pre_rotation,
        mid_rotation,
        post_rotation,
    })
}

/// Runs the plan: pre-rotation, `G^r`, mid-rotation, `G`, post-rotation.
pub fn execute_plan(plan: &SynthesisPlan, initial: &Qubit2) -> Qubit2 {
    let v = plan.pre_rotation.apply(*initial);
    let v = apply_g_power(v, plan.g, plan.r);
    let v = plan.mid_rotation.apply(v);
    let v = gates::g_gate(plan.g).apply(v);
    plan.post_rotation.apply(v)
}

/// The plan as gate instructions on `qubit` (rotations as `U2`).
pub fn plan_ops(plan: &SynthesisPlan, qubit: usize) -> Vec<GateOp> {
    let mut ops = vec![GateOp::U2 {
        target: qubit,
        matrix: plan.pre_rotation,
    }];
    ops.extend((0..plan.r).map(|_| GateOp::G {
        target: qubit,
        g: plan.g,
    }));
    ops.push(GateOp::U2 {
        target: qubit,
        matrix: plan.mid_rotation,
    });
    ops.push(GateOp::G {
        target: qubit,
        g: plan.g,
    });
    ops.push(GateOp::U2 {
        target: qubit,
        matrix: plan.post_rotation,
    });
    ops
}

/// Controlled-`G(g²)` from `X`, `CNOT` and two `G(g)` on qubits
/// `(control 0, target 1)`.
///
/// On control `|1⟩` both `G` act on the target; on control `|0⟩` the target
/// sees `X G X G = I`.
pub fn build_cg_from_primitives(g: f64) -> Result<Circuit> {
    check_g(g)?;
    let (control, target) = (0, 1);
    let mut c = Circuit::new(2);
    c.name = Some("cg-from-primitives".into());
    c.push_gate(GateOp::X(control))
        .push_gate(GateOp::Cnot { control, target })
        .push_gate(GateOp::G { target, g })
        .push_gate(GateOp::Cnot { control, target })
        .push_gate(GateOp::X(control))
        .push_gate(GateOp::G { target, g });
    Ok(c)
}

/// 4×4 matrix of a gate sequence on two qubits, in `(hi, lo)` ordering.
pub fn two_qubit_composite(ops: &[GateOp], hi: usize, lo: usize) -> Result<Mat4> {
    let mut acc = Mat4::IDENTITY;
    for op in ops {
        let m = match (gate_matrix(op), op.control()) {
            (GateMatrix::One(u), None) if op.target() == hi => Mat4::kron(&u, &Mat2::IDENTITY),
            (GateMatrix::One(u), None) if op.target() == lo => Mat4::kron(&Mat2::IDENTITY, &u),
            (GateMatrix::Two(m), Some(c)) if c == hi && op.target() == lo => m,
            (GateMatrix::Two(m), Some(c)) if c == lo && op.target() == hi => {
                // swap the roles of the two basis bits
                let p = |i: usize| ((i & 1) << 1) | (i >> 1);
                let mut out = Mat4::zeros();
                for i in 0..4 {
                    for j in 0..4 {
                        out.0[i][j] = m.0[p(i)][p(j)];
                    }
                }
                out
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "`{op}` does not act on qubits {hi} and {lo}"
                )))
            }
        };
        acc = m * acc;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HtApproximation {
    /// Gates in application order; the matrix is the product right to left.
    pub word: String,
    /// `min_φ ‖U - e^{iφ} W‖` in operator norm.
    pub error: f64,
    pub max_depth: usize,
    pub words_examined: u64,
}

/// Matrix of an `{H, T}` word given in application order.
pub fn word_matrix(word: &str) -> Mat2 {
    word.chars().fold(Mat2::IDENTITY, |acc, ch| match ch {
        'H' => gates::hadamard() * acc,
        'T' => gates::t_gate() * acc,
        _ => acc,
    })
}

#[derive(Clone)]
struct Node {
    word: String,
    matrix: Mat2,
    t_run: u8,
}

/// Shortest `{H, T}` word closest to `target` up to global phase.
///
/// Exhaustive breadth-first search; ties go to the shorter word, then to the
/// lexicographically smaller one (`H < T`). Words containing `HH` or `T⁸`
/// equal a shorter word and are skipped.
pub fn approximate_unitary_ht(target: &Mat2, max_depth: usize) -> Result<HtApproximation> {
    if max_depth > MAX_HT_DEPTH {
        return Err(Error::InvalidArgument(format!(
            "max_depth {max_depth} exceeds {MAX_HT_DEPTH}"
        )));
    }
    if target.unitarity_defect() > 1e-12 {
        return Err(Error::InvalidArgument("target is not unitary".into()));
    }
    let (h, t) = (gates::hadamard(), gates::t_gate());
    let mut best = HtApproximation {
        word: String::new(),
        error: target.phase_distance(&Mat2::IDENTITY),
        max_depth,
        words_examined: 1,
    };
    let mut level = vec![Node {
        word: String::new(),
        matrix: Mat2::IDENTITY,
        t_run: 0,
    }];
    for _ in 0..max_depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for node in &level {
            if !node.word.ends_with('H') {
                next.push(Node {
                    word: format!("{}H", node.word),
                    matrix: h * node.matrix,
                    t_run: 0,
                });
            }
            if node.t_run < 7 {
                next.push(Node {
                    word: format!("{}T", node.word),
                    matrix: t * node.matrix,
                    t_run: node.t_run + 1,
                });
            }
        }
        let errors = par::map_range(next.len(), |i| target.phase_distance(&next[i].matrix));
        best.words_examined += next.len() as u64;
        // `next` is in lexicographic order, so the first minimum wins ties.
        let (idx, err) = errors.iter().copied().enumerate().fold(
            (usize::MAX, f64::INFINITY),
            |(bi, be), (i, e)| {
                if e < be - 1e-12 {
                    (i, e)
                } else {
                    (bi, be)
                }
            },
        );
        if idx != usize::MAX && err < best.error - 1e-12 {
            best.word = next[idx].word.clone();
            best.error = err;
        }
        level = next;
        if best.error <= 1e-12 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dist(a: &Qubit2, b: &Qubit2) -> f64 {
        ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
    }

    #[test]
    fn norm_match_examples() {
        let (c1, c2) = norm_match_point(1.0, 1.0, 2.0).unwrap();
        assert!((c1 * c1 - 0.2).abs() < 1e-15);
        assert!((band_function(c1, c2, 2.0) - 1.0).abs() < 1e-15);

        let (c1, c2) = norm_match_point(1.0, 2.0, 2.0).unwrap();
        assert!((c1 - 1.0).abs() < 1e-15 && c2.abs() < 1e-7);
        assert!((band_function(c1, c2, 2.0) - 2.0).abs() < 1e-15);

        let (c1, c2) = norm_match_point(1.0, 0.5, 2.0).unwrap();
        assert!(c1.abs() < 1e-7 && (c2 - 1.0).abs() < 1e-15);

        assert!(norm_match_point(1.0, 2.5, 2.0).is_err());
        assert!(norm_match_point(1.0, 0.4, 2.0).is_err());
    }

    #[test]
    fn plan_examples() {
        let init = [c(1.0, 0.0), c(0.0, 0.0)];
        let fin = [c(10.0, 0.0), c(0.0, 0.0)];
        let p = plan_single_qubit(&init, &fin, 2.0).unwrap();
        assert_eq!((p.case, p.r), (Case::Grow, 3));
        assert!(dist(&execute_plan(&p, &init), &fin) < 1e-12);

        let p = plan_single_qubit(&init, &init, 2.0).unwrap();
        assert_eq!((p.case, p.r), (Case::WithinBand, 0));
        assert!(dist(&execute_plan(&p, &init), &init) < 1e-15);

        let fin = [c(0.1, 0.0), c(0.0, 0.0)];
        let p = plan_single_qubit(&init, &fin, 2.0).unwrap();
        assert_eq!((p.case, p.r), (Case::Shrink, 3));
        assert!(dist(&execute_plan(&p, &init), &fin) < 1e-12);

        let fin = [c(0.0, 0.0), c(0.0, 2.0)];
        let p = plan_single_qubit(&init, &fin, 2.0).unwrap();
        assert_eq!(p.case, Case::WithinBand);
        assert!(dist(&execute_plan(&p, &init), &fin) < 1e-12);

        let zero = [c(0.0, 0.0), c(0.0, 0.0)];
        assert!(plan_single_qubit(&zero, &init, 2.0).is_err());
        assert!(plan_single_qubit(&init, &zero, 2.0).is_err());
    }

    #[test]
    fn band_edges_select_case_one() {
        let init = [c(1.0, 0.0), c(0.0, 0.0)];
        let fin = [c(0.0, 2.0), c(0.0, 0.0)];
        assert_eq!(
            plan_single_qubit(&init, &fin, 2.0).unwrap().case,
            Case::WithinBand
        );
        let fin = [c(0.0, 0.0), c(0.5, 0.0)];
        assert_eq!(
            plan_single_qubit(&init, &fin, 2.0).unwrap().case,
            Case::WithinBand
        );
    }

    #[test]
    fn rotation_is_unitary_and_hits_target() {
        let from = [c(0.3, -0.2), c(-0.5, 0.8)];
        let to = [c(-0.1, 0.9), c(0.2, 0.4)];
        let u = rotation_between(&from, &to);
        assert!(u.unitarity_defect() < 1e-15);
        let got = u.apply(from);
        let scale = norm(&from) / norm(&to);
        assert!(dist(&got, &[to[0] * scale, to[1] * scale]) < 1e-15);
    }

    #[test]
    fn cg_examples() {
        let ops: Vec<GateOp> = build_cg_from_primitives(2.0)
            .unwrap()
            .gates()
            .copied()
            .collect();
        let m = two_qubit_composite(&ops, 0, 1).unwrap();
        let want = Mat4::diag([c(1.0, 0.0), c(1.0, 0.0), c(4.0, 0.0), c(0.25, 0.0)]);
        assert!(m.max_abs_diff(&want) < 1e-15);

        let ops: Vec<GateOp> = build_cg_from_primitives(3f64.sqrt())
            .unwrap()
            .gates()
            .copied()
            .collect();
        let m = two_qubit_composite(&ops, 0, 1).unwrap();
        let want = Mat4::diag([c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0), c(1.0 / 3.0, 0.0)]);
        assert!(m.max_abs_diff(&want) < 1e-14);

        // control |0⟩ branch: X G X G on the target
        let branch = gates::g_gate(2.0) * gates::pauli_x() * gates::g_gate(2.0) * gates::pauli_x();
        assert!(branch.max_abs_diff(&Mat2::IDENTITY) < 1e-15);

        assert!(build_cg_from_primitives(1.0).is_err());
    }

    #[test]
    fn ht_examples() {
        let a = approximate_unitary_ht(&gates::hadamard(), 4).unwrap();
        assert_eq!(a.word, "H");
        assert!(a.error < 1e-12);

        let t2 = gates::t_gate() * gates::t_gate();
        let a = approximate_unitary_ht(&t2, 4).unwrap();
        assert_eq!(a.word, "TT");
        assert!(a.error < 1e-12);

        let a = approximate_unitary_ht(&gates::pauli_x(), 8).unwrap();
        assert_eq!(a.word, "HTTTTH");
        assert!(a.error < 1e-12);

        assert!(approximate_unitary_ht(&gates::hadamard(), 25).is_err());
        assert!(approximate_unitary_ht(&gates::g_gate(2.0), 3).is_err());
    }

    #[test]
    fn word_matrix_uses_application_order() {
        let m = word_matrix("HT");
        assert!(m.max_abs_diff(&(gates::t_gate() * gates::hadamard())) < 1e-16);
    }
}
