//! Shared reference implementations for the integration tests.
#![allow(dead_code)]

use nqc::{Circuit, Complex64, GateOp, Instruction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit matrix written out from the definitions, row major.
pub fn reference_1q(op: &GateOp) -> [[Complex64; 2]; 2] {
    let s = 0.5f64.sqrt();
    match *op {
        GateOp::H(_) => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        GateOp::T(_) => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(s, -s)]],
        GateOp::X(_) => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateOp::G { g, .. } | GateOp::Cg { g, .. } => {
            [[c(g, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0 / g, 0.0)]]
        }
        GateOp::Cnot { .. } => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateOp::U2 { matrix, .. } => matrix.0,
    }
}

/// Full `2ⁿ × 2ⁿ` matrix of `op`, built entry by entry.
pub fn lift(op: &GateOp, n: usize) -> Dense {
    let dim = 1usize << n;
    let m = reference_1q(op);
    let t = op.target();
    let ctrl = op.control();
    let mut out = vec![vec![c(0.0, 0.0); dim]; dim];
    for (row, out_row) in out.iter_mut().enumerate() {
        for (col, entry) in out_row.iter_mut().enumerate() {
            // all bits other than the target must agree
            if (row ^ col) & !(1 << t) != 0 {
                continue;
            }
            let active = ctrl.is_none_or(|q| (col >> q) & 1 == 1);
            *entry = if active {
                m[(row >> t) & 1][(col >> t) & 1]
            } else if row == col {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            };
        }
    }
    out
}

pub fn mat_vec(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn normalize(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Random gate on `n ≥ 2` qubits; `g` drawn from `[g_lo, g_hi]` with a
/// random orientation (`g` or `1/g`).
pub fn random_gate(rng: &mut ChaCha8Rng, n: usize, with_g: bool) -> GateOp {
    let q = rng.random_range(0..n);
    let mut other = rng.random_range(0..n - 1);
    if other >= q {
        other += 1;
    }
    let g = {
        let v: f64 = rng.random_range(1.1..4.0);
        if rng.random_bool(0.5) {
            v
        } else {
            1.0 / v
        }
    };
    let kinds = if with_g { 6 } else { 4 };
    match rng.random_range(0..kinds) {
        0 => GateOp::H(q),
        1 => GateOp::T(q),
        2 => GateOp::X(q),
        3 => GateOp::Cnot {
            control: other,
            target: q,
        },
        4 => GateOp::G { target: q, g },
        _ => GateOp::Cg {
            control: other,
            target: q,
            g,
        },
    }
}

pub fn random_circuit(seed: u64, n: usize, len: usize, with_g: bool) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for _ in 0..len {
        c.push(Instruction::Gate(random_gate(&mut rng, n, with_g)));
    }
    c
}

/// Random 3-CNF with `m` clauses over `n ≥ 3` variables.
pub fn random_3cnf(rng: &mut ChaCha8Rng, n: usize, m: usize) -> nqc::CnfFormula {
    let clauses = (0..m)
        .map(|_| {
            let mut vars: Vec<i64> = Vec::with_capacity(3);
            while vars.len() < 3 {
                let v = rng.random_range(1..=n as i64);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.into_iter()
                .map(|v| if rng.random_bool(0.5) { v } else { -v })
                .collect()
        })
        .collect();
    nqc::CnfFormula::new(n, clauses).unwrap()
}

/// Satisfying-assignment count by direct enumeration, independent of the
/// library's evaluator.
pub fn count_by_hand(f: &nqc::CnfFormula) -> u64 {
    (0u64..1 << f.num_vars)
        .filter(|&a| {
            f.clauses.iter().all(|cl| {
                cl.iter().any(|&lit| {
                    let bit = (a >> (lit.unsigned_abs() - 1)) & 1 == 1;
                    if lit > 0 {
                        bit
                    } else {
                        !bit
                    }
                })
            })
        })
        .count() as u64
}
