//! Deciding and counting CNF solutions with an amplified ancilla.
//!
//! The procedure puts the work register in uniform superposition, flips the
//! ancilla on every non-satisfying assignment, and applies `G(g)^r` to the
//! ancilla. Measuring the ancilla in `|0⟩` then has probability
//!
//! ```text
//! P = K g^{2r} / (K g^{2r} + (N - K) g^{-2r})
//! ```
//!
//! with `N = 2^n` and `K` the number of solutions. `P = 0` exactly when
//! `K = 0`; for `r ≥ n ln 2 / ln g` and `K ≥ 1`, `P ≥ N / (N + 1)`.

use serde::Serialize;
use std::ops::Range;
use std::sync::Arc;

use crate::circuit::{self, Circuit, Instruction, OracleRef};
use crate::cnf::{self, CnfFormula};
use crate::error::{Error, Result};
use crate::gates::{self, GateOp};
use crate::par;
use crate::state::ScaledState;

/// Default limit on the number of work qubits.
pub const DEFAULT_CAPACITY: usize = 24;

/// BNQP acceptance threshold.
pub const ACCEPT_THRESHOLD: f64 = 2.0 / 3.0;
pub const REJECT_THRESHOLD: f64 = 1.0 / 3.0;

/// Truth table of `f` over all `2^n` assignments.
pub fn truth_table(f: &CnfFormula) -> Vec<bool> {
    let total = 1usize << f.num_vars;
    let block = 1usize << 12;
    par::map_range(total.div_ceil(block), |b| {
        let start = b * block;
        (start..(start + block).min(total))
            .map(|j| f.eval(j as u64))
            .collect::<Vec<_>>()
    })
    .concat()
}

/// `O = P_s ⊗ I + (I - P_s) ⊗ X`: swaps the ancilla amplitudes for every
/// work-register basis state that does not satisfy `f`.
pub fn apply_oracle(
    state: &mut ScaledState,
    f: &CnfFormula,
    work: Range<usize>,
    ancilla: usize,
) -> Result<()> {
    if work.len() != f.num_vars {
        return Err(Error::InvalidArgument(format!(
            "work register has {} qubits, formula has {} variables",
            work.len(),
            f.num_vars
        )));
    }
    if work.contains(&ancilla) {
        return Err(Error::InvalidArgument(format!(
            "ancilla {ancilla} overlaps work register {work:?}"
        )));
    }
    if let Some(last) = work.clone().last() {
        state.check_qubit(last)?;
    }
    state.check_qubit(ancilla)?;
    let table = truth_table(f);
    let shift = work.start;
    let mask = (1usize << f.num_vars) - 1;
    gates::for_each_pair(state.amps_mut(), ancilla, None, |idx, a, b| {
        if !table[(idx >> shift) & mask] {
            std::mem::swap(a, b);
        }
    });
    Ok(())
}

/// Smallest `r` with `g^r ≥ 2^n`, i.e. `⌈n ln 2 / ln g⌉`.
pub fn choose_r(n: usize, g: f64) -> Result<i64> {
    if !g.is_finite() || g <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "choose_r needs g > 1, got {g}"
        )));
    }
    let x = n as f64 * std::f64::consts::LN_2 / g.ln();
    let mut r = x.ceil();
    // x can land a hair above an exact integer (n = 4, g = 4).
    if r >= 1.0 && (r - 1.0) >= x * (1.0 - 1e-12) {
        r -= 1.0;
    }
    Ok(r as i64)
}

/// Acceptance probability in closed form, evaluated in log space.
#[allow(non_snake_case)]
pub fn closed_form_P(N: u64, K: u64, g: f64, r: i64) -> f64 {
    assert!(K <= N, "K = {K} exceeds N = {N}");
    if K == 0 {
        return 0.0;
    }
    if K == N {
        return 1.0;
    }
    // P = 1 / (1 + ((N-K)/K) g^{-4r})
    let t = ((N - K) as f64 / K as f64).ln() - 4.0 * r as f64 * g.ln();
    1.0 / (1.0 + t.exp())
}

/// Same quantity as `(P, 1 - P)`, with `1 - P` computed without cancellation.
#[allow(non_snake_case)]
pub fn closed_form_split(N: u64, K: u64, g: f64, r: i64) -> (f64, f64) {
    if K == 0 {
        return (0.0, 1.0);
    }
    if K == N {
        return (1.0, 0.0);
    }
    let t = ((N - K) as f64 / K as f64).ln() - 4.0 * r as f64 * g.ln();
    // logistic(-t), logistic(t)
    (1.0 / (1.0 + t.exp()), 1.0 / (1.0 + (-t).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Sat,
    Unsat,
    Undecided,
}

impl Decision {
    pub fn from_probability(p: f64) -> Self {
        if p > ACCEPT_THRESHOLD {
            Decision::Sat
        } else if p < REJECT_THRESHOLD {
            Decision::Unsat
        } else {
            Decision::Undecided
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatOptions {
    pub g: f64,
    /// `None` selects [`choose_r`].
    pub r: Option<i64>,
    pub mode: Mode,
    pub capacity: usize,
    /// Also enumerate the formula to report `K`.
    pub brute_force: bool,
}

impl Default for SatOptions {
    fn default() -> Self {
        SatOptions {
            g: 2.0,
            r: None,
            mode: Mode::Exact,
            capacity: DEFAULT_CAPACITY,
            brute_force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatRunReport {
    pub schema: &'static str,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: u64,
    #[serde(rename = "K_bruteforce", skip_serializing_if = "Option::is_none")]
    pub k_bruteforce: Option<u64>,
    pub r: i64,
    pub g: f64,
    /// Exact probability of ancilla `|0⟩`.
    pub p_accept: f64,
    /// Exact probability of ancilla `|1⟩`, kept separately for precision.
    pub p_reject: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_accept_sampled: Option<f64>,
    pub decision: Decision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_estimate: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_interval: Option<(f64, f64)>,
    pub shots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accept_count: Option<u64>,
}

impl SatRunReport {
    pub const SCHEMA: &'static str = "nqc.sat/1";
}

/// The full procedure as a circuit on `n + 1` qubits, ancilla last.
pub fn build_circuit(f: &CnfFormula, g: f64, r: i64, oracle_path: &str) -> Result<Circuit> {
    if r < 0 {
        return Err(Error::InvalidArgument(format!(
            "repeat count {r} is negative"
        )));
    }
    gates::check_g(g)?;
    let n = f.num_vars;
    let mut c = Circuit::new(n + 1);
    c.name = Some("sat".into());
    for q in 0..n {
        c.push_gate(GateOp::H(q));
    }
    c.push(Instruction::Oracle(OracleRef {
        path: oracle_path.to_string(),
        ancilla: n,
        formula: Arc::new(f.clone()),
    }));
    for _ in 0..r {
        c.push_gate(GateOp::G { target: n, g });
    }
    c.push(Instruction::Measure(n));
    Ok(c)
}

fn check_capacity(f: &CnfFormula, capacity: usize) -> Result<()> {
    if f.num_vars > capacity {
        return Err(Error::Capacity {
            n: f.num_vars,
            limit: capacity,
        });
    }
    Ok(())
}

/// Runs the procedure and reports the ancilla statistics.
pub fn solve_sat(f: &CnfFormula, opts: &SatOptions) -> Result<SatRunReport> {
    check_capacity(f, opts.capacity)?;
    gates::check_g(opts.g)?;
    let r = match opts.r {
        Some(r) => r,
        None => choose_r(f.num_vars, opts.g)?,
    };
    let c = build_circuit(f, opts.g, r, "<formula>")?;
    let dist = circuit::exact_distribution(&c, None)?;
    let anc = dist.marginals[0];
    let n = f.num_vars;

    let mut report = SatRunReport {
        schema: SatRunReport::SCHEMA,
        n,
        big_n: 1u64 << n,
        k_bruteforce: None,
        r,
        g: opts.g,
        p_accept: anc.p0,
        p_reject: anc.p1,
        p_accept_sampled: None,
        decision: Decision::from_probability(anc.p0),
        count_estimate: None,
        count_interval: None,
        shots: 0,
        seed: None,
        accept_count: None,
    };
    if opts.brute_force {
        report.k_bruteforce = Some(cnf::brute_force_count(f)?);
    }
    if let Mode::Shots { shots, seed } = opts.mode {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        let accepted = circuit::sample_outcomes(&dist, shots, seed)
            .into_iter()
            .filter(|&o| o == 0)
            .count() as u64;
        let freq = accepted as f64 / shots as f64;
        report.shots = shots;
        report.seed = Some(seed);
        report.accept_count = Some(accepted);
        report.p_accept_sampled = Some(freq);
        report.decision = Decision::from_probability(freq);
    }
    Ok(report)
}

/// Model count recovered from the ancilla statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountEstimate {
    pub estimate: Option<u64>,
    /// Confidence interval on `K` (sampled mode only).
    pub interval: Option<(f64, f64)>,
    pub invertible: bool,
    pub p_accept: f64,
    pub r: i64,
}

/// Inverts the closed form: `ρ = (P / (1 - P)) g^{-4r}`, `K = round(N ρ / (1 + ρ))`.
#[allow(non_snake_case)]
pub fn invert_probability(N: u64, p_accept: f64, p_reject: f64, g: f64, r: i64) -> Option<u64> {
    if p_accept == 0.0 {
        return Some(0);
    }
    if p_reject == 0.0 {
        // Only trustworthy when the rejecting amplitudes cannot underflow.
        let headroom = 4.0 * r as f64 * g.ln() + (N as f64).ln();
        return (headroom < 600.0).then_some(N);
    }
    let ln_rho = p_accept.ln() - p_reject.ln() - 4.0 * r as f64 * g.ln();
    // N ρ / (1 + ρ) = N · logistic(ln ρ)
    let frac = 1.0 / (1.0 + (-ln_rho).exp());
    let k = (N as f64 * frac).round();
    (k.is_finite() && k >= 0.0 && k <= N as f64).then_some(k as u64)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Estimates the number of solutions.
///
/// Exact mode inverts the closed form at the given `r`. Sampled mode runs
/// at `r = 0`, where `P = K/N`, and returns a 95% interval on `K`.
pub fn count_models(
    f: &CnfFormula,
    g: f64,
    r: i64,
    mode: Mode,
    capacity: usize,
) -> Result<CountEstimate> {
    let big_n = 1u64 << f.num_vars;
    match mode {
        Mode::Exact => {
            let rep = solve_sat(
                f,
                &SatOptions {
                    g,
                    r: Some(r),
                    mode: Mode::Exact,
                    capacity,
                    brute_force: false,
                },
            )?;
            let estimate = invert_probability(big_n, rep.p_accept, rep.p_reject, g, r);
            Ok(CountEstimate {
                estimate,
                interval: None,
                invertible: estimate.is_some(),
                p_accept: rep.p_accept,
                r,
            })
        }
        Mode::Shots { .. } => {
            let rep = solve_sat(
                f,
                &SatOptions {
                    g,
                    r: Some(0),
                    mode,
                    capacity,
                    brute_force: false,
                },
            )?;
            let k = rep.accept_count.unwrap_or(0);
            let (lo, hi) = wilson_interval(k, rep.shots, 1.959_963_984_540_054);
            let invertible = k != 0 && k != rep.shots;
            let estimate =
                invertible.then(|| (big_n as f64 * k as f64 / rep.shots as f64).round() as u64);
            Ok(CountEstimate {
                estimate,
                interval: Some((lo * big_n as f64, hi * big_n as f64)),
                invertible,
                p_accept: rep.p_accept_sampled.unwrap_or(rep.p_accept),
                r: 0,
            })
        }
    }
}
