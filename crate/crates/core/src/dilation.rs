//! `G` realized by a unitary on target + ancilla followed by postselection.
//!
//! `U(η)` maps `α|00⟩ + β|10⟩` (target, ancilla) to
//! `α|00⟩ + βη|10⟩ + β√(1-η²)|01⟩`; keeping the ancilla-`|0⟩` branch leaves
//! `(α, ηβ) ∝ G(η^{-1/2})(α, β)`. Every compiled step reuses one ancilla, the
//! highest qubit, which is back in `|0⟩` after each successful postselection.
//!
//! Success probabilities multiply across steps and are kept as logarithms.

use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use crate::circuit::{
    check_instruction, expect_arity, outcome_distribution, outcome_label, parse_err,
    parse_instruction, tok_f64, tok_usize, tokenize, Circuit, Instruction, OracleRef,
};
use crate::cnf;
use crate::error::{Error, Result};
use crate::gates::{self, check_g, GateOp};
use crate::matrix::Mat4;
use crate::par;
use crate::rng;
use crate::sat;
use crate::state::{ScaledState, MAX_QUBITS};

/// `U(η)` in basis `|target ancilla⟩ = |00⟩, |01⟩, |10⟩, |11⟩`.
pub fn dilation_unitary(eta: f64) -> Result<Mat4> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eta must lie in (0, 1), got {eta}"
        )));
    }
    let s = (1.0 - eta * eta).sqrt();
    let mut u = Mat4::IDENTITY;
    u.0[1][1] = Complex64::new(eta, 0.0);
    u.0[1][2] = Complex64::new(s, 0.0);
    u.0[2][1] = Complex64::new(-s, 0.0);
    u.0[2][2] = Complex64::new(eta, 0.0);
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Step {
    Gate(GateOp),
    /// `U(η)` on `(target, ancilla)`, then postselect the ancilla on `|0⟩`.
    Dilate {
        target: usize,
        eta: f64,
    },
    Oracle(OracleRef),
    Measure(usize),
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Gate(op) => write!(f, "{op}"),
            Step::Dilate { target, eta } => write!(f, "dilate-step {target} {eta:?}"),
            Step::Oracle(o) => write!(f, "{}", Instruction::Oracle(o.clone())),
            Step::Measure(q) => write!(f, "measure {q}"),
        }
    }
}

/// `η = g⁻²` for `G(g)` with `g > 1`.
pub fn compile_g(g: f64, target: usize) -> Result<(f64, Step)> {
    check_g(g)?;
    if g <= 1.0 {
        return Err(Error::invalid_gate(
            "g",
            format!("direct dilation needs g > 1, got {g}"),
        ));
    }
    let eta = 1.0 / (g * g);
    Ok((eta, Step::Dilate { target, eta }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationProgram {
    pub name: Option<String>,
    /// Qubits of the source circuit; the ancilla is the next index.
    pub n_work: usize,
    pub steps: Vec<Step>,
}

impl DilationProgram {
    pub fn ancilla(&self) -> usize {
        self.n_work
    }

    pub fn n_qubits(&self) -> usize {
        self.n_work + 1
    }

    pub fn etas(&self) -> Vec<f64> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Dilate { eta, .. } => Some(*eta),
                _ => None,
            })
            .collect()
    }

    pub fn dilation_count(&self) -> usize {
        self.etas().len()
    }

    /// Measured work qubits, ascending; all of them without `measure` steps.
    pub fn measured_qubits(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self
            .steps
            .iter()
            .filter_map(|s| match s {
                Step::Measure(q) => Some(*q),
                _ => None,
            })
            .collect();
        if q.is_empty() {
            q = (0..self.n_work).collect();
        }
        q.sort_unstable();
        q
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(out, "# name: {name}");
        }
        let _ = writeln!(out, "qubits {}", self.n_qubits());
        let _ = writeln!(out, "ancilla {}", self.ancilla());
        for s in &self.steps {
            let _ = writeln!(out, "{s}");
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.n_qubits() > MAX_QUBITS {
            return Err(Error::Capacity {
                n: self.n_qubits(),
                limit: MAX_QUBITS,
            });
        }
        let mut measured = vec![false; self.n_work];
        for s in &self.steps {
            match s {
                Step::Dilate { target, eta } => {
                    if *target >= self.n_work {
                        return Err(Error::qubit(*target, self.n_work));
                    }
                    if measured[*target] {
                        return Err(Error::InvalidArgument(format!(
                            "gate on qubit {target} after it was measured"
                        )));
                    }
                    dilation_unitary(*eta)?;
                }
                Step::Gate(op) => {
                    check_instruction(&Instruction::Gate(*op), self.n_work, &measured)?;
                    if !op.is_unitary() {
                        return Err(Error::InvalidArgument(format!("`{op}` is not unitary")));
                    }
                }
                Step::Oracle(o) => {
                    check_instruction(&Instruction::Oracle(o.clone()), self.n_work, &measured)?
                }
                Step::Measure(q) => {
                    check_instruction(&Instruction::Measure(*q), self.n_work, &measured)?;
                    measured[*q] = true;
                }
            }
        }
        Ok(())
    }
}

fn push_g(steps: &mut Vec<Step>, target: usize, g: f64) -> Result<()> {
    if g > 1.0 {
        steps.push(compile_g(g, target)?.1);
    } else {
        // G(g) = X G(1/g) X
        check_g(g)?;
        steps.push(Step::Gate(GateOp::X(target)));
        steps.push(compile_g(1.0 / g, target)?.1);
        steps.push(Step::Gate(GateOp::X(target)));
    }
    Ok(())
}

/// Replaces every `G` by a dilation step and every `CG(g')` by its
/// `X, CNOT, G(√g'), CNOT, X, G(√g')` expansion first.
pub fn compile_circuit(c: &Circuit) -> Result<DilationProgram> {
    c.validate()?;
    let mut steps = Vec::with_capacity(c.ops.len());
    for ins in &c.ops {
        match ins {
            Instruction::Gate(GateOp::G { target, g }) => push_g(&mut steps, *target, *g)?,
            Instruction::Gate(GateOp::Cg { control, target, g }) => {
                let (control, target, h) = (*control, *target, g.sqrt());
                steps.push(Step::Gate(GateOp::X(control)));
                steps.push(Step::Gate(GateOp::Cnot { control, target }));
                push_g(&mut steps, target, h)?;
                steps.push(Step::Gate(GateOp::Cnot { control, target }));
                steps.push(Step::Gate(GateOp::X(control)));
                push_g(&mut steps, target, h)?;
            }
            Instruction::Gate(op) => steps.push(Step::Gate(*op)),
            Instruction::Oracle(o) => steps.push(Step::Oracle(o.clone())),
            Instruction::Measure(q) => steps.push(Step::Measure(*q)),
        }
    }
    let p = DilationProgram {
        name: c.name.clone(),
        n_work: c.n_qubits,
        steps,
    };
    p.validate()?;
    Ok(p)
}

/// Outcome of the exact postselected run.
#[derive(Debug, Clone, PartialEq)]
pub struct PostselectedRun {
    /// Work register after the last step, unit norm.
    pub state: ScaledState,
    /// Conditional success probability of each dilation step, in order.
    pub step_probabilities: Vec<f64>,
    /// `ln` of the cumulative success probability.
    pub log_success: f64,
    /// `ln d²` of the non-unitary run, rebuilt from the step probabilities
    /// and the `g` of each step.
    pub log_norm_reconstructed: f64,
}

impl PostselectedRun {
    pub fn success(&self) -> f64 {
        self.log_success.exp()
    }
}

struct Trace {
    probabilities: Vec<f64>,
    /// Index into the program steps of the first impossible postselection.
    failed_at: Option<usize>,
    state: ScaledState,
    log_norm: f64,
}

fn embed(p: &DilationProgram, initial: Option<&ScaledState>) -> Result<(ScaledState, f64)> {
    let (work, log_norm) = match initial {
        Some(s) if s.n_qubits() != p.n_work => {
            return Err(Error::InvalidArgument(format!(
                "initial state has {} qubits, program has {}",
                s.n_qubits(),
                p.n_work
            )))
        }
        Some(s) => (s.normalized_amplitudes(), s.norm_squared().ln()),
        None => {
            let mut v = vec![Complex64::new(0.0, 0.0); 1 << p.n_work];
            v[0] = Complex64::new(1.0, 0.0);
            (v, 0.0)
        }
    };
    let mut amps = work;
    amps.resize(1 << p.n_qubits(), Complex64::new(0.0, 0.0));
    Ok((ScaledState::from_amplitudes(amps, 0.0)?, log_norm))
}

/// `U(η)` on `(target, top qubit)`, then projection of the top qubit on
/// `|0⟩` and renormalization. Returns the projection probability.
fn dilate_in_place(state: &mut ScaledState, target: usize, u: &Mat4) -> f64 {
    let amps = state.amps_mut();
    let half = amps.len() / 2;
    let (a0, a1) = amps.split_at_mut(half);
    let stride = 1usize << target;
    let chunk = (stride << 1).max(par::CHUNK).min(half);
    let u = *u;
    par::for_each_chunk_pair_mut(a0, a1, chunk, |_, x, y| {
        for (xb, yb) in x.chunks_mut(stride << 1).zip(y.chunks_mut(stride << 1)) {
            let (x0, x1) = xb.split_at_mut(stride);
            let (y0, y1) = yb.split_at_mut(stride);
            for k in 0..stride {
                let w = u.apply([x0[k], y0[k], x1[k], y1[k]]);
                x0[k] = w[0];
                y0[k] = w[1];
                x1[k] = w[2];
                y1[k] = w[3];
            }
        }
    });
    let norm = |s: &[Complex64]| {
        par::chunked_sum(s, par::CHUNK, |_, c| c.iter().map(|z| z.norm_sqr()).sum())
    };
    let (lo, hi) = (norm(a0), norm(a1));
    let p = lo / (lo + hi);
    if lo > 0.0 {
        let k = 1.0 / lo.sqrt();
        par::for_each_chunk_pair_mut(a0, a1, par::CHUNK.min(half), |_, x, y| {
            x.iter_mut().for_each(|z| *z *= k);
            y.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        });
    }
    p
}

fn unit_normalize(state: &mut ScaledState) {
    let amps = state.normalized_amplitudes();
    *state = ScaledState::from_amplitudes(amps, 0.0).expect("nonzero state");
}

fn trace(p: &DilationProgram, initial: Option<&ScaledState>) -> Result<Trace> {
    p.validate()?;
    let (mut state, mut log_norm) = embed(p, initial)?;
    let mut probabilities = Vec::with_capacity(p.dilation_count());
    for (i, s) in p.steps.iter().enumerate() {
        match s {
            Step::Gate(op) => gates::apply(&mut state, op)?,
            Step::Oracle(o) => {
                sat::apply_oracle(&mut state, &o.formula, o.work_qubits(), o.ancilla)?
            }
            Step::Measure(_) => {}
            Step::Dilate { target, eta } => {
                let prob = dilate_in_place(&mut state, *target, &dilation_unitary(*eta)?);
                probabilities.push(prob);
                if prob <= 0.0 {
                    return Ok(Trace {
                        probabilities,
                        failed_at: Some(i),
                        state,
                        log_norm: f64::NEG_INFINITY,
                    });
                }
                // G(g) = g · (postselected branch), g = η^{-1/2}
                log_norm += prob.ln() - eta.ln();
                // keep the ledger tight against rounding drift
                unit_normalize(&mut state);
            }
        }
    }
    Ok(Trace {
        probabilities,
        failed_at: None,
        state,
        log_norm,
    })
}

fn work_register(state: &ScaledState, n_work: usize) -> ScaledState {
    let amps = state.amps()[..1 << n_work].to_vec();
    let mut s = ScaledState::from_amplitudes(amps, 0.0).expect("nonzero work register");
    unit_normalize(&mut s);
    s
}

pub fn run_postselected_exact(
    p: &DilationProgram,
    initial: Option<&ScaledState>,
) -> Result<PostselectedRun> {
    let t = trace(p, initial)?;
    if let Some(step) = t.failed_at {
        return Err(Error::PostselectionFailed { step });
    }
    Ok(PostselectedRun {
        state: work_register(&t.state, p.n_work),
        log_success: t.probabilities.iter().map(|q| q.ln()).sum(),
        step_probabilities: t.probabilities,
        log_norm_reconstructed: t.log_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationReport {
    pub schema: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<String>,
    pub n_qubits: usize,
    pub ancilla: usize,
    pub steps: usize,
    pub eta: Vec<f64>,
    pub step_probabilities: Vec<f64>,
    pub cumulative_success_log10: f64,
    /// Linear value when it is a normal `f64`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulative_success: Option<f64>,
    /// First-step probability raised to the number of steps, printed for
    /// comparison with the per-step product.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeated_first_step_log10: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    pub measured: Vec<usize>,
    pub distribution: BTreeMap<String, f64>,
    pub shots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survived_shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discarded_shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survival_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<String, u64>>,
}

impl DilationReport {
    pub const SCHEMA: &'static str = "nqc.dilate/1";

    /// Binomial standard deviation of the survival rate around the exact value.
    pub fn survival_sigma(&self) -> Option<f64> {
        let p = 10f64.powf(self.cumulative_success_log10);
        (self.shots > 0).then(|| (p * (1.0 - p) / self.shots as f64).sqrt())
    }
}

fn report_from(p: &DilationProgram, t: &Trace) -> DilationReport {
    let log_success: f64 = t.probabilities.iter().map(|q| q.ln()).sum();
    let log10 = log_success / std::f64::consts::LN_10;
    let linear = log_success.exp();
    let etas = p.etas();
    let repeated =
        (!etas.is_empty() && etas.iter().all(|&e| e == etas[0]) && t.failed_at.is_none())
            .then(|| etas.len() as f64 * t.probabilities[0].log10());
    let measured = p.measured_qubits();
    let distribution = if t.failed_at.is_none() {
        outcome_distribution(&work_register(&t.state, p.n_work), &measured)
            .into_iter()
            .map(|(o, q)| (outcome_label(o, measured.len()), q))
            .collect()
    } else {
        BTreeMap::new()
    };
    DilationReport {
        schema: DilationReport::SCHEMA,
        circuit: p.name.clone(),
        n_qubits: p.n_qubits(),
        ancilla: p.ancilla(),
        steps: etas.len(),
        eta: etas,
        step_probabilities: t.probabilities.clone(),
        cumulative_success_log10: log10,
        cumulative_success: linear.is_normal().then_some(linear),
        repeated_first_step_log10: repeated,
        failed_step: t.failed_at,
        measured,
        distribution,
        shots: 0,
        seed: None,
        survived_shots: None,
        discarded_shots: None,
        survival_rate: None,
        counts: None,
    }
}

/// Exact report; an impossible postselection is recorded, not an error.
pub fn dilation_report(
    p: &DilationProgram,
    initial: Option<&ScaledState>,
) -> Result<DilationReport> {
    Ok(report_from(p, &trace(p, initial)?))
}

/// Monte-Carlo run: each shot draws every postselection in turn and is
/// discarded at its first failure; survivors draw a measurement outcome.
///
/// Conditioned on surviving step `k`, the state is the same for every shot,
/// so each draw only needs the exact conditional probability of its step.
pub fn run_postselected_shots(
    p: &DilationProgram,
    shots: u64,
    seed: u64,
    initial: Option<&ScaledState>,
) -> Result<DilationReport> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let t = trace(p, initial)?;
    let mut report = report_from(p, &t);
    let outcomes: Vec<(u64, f64)> = if t.failed_at.is_none() {
        outcome_distribution(&work_register(&t.state, p.n_work), &report.measured)
    } else {
        Vec::new()
    };
    let mut cumulative = Vec::with_capacity(outcomes.len());
    let mut acc = 0.0;
    for &(_, q) in &outcomes {
        acc += q;
        cumulative.push(acc);
    }
    let probs = &t.probabilities;
    let draws = par::map_range(shots as usize, |i| {
        let mut r = rng::shot_rng(seed, i as u64);
        for &q in probs {
            if rng::uniform(&mut r) >= q {
                return None;
            }
        }
        if outcomes.is_empty() {
            return None;
        }
        let u = rng::uniform(&mut r) * acc;
        let k = cumulative
            .partition_point(|&c| c <= u)
            .min(outcomes.len() - 1);
        Some(outcomes[k].0)
    });
    let mut counts = BTreeMap::new();
    let mut survived = 0u64;
    for o in draws.into_iter().flatten() {
        survived += 1;
        *counts
            .entry(outcome_label(o, report.measured.len()))
            .or_insert(0u64) += 1;
    }
    report.shots = shots;
    report.seed = Some(seed);
    report.survived_shots = Some(survived);
    report.discarded_shots = Some(shots - survived);
    report.survival_rate = Some(survived as f64 / shots as f64);
    report.counts = Some(counts);
    Ok(report)
}

/// Parses the text written by [`DilationProgram::to_text`]. Oracle paths
/// resolve against `base`.
pub fn parse_program(text: &str, base: &Path) -> Result<DilationProgram> {
    let mut load = |path: &str| -> Result<cnf::CnfFormula> {
        let full = base.join(path);
        let body = std::fs::read_to_string(&full).map_err(|e| Error::Io {
            path: full.display().to_string(),
            message: e.to_string(),
        })?;
        cnf::parse_dimacs(&body)
    };
    let mut name = None;
    let mut n_qubits: Option<usize> = None;
    let mut ancilla: Option<usize> = None;
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(rest) = raw.trim_start().strip_prefix("# name:") {
            name = Some(rest.trim().to_string());
            continue;
        }
        let toks = tokenize(raw);
        let Some(head) = toks.first() else { continue };
        match (head.text, n_qubits, ancilla) {
            ("qubits", None, _) => {
                expect_arity(&toks, 2, line, "qubits N")?;
                let n = tok_usize(&toks[1], line)?;
                if n < 1 || n > MAX_QUBITS {
                    return Err(parse_err(
                        line,
                        toks[1].column,
                        format!("need 1..={MAX_QUBITS} qubits"),
                    ));
                }
                n_qubits = Some(n);
            }
            (_, None, _) => {
                return Err(parse_err(
                    line,
                    head.column,
                    "first instruction must be `qubits N`",
                ))
            }
            ("ancilla", Some(n), None) => {
                expect_arity(&toks, 2, line, "ancilla Q")?;
                let a = tok_usize(&toks[1], line)?;
                if a + 1 != n {
                    return Err(parse_err(
                        line,
                        toks[1].column,
                        "the ancilla must be the last qubit",
                    ));
                }
                ancilla = Some(a);
            }
            (_, Some(_), None) => return Err(parse_err(line, head.column, "expected `ancilla Q`")),
            ("dilate-step", _, Some(a)) => {
                expect_arity(&toks, 3, line, "dilate-step T ETA")?;
                let target = tok_usize(&toks[1], line)?;
                if target >= a {
                    return Err(parse_err(
                        line,
                        toks[1].column,
                        format!("target must be below {a}"),
                    ));
                }
                let eta = tok_f64(&toks[2], line)?;
                dilation_unitary(eta)
                    .map_err(|e| parse_err(line, toks[2].column, e.to_string()))?;
                steps.push(Step::Dilate { target, eta });
            }
            (_, _, Some(_)) => {
                let step = match parse_instruction(&toks, line, &mut load)? {
                    Instruction::Gate(op) => Step::Gate(op),
                    Instruction::Oracle(o) => Step::Oracle(o),
                    Instruction::Measure(q) => Step::Measure(q),
                };
                steps.push(step);
            }
        }
    }
    let n_work =
        ancilla.ok_or_else(|| parse_err(1, 1, "missing `qubits N` and `ancilla Q` lines"))?;
    let p = DilationProgram {
        name,
        n_work,
        steps,
    };
    p.validate()
        .map_err(|e| parse_err(text.lines().count().max(1), 1, e.to_string()))?;
    Ok(p)
}

/// Circuit equivalent of the compiled program, with `G(η^{-1/2})` in place
/// of each dilation step.
pub fn undilated_circuit(p: &DilationProgram) -> Circuit {
    let mut c = Circuit::new(p.n_work);
    c.name = p.name.clone();
    for s in &p.steps {
        c.push(match s {
            Step::Gate(op) => Instruction::Gate(*op),
            Step::Dilate { target, eta } => Instruction::Gate(GateOp::G {
                target: *target,
                g: eta.sqrt().recip(),
            }),
            Step::Oracle(o) => Instruction::Oracle(o.clone()),
            Step::Measure(q) => Instruction::Measure(*q),
        });
    }
    c
}
