use serde::Serialize;
use std::collections::BTreeMap;

use super::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::gates::{self, GateOp};
use crate::rng;
use crate::sat;
use crate::state::{NormSquared, ScaledState};

/// Branch limit when measurements are followed by norm-changing gates and
/// the outcome distribution has to be tracked branch by branch.
pub const MAX_BRANCHES: usize = 4096;

/// Largest outcome table listed in a report.
const MAX_LISTED_OUTCOMES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitProbabilities {
    pub qubit: usize,
    pub p0: f64,
    pub p1: f64,
}

/// Exact joint distribution of the measured qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    /// Measured qubits, ascending. Bit `i` of an outcome is `measured[i]`.
    pub measured: Vec<usize>,
    /// Nonzero outcomes in increasing order with their probabilities.
    pub outcomes: Vec<(u64, f64)>,
    pub marginals: Vec<QubitProbabilities>,
    /// `d²` of the state with all measurements deferred to the end.
    pub final_norm: NormSquared,
    /// Whether measurement branches had to be tracked separately.
    pub branched: bool,
}

impl ExactDistribution {
    pub fn label(&self, outcome: u64) -> String {
        outcome_label(outcome, self.measured.len())
    }

    pub fn probability(&self, outcome: u64) -> f64 {
        self.outcomes
            .binary_search_by_key(&outcome, |&(o, _)| o)
            .map_or(0.0, |i| self.outcomes[i].1)
    }
}

/// Outcome string: character `i` is the result on the `i`-th measured qubit.
pub fn outcome_label(outcome: u64, width: usize) -> String {
    (0..width)
        .map(|i| if (outcome >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<String>,
    pub n_qubits: usize,
    pub measured: Vec<usize>,
    pub probabilities: Vec<QubitProbabilities>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<BTreeMap<String, f64>>,
    pub norm_squared: NormSquared,
    pub norm_squared_log10: f64,
    pub shots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<String, u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub const SCHEMA: &'static str = "nqc.run/1";

    fn from_distribution(c: &Circuit, d: &ExactDistribution) -> Self {
        let distribution = (d.outcomes.len() <= MAX_LISTED_OUTCOMES)
            .then(|| d.outcomes.iter().map(|&(o, p)| (d.label(o), p)).collect());
        RunReport {
            schema: Self::SCHEMA,
            circuit: c.name.clone(),
            n_qubits: c.n_qubits,
            measured: d.measured.clone(),
            probabilities: d.marginals.clone(),
            distribution,
            norm_squared: d.final_norm,
            norm_squared_log10: d.final_norm.ln() / std::f64::consts::LN_10,
            shots: 0,
            seed: None,
            counts: None,
            wall_time_ms: None,
        }
    }

    pub fn probability_of(&self, qubit: usize) -> Option<QubitProbabilities> {
        self.probabilities
            .iter()
            .copied()
            .find(|p| p.qubit == qubit)
    }
}

fn initial_state(c: &Circuit, initial: Option<&ScaledState>) -> Result<ScaledState> {
    match initial {
        Some(s) if s.n_qubits() != c.n_qubits => Err(Error::InvalidArgument(format!(
            "initial state has {} qubits, circuit has {}",
            s.n_qubits(),
            c.n_qubits
        ))),
        Some(s) => Ok(s.clone()),
        None => ScaledState::zeros_state(c.n_qubits),
    }
}

/// Applies one non-measurement instruction.
pub(crate) fn apply_instruction(state: &mut ScaledState, ins: &Instruction) -> Result<()> {
    match ins {
        Instruction::Gate(op) => gates::apply(state, op),
        Instruction::Oracle(o) => sat::apply_oracle(state, &o.formula, o.work_qubits(), o.ancilla),
        Instruction::Measure(_) => Ok(()),
    }
}

/// Runs of identical `G` instructions are applied in one ledger step.
fn for_each_run<'a>(
    ops: &'a [Instruction],
    mut f: impl FnMut(&'a Instruction, i64) -> Result<()>,
) -> Result<()> {
    let mut i = 0;
    while i < ops.len() {
        let mut r = 1;
        if let Instruction::Gate(GateOp::G { .. }) = ops[i] {
            while i + r < ops.len() && ops[i + r] == ops[i] {
                r += 1;
            }
        }
        f(&ops[i], r as i64)?;
        i += r;
    }
    Ok(())
}

fn apply_run(state: &mut ScaledState, ins: &Instruction, r: i64) -> Result<()> {
    match ins {
        Instruction::Gate(GateOp::G { target, g }) if r > 1 => {
            gates::apply_g_repeated(state, *target, *g, r)?;
            state.rescale_if_needed();
            Ok(())
        }
        _ => apply_instruction(state, ins),
    }
}

/// Final state with every measurement deferred to the end.
pub fn evolve(c: &Circuit, initial: Option<&ScaledState>) -> Result<ScaledState> {
    c.validate()?;
    let mut state = initial_state(c, initial)?;
    for_each_run(&c.ops, |ins, r| apply_run(&mut state, ins, r))?;
    Ok(state)
}

fn needs_branching(c: &Circuit) -> bool {
    match c
        .ops
        .iter()
        .position(|i| matches!(i, Instruction::Measure(_)))
    {
        Some(first) => c.ops[first..].iter().any(|i| !i.is_unitary()),
        None => false,
    }
}

pub fn exact_distribution(c: &Circuit, initial: Option<&ScaledState>) -> Result<ExactDistribution> {
    let final_state = evolve(c, initial)?;
    let measured = c.measured_qubits();
    let final_norm = final_state.norm_squared();

    if !needs_branching(c) {
        let outcomes = outcome_distribution(&final_state, &measured);
        let mut marginals = Vec::with_capacity(measured.len());
        for &q in &measured {
            let (p0, p1) = final_state.measure_probabilities(q)?;
            marginals.push(QubitProbabilities { qubit: q, p0, p1 });
        }
        return Ok(ExactDistribution {
            measured,
            outcomes,
            marginals,
            final_norm,
            branched: false,
        });
    }

    let outcomes = branched_outcomes(c, initial_state(c, initial)?, &measured)?;
    let marginals = measured
        .iter()
        .enumerate()
        .map(|(bit, &q)| {
            let p1: f64 = outcomes
                .iter()
                .filter(|(o, _)| (o >> bit) & 1 == 1)
                .map(|(_, p)| p)
                .sum();
            let p0: f64 = outcomes
                .iter()
                .filter(|(o, _)| (o >> bit) & 1 == 0)
                .map(|(_, p)| p)
                .sum();
            QubitProbabilities { qubit: q, p0, p1 }
        })
        .collect();
    Ok(ExactDistribution {
        measured,
        outcomes,
        marginals,
        final_norm,
        branched: true,
    })
}

/// Nonzero probabilities of the measured qubits' joint outcomes, ascending.
pub fn outcome_distribution(state: &ScaledState, measured: &[usize]) -> Vec<(u64, f64)> {
    let probs = state.basis_probabilities();
    let identity =
        measured.iter().enumerate().all(|(i, &q)| i == q) && measured.len() == state.n_qubits();
    let mut table = vec![0.0f64; 1usize << measured.len()];
    for (idx, p) in probs.into_iter().enumerate() {
        let o = if identity {
            idx
        } else {
            measured
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &q)| acc | (((idx >> q) & 1) << i))
        };
        table[o] += p;
    }
    table
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .map(|(o, p)| (o as u64, p))
        .collect()
}

struct Branch {
    weight: f64,
    state: ScaledState,
    outcome: u64,
}

fn branched_outcomes(
    c: &Circuit,
    start: ScaledState,
    measured: &[usize],
) -> Result<Vec<(u64, f64)>> {
    let mut branches = vec![Branch {
        weight: 1.0,
        state: start,
        outcome: 0,
    }];
    for_each_run(&c.ops, |ins, r| {
        if let Instruction::Measure(q) = ins {
            let bit = measured
                .iter()
                .position(|m| m == q)
                .expect("measured qubit");
            let mut next = Vec::with_capacity(branches.len() * 2);
            for b in branches.drain(..) {
                let (p0, p1) = b.state.measure_probabilities(*q)?;
                for (outcome, p) in [(0u8, p0), (1u8, p1)] {
                    if p > 0.0 {
                        next.push(Branch {
                            weight: b.weight * p,
                            state: b.state.collapse(*q, outcome)?,
                            outcome: b.outcome | ((outcome as u64) << bit),
                        });
                    }
                }
            }
            if next.len() > MAX_BRANCHES {
                return Err(Error::InvalidArgument(format!(
                    "more than {MAX_BRANCHES} measurement branches"
                )));
            }
            branches = next;
            Ok(())
        } else {
            branches
                .iter_mut()
                .try_for_each(|b| apply_run(&mut b.state, ins, r))
        }
    })?;
    let mut out: Vec<(u64, f64)> = branches
        .into_iter()
        .map(|b| (b.outcome, b.weight))
        .collect();
    out.sort_by_key(|&(o, _)| o);
    Ok(out)
}

pub fn run_exact(c: &Circuit, initial: Option<&ScaledState>) -> Result<RunReport> {
    let d = exact_distribution(c, initial)?;
    Ok(RunReport::from_distribution(c, &d))
}

/// Draws `shots` outcomes from `d`. Shot `i` uses its own stream keyed by
/// `(seed, i)`, so the sequence does not depend on scheduling.
pub fn sample_outcomes(d: &ExactDistribution, shots: u64, seed: u64) -> Vec<u64> {
    let mut cumulative = Vec::with_capacity(d.outcomes.len());
    let mut acc = 0.0;
    for &(_, p) in &d.outcomes {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    crate::par::map_range(shots as usize, |i| {
        let u = rng::uniform(&mut rng::shot_rng(seed, i as u64)) * total;
        let k = cumulative
            .partition_point(|&c| c <= u)
            .min(d.outcomes.len() - 1);
        d.outcomes[k].0
    })
}

pub fn run_shots(
    c: &Circuit,
    shots: u64,
    seed: u64,
    initial: Option<&ScaledState>,
) -> Result<RunReport> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let d = exact_distribution(c, initial)?;
    let samples = sample_outcomes(&d, shots, seed);
    let mut counts = BTreeMap::new();
    for o in samples {
        *counts.entry(d.label(o)).or_insert(0u64) += 1;
    }
    let mut report = RunReport::from_distribution(c, &d);
    report.shots = shots;
    report.seed = Some(seed);
    report.counts = Some(counts);
    Ok(report)
}
