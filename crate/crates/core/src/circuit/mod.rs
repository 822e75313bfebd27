//! Circuits: representation, the line-oriented text format, and execution.
//!
//! ```text
//! # comment
//! qubits 2
//! h 0
//! cnot 0 1
//! g 1 2.0
//! cg 0 1 4.0
//! u 0 a_re a_im b_re b_im c_re c_im d_re d_im
//! oracle cnf formula.cnf anc 1
//! measure 1
//! ```
//!
//! An oracle line acts on work qubits `0..num_vars` of the referenced formula
//! and flips the ancilla on every non-satisfying assignment.

mod engine;

pub use engine::{
    evolve, exact_distribution, outcome_distribution, outcome_label, run_exact, run_shots,
    sample_outcomes, ExactDistribution, QubitProbabilities, RunReport,
};

use serde::Serialize;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::cnf::{self, CnfFormula};
use crate::error::{Error, Result};
use crate::gates::{check_g, GateOp};
use crate::matrix::Mat2;
use crate::state::MAX_QUBITS;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRef {
    /// Path as written in the circuit text.
    pub path: String,
    pub ancilla: usize,
    #[serde(skip)]
    pub formula: Arc<CnfFormula>,
}

impl OracleRef {
    pub fn work_qubits(&self) -> std::ops::Range<usize> {
        0..self.formula.num_vars
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Instruction {
    Gate(GateOp),
    Oracle(OracleRef),
    Measure(usize),
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Gate(op) => op.qubits(),
            Instruction::Oracle(o) => {
                let mut q: Vec<usize> = o.work_qubits().collect();
                q.push(o.ancilla);
                q
            }
            Instruction::Measure(q) => vec![*q],
        }
    }

    /// Unitary instructions leave the norm unchanged.
    pub fn is_unitary(&self) -> bool {
        match self {
            Instruction::Gate(op) => op.is_unitary(),
            Instruction::Oracle(_) => true,
            Instruction::Measure(_) => true,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Gate(op) => write!(f, "{op}"),
            Instruction::Oracle(o) => write!(f, "oracle cnf {} anc {}", o.path, o.ancilla),
            Instruction::Measure(q) => write!(f, "measure {q}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ops: Vec<Instruction>,
    pub name: Option<String>,
    pub source: Option<PathBuf>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ..Default::default()
        }
    }

    pub fn push_gate(&mut self, op: GateOp) -> &mut Self {
        self.ops.push(Instruction::Gate(op));
        self
    }

    pub fn push(&mut self, ins: Instruction) -> &mut Self {
        self.ops.push(ins);
        self
    }

    pub fn gates(&self) -> impl Iterator<Item = &GateOp> {
        self.ops.iter().filter_map(|i| match i {
            Instruction::Gate(op) => Some(op),
            _ => None,
        })
    }

    /// Measured qubits in ascending order. A circuit without any `measure`
    /// line measures every qubit at the end.
    pub fn measured_qubits(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self
            .ops
            .iter()
            .filter_map(|i| match i {
                Instruction::Measure(q) => Some(*q),
                _ => None,
            })
            .collect();
        if q.is_empty() {
            q = (0..self.n_qubits).collect();
        }
        q.sort_unstable();
        q
    }

    pub fn has_explicit_measurements(&self) -> bool {
        self.ops
            .iter()
            .any(|i| matches!(i, Instruction::Measure(_)))
    }

    /// Structural checks: indices, gate invariants, oracle layout, and the
    /// terminal-measurement rule.
    pub fn validate(&self) -> Result<()> {
        self.check_each(|_, e| e)
    }

    fn check_each(&self, mut wrap: impl FnMut(usize, Error) -> Error) -> Result<()> {
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                n: self.n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let mut measured = vec![false; self.n_qubits];
        for (i, ins) in self.ops.iter().enumerate() {
            check_instruction(ins, self.n_qubits, &measured).map_err(|e| wrap(i, e))?;
            if let Instruction::Measure(q) = ins {
                measured[*q] = true;
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(out, "# name: {name}");
        }
        let _ = writeln!(out, "qubits {}", self.n_qubits);
        for ins in &self.ops {
            let _ = writeln!(out, "{ins}");
        }
        out
    }

    /// Same program ignoring name and source.
    pub fn same_structure(&self, other: &Circuit) -> bool {
        self.n_qubits == other.n_qubits && self.ops == other.ops
    }
}

pub(crate) fn check_instruction(ins: &Instruction, n: usize, measured: &[bool]) -> Result<()> {
    for q in ins.qubits() {
        if q >= n {
            return Err(Error::qubit(q, n));
        }
    }
    match ins {
        Instruction::Gate(op) => op.validate(Some(n))?,
        Instruction::Oracle(o) => {
            if o.work_qubits().contains(&o.ancilla) {
                return Err(Error::InvalidArgument(format!(
                    "oracle ancilla {} overlaps work qubits 0..{}",
                    o.ancilla, o.formula.num_vars
                )));
            }
        }
        Instruction::Measure(q) => {
            if measured[*q] {
                return Err(Error::InvalidArgument(format!("qubit {q} measured twice")));
            }
            return Ok(());
        }
    }
    if let Some(q) = ins.qubits().into_iter().find(|&q| measured[q]) {
        return Err(Error::InvalidArgument(format!(
            "gate on qubit {q} after it was measured"
        )));
    }
    Ok(())
}

/// Parses circuit text; oracle paths resolve against the working directory.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    parse_circuit_at(text, Path::new("."))
}

/// Parses circuit text with oracle paths relative to `base`.
pub fn parse_circuit_at(text: &str, base: &Path) -> Result<Circuit> {
    parse_circuit_with(text, &mut |p: &str| {
        let full = base.join(p);
        let body = std::fs::read_to_string(&full).map_err(|e| Error::Io {
            path: full.display().to_string(),
            message: e.to_string(),
        })?;
        cnf::parse_dimacs(&body)
    })
}

/// Reads a circuit file; oracle paths resolve against its directory.
pub fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut c = parse_circuit_at(&text, base)?;
    if c.name.is_none() {
        c.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    c.source = Some(path.to_path_buf());
    Ok(c)
}

/// A whitespace token with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

/// Splits a line into tokens, dropping a trailing `#` comment.
pub(crate) fn tokenize(line: &str) -> Vec<Token<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &body[s..i],
                    column: body[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &body[s..],
            column: body[..s].chars().count() + 1,
        });
    }
    out
}

pub(crate) fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub(crate) fn tok_usize(t: &Token<'_>, line: usize) -> Result<usize> {
    t.text.parse().map_err(|_| {
        parse_err(
            line,
            t.column,
            format!("expected a qubit index, got `{}`", t.text),
        )
    })
}

pub(crate) fn tok_f64(t: &Token<'_>, line: usize) -> Result<f64> {
    match t.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(
            line,
            t.column,
            format!("expected a finite number, got `{}`", t.text),
        )),
    }
}

pub(crate) fn expect_arity(toks: &[Token<'_>], n: usize, line: usize, usage: &str) -> Result<()> {
    if toks.len() != n {
        let col = toks.get(n).map_or(toks[0].column, |t| t.column);
        return Err(parse_err(
            line,
            col,
            format!("`{}` takes {} operand(s): {usage}", toks[0].text, n - 1),
        ));
    }
    Ok(())
}

pub(crate) type Loader<'a> = dyn FnMut(&str) -> Result<CnfFormula> + 'a;

/// Parses circuit text, resolving oracle paths through `load`.
pub fn parse_circuit_with(text: &str, load: &mut Loader<'_>) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    let mut name = None;
    let mut measured: Vec<bool> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(rest) = raw.trim_start().strip_prefix("# name:") {
            name = Some(rest.trim().to_string());
            continue;
        }
        let toks = tokenize(raw);
        let Some(head) = toks.first() else { continue };

        let Some(c) = circuit.as_mut() else {
            if head.text != "qubits" {
                return Err(parse_err(
                    line,
                    head.column,
                    "first instruction must be `qubits N`",
                ));
            }
            expect_arity(&toks, 2, line, "qubits N")?;
            let n = tok_usize(&toks[1], line)?;
            if n > MAX_QUBITS {
                return Err(parse_err(
                    line,
                    toks[1].column,
                    format!("at most {MAX_QUBITS} qubits"),
                ));
            }
            circuit = Some(Circuit::new(n));
            measured = vec![false; n];
            continue;
        };

        let ins = parse_instruction(&toks, line, load)?;
        check_instruction(&ins, c.n_qubits, &measured).map_err(|e| {
            let column = locate_column(&ins, &e, &toks);
            parse_err(line, column, e.to_string())
        })?;
        if let Instruction::Measure(q) = ins {
            measured[q] = true;
        }
        c.ops.push(ins);
    }

    let mut c = circuit.ok_or_else(|| parse_err(1, 1, "missing `qubits N` line"))?;
    c.name = name;
    Ok(c)
}

fn locate_column(ins: &Instruction, e: &Error, toks: &[Token<'_>]) -> usize {
    let by_field = |field: &str| -> Option<usize> {
        let pos = match (ins, field) {
            (Instruction::Gate(GateOp::G { .. }), "g") => 2,
            (Instruction::Gate(GateOp::Cg { .. }), "g") => 3,
            (_, "control") => 1,
            _ => return None,
        };
        toks.get(pos).map(|t| t.column)
    };
    match e {
        Error::InvalidGate { field, .. } => by_field(field).unwrap_or(toks[0].column),
        Error::IndexOutOfRange { index, .. } => toks
            .iter()
            .skip(1)
            .find(|t| t.text.parse::<usize>().ok() == Some(*index))
            .map_or(toks[0].column, |t| t.column),
        _ => toks[0].column,
    }
}

pub(crate) fn parse_instruction(
    toks: &[Token<'_>],
    line: usize,
    load: &mut Loader<'_>,
) -> Result<Instruction> {
    let head = toks[0];
    let q = |i: usize| tok_usize(&toks[i], line);
    let op = match head.text {
        "h" | "t" | "x" => {
            expect_arity(toks, 2, line, "Q")?;
            let t = q(1)?;
            match head.text {
                "h" => GateOp::H(t),
                "t" => GateOp::T(t),
                _ => GateOp::X(t),
            }
        }
        "cnot" => {
            expect_arity(toks, 3, line, "C T")?;
            GateOp::Cnot {
                control: q(1)?,
                target: q(2)?,
            }
        }
        "g" => {
            expect_arity(toks, 3, line, "Q GVAL")?;
            let g = tok_f64(&toks[2], line)?;
            check_g(g).map_err(|e| parse_err(line, toks[2].column, e.to_string()))?;
            GateOp::G { target: q(1)?, g }
        }
        "cg" => {
            expect_arity(toks, 4, line, "C T GVAL")?;
            let g = tok_f64(&toks[3], line)?;
            check_g(g).map_err(|e| parse_err(line, toks[3].column, e.to_string()))?;
            GateOp::Cg {
                control: q(1)?,
                target: q(2)?,
                g,
            }
        }
        "u" => {
            expect_arity(toks, 10, line, "Q a_re a_im b_re b_im c_re c_im d_re d_im")?;
            let mut v = [0.0; 8];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = tok_f64(&toks[2 + k], line)?;
            }
            let z = |k: usize| Complex64::new(v[2 * k], v[2 * k + 1]);
            GateOp::U2 {
                target: q(1)?,
                matrix: Mat2::new(z(0), z(1), z(2), z(3)),
            }
        }
        "measure" => {
            expect_arity(toks, 2, line, "Q")?;
            return Ok(Instruction::Measure(q(1)?));
        }
        "oracle" => {
            expect_arity(toks, 5, line, "cnf PATH anc Q")?;
            if toks[1].text != "cnf" {
                return Err(parse_err(
                    line,
                    toks[1].column,
                    "only `oracle cnf` is supported",
                ));
            }
            if toks[3].text != "anc" {
                return Err(parse_err(line, toks[3].column, "expected `anc`"));
            }
            let ancilla = q(4)?;
            let formula = load(toks[2].text)
                .map_err(|e| parse_err(line, toks[2].column, format!("oracle formula: {e}")))?;
            return Ok(Instruction::Oracle(OracleRef {
                path: toks[2].text.to_string(),
                ancilla,
                formula: Arc::new(formula),
            }));
        }
        other => {
            return Err(parse_err(
                line,
                head.column,
                format!("unknown mnemonic `{other}`"),
            ));
        }
    };
    Ok(Instruction::Gate(op))
}
