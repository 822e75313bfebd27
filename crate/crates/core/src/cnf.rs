//! CNF formulas: DIMACS input/output, evaluation and brute-force counting.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::par;

/// Largest variable count accepted by [`brute_force_count`].
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// A formula over variables `1..=num_vars`. Literal `k > 0` is variable `k`,
/// `k < 0` its negation. An empty clause is false; an empty clause list is
/// true.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i64>>,
}

/// What to do when the header clause count disagrees with the body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    /// Accept the mismatch and report it through [`ParsedDimacs::warnings`].
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDimacs {
    pub formula: CnfFormula,
    pub warnings: Vec<String>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i64>>) -> Result<Self> {
        for (i, clause) in clauses.iter().enumerate() {
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::InvalidArgument(format!(
                        "clause {i}: literal {lit} outside 1..={num_vars}"
                    )));
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Value of the formula; bit `k-1` of `assignment` is variable `k`.
    pub fn eval(&self, assignment: u64) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let bit = (assignment >> (lit.unsigned_abs() - 1)) & 1 == 1;
                bit == (lit > 0)
            })
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            out.push_str("0\n");
        }
        out
    }
}

pub fn eval_formula(f: &CnfFormula, assignment: u64) -> bool {
    f.eval(assignment)
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    parse_dimacs_with(text, Strictness::Strict).map(|p| p.formula)
}

/// DIMACS CNF reader. Clauses may span lines; each ends with `0`. A `%`
/// line (as in the SATLIB benchmarks) ends the input.
pub fn parse_dimacs_with(text: &str, strictness: Strictness) -> Result<ParsedDimacs> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut last_line = 0;
    let mut open_since = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(dimacs(line_no, "duplicate header"));
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 4 || toks[0] != "p" || toks[1] != "cnf" {
                return Err(dimacs(line_no, "header must be `p cnf <vars> <clauses>`"));
            }
            let n = toks[2]
                .parse()
                .map_err(|_| dimacs(line_no, "bad variable count"))?;
            let m = toks[3]
                .parse()
                .map_err(|_| dimacs(line_no, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(dimacs(line_no, "clause before `p cnf` header"));
        };
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| dimacs(line_no, format!("bad literal `{tok}`")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if lit.unsigned_abs() as usize > n {
                return Err(dimacs(
                    line_no,
                    format!("literal {lit} exceeds variable count {n}"),
                ));
            }
            if current.is_empty() {
                open_since = line_no;
            }
            current.push(lit);
        }
    }

    let Some((n, m)) = header else {
        return Err(dimacs(last_line.max(1), "missing `p cnf` header"));
    };
    if !current.is_empty() {
        return Err(dimacs(open_since, "clause not terminated by 0"));
    }
    let mut warnings = Vec::new();
    if clauses.len() != m {
        let msg = format!("header declares {m} clauses, found {}", clauses.len());
        match strictness {
            Strictness::Strict => return Err(dimacs(last_line.max(1), msg)),
            Strictness::Lenient => warnings.push(msg),
        }
    }
    Ok(ParsedDimacs {
        formula: CnfFormula {
            num_vars: n,
            clauses,
        },
        warnings,
    })
}

fn dimacs(line: usize, message: impl Into<String>) -> Error {
    Error::Dimacs {
        line,
        message: message.into(),
    }
}

/// Number of satisfying assignments, by enumeration.
pub fn brute_force_count(f: &CnfFormula) -> Result<u64> {
    if f.num_vars > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity {
            n: f.num_vars,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let total = 1usize << f.num_vars;
    let block = 1usize << 12;
    let blocks = total.div_ceil(block);
    let counts = par::map_range(blocks, |b| {
        let start = b * block;
        let end = (start + block).min(total);
        (start..end).filter(|&j| f.eval(j as u64)).count() as u64
    });
    Ok(counts.into_iter().sum())
}
