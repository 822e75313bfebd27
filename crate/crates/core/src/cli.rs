//! Command-line interface.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 numeric or
//! constraint violation, 4 verification mismatch.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::boson::{self, BosonQubit};
use crate::circuit::{self, load_circuit, Circuit};
use crate::cnf::{self, CnfFormula};
use crate::dilation;
use crate::error::{Error, Result};
use crate::gates;
use crate::matrix::Mat2;
use crate::sat::{self, Decision, Mode, SatOptions};
use crate::synthesis;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

/// Environment variable overriding the register capacity.
pub const CAPACITY_ENV: &str = "NQC_CAPACITY";

#[derive(Debug, Parser)]
#[command(
    name = "nqc",
    version,
    about = "Non-Hermitian quantum circuit simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a circuit file.
    Run(RunArgs),
    /// Decide satisfiability of a DIMACS formula.
    Sat(SatArgs),
    /// Estimate the model count of a DIMACS formula.
    Count(CountArgs),
    /// Compile a circuit into unitary steps with postselected ancillas.
    Dilate(DilateArgs),
    /// Plan a single-qubit transformation with rotations and G.
    Plan(PlanArgs),
    /// Account for bosons moved by the two-mode realization of G.
    Boson(BosonArgs),
    /// Search the closest {H, T} word to a single-qubit unitary.
    Approx(ApproxArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Largest register accepted (default 24, or NQC_CAPACITY).
    #[arg(long)]
    pub capacity: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub circuit: PathBuf,
    /// Number of samples; 0 reports exact probabilities only.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Execute through the postselected dilation instead.
    #[arg(long)]
    pub dilated: bool,
    /// Include wall time in the report.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SatArgs {
    pub cnf: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub g: f64,
    /// Number of G applications, or `auto`.
    #[arg(long, default_value = "auto")]
    pub r: String,
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cross-check the decision against enumeration.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    pub cnf: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub g: f64,
    #[arg(long, default_value = "auto")]
    pub r: String,
    /// Invert the exact probability (the default unless --shots is given).
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cross-check the count against enumeration.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DilateArgs {
    pub circuit: PathBuf,
    /// Write the compiled program to this file.
    #[arg(long)]
    pub emit: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// a_re a_im b_re b_im
    #[arg(long, num_args = 4, allow_negative_numbers = true, required = true)]
    pub initial: Vec<f64>,
    /// a_re a_im b_re b_im
    #[arg(
        long = "final",
        num_args = 4,
        allow_negative_numbers = true,
        required = true
    )]
    pub final_: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub g: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BosonArgs {
    /// Bosons in mode 0 (decimal, any size).
    #[arg(long)]
    pub n0: String,
    /// Bosons in mode 1 (decimal, any size).
    #[arg(long)]
    pub n1: String,
    /// Integer gain of at least 2.
    #[arg(long, default_value = "2")]
    pub g: String,
    #[arg(long, default_value_t = 1)]
    pub steps: u64,
    /// c0 as re im (default 1/√2).
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    pub c0: Option<Vec<f64>>,
    /// c1 as re im (default 1/√2).
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    pub c1: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// Named target: h, t, x, y, z, s, tdg, sdg.
    #[arg(long, conflicts_with = "matrix")]
    pub gate: Option<String>,
    /// a_re a_im b_re b_im c_re c_im d_re d_im, row major.
    #[arg(long, num_args = 8, allow_negative_numbers = true)]
    pub matrix: Option<Vec<f64>>,
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    #[command(flatten)]
    pub common: Common,
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Dimacs { .. } | Error::Io { .. } => EXIT_PARSE,
            _ => EXIT_NUMERIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code, writing the report to `out` and diagnostics to `err`.
pub fn run_with_io<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with_io(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Sat(a) => cmd_sat(a, out),
        Command::Count(a) => cmd_count(a, out),
        Command::Dilate(a) => cmd_dilate(a, out),
        Command::Plan(a) => cmd_plan(a, out),
        Command::Boson(a) => cmd_boson(a, out),
        Command::Approx(a) => cmd_approx(a, out),
    }
}

fn capacity(common: &Common) -> std::result::Result<usize, Failure> {
    if let Some(c) = common.capacity {
        return Ok(c);
    }
    match std::env::var(CAPACITY_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            fail(
                EXIT_NUMERIC,
                format!("{CAPACITY_ENV} must be an integer, got `{v}`"),
            )
        }),
        Err(_) => Ok(sat::DEFAULT_CAPACITY),
    }
}

fn with_path(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn load(path: &Path, cap: usize) -> std::result::Result<Circuit, Failure> {
    let c = load_circuit(path).map_err(|e| with_path(path, e))?;
    if c.n_qubits > cap {
        return Err(Error::Capacity {
            n: c.n_qubits,
            limit: cap,
        }
        .into());
    }
    Ok(c)
}

fn load_cnf(path: &Path) -> std::result::Result<CnfFormula, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::from(Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    })?;
    cnf::parse_dimacs(&text).map_err(|e| with_path(path, e))
}

fn parse_r(text: &str, n: usize, g: f64) -> Result<i64> {
    if text == "auto" {
        return sat::choose_r(n, g);
    }
    text.parse::<i64>().ok().filter(|r| *r >= 0).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "--r must be `auto` or a nonnegative integer, got `{text}`"
        ))
    })
}

/// Writes a report in the requested format.
fn emit<T: Serialize>(
    out: &mut dyn Write,
    format: Format,
    report: &T,
) -> std::result::Result<(), Failure> {
    let value = serde_json::to_value(report).map_err(|e| fail(EXIT_NUMERIC, e.to_string()))?;
    let text = match format {
        Format::Json => {
            // field order follows the report type
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| fail(EXIT_NUMERIC, e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &value, &mut rows);
            let mut s = String::from("key,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
            }
            s
        }
        Format::Text => {
            let mut rows = Vec::new();
            flatten("", &value, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            rows.iter()
                .map(|(k, v)| format!("{k:width$}  {v}\n"))
                .collect()
        }
    };
    out.write_all(text.as_bytes())
        .map_err(|e| fail(EXIT_NUMERIC, format!("writing output: {e}")))
}

/// Dotted key paths for every scalar in `v`.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&key(k), x, rows);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> CmdResult {
    let cap = capacity(&a.common)?;
    let start = Instant::now();
    let c = load(&a.circuit, cap)?;
    if a.dilated {
        let p = dilation::compile_circuit(&c)?;
        let report = if a.shots > 0 {
            dilation::run_postselected_shots(&p, a.shots, a.seed, None)?
        } else {
            dilation::dilation_report(&p, None)?
        };
        emit(out, a.common.format, &report)?;
        return Ok(EXIT_OK);
    }
    let mut report = if a.shots > 0 {
        circuit::run_shots(&c, a.shots, a.seed, None)?
    } else {
        circuit::run_exact(&c, None)?
    };
    if a.timing {
        report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    emit(out, a.common.format, &report)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct Verified<'a, T: Serialize> {
    #[serde(flatten)]
    report: &'a T,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
}

fn cmd_sat(a: &SatArgs, out: &mut dyn Write) -> CmdResult {
    let cap = capacity(&a.common)?;
    let f = load_cnf(&a.cnf)?;
    let r = parse_r(&a.r, f.num_vars, a.g)?;
    let mode = if a.shots > 0 {
        Mode::Shots {
            shots: a.shots,
            seed: a.seed,
        }
    } else {
        Mode::Exact
    };
    let opts = SatOptions {
        g: a.g,
        r: Some(r),
        mode,
        capacity: cap,
        brute_force: a.verify,
    };
    let report = sat::solve_sat(&f, &opts)?;
    let verified = report.k_bruteforce.map(|k| {
        let want = if k > 0 {
            Decision::Sat
        } else {
            Decision::Unsat
        };
        report.decision == want
    });
    emit(
        out,
        a.common.format,
        &Verified {
            report: &report,
            verified,
        },
    )?;
    Ok(if verified == Some(false) {
        EXIT_MISMATCH
    } else {
        EXIT_OK
    })
}

#[derive(Debug, Serialize)]
struct CountReport {
    schema: &'static str,
    n: usize,
    #[serde(rename = "N")]
    big_n: u64,
    g: f64,
    r: i64,
    mode: &'static str,
    p_accept: f64,
    #[serde(rename = "K")]
    k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval: Option<(f64, f64)>,
    invertible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(rename = "K_bruteforce", skip_serializing_if = "Option::is_none")]
    k_bruteforce: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
}

fn cmd_count(a: &CountArgs, out: &mut dyn Write) -> CmdResult {
    let cap = capacity(&a.common)?;
    let f = load_cnf(&a.cnf)?;
    let r = parse_r(&a.r, f.num_vars, a.g)?;
    let sampled = a.shots > 0 && !a.exact;
    let mode = if sampled {
        Mode::Shots {
            shots: a.shots,
            seed: a.seed,
        }
    } else {
        Mode::Exact
    };
    let est = sat::count_models(&f, a.g, r, mode, cap)?;
    let k_bruteforce = if a.verify {
        Some(cnf::brute_force_count(&f)?)
    } else {
        None
    };
    let verified = k_bruteforce.map(|k| match (est.estimate, est.interval) {
        (_, Some((lo, hi))) if sampled => lo <= k as f64 && k as f64 <= hi,
        (Some(e), _) => e == k,
        (None, _) => false,
    });
    let report = CountReport {
        schema: "nqc.count/1",
        n: f.num_vars,
        big_n: 1u64 << f.num_vars,
        g: a.g,
        r: est.r,
        mode: if sampled { "shots" } else { "exact" },
        p_accept: est.p_accept,
        k: est.estimate,
        interval: est.interval,
        invertible: est.invertible,
        shots: sampled.then_some(a.shots),
        seed: sampled.then_some(a.seed),
        k_bruteforce,
        verified,
    };
    emit(out, a.common.format, &report)?;
    Ok(if verified == Some(false) {
        EXIT_MISMATCH
    } else {
        EXIT_OK
    })
}

fn cmd_dilate(a: &DilateArgs, out: &mut dyn Write) -> CmdResult {
    let cap = capacity(&a.common)?;
    let c = load(&a.circuit, cap)?;
    let p = dilation::compile_circuit(&c)?;
    if let Some(path) = &a.emit {
        std::fs::write(path, p.to_text()).map_err(|e| {
            Failure::from(Error::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        })?;
    }
    let report = if a.shots > 0 {
        dilation::run_postselected_shots(&p, a.shots, a.seed, None)?
    } else {
        dilation::dilation_report(&p, None)?
    };
    emit(out, a.common.format, &report)?;
    Ok(EXIT_OK)
}

fn qubit_arg(v: &[f64]) -> synthesis::Qubit2 {
    [Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])]
}

#[derive(Debug, Serialize)]
struct PlanReport {
    schema: &'static str,
    #[serde(flatten)]
    plan: synthesis::SynthesisPlan,
    initial_norm: f64,
    final_norm: f64,
    result: synthesis::Qubit2,
    distance: f64,
    g_applications: u64,
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write) -> CmdResult {
    let initial = qubit_arg(&a.initial);
    let target = qubit_arg(&a.final_);
    let plan = synthesis::plan_single_qubit(&initial, &target, a.g)?;
    let result = synthesis::execute_plan(&plan, &initial);
    let distance = ((result[0] - target[0]).norm_sqr() + (result[1] - target[1]).norm_sqr()).sqrt();
    let report = PlanReport {
        schema: "nqc.plan/1",
        plan,
        initial_norm: synthesis::norm(&initial),
        final_norm: synthesis::norm(&target),
        result,
        distance,
        g_applications: plan.r + 1,
    };
    emit(out, a.common.format, &report)?;
    Ok(EXIT_OK)
}

fn parse_big(flag: &str, text: &str) -> Result<BigUint> {
    text.trim().parse().map_err(|_| {
        Error::Boson(format!(
            "--{flag} must be a nonnegative integer, got `{text}`"
        ))
    })
}

fn cmd_boson(a: &BosonArgs, out: &mut dyn Write) -> CmdResult {
    let n = parse_big("n0", &a.n0)?;
    let m = parse_big("n1", &a.n1)?;
    let g = boson::parse_boson_g(&a.g)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amp = |v: &Option<Vec<f64>>| {
        v.as_ref()
            .map_or(Complex64::new(h, 0.0), |v| Complex64::new(v[0], v[1]))
    };
    let b = BosonQubit::new(n, m, amp(&a.c0), amp(&a.c1))?;
    let (_, report) = boson::resource_report(&b, g, a.steps)?;
    emit(out, a.common.format, &report)?;
    Ok(EXIT_OK)
}

fn named_gate(name: &str) -> Result<Mat2> {
    let t = gates::t_gate();
    let z = t * t * t * t;
    let s = t * t;
    let i = Complex64::i();
    let m = match name.to_ascii_lowercase().as_str() {
        "h" => gates::hadamard(),
        "t" => t,
        "x" => gates::pauli_x(),
        "z" => z,
        "s" => s,
        "y" => Mat2::new(Complex64::new(0.0, 0.0), -i, i, Complex64::new(0.0, 0.0)),
        "tdg" => t.adjoint(),
        "sdg" => s.adjoint(),
        other => return Err(Error::InvalidArgument(format!("unknown gate `{other}`"))),
    };
    Ok(m)
}

fn cmd_approx(a: &ApproxArgs, out: &mut dyn Write) -> CmdResult {
    let target = match (&a.gate, &a.matrix) {
        (Some(name), _) => named_gate(name)?,
        (None, Some(v)) => {
            let z = |k: usize| Complex64::new(v[2 * k], v[2 * k + 1]);
            Mat2::new(z(0), z(1), z(2), z(3))
        }
        (None, None) => return Err(fail(EXIT_PARSE, "give --gate or --matrix")),
    };
    let result = synthesis::approximate_unitary_ht(&target, a.depth)?;
    emit(out, a.common.format, &result)?;
    Ok(EXIT_OK)
}
