//! `resfock`: batch driver for the restricted-group, Fock and lattice Dirac experiments.
//!
//! Every subcommand prints one JSON document on stdout. Exit status is 0 on
//! success, 1 on bad input and 2 when a checked invariant fails.

mod commands;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

/// Directory that receives a copy of every report when `--out-dir` is not given.
pub const OUT_DIR_ENV: &str = "RESFOCK_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "resfock", version, about = "Restricted unitary groups, Fock implementers and renormalized Dirac evolution")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed of the generator behind `--selftest`.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Acceptance threshold; each subcommand documents its own default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Run the randomized invariant suite of this subcommand instead of reading input.
    #[arg(long, global = true)]
    pub selftest: bool,
    /// Number of random cases in `--selftest`.
    #[arg(long, default_value_t = 16, global = true)]
    pub cases: usize,
    /// Print the result table as CSV instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Worker threads for scans.
    #[arg(long, default_value_t = 1, global = true)]
    pub jobs: usize,
    /// Also write the report into this directory.
    #[arg(long, env = OUT_DIR_ENV, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Odd blocks and the identity ¼‖[ε,U]‖₂² = ‖U₊₋‖₂² + ‖U₋₊‖₂².
    SsCheck {
        #[arg(long)]
        op: Option<PathBuf>,
    },
    /// Schwinger cocycle of two operators, its finite-difference value and the Fock anomaly.
    Cocycle {
        /// Two operator files, X then Y.
        #[arg(long, num_args = 1)]
        op: Vec<PathBuf>,
        /// Step of the mixed difference of χ.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Bogoliubov implementer: transformed vacuum and intertwining deviation.
    Implement {
        #[arg(long)]
        op: Option<PathBuf>,
    },
    /// Transport of the implementer phase along a sampled path.
    Transport {
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Holonomy of the reference loop with prescribed curvature integral δ.
    Holonomy {
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 512)]
        nodes: usize,
    },
    /// Loop-group cocycle of two Fourier polynomials and its window version.
    Loopgroup {
        /// Two Fourier files, h then g.
        #[arg(long, num_args = 1)]
        fourier: Vec<PathBuf>,
        /// Window size n for the truncated multiplication operators on (n, n).
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Lattice Dirac evolution in an external field, optionally scanned over cutoffs.
    Dirac1d {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Cutoff ladder, e.g. `8,16,32`.
        #[arg(long, value_delimiter = ',')]
        cutoffs: Vec<usize>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t1: Option<f64>,
    },
    /// Scattering operator, its Fock implementation and its transported phase.
    Pipeline {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Path samples per unit time.
        #[arg(long, default_value_t = 256)]
        nodes: usize,
        /// Momenta |k| ≤ K kept for the Fock implementation.
        #[arg(long, default_value_t = 1)]
        fock_momenta: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SsCheck { .. } => "ss-check",
            Command::Cocycle { .. } => "cocycle",
            Command::Implement { .. } => "implement",
            Command::Transport { .. } => "transport",
            Command::Holonomy { .. } => "holonomy",
            Command::Loopgroup { .. } => "loopgroup",
            Command::Dirac1d { .. } => "dirac1d",
            Command::Pipeline { .. } => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Input,
    Invariant,
}

impl Failure {
    fn code(self) -> u8 {
        match self {
            Failure::Input => 1,
            Failure::Invariant => 2,
        }
    }
}

/// A failed run before any report exists.
#[derive(Debug)]
pub struct RunError {
    pub kind: Failure,
    pub message: String,
}

impl RunError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { kind: Failure::Input, message: message.into() }
    }
}

impl From<resfock::Error> for RunError {
    fn from(e: resfock::Error) -> Self {
        let kind = if e.is_invariant_violation() { Failure::Invariant } else { Failure::Input };
        Self { kind, message: e.to_string() }
    }
}

/// A finished report: fields, violated checks and an optional flat table.
#[derive(Debug, Default)]
pub struct Report {
    pub fields: Map<String, Value>,
    pub violations: Vec<String>,
    pub table: Option<Vec<Value>>,
}

impl Report {
    pub fn from_value(v: Value) -> Self {
        match v {
            Value::Object(fields) => Self { fields, ..Self::default() },
            other => {
                let mut fields = Map::new();
                fields.insert("result".into(), other);
                Self { fields, ..Self::default() }
            }
        }
    }

    pub fn set(&mut self, key: &str, v: impl serde::Serialize) {
        self.fields.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    /// Record a violation when `value` exceeds `tol` (NaN counts as a violation).
    pub fn require(&mut self, name: &str, value: f64, tol: f64) {
        if !(value <= tol) {
            self.violations.push(format!("{name} = {value:.3e} exceeds {tol:.1e}"));
        }
    }
}

fn metadata(cmd: &Command, common: &Common) -> Value {
    json!({
        "command": cmd.name(),
        "seed": common.seed,
        "selftest": common.selftest,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn render_csv(rows: &[Value]) -> Result<String, RunError> {
    let mut header: Vec<String> = Vec::new();
    for row in rows {
        if let Value::Object(m) = row {
            for k in m.keys() {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| RunError::input(e.to_string());
    w.write_record(&header).map_err(io)?;
    for row in rows {
        let cells: Vec<String> = header
            .iter()
            .map(|k| match row.get(k) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            })
            .collect();
        w.write_record(&cells).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn emit(text: &str, name: &str, ext: &str, out_dir: Option<&PathBuf>) -> Result<(), RunError> {
    print!("{text}");
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| RunError::input(format!("{}: {e}", dir.display())))?;
        let file = dir.join(format!("{name}.{ext}"));
        std::fs::write(&file, text).map_err(|e| RunError::input(format!("{}: {e}", file.display())))?;
    }
    Ok(())
}

fn error_document(cmd: Option<&str>, err: &RunError) -> String {
    let kind = match err.kind {
        Failure::Input => "input",
        Failure::Invariant => "invariant",
    };
    let doc = json!({ "error": { "kind": kind, "message": err.message, "command": cmd } });
    format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))
}

fn finish(cmd: &Command, common: &Common, result: Result<Report, RunError>) -> ExitCode {
    let name = cmd.name();
    let outcome = result.and_then(|report| {
        let code = if report.violations.is_empty() { 0 } else { Failure::Invariant.code() };
        if common.csv {
            let rows = report.table.as_ref().ok_or_else(|| RunError::input(format!("{name} has no table to print as CSV")))?;
            emit(&render_csv(rows)?, name, "csv", common.out_dir.as_ref())?;
            if !report.violations.is_empty() {
                eprintln!("{}", report.violations.join("\n"));
            }
            return Ok(code);
        }
        let mut doc = report.fields;
        if let Some(rows) = report.table {
            doc.insert("table".into(), Value::Array(rows));
        }
        doc.insert("violations".into(), json!(report.violations));
        doc.insert("meta".into(), metadata(cmd, common));
        let text = format!("{}\n", serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable"));
        emit(&text, name, "json", common.out_dir.as_ref())?;
        Ok(code)
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            print!("{}", error_document(Some(name), &err));
            ExitCode::from(err.kind.code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = RunError::input(e.to_string().trim_end().to_string());
            print!("{}", error_document(None, &err));
            return ExitCode::from(Failure::Input.code());
        }
    };
    let common = &cli.common;
    let result = if common.selftest { selftest::run(&cli.command, common) } else { commands::run(&cli.command, common) };
    finish(&cli.command, common, result)
}
