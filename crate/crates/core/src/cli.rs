//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check or construction hypothesis failed,
//! 2 usage or configuration error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::engine::{run, Fault, RunConfig, DEFAULT_SEED};
use crate::error::Error;
use crate::montecarlo::{
    median_rate, profile_membership, sim_lemma_intersection, sim_lemma_sum, ProfileReport, TrialReport,
};
use crate::report::{parse_fraction, RunReport};
use crate::selector::CaseParams;
use crate::verifier::{verify_all, Status, VerifyOptions, CHECK_NAMES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "basis", version, about = "Staged randomized construction of additive bases, with verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the construction and write a JSON report.
    Construct(ConstructArgs),
    /// Run the verifier checks on a report or an inline configuration.
    Verify(VerifyArgs),
    /// Monte Carlo trials for the sum or intersection lemma.
    Simulate(SimulateArgs),
    /// Empirical membership probabilities against the exact oracle.
    Profile(ProfileArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunFlags {
    /// Case as a truth string, e.g. TTF.
    #[arg(long, conflicts_with_all = ["p1", "p2", "p3"])]
    pub case: Option<String>,
    #[arg(long, action = clap::ArgAction::Set)]
    pub p1: Option<bool>,
    #[arg(long, action = clap::ArgAction::Set)]
    pub p2: Option<bool>,
    #[arg(long, action = clap::ArgAction::Set)]
    pub p3: Option<bool>,
    #[arg(long, default_value_t = 10)]
    pub kmax: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Exact fraction NUM/DEN.
    #[arg(long, default_value = "1/100000000")]
    pub alpha: String,
    #[arg(long, default_value_t = 100)]
    pub rho: u64,
    #[arg(long, default_value_t = 4)]
    pub kmin: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub candidate_cap: u64,
    #[arg(long, default_value_t = 1_000_000_000_000_000_000)]
    pub count_cap: u64,
    /// Corrupt the finished construction (or its selection) on purpose.
    #[arg(long, value_parser = Fault::parse)]
    pub inject: Option<Fault>,
}

impl RunFlags {
    pub fn has_case(&self) -> bool {
        self.case.is_some() || self.p1.is_some() || self.p2.is_some() || self.p3.is_some()
    }

    pub fn to_config(&self) -> Result<RunConfig, Error> {
        let case = match (&self.case, self.p1, self.p2, self.p3) {
            (Some(c), None, None, None) => c.parse::<CaseParams>()?,
            (None, Some(a), Some(b), Some(c)) => CaseParams::new(a, b, c),
            (None, ..) => {
                return Err(Error::Config(
                    "give either --case or all of --p1, --p2, --p3".into(),
                ))
            }
            _ => return Err(Error::Config("--case conflicts with --p1/--p2/--p3".into())),
        };
        let (alpha_num, alpha_den) = parse_fraction(&self.alpha)?;
        let mut c = RunConfig::new(case, self.kmax, self.seed);
        c.alpha_num = alpha_num;
        c.alpha_den = alpha_den;
        c.rho = self.rho;
        c.kmin = self.kmin;
        c.candidate_cap = self.candidate_cap;
        c.count_cap = self.count_cap;
        c.inject = self.inject;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock timings (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// A report written by `construct`.
    #[arg(long = "in", conflicts_with_all = ["case", "p1", "p2", "p3"])]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunFlags,
    /// Comma-separated check names; all by default.
    #[arg(long, value_delimiter = ',')]
    pub checks: Vec<String>,
    /// Largest stage cross-checked by brute-force enumeration.
    #[arg(long, default_value_t = 6)]
    pub brute_max: u64,
    /// Write the report with check results appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    Sum,
    Intersection,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub lemma: Lemma,
    /// Comma-separated `m` (sum) or `N` (intersection) values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Independent repetitions per grid point.
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    /// CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[arg(long, default_value_t = 8)]
    pub k: u64,
    #[arg(long, default_value_t = 300)]
    pub seeds: u64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidInterval { .. } | Error::EmptyCore { .. } | Error::OutOfRange { .. } => {
                EXIT_USAGE
            }
            _ => EXIT_FAIL,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Construct(a) => cmd_construct(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Profile(a) => cmd_profile(&a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() }),
    }
}

pub fn cmd_construct(a: &ConstructArgs) -> Result<i32, Failure> {
    let cfg = a.run.to_config()?;
    let t = Instant::now();
    let state = run(&cfg)?;
    let mut report = RunReport::from_state(&state);
    if a.timing {
        report.timing = Some(BTreeMap::from([("construct".to_string(), t.elapsed().as_secs_f64())]));
    }
    emit(a.out.as_deref(), &report.to_json())?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32, Failure> {
    for c in &a.checks {
        if !CHECK_NAMES.contains(&c.as_str()) {
            return Err(Failure::usage(format!(
                "unknown check {c:?}; expected one of {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let (cfg, recorded) = match &a.input {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            let r = RunReport::from_json(&text)?;
            (r.config.to_config()?, Some(r))
        }
        None if a.run.has_case() => (a.run.to_config()?, None),
        None => return Err(Failure::usage("verify needs --in PATH or a case (--case or --p1/--p2/--p3)")),
    };

    let t = Instant::now();
    let state = run(&cfg)?;
    let construct_secs = t.elapsed().as_secs_f64();
    let mut report = RunReport::from_state(&state);
    if let Some(r) = &recorded {
        if let Some(k) = r.first_mismatch(&state) {
            return Err(Failure::usage(format!(
                "report stage {k} does not match a re-run of its own configuration"
            )));
        }
        if !r.checks.is_empty() {
            report.checks = r.checks.clone();
        }
    }

    let mut opts = VerifyOptions::for_state(&state);
    opts.brute_max = a.brute_max;
    if !a.checks.is_empty() {
        opts.checks = a.checks.clone();
    }
    let t = Instant::now();
    let results = verify_all(&state, &opts);
    let verify_secs = t.elapsed().as_secs_f64();

    let mut failed = false;
    for r in &results {
        let tag = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        eprintln!("{tag} {} [{}] violations={}", r.name, r.window, r.violations);
        if r.failed() {
            failed = true;
            for w in r.witnesses.iter().take(3) {
                eprintln!("  witness: {w}");
            }
        }
    }
    report.checks = results;
    if a.timing {
        report.timing = Some(BTreeMap::from([
            ("construct".to_string(), construct_secs),
            ("verify".to_string(), verify_secs),
        ]));
    }
    if let Some(p) = &a.out {
        emit(Some(p), &report.to_json())?;
    }
    Ok(if failed { EXIT_FAIL } else { EXIT_OK })
}

fn csv_text<R: Serialize>(rows: &[R]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() })?;
    }
    let bytes = w.into_inner().map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("summaries serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct GridSummary {
    param: u64,
    interval: String,
    median_failure_rate: f64,
    min_count: u64,
    failures: Vec<u64>,
}

/// Per-grid-point medians over repetitions.
pub fn simulate_summary(lemma: Lemma, seed: u64, trials: u64, reps: u64, rows: &[TrialReport]) -> serde_json::Value {
    let mut keys: Vec<(u64, String)> = Vec::new();
    for r in rows {
        let key = (r.param, r.interval.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let points: Vec<GridSummary> = keys
        .into_iter()
        .map(|(param, interval)| {
            let batch: Vec<&TrialReport> =
                rows.iter().filter(|r| r.param == param && r.interval == interval).collect();
            GridSummary {
                param,
                interval,
                median_failure_rate: median_rate(&batch),
                min_count: batch.iter().map(|r| r.min_count).min().unwrap_or(0),
                failures: batch.iter().map(|r| r.failures).collect(),
            }
        })
        .collect();
    json!({
        "lemma": lemma,
        "seed": seed,
        "trials": trials,
        "reps": reps,
        "points": points,
    })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32, Failure> {
    if a.grid.is_empty() {
        return Err(Failure::usage("empty grid"));
    }
    if a.trials == 0 || a.reps == 0 {
        return Err(Failure::usage("--trials and --reps must be positive"));
    }
    let mut rows = Vec::new();
    for rep in 0..a.reps {
        rows.extend(match a.lemma {
            Lemma::Sum => sim_lemma_sum(&a.grid, a.trials, a.seed, rep)?,
            Lemma::Intersection => sim_lemma_intersection(&a.grid, a.trials, a.seed, rep)?,
        });
    }
    emit(a.out.as_deref(), &csv_text(&rows)?)?;
    if let Some(p) = &a.summary {
        emit(Some(p), &json_text(&simulate_summary(a.lemma, a.seed, a.trials, a.reps, &rows)))?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ProfileSummary<'a> {
    k: u64,
    seeds: u64,
    seed: u64,
    points: usize,
    agreement: f64,
    max_deviation: &'a BTreeMap<String, f64>,
    levels: &'a [String],
    lattice_point_hits: u64,
}

pub fn cmd_profile(a: &ProfileArgs) -> Result<i32, Failure> {
    if a.k < 2 || a.k > crate::engine::MAX_KMAX {
        return Err(Failure::usage(format!("--k must lie in [2, {}]", crate::engine::MAX_KMAX)));
    }
    let p: ProfileReport = profile_membership(a.k, a.seeds, a.points, a.seed)?;
    emit(a.out.as_deref(), &csv_text(&p.rows)?)?;
    if let Some(path) = &a.summary {
        let s = ProfileSummary {
            k: p.k,
            seeds: p.seeds,
            seed: p.seed,
            points: p.rows.len(),
            agreement: p.agreement,
            max_deviation: &p.max_deviation,
            levels: &p.levels,
            lattice_point_hits: p.lattice_point_hits,
        };
        emit(Some(path), &json_text(&s))?;
    }
    Ok(EXIT_OK)
}
