//! Subcommands of the `tactile-sim` tool.
//!
//! Every file written starts with a `# tactile-sim <version> config_hash=<h> seed=<s>`
//! comment line. Result files carry no timestamp, so a fixed seed reproduces
//! them byte for byte; the run time is recorded only in `manifest.toml`.
//!
//! Exit statuses: 0 success, 1 validation or compliance failure, 2 usage or I/O error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tactile_core::arch::{classify_scenario, parse_topology, validate_topology, ParseError, ValidationReport};
use tactile_core::grades::Grade;
use tactile_core::protocol::{route_user_plane, write_hops_csv, StackConfig};
use tactile_core::sim::{run_iteration_detail, run_monte_carlo, stats, RunResult, SimConfig, SimError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable that sets the number of worker threads; `1` runs serially.
pub const THREADS_ENV: &str = "TACTILE_SIM_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn load_config(path: &Path, text: &str) -> Result<SimConfig, CliError> {
    SimConfig::from_toml_str(text).map_err(|e| CliError::Config { path: path.to_owned(), message: e.to_string() })
}

/// First 16 hex digits of the SHA-256 of the canonical effective configuration.
pub fn config_hash(cfg: &SimConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml_string().as_bytes());
    hex::encode(digest)[..16].to_owned()
}

fn file_header(hash: &str, seed: Option<u64>) -> String {
    let seed = seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
    format!("# tactile-sim {VERSION} config_hash={hash} seed={seed}\n")
}

/// Record of one invocation, written next to the results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config_path: String,
    pub config_hash: String,
    pub seed: u64,
    pub output_dir: String,
    pub timestamp: String,
    pub threads: String,
    /// Emitted files with their SHA-256.
    pub files: Vec<ManifestFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
}

/// Collects output files under one directory.
struct Emitter {
    dir: PathBuf,
    header: String,
    files: Vec<ManifestFile>,
}

impl Emitter {
    fn new(dir: &Path, header: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self { dir: dir.to_owned(), header, files: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let mut bytes = self.header.clone().into_bytes();
        bytes.extend_from_slice(body);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        self.files.push(ManifestFile { name: name.to_owned(), sha256: hex::encode(Sha256::digest(&bytes)) });
        Ok(path)
    }

    fn write_csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<PathBuf, CliError> {
        let mut body = Vec::new();
        f(&mut body).map_err(|e| CliError::Io { path: self.dir.join(name), source: std::io::Error::other(e) })?;
        self.write(name, &body)
    }

    fn finish(self, manifest: RunManifest) -> Result<(), CliError> {
        let manifest = RunManifest { files: self.files, ..manifest };
        let body = toml::to_string(&manifest).expect("manifest always serializes");
        let path = self.dir.join("manifest.toml");
        fs::write(&path, format!("{}{body}", self.header)).map_err(io_err(&path))
    }
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Clone, Default)]
pub struct ValidateArgs {
    pub config: PathBuf,
    /// Also write the report to this file.
    pub report: Option<PathBuf>,
    /// Print the user-plane route between these two devices.
    pub route: Option<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct ValidateOutcome {
    pub report: ValidationReport,
    /// Text printed to standard output.
    pub text: String,
}

impl ValidateOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.ok() {
            EXIT_OK
        } else {
            EXIT_FAILURE
        }
    }
}

/// Parses the `[topology]` section of a config and checks every architecture rule.
pub fn cmd_validate(args: &ValidateArgs) -> Result<ValidateOutcome, CliError> {
    let text = read_text(&args.config)?;
    let cfg = load_config(&args.config, &text)?;
    let topology = parse_topology(&text).map_err(|e| CliError::Config {
        path: args.config.clone(),
        message: match e {
            ParseError::MissingTopology => "no [topology] section to validate".to_owned(),
            other => other.to_string(),
        },
    })?;
    let report = validate_topology(&topology);

    let mut out = file_header(&config_hash(&cfg), None);
    writeln!(out, "config = {}", args.config.display()).unwrap();
    writeln!(out, "scenario = {}", topology.scenario().number()).unwrap();
    if let Ok(class) = classify_scenario(&topology) {
        writeln!(out, "scenario_class = {class:?}").unwrap();
    }
    writeln!(out, "entities = {}", topology.entities().len()).unwrap();
    writeln!(out, "links = {}", topology.links().len()).unwrap();
    out.push_str(&report.to_string());
    if let Some((from, to)) = &args.route {
        let hops = route_user_plane(&topology, &from.as_str().into(), &to.as_str().into(), &StackConfig::default())
            .map_err(|e| CliError::Usage(format!("route {from} -> {to}: {e}")))?;
        let mut csv = Vec::new();
        write_hops_csv(&hops, &mut csv).map_err(|e| CliError::Usage(e.to_string()))?;
        out.push_str(&String::from_utf8(csv).expect("csv output is utf-8"));
    }
    if let Some(path) = &args.report {
        fs::write(path, &out).map_err(io_err(path))?;
    }
    Ok(ValidateOutcome { report, text: out })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    /// Overrides `simulation.seed`.
    pub seed: Option<u64>,
    /// Grade to simulate; `simulate` defaults to ultra, `compare-grades` ignores it.
    pub grade: Option<Grade>,
    pub iterations: Option<usize>,
    pub packets: Option<usize>,
    /// Worker threads; falls back to the environment override, then rayon's default.
    pub threads: Option<usize>,
    /// Also dump the deployment and allocation of this iteration.
    pub snapshot: Option<usize>,
}

impl SimulateArgs {
    fn effective_config(&self) -> Result<SimConfig, CliError> {
        let text = read_text(&self.config)?;
        let mut cfg = load_config(&self.config, &text)?;
        if let Some(seed) = self.seed {
            cfg.simulation.seed = seed;
        }
        if let Some(n) = self.iterations {
            cfg.simulation.iterations = n;
        }
        if let Some(n) = self.packets {
            cfg.simulation.packets_per_user = n;
        }
        cfg.validate().map_err(|e| CliError::Config { path: self.config.clone(), message: e.to_string() })?;
        if let Some(i) = self.snapshot {
            if i >= cfg.simulation.iterations {
                return Err(CliError::Usage(format!("snapshot iteration {i} is out of range")));
            }
        }
        Ok(cfg)
    }

    fn threads(&self) -> Result<Option<usize>, CliError> {
        if let Some(n) = self.threads {
            return Ok(Some(n));
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a thread count, got {v:?}"))),
            Err(_) => Ok(None),
        }
    }

    fn manifest(&self, subcommand: &str, cfg: &SimConfig, threads: Option<usize>) -> RunManifest {
        RunManifest {
            tool_version: VERSION.to_owned(),
            subcommand: subcommand.to_owned(),
            config_path: self.config.display().to_string(),
            config_hash: config_hash(cfg),
            seed: cfg.simulation.seed,
            output_dir: self.out.display().to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            threads: threads.map_or_else(|| "default".to_owned(), |n| n.to_string()),
            files: Vec::new(),
        }
    }
}

/// Runs one grade, spread over `threads` workers (`Some(1)` runs serially).
fn run_grade(cfg: &SimConfig, grade: Grade, threads: Option<usize>) -> Result<RunResult, CliError> {
    let seed = cfg.simulation.seed;
    match threads {
        Some(0) => Err(CliError::Usage("thread count must be at least 1".into())),
        Some(1) => Ok(run_monte_carlo(cfg, grade, seed, false)?),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(|| run_monte_carlo(cfg, grade, seed, true))?)
        }
        None => Ok(run_monte_carlo(cfg, grade, seed, true)?),
    }
}

fn samples_csv(run: &RunResult, out: &mut Vec<u8>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "sum_utility", "dual_users", "assigned_rbs", "delivery_ratio"])?;
    for r in &run.iterations {
        w.write_record([
            r.iteration.to_string(),
            r.sum_utility.to_string(),
            r.dual_users.to_string(),
            r.assigned_rbs.to_string(),
            r.delivery_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cdf_csv(samples: &[f64], out: &mut Vec<u8>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["value", "cumulative_probability"])?;
    for (x, p) in stats::empirical_cdf(samples) {
        w.write_record([x.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn summary_text(run: &RunResult) -> String {
    let samples = run.samples();
    let mut s = String::new();
    writeln!(s, "grade = {}", run.grade).unwrap();
    writeln!(s, "iterations = {}", samples.len()).unwrap();
    writeln!(s, "mean = {}", stats::mean(&samples)).unwrap();
    writeln!(s, "std = {}", stats::std_dev(&samples)).unwrap();
    for (i, d) in stats::deciles(&samples).iter().enumerate() {
        writeln!(s, "q0.{} = {d}", i + 1).unwrap();
    }
    s
}

fn emit_run(em: &mut Emitter, cfg: &SimConfig, run: &RunResult, snapshot: Option<usize>) -> Result<(), CliError> {
    let g = run.grade;
    em.write_csv(&format!("samples-{g}.csv"), |b| samples_csv(run, b))?;
    em.write_csv(&format!("cdf-{g}.csv"), |b| cdf_csv(&run.samples(), b))?;
    em.write(&format!("summary-{g}.txt"), summary_text(run).as_bytes())?;
    if let Some(i) = snapshot {
        let detail = run_iteration_detail(cfg, g, run.seed, i)?;
        em.write_csv(&format!("deployment-{g}-iter{i}.csv"), |b| detail.deployment.write_csv(b))?;
        em.write_csv(&format!("allocation-{g}-iter{i}.csv"), |b| detail.allocation.write_csv(b))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub run: RunResult,
    pub files: Vec<PathBuf>,
}

/// Simulates one grade and writes `samples-<grade>.csv`, `cdf-<grade>.csv`,
/// `summary-<grade>.txt` and `manifest.toml` into the output directory.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutcome, CliError> {
    let cfg = args.effective_config()?;
    let threads = args.threads()?;
    let grade = args.grade.unwrap_or(Grade::Ultra);
    let run = run_grade(&cfg, grade, threads)?;
    let mut em = Emitter::new(&args.out, file_header(&config_hash(&cfg), Some(cfg.simulation.seed)))?;
    emit_run(&mut em, &cfg, &run, args.snapshot)?;
    let files = em.files.iter().map(|f| args.out.join(&f.name)).collect();
    em.finish(args.manifest("simulate", &cfg, threads))?;
    Ok(SimulateOutcome { run, files })
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub ultra: RunResult,
    pub normal: RunResult,
    pub dominance: stats::Dominance,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Text printed to standard output; its first line is the verdict.
    pub text: String,
}

impl CompareOutcome {
    pub fn dominates(&self) -> bool {
        self.dominance.holds()
    }

    pub fn exit_code(&self) -> i32 {
        if self.dominates() {
            EXIT_OK
        } else {
            EXIT_FAILURE
        }
    }
}

/// Runs both grades on the same seed and reports whether the ultra-grade
/// CDF of sum utility dominates the normal-grade one at every decile.
pub fn cmd_compare_grades(args: &SimulateArgs) -> Result<CompareOutcome, CliError> {
    let cfg = args.effective_config()?;
    let threads = args.threads()?;
    let ultra = run_grade(&cfg, Grade::Ultra, threads)?;
    let normal = run_grade(&cfg, Grade::Normal, threads)?;
    let (u, n) = (ultra.samples(), normal.samples());
    let dominance = stats::decile_dominance(&u, &n);
    let (ks_statistic, ks_p_value) = stats::ks_two_sample(&u, &n);

    let mut text = String::new();
    writeln!(text, "dominates: {}", dominance.holds()).unwrap();
    writeln!(text, "ks_statistic = {ks_statistic}").unwrap();
    writeln!(text, "ks_p_value = {ks_p_value}").unwrap();
    writeln!(text, "mean_ultra = {}", stats::mean(&u)).unwrap();
    writeln!(text, "mean_normal = {}", stats::mean(&n)).unwrap();
    writeln!(text, "decile,ultra,normal").unwrap();
    for (q, a, b) in &dominance.deciles {
        writeln!(text, "{q:.1},{a},{b}").unwrap();
    }

    let mut em = Emitter::new(&args.out, file_header(&config_hash(&cfg), Some(cfg.simulation.seed)))?;
    emit_run(&mut em, &cfg, &ultra, args.snapshot)?;
    emit_run(&mut em, &cfg, &normal, args.snapshot)?;
    em.write("comparison.txt", text.as_bytes())?;
    em.finish(args.manifest("compare-grades", &cfg, threads))?;
    Ok(CompareOutcome { ultra, normal, dominance, ks_statistic, ks_p_value, text })
}
