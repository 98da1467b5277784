//! Command-line front end: run configuration, subcommands, run records and file output.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 a well-defined negative result
//! (nothing to renormalize, no certificate), 3 a numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::attractor::{detect_solenoid, SolenoidVerdict};
use crate::error::{Error, Result};
use crate::renorm::MarkedCombinatorialData;
use crate::search::{self, CoverOptions, Family, ParameterBox};
use crate::spectrum;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Renorm,
    Cascade,
    Spectrum,
    Cover,
    Detect,
    Mcd,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Renorm => "renorm",
            CommandKind::Cascade => "cascade",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Cover => "cover",
            CommandKind::Detect => "detect",
            CommandKind::Mcd => "mcd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyId {
    Quadcomp,
    Cubic,
}

/// Everything a run depends on. Unset optional fields take per-command defaults, which are
/// filled in before the config is recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub family: FamilyId,
    /// Number of quadratic branches (quadcomp).
    pub n: usize,
    /// Quadcomp parameters, one per branch.
    pub lambdas: Vec<f64>,
    /// Cubic parameters.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub depth: Option<usize>,
    pub max_period: Option<usize>,
    /// Chebyshev degree of the coefficient space.
    pub m: usize,
    pub grid_step: Option<f64>,
    pub grid: Option<usize>,
    pub subdivide: Option<usize>,
    pub ratio_bound: f64,
    /// Period bound of covers and enumerations.
    pub p: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub precision_note: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            family: FamilyId::Quadcomp,
            n: 1,
            lambdas: Vec::new(),
            a: None,
            b: None,
            depth: None,
            max_period: None,
            m: 30,
            grid_step: None,
            grid: None,
            subdivide: None,
            ratio_bound: 2.0,
            p: 2,
            seed: 0,
            out: None,
            precision_note: "IEEE-754 double precision".into(),
        }
    }
}

impl RunConfig {
    /// Parse a JSON config; the error names the offending field and its line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn family(&self) -> Family {
        match self.family {
            FamilyId::Quadcomp => Family::Quadcomp { n: self.n },
            FamilyId::Cubic => Family::Cubic,
        }
    }

    fn params(&self) -> Result<Vec<f64>> {
        match self.family {
            FamilyId::Quadcomp if self.lambdas.is_empty() => Err(Error::InvalidInput(
                "missing --lambda\nusage: renormlab <command> --lambda L[,L...] [options]".into(),
            )),
            FamilyId::Quadcomp => Ok(self.lambdas.clone()),
            FamilyId::Cubic => match (self.a, self.b) {
                (Some(a), Some(b)) => Ok(vec![a, b]),
                _ => Err(Error::InvalidInput(
                    "missing --a or --b\nusage: renormlab <command> --family cubic --a A --b B [options]".into(),
                )),
            },
        }
    }
}

/// One finished run: what was asked, when, and what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub command: CommandKind,
    pub config: RunConfig,
    pub started: String,
    pub finished: String,
    pub exit_code: i32,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub payload: Value,
}

/// Result of a command before it is timestamped: payload, metrics, optional CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub payload: Value,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub csv: Option<String>,
}

impl Outcome {
    fn new(exit_code: i32, payload: Value) -> Self {
        Self {
            exit_code,
            payload,
            summary: BTreeMap::new(),
            warnings: Vec::new(),
            csv: None,
        }
    }

    fn metric(mut self, key: &str, v: f64) -> Self {
        self.summary.insert(key.into(), v);
        self
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::DegenerateParams(_) | Error::Io(_) => EXIT_INVALID,
        _ => EXIT_NUMERICAL,
    }
}

/// Numbers in CSV output: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn word_labels(word: &[MarkedCombinatorialData]) -> Vec<String> {
    word.iter().map(|s| s.label()).collect()
}

pub fn cmd_renorm(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params()?;
    let depth = cfg.depth.unwrap_or(3);
    let max_period = cfg.max_period.unwrap_or(8);
    let family = cfg.family();
    let (first, tower) = match family {
        Family::Quadcomp { .. } => (None, crate::renorm::build_tower(&search::quad_map(&params)?, depth, max_period)?),
        Family::Cubic => {
            let f = crate::families::cubic_map(crate::families::CubicParams { a: params[0], b: params[1] })?;
            match crate::renorm::find_restrictive_cycle(std::sync::Arc::new(f), max_period)? {
                None => {
                    return Ok(Outcome::new(EXIT_NEGATIVE, json!({"word": [], "tower": null})).metric("depth", 0.0));
                }
                Some(cycle) => {
                    let mcd = crate::renorm::extract_mcd(&cycle);
                    let induced = crate::families::induce_extended_map(&cycle)?;
                    (Some(mcd), crate::renorm::build_tower(&induced.map, depth.saturating_sub(1), max_period)?)
                }
            }
        }
    };
    let mut word: Vec<MarkedCombinatorialData> = first.into_iter().collect();
    word.extend(tower.word());
    let total = word.len();
    let exit = if total == 0 { EXIT_NEGATIVE } else { EXIT_OK };
    let payload = json!({
        "word": word_labels(&word),
        "tower": tower.summary(),
    });
    Ok(Outcome::new(exit, payload).metric("depth", total as f64))
}

pub fn cmd_cascade(cfg: &RunConfig) -> Result<Outcome> {
    let depth = cfg.depth.unwrap_or(10);
    if depth < 2 {
        return Err(Error::InvalidInput(format!("cascade depth {depth}: at least 2 parameters are needed for a ratio")));
    }
    let rep = search::cascade(&MarkedCombinatorialData::doubling(), depth)?;
    let header: Vec<String> = ["k", "lambda_k", "delta_k", "alpha_k"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = rep
        .deltas
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let k = i + 1;
            vec![
                k.to_string(),
                fmt_f64(rep.lambdas[k]),
                fmt_f64(*d),
                rep.alphas.get(k - 1).map_or(String::new(), |a| fmt_f64(*a)),
            ]
        })
        .collect();
    let mut out = Outcome::new(EXIT_OK, serde_json::to_value(&rep).expect("reports serialize"))
        .metric("lambda_inf", rep.lambda_inf);
    if let Some(d) = rep.deltas.last() {
        out = out.metric("delta", *d);
    }
    if let Some(a) = rep.alphas.last() {
        out = out.metric("alpha", *a);
    }
    out.csv = Some(csv_table(&header, &rows));
    Ok(out)
}

/// The two-level combinatorics used by the stationary spectrum run, read off the family.
pub fn two_level_sigma() -> Result<MarkedCombinatorialData> {
    let w = Family::Quadcomp { n: 2 }.word_at(&[0.72, 0.93], 1, 6)?;
    w.into_iter()
        .next()
        .ok_or_else(|| Error::CycleMismatch("no period-6 combinatorics at (0.72, 0.93)".into()))
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.family != FamilyId::Quadcomp || !(1..=2).contains(&cfg.n) {
        return Err(Error::InvalidInput("spectrum runs support quadcomp with n = 1 or n = 2".into()));
    }
    let family = cfg.family();
    let (sigma, region, depth, grid) = if cfg.n == 1 {
        let r = ParameterBox {
            lo: vec![0.3],
            hi: vec![1.0],
            level: 0,
            word: Vec::new(),
        };
        (MarkedCombinatorialData::doubling(), r, cfg.depth.unwrap_or(4), 400)
    } else {
        let r = ParameterBox {
            lo: vec![0.6, 0.85],
            hi: vec![0.85, 1.0],
            level: 0,
            word: Vec::new(),
        };
        (two_level_sigma()?, r, cfg.depth.unwrap_or(3), cfg.grid.unwrap_or(60))
    };
    let seed = spectrum::seed_from_family(&family, &sigma, &region, depth, grid, cfg.m)?;
    let fp = spectrum::renorm_fixed_point(&sigma, cfg.m, &seed)?;
    let dr = spectrum::discretize_dr(&fp.map, &sigma)?;
    let report = spectrum::spectrum_report(&dr.matrix)?;
    let contraction = spectrum::horizontal_contraction(&dr.matrix, &report, 20, 20, cfg.seed)?;
    let payload = json!({
        "sigma": sigma.label(),
        "m": cfg.m,
        "fixed_point": {
            "residual": fp.residual,
            "newton_steps": fp.newton_steps,
            "residual_history": fp.residual_history,
            "coeffs": fp.map,
        },
        "spectrum": report,
        "contraction": contraction,
    });
    Ok(Outcome::new(EXIT_OK, payload)
        .metric("leading", report.leading.modulus)
        .metric("count_expanding", report.count_expanding as f64)
        .metric("contraction_estimate", report.contraction_estimate)
        .metric("max_correlation", contraction.max_correlation()))
}

pub fn cmd_cover(cfg: &RunConfig) -> Result<Outcome> {
    let family = cfg.family();
    let depth = cfg.depth.unwrap_or(3);
    let defaults = CoverOptions::default();
    let opts = CoverOptions {
        grid: cfg.grid.unwrap_or(defaults.grid),
        subdivide: cfg.subdivide.unwrap_or(defaults.subdivide),
        ..defaults
    };
    let rep = search::parameter_cover(&family, cfg.p, depth, &opts)?;
    let d = family.dimension();
    let mut header: Vec<String> = ["row", "level", "word", "count", "volume"].iter().map(|s| s.to_string()).collect();
    for a in 0..d {
        header.push(format!("lo_{a}"));
        header.push(format!("hi_{a}"));
    }
    let mut rows = Vec::new();
    for b in &rep.boxes {
        let mut r = vec![
            "box".to_string(),
            b.level.to_string(),
            search::word_label(&b.word),
            "1".to_string(),
            fmt_f64(b.volume()),
        ];
        for a in 0..d {
            r.push(fmt_f64(b.lo[a]));
            r.push(fmt_f64(b.hi[a]));
        }
        rows.push(r);
    }
    for (j, m) in rep.measures.iter().enumerate() {
        let mut r = vec![
            "level".to_string(),
            j.to_string(),
            String::new(),
            rep.level(j).count().to_string(),
            fmt_f64(*m),
        ];
        r.extend(std::iter::repeat_n(String::new(), 2 * d));
        rows.push(r);
    }
    let mut out = Outcome::new(EXIT_OK, serde_json::to_value(&rep).expect("reports serialize"));
    for (j, m) in rep.measures.iter().enumerate() {
        out = out.metric(&format!("m_{j}"), *m);
    }
    out.warnings = rep.warnings.clone();
    out.csv = Some(csv_table(&header, &rows));
    Ok(out)
}

pub fn cmd_detect(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.family != FamilyId::Quadcomp {
        return Err(Error::InvalidInput("detect runs on quadcomp maps".into()));
    }
    let f = search::quad_map(&cfg.params()?)?;
    let depth = cfg.depth.unwrap_or(6);
    match detect_solenoid(&f, depth, cfg.ratio_bound)? {
        None => Ok(Outcome::new(
            EXIT_NEGATIVE,
            json!({"certificate": null, "reason": "the map does not renormalize"}),
        )
        .metric("depth", 0.0)),
        Some(cert) => {
            let reason = match &cert.verdict {
                SolenoidVerdict::DepthLimited => None,
                SolenoidVerdict::Terminated { level, stop } => Some(format!("tower terminates at level {level} ({stop})")),
                SolenoidVerdict::Rejected { level, reason } => Some(format!("level {level}: {reason}")),
                SolenoidVerdict::RatioExceeded { level, ratio } => Some(format!(
                    "level {level}: period ratio {ratio} exceeds the bound {}",
                    cfg.ratio_bound
                )),
            };
            let exit = if reason.is_none() { EXIT_OK } else { EXIT_NEGATIVE };
            let mut out = Outcome::new(exit, json!({"certificate": cert, "reason": reason}))
                .metric("depth", cert.depth as f64);
            if let Some(r) = cert.ratio_bound {
                out = out.metric("ratio_bound", r);
            }
            Ok(out)
        }
    }
}

pub fn cmd_mcd(cfg: &RunConfig) -> Result<Outcome> {
    let family = cfg.family();
    let step = cfg.grid_step.unwrap_or(if family.dimension() == 1 { 1e-4 } else { 0.01 });
    let e = search::enumerate_combinatorics(&family, cfg.p, step)?;
    let count = e.combinatorics.len();
    Ok(Outcome::new(EXIT_OK, serde_json::to_value(&e).expect("enumerations serialize")).metric("count", count as f64))
}

/// Fill per-command defaults so the recorded config reproduces the run on its own.
pub fn resolve(cfg: &RunConfig) -> Result<RunConfig> {
    let command = cfg.command.ok_or_else(|| Error::InvalidInput("no command given".into()))?;
    let mut c = cfg.clone();
    let depth = match command {
        CommandKind::Renorm => Some(3),
        CommandKind::Cascade => Some(10),
        CommandKind::Spectrum => Some(if c.n == 2 { 3 } else { 4 }),
        CommandKind::Cover => Some(3),
        CommandKind::Detect => Some(6),
        CommandKind::Mcd => None,
    };
    c.depth = c.depth.or(depth);
    if command == CommandKind::Renorm {
        c.max_period = c.max_period.or(Some(8));
    }
    Ok(c)
}

/// Run a resolved config without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Some(CommandKind::Renorm) => cmd_renorm(cfg),
        Some(CommandKind::Cascade) => cmd_cascade(cfg),
        Some(CommandKind::Spectrum) => cmd_spectrum(cfg),
        Some(CommandKind::Cover) => cmd_cover(cfg),
        Some(CommandKind::Detect) => cmd_detect(cfg),
        Some(CommandKind::Mcd) => cmd_mcd(cfg),
        None => Err(Error::InvalidInput("no command given".into())),
    }
}

/// Write through a temporary file in the same directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Add a record to the run log directory as a new file; existing files are never touched.
pub fn append_run_log(dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stamp = record.started.replace([':', '+'], "-");
    let body = serde_json::to_string_pretty(record).expect("records serialize");
    for i in 0.. {
        let path = dir.join(if i == 0 {
            format!("{stamp}-{}.json", record.command.name())
        } else {
            format!("{stamp}-{}-{i}.json", record.command.name())
        });
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                f.write_all(body.as_bytes())?;
                return Ok(path);
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("the run log always finds a free name")
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// Run a config end to end: execute, build the record, write outputs and the run log.
pub fn run(cfg: &RunConfig, log_dir: Option<&Path>) -> (i32, Option<RunRecord>, Option<String>) {
    let cfg = match resolve(cfg) {
        Ok(c) => c,
        Err(e) => return (exit_code_for(&e), None, Some(e.to_string())),
    };
    let started = now();
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => return (exit_code_for(&e), None, Some(e.to_string())),
    };
    let record = RunRecord {
        version: VERSION.into(),
        command: cfg.command.expect("resolved configs name a command"),
        config: cfg.clone(),
        started,
        finished: now(),
        exit_code: outcome.exit_code,
        summary: outcome.summary.clone(),
        warnings: outcome.warnings.clone(),
        payload: outcome.payload.clone(),
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let body = serde_json::to_string_pretty(&record).expect("records serialize") + "\n";
    let written = match &cfg.out {
        Some(path) => write_atomic(path, body.as_bytes()).and_then(|_| match &outcome.csv {
            Some(csv) => write_atomic(&path.with_extension("csv"), csv.as_bytes()),
            None => Ok(()),
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    };
    if let Err(e) = written {
        return (EXIT_INVALID, Some(record), Some(e.to_string()));
    }
    if let Some(dir) = log_dir {
        if let Err(e) = append_run_log(dir, &record) {
            return (EXIT_INVALID, Some(record), Some(e.to_string()));
        }
    }
    (outcome.exit_code, Some(record), None)
}

#[derive(Debug, Parser)]
#[command(name = "renormlab", version, about = "Renormalization experiments on multimodal interval maps")]
pub struct Cli {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file for the run record; tables go next to it with a .csv extension.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true, env = "RENORMLAB_THREADS")]
    pub threads: Option<usize>,
    /// Seed for every random draw of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory collecting one JSON file per run.
    #[arg(long, global = true, env = "RENORMLAB_LOG_DIR")]
    pub log_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a renormalization tower.
    Renorm(Options),
    /// Period-doubling cascade with delta and alpha ratios.
    Cascade(Options),
    /// Renormalization fixed point and the spectrum of its derivative.
    Spectrum(Options),
    /// Parameter-space cover by combinatorics boxes.
    Cover(Options),
    /// Solenoid certificate.
    Detect(Options),
    /// Enumerate first-renormalization combinatorics.
    Mcd(Options),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Parameter family.
    #[arg(long, value_enum)]
    pub family: Option<FamilyId>,
    /// Number of quadratic branches; defaults to the number of --lambda values.
    #[arg(long)]
    pub n: Option<usize>,
    /// Quadratic-family parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    /// Cubic-family parameter a.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Cubic-family parameter b.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Tower depth, cascade length, or cover depth, depending on the command.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Longest restrictive cycle searched per level.
    #[arg(long)]
    pub max_period: Option<usize>,
    /// Chebyshev degree per branch.
    #[arg(long)]
    pub m: Option<usize>,
    /// Parameter step of the enumeration scan.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Scan cells per axis: stationary-sequence search and level-1 cover grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Subdivisions per axis when a two-parameter cover box descends a level.
    #[arg(long)]
    pub subdivide: Option<usize>,
    /// Largest accepted period ratio between consecutive certificate levels.
    #[arg(long)]
    pub ratio_bound: Option<f64>,
    /// Period bound per branch for covers and enumerations.
    #[arg(long)]
    pub p: Option<usize>,
}

impl Cli {
    /// Merge the config file (if any) with the flags.
    pub fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(cmd) = &self.command {
            let (kind, o) = match cmd {
                Command::Renorm(o) => (CommandKind::Renorm, o),
                Command::Cascade(o) => (CommandKind::Cascade, o),
                Command::Spectrum(o) => (CommandKind::Spectrum, o),
                Command::Cover(o) => (CommandKind::Cover, o),
                Command::Detect(o) => (CommandKind::Detect, o),
                Command::Mcd(o) => (CommandKind::Mcd, o),
            };
            c.command = Some(kind);
            if let Some(v) = o.family {
                c.family = v;
            }
            if let Some(v) = o.n {
                c.n = v;
            }
            if !o.lambda.is_empty() {
                c.lambdas = o.lambda.clone();
                if o.n.is_none() && c.family == FamilyId::Quadcomp {
                    c.n = c.lambdas.len();
                }
            }
            c.a = o.a.or(c.a);
            c.b = o.b.or(c.b);
            c.depth = o.depth.or(c.depth);
            c.max_period = o.max_period.or(c.max_period);
            if let Some(v) = o.m {
                c.m = v;
            }
            c.grid_step = o.grid_step.or(c.grid_step);
            c.grid = o.grid.or(c.grid);
            c.subdivide = o.subdivide.or(c.subdivide);
            if let Some(v) = o.ratio_bound {
                c.ratio_bound = v;
            }
            if let Some(v) = o.p {
                c.p = v;
            }
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        Ok(c)
    }
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        // Fails only if a global pool already exists, in which case that pool is used.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let cfg = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let (code, _, err) = run(&cfg, cli.log_dir.as_deref());
    if let Some(e) = err {
        eprintln!("error: {e}");
    }
    code
}
