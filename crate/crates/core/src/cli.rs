//! Command-line experiment runner.
//!
//! Configuration is a JSON tree; `--set a.b=value` edits it before the schema
//! check, and `--experiment`, `--out`, `--seed` override their keys. The
//! precedence is flags > file > defaults.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{figure_data, timing_budget, Figure, FigureGrid, GateResponse, Table};
use crate::device::{paper_device, DeviceParams, Drive, NoiseConfig};
use crate::error::Error;
use crate::gates::phase_gate_schedule;
use crate::grover::{grover_run, GroverConfig, LogicalState};
use crate::pulses::PulseKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "squid-grover", version, about = "Pulse-level simulation of three-qubit Grover search with SQUIDs in a cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write CSV plus manifest.json.
    Run(RunArgs),
    /// Check a configuration without running it.
    Validate(RunArgs),
    /// List experiment ids.
    ListExperiments,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--set device.kappa=1e6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Figure(Figure),
    Grover,
    Timing,
    Schedule,
}

impl Experiment {
    pub fn all() -> Vec<Experiment> {
        let mut v: Vec<Experiment> = Figure::ALL.into_iter().map(Experiment::Figure).collect();
        v.extend([Experiment::Grover, Experiment::Timing, Experiment::Schedule]);
        v
    }

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Figure(f) => f.id(),
            Experiment::Grover => "grover",
            Experiment::Timing => "timing",
            Experiment::Schedule => "schedule",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Figure(f) => f.description(),
            Experiment::Grover => "one search run: per-iteration probabilities and fidelities",
            Experiment::Timing => "phase-gate and algorithm durations",
            Experiment::Schedule => "phase-gate pulse schedule",
        }
    }

    pub fn parse(id: &str) -> Option<Experiment> {
        Experiment::all().into_iter().find(|e| e.id() == id)
    }
}

fn valid_ids() -> String {
    Experiment::all().iter().map(|e| e.id()).collect::<Vec<_>>().join(", ")
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub device: DeviceParams,
    pub noise: NoiseConfig,
    pub gamma3_over_g: Option<Vec<f64>>,
    pub kappa_over_g: Option<Vec<f64>>,
    pub omega12_over_g3: Option<Vec<f64>>,
    pub target: LogicalState,
    pub iterations: usize,
    pub out: PathBuf,
    pub seed: u64,
    /// Random input states for the sampled fidelity column (0 = off).
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            device: paper_device(),
            noise: NoiseConfig::ideal(),
            gamma3_over_g: None,
            kappa_over_g: None,
            omega12_over_g3: None,
            target: [1, 1, 1],
            iterations: 10,
            out: PathBuf::from("out"),
            seed: 0,
            samples: 0,
        }
    }
}

impl RunConfig {
    pub fn grid(&self, figure: Figure) -> FigureGrid {
        let mut g = FigureGrid::default_for(figure);
        if let Some(v) = &self.gamma3_over_g {
            g.gamma3_over_g = v.clone();
        }
        if let Some(v) = &self.kappa_over_g {
            g.kappa_over_g = v.clone();
        }
        if let Some(v) = &self.omega12_over_g3 {
            g.omega12_over_g3 = v.clone();
        }
        g.iterations = self.iterations;
        g.target = self.target;
        g
    }

    /// The configuration as a JSON tree, every key present.
    pub fn to_json(&self) -> Value {
        let d = &self.device;
        let rabi: Map<String, Value> = d
            .rabi
            .iter()
            .map(|(k, v)| (format!("{}:{}-{}", k.squid, k.lower, k.upper), json!(v)))
            .collect();
        json!({
            "experiment": self.experiment.map(|e| e.id()),
            "device": {
                "g1": d.g[0], "g2": d.g[1], "g3": d.g[2],
                "delta_c": d.delta_c,
                "rabi_default": d.rabi_default,
                "rabi": rabi,
                "gamma3": d.gamma3, "gamma2": d.gamma2, "kappa": d.kappa,
            },
            "noise": {
                "gamma3": self.noise.enable_gamma3,
                "kappa": self.noise.enable_kappa,
                "offresonant_leakage": self.noise.enable_offresonant_leakage,
                "kappa_during_pulses": self.noise.kappa_during_pulses,
                "kappa_during_wait": self.noise.kappa_during_wait,
            },
            "grid": {
                "gamma3_over_g": self.gamma3_over_g,
                "kappa_over_g": self.kappa_over_g,
                "omega12_over_g3": self.omega12_over_g3,
            },
            "target": self.target.iter().map(|b| b.to_string()).collect::<String>(),
            "iterations": self.iterations,
            "out": self.out.to_string_lossy(),
            "seed": self.seed,
            "samples": self.samples,
        })
    }
}

/// One schema violation, `key` being the dotted path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

struct Walker {
    diags: Vec<Diagnostic>,
}

impl Walker {
    fn err(&mut self, key: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic { key: key.to_string(), message: message.into() });
    }

    fn object<'a>(&mut self, key: &str, v: &'a Value, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.err(key, "expected an object");
            return None;
        };
        for k in map.keys() {
            if !allowed.contains(&k.as_str()) {
                let path = if key.is_empty() { k.clone() } else { format!("{key}.{k}") };
                self.err(&path, format!("unknown key; expected one of: {}", allowed.join(", ")));
            }
        }
        Some(map)
    }

    fn number(&mut self, key: &str, v: &Value) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(key, format!("expected a number, got {v}"));
                None
            }
        }
    }

    fn rate(&mut self, key: &str, v: &Value, strictly_positive: bool) -> Option<f64> {
        let x = self.number(key, v)?;
        if x < 0.0 {
            self.err(key, format!("must be nonnegative, got {x}"));
            return None;
        }
        if strictly_positive && x == 0.0 {
            self.err(key, "must be positive, got 0");
            return None;
        }
        Some(x)
    }

    fn flag(&mut self, key: &str, v: &Value) -> Option<bool> {
        let b = v.as_bool();
        if b.is_none() {
            self.err(key, format!("expected true or false, got {v}"));
        }
        b
    }

    fn count(&mut self, key: &str, v: &Value, max: u64) -> Option<u64> {
        match v.as_u64() {
            Some(n) if n <= max => Some(n),
            _ => {
                self.err(key, format!("expected an integer in 0..={max}, got {v}"));
                None
            }
        }
    }

    fn grid(&mut self, key: &str, v: &Value) -> Option<Vec<f64>> {
        let Some(items) = v.as_array() else {
            self.err(key, "expected an array of numbers");
            return None;
        };
        if items.is_empty() {
            self.err(key, "grid must be nonempty");
            return None;
        }
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            out.push(self.rate(&format!("{key}[{i}]"), item, false)?);
        }
        Some(out)
    }
}

fn parse_target(v: &Value) -> Option<LogicalState> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Array(a) => a.iter().map(|b| b.as_u64().map(|b| b.to_string()).unwrap_or_default()).collect(),
        _ => return None,
    };
    let bits: Vec<usize> = text
        .chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect::<Option<_>>()?;
    (bits.len() == 3).then(|| [bits[0], bits[1], bits[2]])
}

fn parse_drive(key: &str) -> Option<Drive> {
    // "squid:a-b", physical levels
    let (squid, levels) = key.split_once(':')?;
    let (a, b) = levels.split_once('-')?;
    let (squid, a, b) = (squid.parse().ok()?, a.parse().ok()?, b.parse().ok()?);
    if !(1..=3).contains(&squid) || a > 3 || b > 3 || a == b {
        return None;
    }
    Some(Drive::new(squid, a, b))
}

/// Schema check of a config tree. Returns the resolved config when there are
/// no diagnostics; otherwise every violation found.
pub fn parse_config(root: &Value) -> Result<RunConfig, Vec<Diagnostic>> {
    let mut w = Walker { diags: Vec::new() };
    let mut cfg = RunConfig::default();
    let top = ["experiment", "device", "noise", "grid", "target", "iterations", "out", "seed", "samples"];
    let Some(map) = w.object("", root, &top) else {
        return Err(w.diags);
    };

    if let Some(v) = map.get("experiment") {
        match v {
            Value::Null => {}
            Value::String(id) => match Experiment::parse(id) {
                Some(e) => cfg.experiment = Some(e),
                None => w.err("experiment", format!("unknown id {id:?}; valid ids: {}", valid_ids())),
            },
            _ => w.err("experiment", format!("expected a string; valid ids: {}", valid_ids())),
        }
    }

    if let Some(v) = map.get("device") {
        let keys = ["g1", "g2", "g3", "delta_c", "rabi_default", "rabi", "gamma3", "gamma2", "kappa"];
        if let Some(dev) = w.object("device", v, &keys) {
            let d = &mut cfg.device;
            for (i, name) in ["g1", "g2", "g3"].iter().enumerate() {
                if let Some(x) = dev.get(*name).and_then(|v| w.rate(&format!("device.{name}"), v, true)) {
                    d.g[i] = x;
                }
            }
            // Δc and the default Rabi frequency follow g unless given
            d.delta_c = 10.0 * d.g[2];
            d.rabi_default = 10.0 * d.g[0];
            if let Some(x) = dev.get("delta_c").and_then(|v| w.rate("device.delta_c", v, true)) {
                d.delta_c = x;
            }
            if let Some(x) = dev.get("rabi_default").and_then(|v| w.rate("device.rabi_default", v, true)) {
                d.rabi_default = x;
            }
            for name in ["gamma3", "gamma2", "kappa"] {
                if let Some(x) = dev.get(name).and_then(|v| w.rate(&format!("device.{name}"), v, false)) {
                    match name {
                        "gamma3" => d.gamma3 = x,
                        "gamma2" => d.gamma2 = x,
                        _ => d.kappa = x,
                    }
                }
            }
            if let Some(v) = dev.get("rabi") {
                match v.as_object() {
                    Some(entries) => {
                        for (k, v) in entries {
                            let key = format!("device.rabi.{k}");
                            match parse_drive(k) {
                                Some(drive) => {
                                    if let Some(x) = w.rate(&key, v, true) {
                                        d.rabi.insert(drive, x);
                                    }
                                }
                                None => w.err(&key, "expected a key of the form \"squid:a-b\" with physical levels"),
                            }
                        }
                    }
                    None => w.err("device.rabi", "expected an object"),
                }
            }
        }
    }

    if let Some(v) = map.get("noise") {
        let keys = ["gamma3", "kappa", "offresonant_leakage", "kappa_during_pulses", "kappa_during_wait"];
        if let Some(noise) = w.object("noise", v, &keys) {
            let n = &mut cfg.noise;
            for (name, slot) in [
                ("gamma3", &mut n.enable_gamma3),
                ("kappa", &mut n.enable_kappa),
                ("offresonant_leakage", &mut n.enable_offresonant_leakage),
                ("kappa_during_pulses", &mut n.kappa_during_pulses),
                ("kappa_during_wait", &mut n.kappa_during_wait),
            ] {
                if let Some(b) = noise.get(name).and_then(|v| w.flag(&format!("noise.{name}"), v)) {
                    *slot = b;
                }
            }
        }
    }

    if let Some(v) = map.get("grid") {
        if let Some(grid) = w.object("grid", v, &["gamma3_over_g", "kappa_over_g", "omega12_over_g3"]) {
            for (name, slot) in [
                ("gamma3_over_g", &mut cfg.gamma3_over_g),
                ("kappa_over_g", &mut cfg.kappa_over_g),
                ("omega12_over_g3", &mut cfg.omega12_over_g3),
            ] {
                match grid.get(name) {
                    None | Some(Value::Null) => {}
                    Some(v) => *slot = w.grid(&format!("grid.{name}"), v),
                }
            }
        }
    }

    if let Some(v) = map.get("target") {
        match parse_target(v) {
            Some(t) => cfg.target = t,
            None => w.err("target", format!("expected three bits such as \"111\", got {v}")),
        }
    }
    if let Some(n) = map.get("iterations").and_then(|v| w.count("iterations", v, 1000)) {
        cfg.iterations = n as usize;
    }
    if let Some(n) = map.get("samples").and_then(|v| w.count("samples", v, 10_000_000)) {
        cfg.samples = n as usize;
    }
    if let Some(v) = map.get("seed") {
        match v.as_u64() {
            Some(s) => cfg.seed = s,
            None => w.err("seed", format!("expected an unsigned integer, got {v}")),
        }
    }
    if let Some(v) = map.get("out") {
        match v.as_str() {
            Some(s) if !s.is_empty() => cfg.out = PathBuf::from(s),
            _ => w.err("out", "expected a nonempty path string"),
        }
    }

    if w.diags.is_empty() {
        Ok(cfg)
    } else {
        Err(w.diags)
    }
}

/// Applies `key.path=value` to the tree. The value is read as JSON when it
/// parses, otherwise as a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), Diagnostic> {
    let Some((path, raw)) = assignment.split_once('=') else {
        return Err(Diagnostic { key: assignment.into(), message: "expected KEY=VALUE".into() });
    };
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Diagnostic { key: path.into(), message: "empty path segment".into() });
    }
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let Some(map) = node.as_object_mut() else {
            return Err(Diagnostic { key: parts[..i].join("."), message: "is not an object".into() });
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("path has at least one segment")
}

/// The `%.12g` rendering used for every float in CSV output.
pub fn format_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Renders a table as CSV text with `\n` line endings.
pub fn table_to_csv(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&x| format_g12(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug)]
pub enum RunError {
    Config(Vec<Diagnostic>),
    Numerical(Error),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical(_) => EXIT_NUMERICAL,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_numerical_domain() {
            RunError::Numerical(e)
        } else {
            RunError::Config(vec![Diagnostic { key: "config".into(), message: e.to_string() }])
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Files produced by one experiment: (file name, contents, data rows).
pub type Artifacts = Vec<(String, String, usize)>;

/// Computes the output files of an experiment without touching the disk.
pub fn execute(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let Some(experiment) = cfg.experiment else {
        return Err(RunError::Config(vec![Diagnostic {
            key: "experiment".into(),
            message: format!("required; valid ids: {}", valid_ids()),
        }]));
    };
    cfg.device.validate()?;
    let id = experiment.id();
    match experiment {
        Experiment::Figure(figure) => {
            let mut table = figure_data(figure, &cfg.grid(figure), &cfg.device)?;
            if cfg.samples > 0 && matches!(figure, Figure::Fig3 | Figure::Fig6) {
                append_sampled_column(&mut table, figure, cfg)?;
            }
            let rows = table.rows.len();
            Ok(vec![(format!("{id}.csv"), table_to_csv(&table), rows)])
        }
        Experiment::Grover => {
            let run = grover_run(&GroverConfig {
                target: cfg.target,
                iterations: cfg.iterations,
                noise: cfg.noise,
                params: cfg.device.clone(),
            })?;
            let rows = run
                .records
                .iter()
                .map(|r| {
                    vec![
                        r.iteration as f64,
                        r.target_probability,
                        r.conditional_target_probability,
                        r.joint_fidelity,
                        r.conditional_fidelity,
                        r.norm_sqr,
                        r.leakage,
                    ]
                })
                .collect();
            let header = [
                "iteration",
                "target_probability",
                "target_probability_conditional",
                "fidelity_joint",
                "fidelity_conditional",
                "norm_sqr",
                "leakage",
            ];
            let table = Table { header: header.iter().map(|s| s.to_string()).collect(), rows };
            let n = table.rows.len();
            Ok(vec![(format!("{id}.csv"), table_to_csv(&table), n)])
        }
        Experiment::Timing => {
            let t = timing_budget(&cfg.device)?;
            let mut csv = String::from("quantity,seconds,ns,g1_t\n");
            let mut report = String::new();
            let mut push = |name: &str, s: f64| {
                let _ = writeln!(csv, "{name},{},{},{}", format_g12(s), format_g12(s * 1e9), format_g12(t.in_units_of_g(s)));
                let _ = writeln!(report, "{name:<34} {:>10.4} ns", s * 1e9);
            };
            for (name, s) in &t.terms {
                push(name, *s);
            }
            push("tau_gate", t.tau_gate);
            push("tau_single", t.tau_single);
            for k in 0..=cfg.iterations {
                push(&format!("tau_algorithm k={k}"), t.tau_algorithm(k));
            }
            let rows = t.terms.len() + 3 + cfg.iterations;
            Ok(vec![(format!("{id}.csv"), csv, rows), (format!("{id}.txt"), report, rows)])
        }
        Experiment::Schedule => {
            let s = phase_gate_schedule(&cfg.device)?;
            let ns = 1e9 / cfg.device.reference_rate();
            let mut csv = String::from("stage,kind,squid,from,to,area,phase,simultaneous,g1_t,ns\n");
            for step in s.steps() {
                let (kind, squid, from, to, area, phase) = match step.kind {
                    PulseKind::ClassicalPulse { squid, transition, area, phase } => {
                        ("pulse", squid.to_string(), transition.from.to_string(), transition.to.to_string(), format_g12(area), format_g12(phase))
                    }
                    PulseKind::ResonantExchange { squid } => ("exchange", squid.to_string(), "3".into(), "2".into(), String::new(), String::new()),
                    PulseKind::DispersiveWait => ("wait", "3".into(), String::new(), String::new(), String::new(), String::new()),
                    PulseKind::Idle => ("idle", String::new(), String::new(), String::new(), String::new(), String::new()),
                };
                let _ = writeln!(
                    csv,
                    "{},{kind},{squid},{from},{to},{area},{phase},{},{},{}",
                    step.stage,
                    u8::from(step.simultaneous),
                    format_g12(step.duration),
                    format_g12(step.duration * ns)
                );
            }
            let n = s.steps().len();
            Ok(vec![(format!("{id}.csv"), csv, n), (format!("{id}.txt"), s.dump(&cfg.device), n)])
        }
    }
}

fn append_sampled_column(table: &mut Table, figure: Figure, cfg: &RunConfig) -> Result<(), RunError> {
    use rayon::prelude::*;
    let g = cfg.device.reference_rate();
    table.header.push("favg_sampled".into());
    let values = table
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let (gamma, kappa) = if figure == Figure::Fig3 { (row[0], 0.0) } else { (row[0], row[1]) };
            let mut p = cfg.device.clone();
            p.gamma3 = gamma * g;
            p.kappa = kappa * g;
            let noise = NoiseConfig { enable_gamma3: gamma > 0.0, enable_kappa: kappa > 0.0, ..NoiseConfig::ideal() };
            Ok(GateResponse::simulate(&noise, &p)?.favg_sampled(cfg.samples, cfg.seed.wrapping_add(i as u64)))
        })
        .collect::<Result<Vec<f64>, Error>>()?;
    for (row, v) in table.rows.iter_mut().zip(values) {
        row.push(v);
    }
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs an experiment and writes its files plus `manifest.json` into
/// `cfg.out`. Returns the written paths.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    let artifacts = execute(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    let mut written = Vec::new();
    let mut files = Vec::new();
    for (name, contents, rows) in &artifacts {
        let path = cfg.out.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        files.push(json!({ "name": name, "rows": rows, "bytes": contents.len(), "sha256": sha256_hex(contents.as_bytes()) }));
        written.push(path);
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.map(|e| e.id()),
        "seed": cfg.seed,
        "parameters": cfg.to_json(),
        "files": files,
    });
    let path = cfg.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

fn load_tree(args: &RunArgs) -> Result<Value, RunError> {
    let mut root = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                RunError::Config(vec![Diagnostic { key: "config".into(), message: format!("{}: {e}", path.display()) }])
            })?;
            serde_json::from_str(&text).map_err(|e| {
                RunError::Config(vec![Diagnostic { key: "config".into(), message: format!("{}: {e}", path.display()) }])
            })?
        }
        None => Value::Object(Map::new()),
    };
    let mut diags = Vec::new();
    if root.is_object() {
        for s in &args.set {
            if let Err(d) = apply_override(&mut root, s) {
                diags.push(d);
            }
        }
        let map = root.as_object_mut().expect("checked above");
        if let Some(e) = &args.experiment {
            map.insert("experiment".into(), Value::String(e.clone()));
        }
        if let Some(o) = &args.out {
            map.insert("out".into(), Value::String(o.to_string_lossy().into_owned()));
        }
        if let Some(s) = args.seed {
            map.insert("seed".into(), json!(s));
        }
    }
    if diags.is_empty() {
        Ok(root)
    } else {
        Err(RunError::Config(diags))
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig, RunError> {
    let root = load_tree(args)?;
    parse_config(&root).map_err(RunError::Config)
}

fn report(err: &RunError) {
    match err {
        RunError::Config(diags) => {
            for d in diags {
                eprintln!("error: {d}");
            }
        }
        RunError::Numerical(e) => eprintln!("numerical error: {e}"),
        RunError::Io(msg) => eprintln!("i/o error: {msg}"),
    }
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::ListExperiments => {
            for e in Experiment::all() {
                println!("{:<10} {}", e.id(), e.description());
            }
            EXIT_OK
        }
        Command::Validate(args) => match resolve(&args) {
            Ok(cfg) => {
                if !cfg.device.dispersive_valid() {
                    println!("warning: device.delta_c below 5*g3; dispersive phases are unreliable");
                }
                println!("ok");
                EXIT_OK
            }
            Err(e) => {
                report(&e);
                e.exit_code()
            }
        },
        Command::Run(args) => {
            let result = resolve(&args).and_then(|cfg| {
                if !cfg.device.dispersive_valid() {
                    eprintln!("warning: device.delta_c below 5*g3; dispersive phases are unreliable");
                }
                run(&cfg)
            });
            match result {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    EXIT_OK
                }
                Err(e) => {
                    report(&e);
                    e.exit_code()
                }
            }
        }
    }
}

/// Default configuration as pretty JSON, a starting point for config files.
pub fn default_config_json() -> String {
    let mut cfg = RunConfig { experiment: Some(Experiment::Figure(Figure::Fig3)), ..RunConfig::default() };
    cfg.gamma3_over_g = Some(FigureGrid::default_for(Figure::Fig3).gamma3_over_g);
    let mut v = cfg.to_json();
    // keep the file minimal: unset grids fall back to per-figure defaults
    if let Some(grid) = v.get_mut("grid").and_then(Value::as_object_mut) {
        grid.retain(|_, v| !v.is_null());
    }
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}
