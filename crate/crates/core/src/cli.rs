//! Command-line front end: strict JSON configs in, deterministic JSON/CSV
//! artifacts plus a run manifest out.
//!
//! Exit codes: 0 success, 2 invalid config, 3 numeric or runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::algebra::PhaseWindow;
use crate::constants::{ConstantsTable, TABLE};
use crate::error::{Error, Result};
use crate::format::sci;
use crate::pipelines::{
    beam_splitter_equivalence, chsh_point, feasibility, run_casimir_witness, run_evolve,
    run_sg_chsh, sweep, AxisSpec, CasimirConfig, EvolveConfig, FeasibilityConfig, MonteCarloSpec,
    SternGerlachConfig, SweepAxis, SweepBase, SweepPipeline, SweepResult,
};

pub const SCHEMA_VERSION: &str = "1";
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
/// Environment variable capping sweep worker threads.
pub const THREADS_ENV: &str = "SQLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sqlab", version, about = "Spatial-qubit experiment pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spin–motion CHSH test.
    Chsh(RunArgs),
    /// Casimir entanglement witness.
    Witness(RunArgs),
    /// Two-packet free evolution and fringe analysis.
    Evolve(RunArgs),
    /// Timing and resolution requirements.
    Feasibility(RunArgs),
    /// Detector pair as a beam splitter.
    #[command(name = "bs-check")]
    BsCheck(RunArgs),
    /// Parameter sweep of a pipeline metric.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo shots; 0 disables sampling.
    #[arg(long)]
    pub shots: Option<u64>,
}

impl Command {
    fn parts(&self) -> (PipelineName, &RunArgs) {
        match self {
            Command::Chsh(a) => (PipelineName::Chsh, a),
            Command::Witness(a) => (PipelineName::Witness, a),
            Command::Evolve(a) => (PipelineName::Evolve, a),
            Command::Feasibility(a) => (PipelineName::Feasibility, a),
            Command::BsCheck(a) => (PipelineName::BsCheck, a),
            Command::Sweep(a) => (PipelineName::Sweep, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineName {
    Chsh,
    Witness,
    Evolve,
    Feasibility,
    Sweep,
    BsCheck,
}

impl PipelineName {
    fn as_str(self) -> &'static str {
        match self {
            PipelineName::Chsh => "chsh",
            PipelineName::Witness => "witness",
            PipelineName::Evolve => "evolve",
            PipelineName::Feasibility => "feasibility",
            PipelineName::Sweep => "sweep",
            PipelineName::BsCheck => "bs-check",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Format of tabular outputs; reports are always JSON.
    #[serde(default)]
    pub format: OutputFormat,
}

/// A config file with its parameters typed for one pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument<P> {
    pub schema_version: String,
    pub pipeline: PipelineName,
    pub parameters: P,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshParameters {
    pub experiment: SternGerlachConfig,
    #[serde(default)]
    pub sweep: Option<ChshSweep>,
}

/// Evenly spaced `δθ` grid crossed with a list of `γt` values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSweep {
    #[serde(default)]
    pub delta_theta_start: f64,
    #[serde(default = "pi")]
    pub delta_theta_stop: f64,
    pub steps: usize,
    #[serde(default = "zero_list")]
    pub gamma_t: Vec<f64>,
}

fn pi() -> f64 {
    std::f64::consts::PI
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessParameters {
    pub experiment: CasimirConfig,
    /// Grid over `tau`.
    #[serde(default)]
    pub sweep: Option<AxisSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsCheckParameters {
    pub theta0: f64,
    pub theta1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParameters {
    pub target: SweepPipeline,
    pub base: Value,
    #[serde(default)]
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub pipeline: String,
    pub code_version: String,
    pub config: Value,
    pub seed: u64,
    pub shots: u64,
    pub threads: Option<usize>,
    pub constants: ConstantsTable,
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig { .. } => EXIT_CONFIG,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Files produced by a run, in write order.
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    notes: Vec<String>,
}

impl Artifacts {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.files.push((name.to_string(), text.into_bytes()));
        Ok(())
    }

    fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// Parses `text` as a config for `pipeline`; every failure is a config error.
pub fn parse_document<P: DeserializeOwned>(
    text: &str,
    pipeline: PipelineName,
) -> std::result::Result<ConfigDocument<P>, Failure> {
    let loose: Value =
        serde_json::from_str(text).map_err(|e| Failure::config(format!("invalid config: {e}")))?;
    let version = loose.get("schema_version").and_then(Value::as_str);
    if version != Some(SCHEMA_VERSION) {
        return Err(Failure::config(format!(
            "invalid config field `schema_version`: expected \"{SCHEMA_VERSION}\", got {}",
            loose
                .get("schema_version")
                .map_or("nothing".to_string(), Value::to_string)
        )));
    }
    let named = loose
        .get("pipeline")
        .cloned()
        .map(serde_json::from_value::<PipelineName>);
    match named {
        Some(Ok(p)) if p == pipeline => {}
        Some(Ok(p)) => {
            return Err(Failure::config(format!(
                "invalid config field `pipeline`: file is for `{}` but the `{}` command was run",
                p.as_str(),
                pipeline.as_str()
            )))
        }
        Some(Err(e)) => {
            return Err(Failure::config(format!(
                "invalid config field `pipeline`: {e}"
            )))
        }
        None => return Err(Failure::config("invalid config: missing field `pipeline`")),
    }
    serde_json::from_str(text).map_err(|e| Failure::config(format!("invalid config: {e}")))
}

fn validated<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e {
        Error::InvalidConfig { .. } => Failure::from(e),
        other => Failure::config(format!("invalid config: {other}")),
    })
}

fn threads_from_env() -> std::result::Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| {
                Failure::config(format!(
                    "{THREADS_ENV} must be a positive integer, got `{v}`"
                ))
            }),
        Err(_) => Ok(None),
    }
}

struct Effective {
    seed: u64,
    shots: u64,
    out: PathBuf,
    format: OutputFormat,
    threads: Option<usize>,
}

impl Effective {
    fn monte_carlo(&self) -> Option<MonteCarloSpec> {
        (self.shots > 0).then_some(MonteCarloSpec {
            shots: self.shots,
            seed: self.seed,
        })
    }
}

fn effective<P>(doc: &ConfigDocument<P>, args: &RunArgs, threads: Option<usize>) -> Effective {
    Effective {
        seed: args.seed.unwrap_or(doc.seed),
        shots: args.shots.or(doc.shots).unwrap_or(0),
        out: args
            .out
            .clone()
            .or_else(|| doc.output.path.clone())
            .unwrap_or_else(|| PathBuf::from("sqlab-out")),
        format: doc.output.format,
        threads,
    }
}

fn run_chsh(
    doc: &ConfigDocument<ChshParameters>,
    eff: &Effective,
    out: &mut Artifacts,
) -> Result<()> {
    let report = run_sg_chsh(&doc.parameters.experiment, eff.monte_carlo())?;
    out.json("chsh_report.json", &report)?;
    if let Some(s) = &doc.parameters.sweep {
        let axis = SweepAxis::linspace(
            "delta_theta",
            s.delta_theta_start,
            s.delta_theta_stop,
            s.steps,
        )
        .map_err(|e| Error::config("parameters.sweep", e.to_string()))?;
        let mut rows = Vec::new();
        for &dt in &axis.values {
            let window = PhaseWindow::new(dt)
                .map_err(|e| Error::config("parameters.sweep", e.to_string()))?;
            for &gt in &s.gamma_t {
                if !(gt.is_finite() && gt >= 0.0) {
                    return Err(Error::config(
                        "parameters.sweep.gamma_t",
                        "values must be finite and >= 0",
                    ));
                }
                let value = chsh_point(window, gt)?;
                rows.push((dt, gt, value));
            }
        }
        match eff.format {
            OutputFormat::Csv => out.csv(
                "chsh_sweep.csv",
                &["delta_theta_rad", "gamma_t", "chsh_value"],
                rows.iter().map(|(a, b, c)| vec![sci(*a), sci(*b), sci(*c)]),
            )?,
            OutputFormat::Json => {
                let table: Vec<_> = rows
                    .iter()
                    .map(|(a, b, c)| serde_json::json!({"delta_theta_rad": a, "gamma_t": b, "chsh_value": c}))
                    .collect();
                out.json("chsh_sweep.json", &table)?
            }
        }
    }
    Ok(())
}

fn run_witness(
    doc: &ConfigDocument<WitnessParameters>,
    eff: &Effective,
    out: &mut Artifacts,
) -> Result<()> {
    let config = &doc.parameters.experiment;
    let report = run_casimir_witness(config, eff.monte_carlo())?;
    if let Some(o) = config.phase_override {
        out.notes.push(format!(
            "relative phases taken as inputs (dphi01 = {}, dphi10 = {} at tau = {} s) instead of being derived from epsilon_r",
            o.dphi01, o.dphi10, o.reference_tau
        ));
        if report.implied_epsilon_r.is_none() {
            out.notes.push(format!(
                "the input phases imply a coupling of {:e} m/s, beyond the perfect-conductor limit; no permittivity reproduces them",
                report.coupling_m_per_s
            ));
        }
    }
    out.json("witness_report.json", &report)?;
    if let Some(axis) = &doc.parameters.sweep {
        if axis.name != "tau" {
            return Err(Error::config(
                "sweep.name",
                "the witness sweep runs over `tau`",
            ));
        }
        let result = sweep(
            &SweepBase::Witness(config.clone()),
            &[axis.to_axis()?],
            eff.threads,
        )?;
        write_sweep(out, "witness_sweep", &result, eff.format)?;
    }
    Ok(())
}

fn run_evolve_cmd(
    doc: &ConfigDocument<EvolveConfig>,
    eff: &Effective,
    out: &mut Artifacts,
) -> Result<()> {
    let run = run_evolve(&doc.parameters)?;
    out.json("evolve_report.json", &run.report)?;
    let with_grid = doc.parameters.grid_oracle;
    match eff.format {
        OutputFormat::Csv => {
            let mut header = vec!["x_over_sigma_d", "probability_density"];
            if with_grid {
                header.push("grid_probability_density");
            }
            out.csv(
                "density_profile.csv",
                &header,
                run.profile.iter().map(|r| {
                    let mut row = vec![sci(r.x_over_sigma_d), sci(r.probability_density)];
                    if with_grid {
                        row.push(opt(r.grid_probability_density));
                    }
                    row
                }),
            )?;
        }
        OutputFormat::Json => out.json("density_profile.json", &run.profile)?,
    }
    Ok(())
}

fn write_sweep(
    out: &mut Artifacts,
    stem: &str,
    result: &SweepResult,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Json => out.json(&format!("{stem}.json"), result),
        OutputFormat::Csv => {
            let mut header: Vec<&str> = result.axis_names();
            header.extend(result.aux_names.iter().map(String::as_str));
            header.push(&result.metric_name);
            header.push("status");
            let n_aux = result.aux_names.len();
            out.csv(
                &format!("{stem}.csv"),
                &header,
                result.rows.iter().map(|r| {
                    let mut row: Vec<String> = r.coordinates.iter().map(|v| sci(*v)).collect();
                    match &r.aux {
                        Some(aux) => row.extend(aux.iter().map(|v| sci(*v))),
                        None => row.extend(std::iter::repeat_n(String::new(), n_aux)),
                    }
                    row.push(opt(r.metric));
                    row.push(r.error.clone().unwrap_or_else(|| "ok".to_string()));
                    row
                }),
            )
        }
    }
}

fn sweep_base(params: &SweepParameters) -> std::result::Result<SweepBase, Failure> {
    let err = |e: serde_json::Error| {
        Failure::config(format!("invalid config field `parameters.base`: {e}"))
    };
    let base = match params.target {
        SweepPipeline::Chsh => {
            SweepBase::Chsh(serde_json::from_value(params.base.clone()).map_err(err)?)
        }
        SweepPipeline::Witness => {
            SweepBase::Witness(serde_json::from_value(params.base.clone()).map_err(err)?)
        }
        SweepPipeline::Feasibility => {
            SweepBase::Feasibility(serde_json::from_value(params.base.clone()).map_err(err)?)
        }
    };
    match &base {
        SweepBase::Chsh(c) => validated(c.validate())?,
        SweepBase::Witness(c) => validated(c.validate())?,
        SweepBase::Feasibility(c) => validated(c.validate())?,
    }
    Ok(base)
}

fn load<P: DeserializeOwned>(
    path: &Path,
    pipeline: PipelineName,
) -> std::result::Result<(ConfigDocument<P>, Value), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    let doc = parse_document::<P>(&text, pipeline)?;
    let snapshot: Value =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("invalid config: {e}")))?;
    Ok((doc, snapshot))
}

fn finish(
    pipeline: PipelineName,
    snapshot: Value,
    eff: &Effective,
    artifacts: Artifacts,
    started: Instant,
) -> std::result::Result<RunManifest, Failure> {
    fs::create_dir_all(&eff.out).map_err(|e| Failure::from(Error::Io(e)))?;
    let mut outputs = Vec::new();
    for (name, bytes) in &artifacts.files {
        fs::write(eff.out.join(name), bytes).map_err(|e| Failure::from(Error::Io(e)))?;
        outputs.push(OutputDigest {
            file: name.clone(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        pipeline: pipeline.as_str().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: snapshot,
        seed: eff.seed,
        shots: eff.shots,
        threads: eff.threads,
        constants: TABLE,
        notes: artifacts.notes,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    let mut text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Failure::from(Error::Json(e)))?;
    text.push('\n');
    fs::write(eff.out.join("manifest.json"), text).map_err(|e| Failure::from(Error::Io(e)))?;
    Ok(manifest)
}

/// Executes one command. On success returns the manifest written next to the
/// outputs.
pub fn execute(command: &Command) -> std::result::Result<RunManifest, Failure> {
    let started = Instant::now();
    let (pipeline, args) = command.parts();
    let threads = threads_from_env()?;
    let mut artifacts = Artifacts::new();

    macro_rules! stage {
        ($params:ty, $validate:expr, $run:expr) => {{
            let (doc, snapshot) = load::<$params>(&args.config, pipeline)?;
            validated($validate(&doc.parameters))?;
            let eff = effective(&doc, args, threads);
            $run(&doc, &eff, &mut artifacts)?;
            (snapshot, eff)
        }};
    }

    let (snapshot, eff) = match pipeline {
        PipelineName::Chsh => stage!(
            ChshParameters,
            |p: &ChshParameters| p.experiment.validate(),
            run_chsh
        ),
        PipelineName::Witness => {
            stage!(
                WitnessParameters,
                |p: &WitnessParameters| p.experiment.validate(),
                run_witness
            )
        }
        PipelineName::Evolve => stage!(
            EvolveConfig,
            |p: &EvolveConfig| p.validate(),
            run_evolve_cmd
        ),
        PipelineName::Feasibility => stage!(
            FeasibilityConfig,
            |p: &FeasibilityConfig| p.validate(),
            |doc: &ConfigDocument<FeasibilityConfig>,
             _: &Effective,
             out: &mut Artifacts|
             -> Result<()> {
                out.json("feasibility_report.json", &feasibility(&doc.parameters)?)
            }
        ),
        PipelineName::BsCheck => stage!(
            BsCheckParameters,
            |_: &BsCheckParameters| Ok(()),
            |doc: &ConfigDocument<BsCheckParameters>,
             _: &Effective,
             out: &mut Artifacts|
             -> Result<()> {
                let p = &doc.parameters;
                let report = beam_splitter_equivalence(p.theta0, p.theta1)
                    .map_err(|e| Error::config("parameters.theta1", e.to_string()))?;
                out.json("bs_check_report.json", &report)
            }
        ),
        PipelineName::Sweep => {
            let (doc, snapshot) = load::<SweepParameters>(&args.config, pipeline)?;
            let base = sweep_base(&doc.parameters)?;
            let axes = doc
                .parameters
                .axes
                .iter()
                .map(AxisSpec::to_axis)
                .collect::<Result<Vec<SweepAxis>>>()
                .map_err(Failure::from)?;
            let eff = effective(&doc, args, threads);
            let result = sweep(&base, &axes, eff.threads)?;
            write_sweep(&mut artifacts, "sweep", &result, eff.format)?;
            (snapshot, eff)
        }
    };
    finish(pipeline, snapshot, &eff, artifacts, started)
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(manifest) => {
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, o.file);
            }
            EXIT_OK
        }
        Err(f) => {
            eprintln!("sqlab: {}", f.message);
            f.code
        }
    }
}
