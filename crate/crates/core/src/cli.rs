//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or invalid parameters,
//! 3 malformed input file, 4 input that parses but fails validation,
//! 5 one or more sweep cells failed.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::baseline::{load_events, load_sizes, parse_sizes, BaselineConfig, BaselineError, BaselineSizes};
use crate::config::{ConfigError, ExperimentFile, ModelFamily, RunParams, ShareMode, SweepGrid, UpdateMode};
use crate::decision::{utility_grid, Projection, DEFAULT_STARTUP_COST};
use crate::engine::{run, single_run_report, sweep, write_final_sizes, write_per_step_sizes, EngineError, SweepReport};
use crate::figures::{figure_grid, summarize, FigureId};
use crate::metrics::{
    complementary_ecdf, gini, median, overlay, render_svg, skew_summary, write_ecdf_csv, write_overlay_csv,
    write_summary_csv, EcdfCurve, MetricsError, Panel,
};
use crate::population::SizeDistribution;

pub const OUT_DIR_ENV: &str = "COMMSIM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "commsim", version, about = "Agent-based simulation of online community sizes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its final community sizes.
    Simulate(SimulateArgs),
    /// Run a parameter grid from a config file or a named figure preset.
    Sweep(SweepArgs),
    /// Turn comment counts or a size table into a baseline size table.
    Ingest(IngestArgs),
    /// Complementary eCDF of a size file.
    Ecdf(EcdfArgs),
    /// Overlay a simulated size file on a baseline.
    Compare(CompareArgs),
    /// Total expected benefit over a grid of current and projected sizes.
    UtilityGrid(UtilityGridArgs),
}

/// Model parameters. Each flag overrides the same key in `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML experiment file; flags override its `[run]` table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// null, social_exposure, ieb, or combined.
    #[arg(long, value_parser = parse_family)]
    pub model: Option<ModelFamily>,
    /// Number of agents (default 9000).
    #[arg(long)]
    pub agents: Option<usize>,
    /// Number of communities (default 200).
    #[arg(long)]
    pub communities: Option<usize>,
    /// Time steps (default 24).
    #[arg(long)]
    pub steps: Option<u32>,
    /// Base seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random exposure probability (fallback exposure for social models).
    #[arg(long = "p-e")]
    pub p_e: Option<f64>,
    /// Join probability per exposed community.
    #[arg(long = "p-j")]
    pub p_j: Option<f64>,
    /// Leave probability per current community (default .56).
    #[arg(long = "p-l")]
    pub p_l: Option<f64>,
    /// Communities each sampled neighbor shares.
    #[arg(long)]
    pub m: Option<u32>,
    /// Which communities neighbors share: random or largest.
    #[arg(long, value_parser = parse_share)]
    pub share: Option<ShareMode>,
    /// Proportion of candidate communities an agent keeps.
    #[arg(long = "p-k")]
    pub p_k: Option<f64>,
    /// Cost of joining a community (default 0.5).
    #[arg(long = "startup-cost")]
    pub startup_cost: Option<f64>,
    /// Projection horizon in steps (default 6).
    #[arg(long)]
    pub horizon: Option<u32>,
    /// Future-size projection: linear or quadratic.
    #[arg(long, value_parser = parse_projection)]
    pub projection: Option<Projection>,
    /// synchronous (default) or sequential.
    #[arg(long, value_parser = parse_update)]
    pub update: Option<UpdateMode>,
    /// Also write sizes after every step.
    #[arg(long = "record-steps")]
    pub record_steps: bool,
}

fn parse_family(s: &str) -> Result<ModelFamily, String> {
    ModelFamily::parse(s).ok_or_else(|| format!("unknown model `{s}` (null, social_exposure, ieb, combined)"))
}

fn parse_share(s: &str) -> Result<ShareMode, String> {
    match s {
        "random" => Ok(ShareMode::Random),
        "largest" => Ok(ShareMode::Largest),
        _ => Err(format!("unknown share mode `{s}` (random, largest)")),
    }
}

fn parse_projection(s: &str) -> Result<Projection, String> {
    match s {
        "linear" => Ok(Projection::Linear),
        "quadratic" => Ok(Projection::Quadratic),
        _ => Err(format!("unknown projection `{s}` (linear, quadratic)")),
    }
}

fn parse_update(s: &str) -> Result<UpdateMode, String> {
    match s {
        "synchronous" => Ok(UpdateMode::Synchronous),
        "sequential" => Ok(UpdateMode::Sequential),
        _ => Err(format!("unknown update mode `{s}` (synchronous, sequential)")),
    }
}

impl RunFlags {
    pub fn params(&self) -> RunParams {
        RunParams {
            model: self.model,
            agents: self.agents,
            communities: self.communities,
            steps: self.steps,
            seed: self.seed,
            p_e: self.p_e,
            p_j: self.p_j,
            p_l: self.p_l,
            m: self.m,
            share: self.share,
            p_k: self.p_k,
            startup_cost: self.startup_cost,
            horizon: self.horizon,
            projection: self.projection,
            update: self.update,
            record_steps: self.record_steps.then_some(true),
        }
    }

    fn experiment(&self) -> Result<ExperimentFile, CliError> {
        match &self.config {
            None => Ok(ExperimentFile::default()),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
                ExperimentFile::from_toml_str(&text).map_err(CliError::from)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Named figure grid: fig3, fig4, fig5, fig6, fig7, figA1, figB1, figB2.
    #[arg(long)]
    pub figure: Option<FigureId>,
    /// Seeds per cell; overrides the config file.
    #[arg(long)]
    pub replicates: Option<u32>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Baseline `community,size` table; enables per-cell overlay tables.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Also render the overlay grid as SVG.
    #[arg(long)]
    pub svg: bool,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct IngestSource {
    /// `community,user,count` (or `community,user`) file.
    #[arg(long, group = "source")]
    pub events: Option<PathBuf>,
    /// `community,size` file.
    #[arg(long, group = "source")]
    pub sizes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub source: IngestSource,
    /// Comments a user needs to count as an active member.
    #[arg(long = "min-comments", default_value_t = 5)]
    pub min_comments: u64,
    /// Communities larger than this are excluded.
    #[arg(long = "size-cap", default_value_t = 9000)]
    pub size_cap: u32,
    /// Keep communities above the size cap.
    #[arg(long = "keep-above-cap")]
    pub keep_above_cap: bool,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Which run inside a simulation output file.
#[derive(Debug, Clone, Default, Args)]
pub struct Selection {
    /// Cell id to read from a sweep output.
    #[arg(long)]
    pub cell: Option<usize>,
    /// Replicate to read from a sweep output.
    #[arg(long)]
    pub replicate: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EcdfArgs {
    /// Size table (`community,size`) or simulation output (`final_size` column).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub select: Selection,
    /// Keep size-0 communities.
    #[arg(long = "keep-zeros")]
    pub keep_zeros: bool,
    /// Label for the `series` column.
    #[arg(long, default_value = "sim")]
    pub series: String,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Simulated sizes (simulation output or `community,size`).
    #[arg(long)]
    pub sim: PathBuf,
    /// Baseline `community,size` table; the size cap applies.
    #[arg(long)]
    pub baseline: PathBuf,
    #[command(flatten)]
    pub select: Selection,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render the overlay as SVG to this file.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UtilityGridArgs {
    /// Largest current size on the grid.
    #[arg(long = "s-c-max", default_value_t = 100)]
    pub s_c_max: u32,
    /// Current-size step.
    #[arg(long = "s-c-step", default_value_t = 1)]
    pub s_c_step: u32,
    /// Largest projected size on the grid.
    #[arg(long = "s-f-max", default_value_t = 1000.0)]
    pub s_f_max: f64,
    /// Projected-size step.
    #[arg(long = "s-f-step", default_value_t = 10.0)]
    pub s_f_step: f64,
    /// Cost subtracted for non-members.
    #[arg(long = "startup-cost", default_value_t = DEFAULT_STARTUP_COST)]
    pub startup_cost: f64,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn parse(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Parse(_) => CliError::parse(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::Io(_) => CliError::io(e.to_string()),
            _ if e.is_parse_error() => CliError::parse(e.to_string()),
            _ => CliError::invalid(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(c) => c.into(),
            other => CliError::io(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io(_) => CliError::io(e.to_string()),
            other => CliError::invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

/// Record of what an invocation did, written next to its outputs.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    figure: Option<FigureId>,
    base: &'a RunParams,
    axes: Vec<ManifestAxis>,
    replicates: u32,
    runs: Vec<ManifestRun>,
    files: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ManifestAxis {
    name: String,
    values: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ManifestRun {
    cell_id: usize,
    replicate: u32,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<crate::config::ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    exposure_bound_violations: u64,
}

fn manifest_runs(report: &SweepReport) -> Vec<ManifestRun> {
    report
        .outcomes
        .iter()
        .map(|o| ManifestRun {
            cell_id: o.cell,
            replicate: o.replicate,
            seed: o.seed,
            config: o.result.as_ref().ok().map(|r| r.config.clone()),
            error: o.result.as_ref().err().map(|e| e.to_string()),
            exposure_bound_violations: o.result.as_ref().map_or(0, |r| r.audit.violations),
        })
        .collect()
}

fn create_file(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn std::io::Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create_file(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn baseline_config() -> BaselineConfig {
    BaselineConfig::default()
}

fn load_baseline(path: &Path) -> Result<BaselineSizes, CliError> {
    let sizes = load_sizes(path, &baseline_config())?;
    for (key, size) in &sizes.excluded {
        eprintln!("baseline: excluded `{key}` ({size} members) above size cap");
    }
    Ok(sizes)
}

/// Reads sizes from either a `community,size` table or a simulation output
/// file (`final_size` column, optionally with `cell_id`/`replicate`).
pub fn read_size_file(path: &Path, select: &Selection) -> Result<SizeDistribution, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    parse_size_table(&bytes, select).map_err(|e| CliError {
        code: e.code,
        message: format!("{}: {}", path.display(), e.message),
    })
}

/// Byte-level form of [`read_size_file`].
pub fn parse_size_table(bytes: &[u8], select: &Selection) -> Result<SizeDistribution, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let Some(size_col) = col("final_size") else {
        let cfg = BaselineConfig { exclude_above_cap: false, ..baseline_config() };
        return Ok(parse_sizes(bytes, &cfg)?.distribution());
    };
    let cell_col = col("cell_id");
    let rep_col = col("replicate");
    let mut chosen: Option<(String, String)> = None;
    let mut sizes = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::parse(e.to_string()))?;
        let cell = cell_col.map(|i| record[i].to_string()).unwrap_or_default();
        let rep = rep_col.map(|i| record[i].to_string()).unwrap_or_default();
        if let Some(want) = select.cell {
            if cell != want.to_string() {
                continue;
            }
        }
        if let Some(want) = select.replicate {
            if rep != want.to_string() {
                continue;
            }
        }
        match &chosen {
            None => chosen = Some((cell, rep)),
            Some(key) if *key != (cell.clone(), rep.clone()) => {
                return Err(CliError::usage(
                    "file holds several runs; pick one with --cell/--replicate",
                ))
            }
            _ => {}
        }
        let size: u32 = record[size_col].parse().map_err(|_| {
            CliError::parse(format!(
                "line {}: bad final_size `{}`",
                record.position().map_or(0, |p| p.line()),
                &record[size_col]
            ))
        })?;
        sizes.push(size);
    }
    if sizes.is_empty() {
        return Err(CliError::invalid("no matching rows"));
    }
    Ok(SizeDistribution::new(sizes))
}

fn simulate(args: &SimulateArgs, argv: &[String]) -> Result<(), CliError> {
    let file = args.run.experiment()?;
    if file.sweep.is_some() {
        return Err(CliError::usage("config defines a [sweep]; use the sweep command"));
    }
    let mut params = file.run.clone();
    params.overlay(&args.run.params());
    let config = params.resolve()?;
    let result = run(&config)?;
    let summary = skew_summary(&result.final_sizes);

    fs::create_dir_all(&args.out)?;
    let final_path = args.out.join("final_sizes.csv");
    let mut files = vec![final_path.display().to_string()];
    let report = single_run_report(result);
    write_final_sizes(&report, create_file(&final_path)?)?;
    if config.record_steps {
        let p = args.out.join("per_step_sizes.csv");
        write_per_step_sizes(&report, create_file(&p)?)?;
        files.push(p.display().to_string());
    }
    let manifest_path = args.out.join("manifest.json");
    files.push(manifest_path.display().to_string());
    write_json(
        &manifest_path,
        &Manifest {
            command: "simulate",
            args: argv.to_vec(),
            figure: None,
            base: &params,
            axes: Vec::new(),
            replicates: 1,
            runs: manifest_runs(&report),
            files,
        },
    )?;

    match summary {
        Ok(s) => println!(
            "gini={:.4} max={} median={} cv={:.4} loglog_r2={:.4}",
            s.gini, s.max_size, s.median_size, s.cv, s.loglog_r2
        ),
        Err(e) => {
            let sizes = report.outcomes[0].result.as_ref().map(|r| r.final_sizes.sizes()).unwrap_or_default();
            println!(
                "gini={:.4} max={} median={} ({e}; cv and loglog_r2 omitted)",
                gini(sizes),
                sizes.iter().max().copied().unwrap_or(0),
                median(sizes)
            );
        }
    }
    println!("wrote {}", final_path.display());
    Ok(())
}

fn sweep_cmd(args: &SweepArgs, argv: &[String]) -> Result<bool, CliError> {
    let file = args.run.experiment()?;
    let flags = args.run.params();
    let grid = match args.figure {
        Some(id) => {
            if file.sweep.is_some() {
                return Err(CliError::usage("--figure cannot be combined with a config [sweep]"));
            }
            let mut overrides = file.run.clone();
            overrides.overlay(&flags);
            figure_grid(id, &overrides, args.replicates.unwrap_or(1))?
        }
        None => {
            if file.sweep.is_none() {
                return Err(CliError::usage("sweep needs --figure or a config file with a [sweep] table"));
            }
            let mut grid = SweepGrid::from_experiment(&file)?;
            grid.base.overlay(&flags);
            if let Some(r) = args.replicates {
                grid.replicates = r;
            }
            grid.validate()?;
            grid
        }
    };
    let baseline = args.baseline.as_deref().map(load_baseline).transpose()?;
    let baseline_curve = baseline
        .as_ref()
        .map(|b| complementary_ecdf(&b.distribution(), true))
        .transpose()?;

    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = sweep(&grid, jobs)?;

    fs::create_dir_all(&args.out)?;
    let mut files = Vec::new();
    let final_path = args.out.join("sweep_final_sizes.csv");
    write_final_sizes(&report, create_file(&final_path)?)?;
    files.push(final_path.display().to_string());
    if grid.base.record_steps == Some(true) {
        let p = args.out.join("per_step_sizes.csv");
        write_per_step_sizes(&report, create_file(&p)?)?;
        files.push(p.display().to_string());
    }
    let summary_path = args.out.join("summary.csv");
    write_summary_csv(&summarize(&report), create_file(&summary_path)?)?;
    files.push(summary_path.display().to_string());

    let mut panels = Vec::new();
    for (outcome, result) in report.results() {
        let sim = complementary_ecdf(&result.final_sizes, true)?;
        if let Some(base) = &baseline_curve {
            let dir = args.out.join("overlay");
            fs::create_dir_all(&dir)?;
            let p = dir.join(format!("cell_{}_rep_{}.csv", outcome.cell, outcome.replicate));
            write_overlay_csv(&overlay(&sim, base), create_file(&p)?)?;
            files.push(p.display().to_string());
        }
        panels.push(Panel {
            title: crate::figures::cell_title(&outcome.coords),
            sim,
            baseline: baseline_curve.clone(),
        });
    }
    if args.svg {
        let columns = grid.axes.last().map_or(1, |a| a.values.len());
        let p = args.out.join("overlay.svg");
        fs::write(&p, render_svg(&panels, columns))?;
        files.push(p.display().to_string());
    }

    let manifest_path = args.out.join("manifest.json");
    files.push(manifest_path.display().to_string());
    write_json(
        &manifest_path,
        &Manifest {
            command: "sweep",
            args: argv.to_vec(),
            figure: args.figure,
            base: &grid.base,
            axes: grid
                .axes
                .iter()
                .map(|a| ManifestAxis {
                    name: a.name.clone(),
                    values: a.values.iter().map(|v| v.to_string()).collect(),
                })
                .collect(),
            replicates: grid.replicates,
            runs: manifest_runs(&report),
            files,
        },
    )?;

    for failed in report.failures() {
        let err = failed.result.as_ref().err().map(|e| e.to_string()).unwrap_or_default();
        eprintln!(
            "cell {} [{}] replicate {} failed: {err}",
            failed.cell,
            crate::figures::cell_title(&failed.coords),
            failed.replicate
        );
    }
    println!(
        "{} runs, {} failed; wrote {}",
        report.outcomes.len(),
        report.failures().count(),
        args.out.display()
    );
    Ok(report.all_ok())
}

fn ingest(args: &IngestArgs) -> Result<(), CliError> {
    let cfg = BaselineConfig {
        min_comments: args.min_comments,
        size_cap: args.size_cap,
        exclude_above_cap: !args.keep_above_cap,
    };
    let sizes = match (&args.source.events, &args.source.sizes) {
        (Some(path), _) => {
            let f = fs::File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            load_events(std::io::BufReader::new(f), &cfg)?
        }
        (None, Some(path)) => load_sizes(path, &cfg)?,
        (None, None) => return Err(CliError::usage("give --events or --sizes")),
    };
    for (key, size) in &sizes.excluded {
        eprintln!("excluded `{key}` ({size} members) above size cap {}", cfg.size_cap);
    }
    sizes.write_csv(output(&args.out)?)?;
    Ok(())
}

fn ecdf(args: &EcdfArgs) -> Result<(), CliError> {
    let dist = read_size_file(&args.input, &args.select)?;
    let curve = complementary_ecdf(&dist, !args.keep_zeros)?;
    write_ecdf_csv(&args.series, &curve, output(&args.out)?)?;
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let sim = read_size_file(&args.sim, &args.select)?;
    let base = load_baseline(&args.baseline)?.distribution();
    let sim_curve = complementary_ecdf(&sim, true)?;
    let base_curve: EcdfCurve = complementary_ecdf(&base, true)?;
    write_overlay_csv(&overlay(&sim_curve, &base_curve), output(&args.out)?)?;
    if let Some(p) = &args.svg {
        let panel = Panel {
            title: args.sim.display().to_string(),
            sim: sim_curve,
            baseline: Some(base_curve),
        };
        fs::write(p, render_svg(&[panel], 1))?;
    }
    for (label, dist) in [("sim", &sim), ("baseline", &base)] {
        match skew_summary(dist) {
            Ok(s) => eprintln!(
                "{label}: gini={:.4} max={} median={} cv={:.4} loglog_r2={:.4}",
                s.gini, s.max_size, s.median_size, s.cv, s.loglog_r2
            ),
            Err(e) => eprintln!("{label}: {e}"),
        }
    }
    Ok(())
}

fn utility(args: &UtilityGridArgs) -> Result<(), CliError> {
    if args.s_c_step == 0 || args.s_f_step.is_nan() || args.s_f_step <= 0.0 || args.s_f_max.is_nan() || args.s_f_max < 0.0 {
        return Err(CliError::usage("grid steps must be positive and maxima non-negative"));
    }
    let s_c: Vec<u32> = (0..=args.s_c_max).step_by(args.s_c_step as usize).collect();
    let n_f = (args.s_f_max / args.s_f_step).floor() as usize;
    if n_f > 1_000_000 {
        return Err(CliError::usage("s_f grid too large"));
    }
    let s_f: Vec<f64> = (0..=n_f).map(|i| i as f64 * args.s_f_step).collect();
    let grid = utility_grid(&s_c, &s_f, args.startup_cost).map_err(|e| CliError::usage(e.to_string()))?;
    grid.write_csv(output(&args.out)?)
        .map_err(|e| CliError::io(e.to_string()))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let echo: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a, &echo).map(|_| true),
        Command::Sweep(a) => sweep_cmd(a, &echo),
        Command::Ingest(a) => ingest(a).map(|_| true),
        Command::Ecdf(a) => ecdf(a).map(|_| true),
        Command::Compare(a) => compare(a).map(|_| true),
        Command::UtilityGrid(a) => utility(a).map(|_| true),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 5,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
