//! The `mfscale` command line: argument parsing, configuration precedence
//! (flags over config file over defaults), file output and run manifests.
//!
//! Usage errors (bad flags, unreadable or missing files, invalid parameter
//! values) exit with status 1; domain errors raised by the analysis exit
//! with status 2.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calibrate::{cached_calibration, run_calibration, CalibrationReport};
use crate::error::Error;
use crate::io;
use crate::mfdfa::{fluctuation_surface, q_range, MfdfaConfig, WindowSizes};
use crate::pipeline::{analyze, Pipeline};
use crate::rmdgen::{generate_rmd, RmdParams, ALGORITHM_ID};
use crate::scaling::{auto_range, AutoRangePolicy, RangeSelection, ScalingRange};
use crate::series::{shuffle_returns, to_log, to_price, to_returns, Representation, Series};
use crate::spectrum::{spectrum_metrics, tau_of_q};
use crate::surgery::excise_detailed;

/// Caps the rayon worker count when set.
pub const THREADS_ENV: &str = "MFSCALE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mfscale", version, about = "Multifractal detrended fluctuation analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full MF-DFA: surface, h(q), spectrum and metrics.
    Analyze(AnalyzeArgs),
    /// Monofractal trace by random midpoint displacement.
    Generate(GenerateArgs),
    /// Shuffle surrogate of a series.
    Shuffle(ShuffleArgs),
    /// Excise returns and reintegrate.
    Surgery(SurgeryArgs),
    /// Finite-length spectrum-width background from RMD ensembles.
    Calibrate(CalibrateArgs),
    /// Automatic scaling ranges as an editable ranges file.
    SuggestRanges(SuggestRangesArgs),
    /// Plot-ready column files for h(q), s(q), f(alpha) and F(s, q).
    PlotData(PlotDataArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct MfdfaFlags {
    /// JSON config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Detrending polynomial order m.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub q_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q_max: Option<f64>,
    #[arg(long)]
    pub q_step: Option<f64>,
    /// Smallest window size.
    #[arg(long)]
    pub s_min: Option<usize>,
    /// Largest window size (default: a quarter of the profile length).
    #[arg(long)]
    pub s_max: Option<usize>,
    /// Number of log-spaced window sizes.
    #[arg(long)]
    pub s_count: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SeriesFlags {
    /// How file values become the analysed profile.
    #[arg(long)]
    pub pipeline: Option<Pipeline>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RangeFlags {
    /// Manual per-q scaling ranges (JSON map q -> {s_lo, s_hi}).
    #[arg(long, conflicts_with = "full_range")]
    pub ranges: Option<PathBuf>,
    /// Fit every window size instead of searching for a scaling range.
    #[arg(long)]
    pub full_range: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub mfdfa: MfdfaFlags,
    #[command(flatten)]
    pub series: SeriesFlags,
    #[command(flatten)]
    pub ranges: RangeFlags,
    /// Calibration report used as the finite-length baseline.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Hurst exponent in (0, 1).
    #[arg(long = "H", visible_alias = "hurst")]
    pub hurst: f64,
    /// Refinement levels; the trace has 2^levels + 1 samples.
    #[arg(long, default_value_t = 14)]
    pub levels: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Keep exactly 2^levels samples.
    #[arg(long)]
    pub trim: bool,
    /// Write the increments instead of the trace.
    #[arg(long)]
    pub increments: bool,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ShuffleArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub series: SeriesFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurgeryArgs {
    pub input: PathBuf,
    /// JSON list of {start, end} return ranges or {from_date, to_date}.
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub series: SeriesFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Series lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lengths: Vec<usize>,
    /// Input Hurst exponents, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub hursts: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub ensemble: usize,
    /// Members use seeds base_seed, base_seed + 1, ...
    #[arg(long, visible_alias = "seed", default_value_t = 1)]
    pub base_seed: u64,
    /// Reuse or store reports keyed by configuration and arguments.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[command(flatten)]
    pub mfdfa: MfdfaFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SuggestRangesArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub mfdfa: MfdfaFlags,
    #[command(flatten)]
    pub series: SeriesFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub mfdfa: MfdfaFlags,
    #[command(flatten)]
    pub series: SeriesFlags,
    #[command(flatten)]
    pub ranges: RangeFlags,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Optional settings read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub order: Option<usize>,
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
    pub q_step: Option<f64>,
    pub s_min: Option<usize>,
    pub s_max: Option<usize>,
    pub s_count: Option<usize>,
    pub pipeline: Option<Pipeline>,
    pub ranges: Option<PathBuf>,
    pub full_range: Option<bool>,
    pub r2_min: Option<f64>,
    pub min_points: Option<usize>,
    pub min_decades: Option<f64>,
    pub noise_factor: Option<f64>,
}

/// The configuration a command actually ran with, echoed into its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub pipeline: Pipeline,
    pub mfdfa: MfdfaConfig,
    pub policy: AutoRangePolicy,
    /// `auto`, `full` or `manual`.
    pub range_mode: String,
    pub ranges_file: Option<PathBuf>,
}

impl EffectiveConfig {
    fn resolve(
        mfdfa: &MfdfaFlags,
        series: Option<&SeriesFlags>,
        ranges: Option<&RangeFlags>,
    ) -> Result<Self, Failure> {
        let file: ConfigFile = match &mfdfa.config {
            Some(path) => io::read_json(path).map_err(Failure::usage)?,
            None => ConfigFile::default(),
        };
        let defaults = MfdfaConfig::default();
        let (d_min, d_count) = match defaults.windows {
            WindowSizes::LogSpaced { min, count, .. } => (min, count),
            WindowSizes::Explicit(_) => unreachable!("default windows are log-spaced"),
        };
        let q_min = mfdfa.q_min.or(file.q_min).unwrap_or(-5.0);
        let q_max = mfdfa.q_max.or(file.q_max).unwrap_or(5.0);
        let q_step = mfdfa.q_step.or(file.q_step).unwrap_or(0.25);
        if !(q_step > 0.0 && q_min < q_max) {
            return Err(Failure::Usage(format!(
                "q grid needs q-min < q-max and q-step > 0 (got {q_min}, {q_max}, {q_step})"
            )));
        }
        let config = MfdfaConfig {
            order: mfdfa.order.or(file.order).unwrap_or(defaults.order),
            windows: WindowSizes::LogSpaced {
                min: mfdfa.s_min.or(file.s_min).unwrap_or(d_min),
                max: mfdfa.s_max.or(file.s_max),
                count: mfdfa.s_count.or(file.s_count).unwrap_or(d_count),
            },
            q_grid: q_range(q_min, q_max, q_step),
            min_box_std: defaults.min_box_std,
        };
        let d = AutoRangePolicy::default();
        let policy = AutoRangePolicy {
            r2_min: file.r2_min.unwrap_or(d.r2_min),
            min_points: file.min_points.unwrap_or(d.min_points),
            min_decades: file.min_decades.unwrap_or(d.min_decades),
            noise_factor: file.noise_factor.or(d.noise_factor),
        };
        let pipeline = series
            .and_then(|s| s.pipeline)
            .or(file.pipeline)
            .unwrap_or_default();
        let (ranges_file, full) = match ranges {
            Some(r) if r.ranges.is_some() => (r.ranges.clone(), false),
            Some(r) if r.full_range => (None, true),
            _ => (file.ranges.clone(), file.full_range.unwrap_or(false)),
        };
        let range_mode = match (&ranges_file, full) {
            (Some(_), _) => "manual",
            (None, true) => "full",
            (None, false) => "auto",
        };
        Ok(EffectiveConfig {
            pipeline,
            mfdfa: config,
            policy,
            range_mode: range_mode.to_string(),
            ranges_file,
        })
    }

    fn selection(&self) -> Result<RangeSelection, Failure> {
        Ok(match (&self.ranges_file, self.range_mode.as_str()) {
            (Some(path), _) => RangeSelection::Manual(io::read_ranges(path).map_err(Failure::usage)?),
            (None, "full") => RangeSelection::Full,
            _ => RangeSelection::Auto(self.policy),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one command invocation.
///
/// Outputs are named relative to the manifest's directory. The wall-clock
/// fields are the only content that differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub input: Option<FileRecord>,
    pub representation_chain: Vec<Representation>,
    pub config: Value,
    pub range_mode: Option<String>,
    pub ranges: Vec<ScalingRange>,
    pub rng: Option<String>,
    pub outputs: Vec<FileRecord>,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
}

/// How a command failed, which decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(Error),
}

impl Failure {
    fn usage(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Domain(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::InvalidParams(_) => Failure::Usage(e.to_string()),
            e => Failure::Domain(e),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Domain(e) => write!(f, "{e}"),
        }
    }
}

struct Run {
    command: &'static str,
    arguments: Vec<String>,
    started: Instant,
    started_unix: f64,
}

impl Run {
    fn manifest(
        &self,
        input: Option<&Path>,
        chain: Vec<Representation>,
        config: Value,
        range_mode: Option<String>,
        ranges: Vec<ScalingRange>,
        rng: bool,
    ) -> Result<RunManifest, Failure> {
        let input = input
            .map(|p| {
                Ok::<_, Error>(FileRecord {
                    path: p.display().to_string(),
                    sha256: io::fingerprint_file(p)?,
                })
            })
            .transpose()?;
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            arguments: self.arguments.clone(),
            input,
            representation_chain: chain,
            config,
            range_mode,
            ranges,
            rng: rng.then(|| crate::RNG_ALGORITHM.to_string()),
            outputs: vec![],
            started_unix_seconds: self.started_unix,
            wall_clock_seconds: 0.0,
        })
    }

    /// Fingerprints `outputs` and writes the manifest to `path`.
    fn finish(&self, path: &Path, mut manifest: RunManifest, outputs: &[PathBuf]) -> Result<(), Failure> {
        for out in outputs {
            manifest.outputs.push(FileRecord {
                path: out
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: io::fingerprint_file(out)?,
            });
        }
        manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        io::write_json(path, &manifest)?;
        Ok(())
    }
}

/// `dir/stem.suffix` next to `path`, e.g. `x.csv` -> `x.manifest.json`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::from(Error::io(dir, e)))
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

/// JSON object for `value` with a leading `"manifest"` entry.
fn with_manifest<T: Serialize>(manifest: &str, value: &T) -> Result<Value, Failure> {
    let mut map = serde_json::Map::new();
    map.insert("manifest".into(), Value::String(manifest.into()));
    match serde_json::to_value(value).map_err(Error::from)? {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("data".into(), other);
        }
    }
    Ok(Value::Object(map))
}

fn read_input(path: &Path, pipeline: Pipeline) -> Result<Series, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("input file {} not found", path.display())));
    }
    Ok(io::read_series(path, pipeline.input_representation())?)
}

fn config_value(config: &EffectiveConfig) -> Value {
    serde_json::to_value(config).expect("configuration serializes")
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("mfscale: error: {message}");
        return 1;
    }
    let run = Run {
        command: match cli.command {
            Command::Analyze(_) => "analyze",
            Command::Generate(_) => "generate",
            Command::Shuffle(_) => "shuffle",
            Command::Surgery(_) => "surgery",
            Command::Calibrate(_) => "calibrate",
            Command::SuggestRanges(_) => "suggest-ranges",
            Command::PlotData(_) => "plot-data",
        },
        arguments: argv
            .iter()
            .skip(1)
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        started: Instant::now(),
        started_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64()),
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&run, &a),
        Command::Generate(a) => cmd_generate(&run, &a),
        Command::Shuffle(a) => cmd_shuffle(&run, &a),
        Command::Surgery(a) => cmd_surgery(&run, &a),
        Command::Calibrate(a) => cmd_calibrate(&run, &a),
        Command::SuggestRanges(a) => cmd_suggest_ranges(&run, &a),
        Command::PlotData(a) => cmd_plot_data(&run, &a),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("mfscale: {failure}");
            failure.exit_code()
        }
    }
}

/// Applies [`THREADS_ENV`] to the global rayon pool. A pool that already
/// exists in this process is left as is.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        log::debug!("keeping existing thread pool: {e}");
    }
    Ok(())
}

fn cmd_analyze(run: &Run, args: &AnalyzeArgs) -> Result<(), Failure> {
    let config = EffectiveConfig::resolve(&args.mfdfa, Some(&args.series), Some(&args.ranges))?;
    let selection = config.selection()?;
    let baseline = args
        .baseline
        .as_deref()
        .map(CalibrationReport::load)
        .transpose()
        .map_err(Failure::usage)?;
    let series = read_input(&args.input, config.pipeline)?;
    let analysis = analyze(&series, config.pipeline, &config.mfdfa, &selection)?;
    let metrics = spectrum_metrics(
        &analysis.spectrum,
        &analysis.hurst,
        analysis.series_len,
        baseline.as_ref(),
    )?;

    ensure_dir(&args.out)?;
    let manifest_name = "manifest.json";
    let fingerprint = io::fingerprint_file(&args.input)?;
    let outputs: Vec<PathBuf> = ["surface.csv", "hurst.json", "spectrum.csv", "metrics.json"]
        .iter()
        .map(|n| args.out.join(n))
        .collect();
    let meta = json!({
        "manifest": manifest_name,
        "input_sha256": fingerprint,
        "series_len": analysis.series_len,
        "config": config_value(&config),
    });
    io::write_surface(&outputs[0], &analysis.surface, &meta)?;
    io::write_json(&outputs[1], &with_manifest(manifest_name, &analysis.hurst)?)?;
    io::write_spectrum(
        &outputs[2],
        &analysis.spectrum,
        &format!("manifest: {manifest_name}"),
    )?;
    io::write_json(&outputs[3], &with_manifest(manifest_name, &metrics)?)?;

    let ranges = analysis.hurst.records.iter().map(|r| r.range).collect();
    let manifest = run.manifest(
        Some(&args.input),
        config.pipeline.chain(),
        config_value(&config),
        Some(config.range_mode.clone()),
        ranges,
        false,
    )?;
    run.finish(&args.out.join(manifest_name), manifest, &outputs)
}

fn cmd_generate(run: &Run, args: &GenerateArgs) -> Result<(), Failure> {
    let mut params = RmdParams::new(args.hurst, args.levels, args.seed);
    params.initial_sigma = args.sigma;
    params.trim_to_power_of_two = args.trim;
    let trace = generate_rmd(&params)?;
    let series = if args.increments {
        to_returns(&trace)?
    } else {
        trace
    };
    ensure_parent(&args.out)?;
    let manifest_path = sidecar(&args.out, "manifest.json");
    let meta_path = sidecar(&args.out, "meta.json");
    let manifest_name = file_name(&manifest_path);
    io::write_series(&args.out, &series, &format!("manifest: {manifest_name}"))?;
    let meta = json!({
        "manifest": manifest_name,
        "H": args.hurst,
        "n": series.len(),
        "levels": args.levels,
        "seed": args.seed,
        "sigma": args.sigma,
        "trimmed": args.trim,
        "representation": series.representation(),
        "algorithm": ALGORITHM_ID,
        "rng": crate::RNG_ALGORITHM,
    });
    io::write_json(&meta_path, &meta)?;
    let config = serde_json::to_value(params).map_err(Error::from)?;
    let manifest = run.manifest(None, vec![series.representation()], config, None, vec![], true)?;
    run.finish(&manifest_path, manifest, &[args.out.clone(), meta_path])
}

/// Applies `op` to the level series the pipeline differentiates: log-prices
/// for `log-returns` (mapped back to prices afterwards), the values as read
/// otherwise.
fn on_levels<R>(
    series: &Series,
    pipeline: Pipeline,
    op: impl FnOnce(&Series) -> crate::Result<(Series, R)>,
) -> crate::Result<(Series, R)> {
    match pipeline {
        Pipeline::LogReturns => {
            let (out, extra) = op(&to_log(series)?)?;
            Ok((to_price(&out)?, extra))
        }
        Pipeline::RawDiff | Pipeline::AsProfile => op(series),
    }
}

fn cmd_shuffle(run: &Run, args: &ShuffleArgs) -> Result<(), Failure> {
    let pipeline = args.series.pipeline.unwrap_or_default();
    let series = read_input(&args.input, pipeline)?;
    let (shuffled, ()) = on_levels(&series, pipeline, |x| Ok((shuffle_returns(x, args.seed)?, ())))?;
    ensure_parent(&args.out)?;
    let manifest_path = sidecar(&args.out, "manifest.json");
    io::write_series(
        &args.out,
        &shuffled,
        &format!("manifest: {}", file_name(&manifest_path)),
    )?;
    let config = json!({ "pipeline": pipeline, "seed": args.seed });
    let manifest = run.manifest(Some(&args.input), pipeline.chain(), config, None, vec![], true)?;
    run.finish(&manifest_path, manifest, std::slice::from_ref(&args.out))
}

fn cmd_surgery(run: &Run, args: &SurgeryArgs) -> Result<(), Failure> {
    let pipeline = args.series.pipeline.unwrap_or_default();
    let entries = io::read_excision_entries(&args.spec).map_err(Failure::usage)?;
    let series = read_input(&args.input, pipeline)?;
    let spec = io::resolve_excision(&entries, &series)?;
    let (out, removed) = on_levels(&series, pipeline, |x| {
        let e = excise_detailed(x, &spec)?;
        Ok((e.series, e.removed))
    })?;
    ensure_parent(&args.out)?;
    let manifest_path = sidecar(&args.out, "manifest.json");
    let provenance_path = sidecar(&args.out, "provenance.json");
    let manifest_name = file_name(&manifest_path);
    io::write_series(&args.out, &out, &format!("manifest: {manifest_name}"))?;
    let provenance = json!({
        "manifest": manifest_name,
        "input": args.input.display().to_string(),
        "input_sha256": io::fingerprint_file(&args.input)?,
        "spec": args.spec.display().to_string(),
        "spec_sha256": io::fingerprint_file(&args.spec)?,
        "pipeline": pipeline,
        "intervals": spec.intervals(),
        "removed_returns": removed,
        "input_len": series.len(),
        "output_len": out.len(),
    });
    io::write_json(&provenance_path, &provenance)?;
    let config = json!({ "pipeline": pipeline, "intervals": spec.intervals() });
    let manifest = run.manifest(Some(&args.input), pipeline.chain(), config, None, vec![], false)?;
    run.finish(&manifest_path, manifest, &[args.out.clone(), provenance_path])
}

fn cmd_calibrate(run: &Run, args: &CalibrateArgs) -> Result<(), Failure> {
    let config = EffectiveConfig::resolve(&args.mfdfa, None, None)?;
    let report = match &args.cache_dir {
        Some(dir) => cached_calibration(
            dir,
            &args.lengths,
            &args.hursts,
            args.ensemble,
            args.base_seed,
            &config.mfdfa,
            &config.policy,
        )?,
        None => run_calibration(
            &args.lengths,
            &args.hursts,
            args.ensemble,
            args.base_seed,
            &config.mfdfa,
            &config.policy,
        )?,
    };
    ensure_parent(&args.out)?;
    let manifest_path = sidecar(&args.out, "manifest.json");
    io::write_json(&args.out, &with_manifest(&file_name(&manifest_path), &report)?)?;
    let echo = json!({
        "mfdfa": config.mfdfa,
        "policy": config.policy,
        "lengths": args.lengths,
        "hursts": args.hursts,
        "ensemble": args.ensemble,
        "base_seed": args.base_seed,
    });
    let manifest = run.manifest(
        None,
        vec![Representation::Profile],
        echo,
        Some("auto".into()),
        vec![],
        true,
    )?;
    run.finish(&manifest_path, manifest, std::slice::from_ref(&args.out))
}

fn cmd_suggest_ranges(run: &Run, args: &SuggestRangesArgs) -> Result<(), Failure> {
    let config = EffectiveConfig::resolve(&args.mfdfa, Some(&args.series), None)?;
    let series = read_input(&args.input, config.pipeline)?;
    let surface = fluctuation_surface(&config.pipeline.profile(&series)?, &config.mfdfa)?;
    let mut ranges = Vec::with_capacity(surface.q_grid.len());
    let mut first_error = None;
    for &q in &surface.q_grid {
        match auto_range(&surface, q, &config.policy) {
            Ok(r) => ranges.push(r),
            Err(e) => {
                log::warn!("no automatic range for q = {q}: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    if ranges.is_empty() {
        return Err(first_error
            .map(Failure::from)
            .unwrap_or_else(|| Failure::Usage("empty q grid".into())));
    }
    ensure_parent(&args.out)?;
    let manifest_path = sidecar(&args.out, "manifest.json");
    io::write_ranges(&args.out, &ranges, Some(&file_name(&manifest_path)))?;
    let manifest = run.manifest(
        Some(&args.input),
        config.pipeline.chain(),
        config_value(&config),
        Some("auto".into()),
        ranges,
        false,
    )?;
    run.finish(&manifest_path, manifest, std::slice::from_ref(&args.out))
}

fn cmd_plot_data(run: &Run, args: &PlotDataArgs) -> Result<(), Failure> {
    let config = EffectiveConfig::resolve(&args.mfdfa, Some(&args.series), Some(&args.ranges))?;
    let selection = config.selection()?;
    let series = read_input(&args.input, config.pipeline)?;
    let analysis = analyze(&series, config.pipeline, &config.mfdfa, &selection)?;
    ensure_dir(&args.out)?;
    let tag = "manifest: manifest.json";

    let hurst_rows: Vec<Vec<f64>> = analysis
        .hurst
        .records
        .iter()
        .map(|r| vec![r.q, r.h, r.stderr])
        .collect();
    let tau_rows: Vec<Vec<f64>> = tau_of_q(&analysis.hurst)
        .into_iter()
        .map(|(q, t)| vec![q, t])
        .collect();
    let spectrum_rows: Vec<Vec<f64>> = analysis
        .spectrum
        .points
        .iter()
        .map(|p| vec![p.alpha, p.f])
        .collect();
    let surface = &analysis.surface;
    let fluct_rows: Vec<Vec<f64>> = surface
        .window_sizes
        .iter()
        .enumerate()
        .flat_map(|(w, &s)| {
            surface
                .q_grid
                .iter()
                .enumerate()
                .map(move |(j, &q)| vec![s as f64, q, surface.values[w][j]])
        })
        .collect();

    let files = [
        ("hurst.dat", "q h(q) stderr", hurst_rows),
        ("tau.dat", "q s(q)", tau_rows),
        ("spectrum.dat", "alpha f(alpha)", spectrum_rows),
        ("fluctuation.dat", "s q F(s,q)", fluct_rows),
    ];
    let mut outputs = Vec::with_capacity(files.len());
    for (name, header, rows) in &files {
        let path = args.out.join(name);
        io::write_columns(&path, &format!("{header} | {tag}"), rows)?;
        outputs.push(path);
    }
    let ranges = analysis.hurst.records.iter().map(|r| r.range).collect();
    let manifest = run.manifest(
        Some(&args.input),
        config.pipeline.chain(),
        config_value(&config),
        Some(config.range_mode.clone()),
        ranges,
        false,
    )?;
    run.finish(&args.out.join("manifest.json"), manifest, &outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mfscale").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        fs::write(&cfg, r#"{"order": 3, "q_min": -2, "s_min": 16, "pipeline": "raw-diff"}"#).unwrap();
        let cli = parse(&[
            "analyze", "x.csv", "--out", "o", "--config", cfg.to_str().unwrap(), "--order", "1",
            "--q-max", "3",
        ]);
        let Command::Analyze(a) = cli.command else { panic!() };
        let eff = EffectiveConfig::resolve(&a.mfdfa, Some(&a.series), Some(&a.ranges)).unwrap();
        assert_eq!(eff.mfdfa.order, 1);
        assert_eq!(eff.mfdfa.q_grid.first(), Some(&-2.0));
        assert_eq!(eff.mfdfa.q_grid.last(), Some(&3.0));
        assert_eq!(
            eff.mfdfa.windows,
            WindowSizes::LogSpaced { min: 16, max: None, count: 40 }
        );
        assert_eq!(eff.pipeline, Pipeline::RawDiff);
        assert_eq!(eff.range_mode, "auto");

        let plain = EffectiveConfig::resolve(&MfdfaFlags::default(), None, None).unwrap();
        assert_eq!(plain.mfdfa, MfdfaConfig::default());
        assert_eq!(plain.pipeline, Pipeline::LogReturns);

        fs::write(&cfg, r#"{"ordr": 3}"#).unwrap();
        let flags = MfdfaFlags { config: Some(cfg), ..MfdfaFlags::default() };
        assert!(matches!(EffectiveConfig::resolve(&flags, None, None), Err(Failure::Usage(_))));
    }

    #[test]
    fn negative_q_bounds_parse() {
        let cli = parse(&["plot-data", "x.csv", "--out", "o", "--q-min", "-3", "--full-range"]);
        let Command::PlotData(a) = cli.command else { panic!() };
        assert_eq!(a.mfdfa.q_min, Some(-3.0));
        assert!(a.ranges.full_range);
        assert!(Cli::try_parse_from(["mfscale", "analyze", "x.csv"]).is_err());
        assert!(Cli::try_parse_from(["mfscale", "analyze", "x", "--out", "o", "--pipeline", "bogus"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::AllBoxesDegenerate { s: 10 }).exit_code(), 2);
        assert_eq!(Failure::from(Error::io("x", std::io::ErrorKind::NotFound.into())).exit_code(), 1);
        assert_eq!(run(["mfscale", "frobnicate"]), 1);
        assert_eq!(run(["mfscale", "--help"]), 0);
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("d/x.csv"), "manifest.json"), PathBuf::from("d/x.manifest.json"));
        assert_eq!(sidecar(Path::new("x"), "meta.json"), PathBuf::from("x.meta.json"));
    }
}
