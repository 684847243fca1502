//! The `fallstream` command line: prepare features, train, evaluate,
//! replay trials and serve live sensors.
//!
//! Each subcommand is a plain function so it can be driven from tests.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use fallstream::features::{
    apply_scaler, extract_features, fit_scaler, read_feature_csv, write_feature_csv, FeatureSchema,
    FeatureVector,
};
use fallstream::ingest::{
    load_trial, BinaryClass, ColumnMapping, LabelSource, SocketSource, Speed,
};
use fallstream::model::{
    digest_hex, evaluate, init_model, load_artifact, save_artifact, stratified_split, train,
    History, Labeled, Metrics, ModelArtifact, TrainConfig, TrainingMetadata, DEFAULT_DIMS,
};
use fallstream::stream::{
    run_pipeline, Classifier, OverflowPolicy, PipelineConfig, PipelineStats, RunningPipeline,
    SinkSpec, Source, SourceConfig, StageOptions, DEFAULT_QUEUE_CAPACITY,
};
use fallstream::windowing::{assemble_windows, WindowConfig};

/// Interval between stats lines while serving.
pub const STATS_INTERVAL: Duration = Duration::from_secs(10);

#[derive(Debug, Parser)]
#[command(
    name = "fallstream",
    version,
    about = "Streaming fall detection from accelerometer data"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Explicit flags override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// TOML column mapping for trial files
    #[arg(long, global = true)]
    pub mapping: Option<PathBuf>,
    #[arg(long, global = true)]
    pub window_size: Option<usize>,
    /// Defaults to the window size (tumbling windows)
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Base seed: init = seed, shuffle = seed + 1, split = seed + 2
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replay speed factor, or `max`
    #[arg(long, global = true)]
    pub speed: Option<Speed>,
    /// Sample rate of replayed trials
    #[arg(long, global = true)]
    pub rate_hz: Option<f64>,
    /// Listen address for `serve`
    #[arg(long, global = true)]
    pub listen: Option<String>,
    /// Model artifact to write (train) or read (evaluate, replay, serve)
    #[arg(long, global = true)]
    pub artifact: Option<PathBuf>,
    /// Output file
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Detection sink: stdout, file:<path> or webhook:<url> (repeatable)
    #[arg(long = "sink", global = true)]
    pub sinks: Vec<SinkSpec>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window a dataset directory and write the feature CSV
    Prepare { dataset: PathBuf },
    /// Train a model on a feature CSV and write the artifact
    Train { features: PathBuf },
    /// Score an artifact against a feature CSV
    Evaluate {
        features: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::All)]
        split: Split,
    },
    /// Stream one trial file through the pipeline
    Replay { trial: PathBuf },
    /// Accept live sensor connections until interrupted
    Serve,
}

/// Which rows of a feature CSV to evaluate. `train` and `test` re-derive
/// the artifact's own split and require the same CSV it was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    All,
    Train,
    Test,
}

/// Contents of a `--config` file. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mapping: Option<PathBuf>,
    pub artifact: Option<PathBuf>,
    pub window: Option<WindowConfig>,
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub stream: StreamConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    pub rate_hz: Option<f64>,
    pub speed: Option<Speed>,
    pub listen: Option<String>,
    #[serde(default)]
    pub sinks: Vec<SinkSpec>,
    pub queue_capacity: Option<usize>,
    pub overflow: Option<OverflowPolicy>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.mapping, &mut cfg.artifact].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        for sink in &mut cfg.stream.sinks {
            if let SinkSpec::File(p) = sink {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub mapping: Option<PathBuf>,
    pub window: WindowConfig,
    pub train: TrainConfig,
    pub rate_hz: f64,
    pub speed: Speed,
    pub listen: Option<String>,
    pub artifact: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub sinks: Vec<SinkSpec>,
    pub queue_capacity: usize,
    pub overflow: Option<OverflowPolicy>,
}

impl Settings {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut window = file.window.unwrap_or_default();
        if let Some(size) = args.window_size {
            window.size = size;
            window.stride = size;
        }
        if let Some(stride) = args.stride {
            window.stride = stride;
        }
        window.validate()?;

        let mut train = file.train.unwrap_or_default();
        if let Some(epochs) = args.epochs {
            train.epochs = epochs;
        }
        if let Some(seed) = args.seed {
            train.init_seed = seed;
            train.shuffle_seed = seed.wrapping_add(1);
            train.split_seed = seed.wrapping_add(2);
        }
        train.validate()?;

        let stream = file.stream;
        Ok(Self {
            mapping: args.mapping.clone().or(file.mapping),
            window,
            train,
            rate_hz: args.rate_hz.or(stream.rate_hz).unwrap_or(20.0),
            speed: args.speed.or(stream.speed).unwrap_or_default(),
            listen: args.listen.clone().or(stream.listen),
            artifact: args.artifact.clone().or(file.artifact),
            out: args.out.clone(),
            sinks: if args.sinks.is_empty() {
                stream.sinks
            } else {
                args.sinks.clone()
            },
            queue_capacity: stream.queue_capacity.unwrap_or(DEFAULT_QUEUE_CAPACITY),
            overflow: stream.overflow,
        })
    }

    fn column_mapping(&self, labeled_default: bool) -> Result<ColumnMapping> {
        match &self.mapping {
            Some(p) => ColumnMapping::load(p)
                .with_context(|| format!("loading column mapping {}", p.display())),
            None => Ok(ColumnMapping::positional(labeled_default)),
        }
    }

    fn require_artifact(&self) -> Result<&Path> {
        self.artifact
            .as_deref()
            .context("no model artifact given (use --artifact or the config file)")
    }

    fn sinks_or_stdout(&self) -> Vec<SinkSpec> {
        if self.sinks.is_empty() {
            vec![SinkSpec::Stdout]
        } else {
            self.sinks.clone()
        }
    }
}

/// Counts gathered while preparing a dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrepareReport {
    pub trials: usize,
    pub rows: usize,
    pub malformed: usize,
    pub samples: u64,
    pub windows: usize,
    pub partial_drops: u64,
    pub timestamp_regressions: u64,
    pub gaps: u64,
    pub labels: BTreeMap<String, usize>,
    pub classes: BTreeMap<String, usize>,
}

impl fmt::Display for PrepareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "trials={} rows={} malformed={} samples={} windows={} partial_drops={} \
             ts_regressions={} gaps={}",
            self.trials,
            self.rows,
            self.malformed,
            self.samples,
            self.windows,
            self.partial_drops,
            self.timestamp_regressions,
            self.gaps
        )?;
        for (class, n) in &self.classes {
            writeln!(f, "class {class}: {n}")?;
        }
        for (code, n) in &self.labels {
            writeln!(f, "label {code}: {n}")?;
        }
        Ok(())
    }
}

/// Trial files under `dir`, recursively, in sorted path order. Hidden
/// entries and `.toml` files are skipped.
pub fn trial_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries =
            fs::read_dir(&d).with_context(|| format!("reading directory {}", d.display()))?;
        for entry in entries {
            let path = entry?.path();
            let hidden = path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'));
            if hidden {
                continue;
            }
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_none_or(|e| e != "toml") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Windows every trial under `dataset` and writes one feature row per window
/// to `out`. Nothing is written unless the whole dataset succeeds.
pub fn cmd_prepare(
    dataset: &Path,
    mapping: &ColumnMapping,
    window: WindowConfig,
    out: &Path,
) -> Result<PrepareReport> {
    let files = trial_files(dataset)?;
    ensure!(!files.is_empty(), "no trial files in {}", dataset.display());
    let schema = FeatureSchema::v1();
    let labeled = mapping.label != LabelSource::None;
    let mut report = PrepareReport::default();
    let mut rows: Vec<FeatureVector> = Vec::new();
    for path in &files {
        let trial =
            load_trial(path, mapping).with_context(|| format!("parsing {}", path.display()))?;
        report.trials += 1;
        report.rows += trial.rows;
        report.malformed += trial.malformed;
        let (windows, stats) = assemble_windows(trial.samples, window)?;
        report.samples += stats.samples;
        report.partial_drops += stats.partial_drops;
        report.timestamp_regressions += stats.timestamp_regressions;
        report.gaps += stats.gaps;
        for w in &windows {
            let fv = extract_features(w, &schema)?;
            if let Some(label) = &fv.label {
                *report.labels.entry(label.code.clone()).or_default() += 1;
                *report.classes.entry(label.class.to_string()).or_default() += 1;
            }
            rows.push(fv);
        }
    }
    report.windows = rows.len();
    ensure!(
        !rows.is_empty(),
        "no complete windows of {} samples in {}",
        window.size,
        dataset.display()
    );
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_feature_csv(BufWriter::new(file), &schema, &rows, labeled)?;
    Ok(report)
}

fn read_labeled_csv(path: &Path) -> Result<(Vec<FeatureVector>, Vec<BinaryClass>, String)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = read_feature_csv(BufReader::new(bytes.as_slice()), &FeatureSchema::v1())
        .with_context(|| format!("parsing {}", path.display()))?;
    ensure!(!rows.is_empty(), "{} has no feature rows", path.display());
    let classes = rows
        .iter()
        .map(|r| r.label.as_ref().map(|l| l.class))
        .collect::<Option<Vec<_>>>()
        .with_context(|| format!("{} has no label columns", path.display()))?;
    Ok((rows, classes, digest_hex(&bytes)))
}

fn labeled(
    rows: &[FeatureVector],
    idx: &[usize],
    artifact: &ModelArtifact,
) -> Result<Vec<Labeled>> {
    idx.iter()
        .map(|&i| {
            let fv = apply_scaler(&rows[i], &artifact.scaler)?;
            let class = fv.label.as_ref().map(|l| l.class).expect("labeled rows");
            Ok(Labeled::new(fv.values, class))
        })
        .collect()
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub artifact: ModelArtifact,
    pub history: History,
    pub digest: String,
}

/// Trains on the training split of a labeled feature CSV and writes the
/// artifact. The scaler sees only the training rows.
pub fn cmd_train(features: &Path, config: &TrainConfig, out: &Path) -> Result<TrainReport> {
    config.validate()?;
    let (rows, classes, dataset_digest) = read_labeled_csv(features)?;
    let (train_idx, test_idx) =
        stratified_split(&classes, config.train_fraction, config.split_seed);
    ensure!(
        !train_idx.is_empty() && !test_idx.is_empty(),
        "{} rows are too few to split into training and test sets",
        rows.len()
    );
    let train_rows: Vec<FeatureVector> = train_idx.iter().map(|&i| rows[i].clone()).collect();
    let scaler = fit_scaler(&train_rows)?;
    let model = init_model(&DEFAULT_DIMS, config.init_seed)?;
    let meta = TrainingMetadata::from_config(config, dataset_digest);
    let mut artifact = ModelArtifact::new(model, scaler, meta)?;

    let train_set = labeled(&rows, &train_idx, &artifact)?;
    let test_set = labeled(&rows, &test_idx, &artifact)?;
    let (trained, history) = train(&artifact.model, &train_set, config)?;
    artifact.model = trained;
    let meta = &mut artifact.training;
    meta.train_samples = train_set.len();
    meta.test_samples = test_set.len();
    meta.train_accuracy = evaluate(&artifact.model, &train_set)?.accuracy;
    meta.test_accuracy = evaluate(&artifact.model, &test_set)?.accuracy;
    meta.final_loss = history.final_loss();

    save_artifact(&artifact, out).with_context(|| format!("writing {}", out.display()))?;
    let digest = artifact.digest()?;
    Ok(TrainReport {
        artifact,
        history,
        digest,
    })
}

/// Scores `artifact` on the selected rows of a labeled feature CSV.
pub fn cmd_evaluate(features: &Path, artifact: &Path, split: Split) -> Result<Metrics> {
    let artifact = load_artifact(artifact)
        .with_context(|| format!("loading artifact {}", artifact.display()))?;
    let (rows, classes, digest) = read_labeled_csv(features)?;
    let idx: Vec<usize> = match split {
        Split::All => (0..rows.len()).collect(),
        Split::Train | Split::Test => {
            let meta = &artifact.training;
            if digest != meta.dataset_digest {
                bail!(
                    "{} is not the feature file this artifact was trained on; use --split all",
                    features.display()
                );
            }
            let (train_idx, test_idx) =
                stratified_split(&classes, meta.train_fraction, meta.split_seed);
            if split == Split::Train {
                train_idx
            } else {
                test_idx
            }
        }
    };
    Ok(evaluate(
        &artifact.model,
        &labeled(&rows, &idx, &artifact)?,
    )?)
}

/// Inputs for [`cmd_replay`].
#[derive(Debug, Clone)]
pub struct ReplayArgs {
    pub trial: PathBuf,
    pub mapping: Option<PathBuf>,
    pub artifact: PathBuf,
    pub rate_hz: f64,
    pub speed: Speed,
    pub sinks: Vec<SinkSpec>,
    pub window: WindowConfig,
    pub queue_capacity: usize,
    pub overflow: Option<OverflowPolicy>,
}

impl ReplayArgs {
    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            source: SourceConfig::Replay {
                path: self.trial.clone(),
                mapping: self.mapping.clone(),
                rate_hz: self.rate_hz,
                speed: self.speed,
                device_id: None,
            },
            window: self.window,
            artifact: self.artifact.clone(),
            sinks: self.sinks.clone(),
            queue_capacity: self.queue_capacity,
            overflow: self.overflow,
        }
    }
}

/// Streams one trial file through the pipeline until it is exhausted or
/// `shutdown` is set.
pub fn cmd_replay(args: &ReplayArgs, shutdown: Arc<AtomicBool>) -> Result<PipelineStats> {
    ensure!(
        args.artifact.is_file(),
        "artifact {} does not exist",
        args.artifact.display()
    );
    Ok(run_pipeline(&args.pipeline_config(), shutdown)?)
}

/// Inputs for [`cmd_serve`].
#[derive(Debug, Clone)]
pub struct ServeArgs {
    pub listen: String,
    pub artifact: PathBuf,
    pub sinks: Vec<SinkSpec>,
    pub window: WindowConfig,
    pub queue_capacity: usize,
    pub overflow: Option<OverflowPolicy>,
}

/// A started `serve`: the bound address plus the running pipeline.
pub struct Server {
    pub addr: SocketAddr,
    pub pipeline: RunningPipeline,
}

/// Binds the listener and starts the pipeline without blocking.
pub fn start_server(args: &ServeArgs, shutdown: Arc<AtomicBool>) -> Result<Server> {
    let artifact = load_artifact(&args.artifact)
        .with_context(|| format!("loading artifact {}", args.artifact.display()))?;
    let classifier = Classifier::new(Arc::new(artifact))?;
    let socket = SocketSource::bind(args.listen.as_str())
        .with_context(|| format!("binding {}", args.listen))?;
    let addr = socket.local_addr()?;
    let source = Source::Socket(socket);
    let sinks = args
        .sinks
        .iter()
        .map(SinkSpec::build)
        .collect::<fallstream::Result<Vec<_>>>()?;
    let opts = StageOptions {
        window: args.window,
        queue_capacity: args.queue_capacity,
        overflow: args.overflow.unwrap_or(source.default_policy()),
    };
    let pipeline = RunningPipeline::start(source, classifier, sinks, opts, shutdown)?;
    Ok(Server { addr, pipeline })
}

/// Serves until `shutdown` is set, calling `on_stats` every `interval` and
/// once more with the final counters.
pub fn cmd_serve(
    args: &ServeArgs,
    shutdown: Arc<AtomicBool>,
    interval: Duration,
    mut on_stats: impl FnMut(&PipelineStats),
) -> Result<PipelineStats> {
    let server = start_server(args, Arc::clone(&shutdown))?;
    let mut next = Instant::now() + interval;
    while !shutdown.load(Ordering::Relaxed) && !server.pipeline.is_finished() {
        std::thread::sleep(Duration::from_millis(50));
        if Instant::now() >= next {
            on_stats(&server.pipeline.stats());
            next += interval;
        }
    }
    server.pipeline.shutdown();
    let stats = server.pipeline.join()?;
    on_stats(&stats);
    Ok(stats)
}

/// Runs a parsed command line. Data goes to stdout or files; reports and
/// diagnostics go to stderr.
pub fn run(cli: Cli, shutdown: Arc<AtomicBool>) -> Result<()> {
    let settings = Settings::resolve(&cli.global)?;
    match cli.command {
        Command::Prepare { dataset } => {
            let out = settings
                .out
                .as_deref()
                .context("prepare needs --out <csv>")?;
            let mapping = settings.column_mapping(true)?;
            let report = cmd_prepare(&dataset, &mapping, settings.window, out)?;
            eprint!("{report}");
        }
        Command::Train { features } => {
            let out = settings
                .out
                .as_deref()
                .or(settings.artifact.as_deref())
                .context("train needs --out <artifact>")?;
            let report = cmd_train(&features, &settings.train, out)?;
            for e in report.history.epochs.iter().filter(|e| e.epoch % 10 == 0) {
                eprintln!(
                    "epoch {:>4} loss {:.6} accuracy {:.4}",
                    e.epoch, e.loss, e.accuracy
                );
            }
            let meta = &report.artifact.training;
            println!(
                "train accuracy: {:.4} ({} windows)",
                meta.train_accuracy, meta.train_samples
            );
            println!(
                "test accuracy: {:.4} ({} windows)",
                meta.test_accuracy, meta.test_samples
            );
            println!("artifact: {} sha256={}", out.display(), report.digest);
        }
        Command::Evaluate { features, split } => {
            let metrics = cmd_evaluate(&features, settings.require_artifact()?, split)?;
            print!("{metrics}");
            match &settings.out {
                Some(p) => fs::write(p, metrics.to_json() + "\n")
                    .with_context(|| format!("writing {}", p.display()))?,
                None => println!("\n{}", metrics.to_json()),
            }
        }
        Command::Replay { trial } => {
            let args = ReplayArgs {
                trial,
                mapping: settings.mapping.clone(),
                artifact: settings.require_artifact()?.to_path_buf(),
                rate_hz: settings.rate_hz,
                speed: settings.speed,
                sinks: settings.sinks_or_stdout(),
                window: settings.window,
                queue_capacity: settings.queue_capacity,
                overflow: settings.overflow,
            };
            let stats = cmd_replay(&args, shutdown)?;
            eprintln!("{stats}");
        }
        Command::Serve => {
            let args = ServeArgs {
                listen: settings
                    .listen
                    .clone()
                    .context("serve needs --listen <addr:port>")?,
                artifact: settings.require_artifact()?.to_path_buf(),
                sinks: settings.sinks_or_stdout(),
                window: settings.window,
                queue_capacity: settings.queue_capacity,
                overflow: settings.overflow,
            };
            cmd_serve(&args, shutdown, STATS_INTERVAL, |s| eprintln!("{s}"))?;
        }
    }
    Ok(())
}
