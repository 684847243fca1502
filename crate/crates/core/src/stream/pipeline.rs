use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use crossbeam_channel::{bounded, Receiver, Sender, TrySendError};
use serde::{Deserialize, Serialize};

use super::detection::Detection;
use super::sink::{Sink, SinkSpec};
use crate::error::{Error, Result};
use crate::features::{feature_values, FeatureSchema};
use crate::ingest::{
    load_trial, BinaryClass, ColumnMapping, ReplaySource, Sample, SampleOutlet, SocketSource, Speed,
};
use crate::model::{forward, load_artifact, predict_class, ModelArtifact};
use crate::windowing::{Window, WindowConfig, Windower};

pub const DEFAULT_QUEUE_CAPACITY: usize = 1024;

/// What happens when the sample queue is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    /// The producer waits; nothing is lost.
    Block,
    /// The oldest queued sample is discarded and counted.
    DropOldest,
}

/// Running totals of a pipeline. Every counter only grows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineStats {
    /// Records received from the source, including malformed ones.
    pub samples_in: u64,
    pub malformed: u64,
    pub windows_emitted: u64,
    pub partial_window_drops: u64,
    pub detections: u64,
    pub sink_deliveries: u64,
    pub sink_failures: u64,
    pub overflow_drops: u64,
    pub timestamp_regressions: u64,
    pub gaps: u64,
}

impl std::fmt::Display for PipelineStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "samples_in={} malformed={} windows={} partial_drops={} detections={} \
             delivered={} sink_failures={} overflow_drops={} ts_regressions={} gaps={}",
            self.samples_in,
            self.malformed,
            self.windows_emitted,
            self.partial_window_drops,
            self.detections,
            self.sink_deliveries,
            self.sink_failures,
            self.overflow_drops,
            self.timestamp_regressions,
            self.gaps
        )
    }
}

#[derive(Debug, Default)]
struct Counters {
    samples_in: AtomicU64,
    malformed: AtomicU64,
    windows_emitted: AtomicU64,
    partial_window_drops: AtomicU64,
    detections: AtomicU64,
    sink_deliveries: AtomicU64,
    sink_failures: AtomicU64,
    overflow_drops: AtomicU64,
    timestamp_regressions: AtomicU64,
    gaps: AtomicU64,
}

impl Counters {
    fn snapshot(&self) -> PipelineStats {
        let get = |c: &AtomicU64| c.load(Ordering::Relaxed);
        PipelineStats {
            samples_in: get(&self.samples_in),
            malformed: get(&self.malformed),
            windows_emitted: get(&self.windows_emitted),
            partial_window_drops: get(&self.partial_window_drops),
            detections: get(&self.detections),
            sink_deliveries: get(&self.sink_deliveries),
            sink_failures: get(&self.sink_failures),
            overflow_drops: get(&self.overflow_drops),
            timestamp_regressions: get(&self.timestamp_regressions),
            gaps: get(&self.gaps),
        }
    }

    fn bump(c: &AtomicU64) {
        c.fetch_add(1, Ordering::Relaxed);
    }
}

/// Bounded sample queue feeding the windowing stage.
struct SampleQueue {
    tx: Sender<Sample>,
    // held only to evict under DropOldest
    evict: Receiver<Sample>,
    policy: OverflowPolicy,
    counters: Arc<Counters>,
}

impl SampleOutlet for SampleQueue {
    fn push(&self, sample: Sample) -> bool {
        Counters::bump(&self.counters.samples_in);
        match self.policy {
            OverflowPolicy::Block => self.tx.send(sample).is_ok(),
            OverflowPolicy::DropOldest => {
                let mut sample = sample;
                loop {
                    match self.tx.try_send(sample) {
                        Ok(()) => return true,
                        Err(TrySendError::Disconnected(_)) => return false,
                        Err(TrySendError::Full(s)) => {
                            if self.evict.try_recv().is_ok() {
                                Counters::bump(&self.counters.overflow_drops);
                            }
                            sample = s;
                        }
                    }
                }
            }
        }
    }

    fn malformed(&self) {
        Counters::bump(&self.counters.samples_in);
        Counters::bump(&self.counters.malformed);
    }
}

/// Scales and scores windows with a loaded artifact. Shared read-only.
#[derive(Debug, Clone)]
pub struct Classifier {
    artifact: Arc<ModelArtifact>,
    schema: FeatureSchema,
    digest: String,
}

impl Classifier {
    pub fn new(artifact: Arc<ModelArtifact>) -> Result<Self> {
        let schema = artifact.schema()?;
        let digest = artifact.digest()?;
        Ok(Self {
            artifact,
            schema,
            digest,
        })
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn artifact(&self) -> &ModelArtifact {
        &self.artifact
    }

    /// Fall probability and class of one window: features, then the
    /// artifact's scaler, then the network.
    pub fn classify(&self, window: &Window) -> Result<(f64, BinaryClass)> {
        let raw = feature_values(&window.samples, &self.schema)?;
        let p = forward(&self.artifact.model, &self.artifact.scaler.transform(&raw)?)?;
        Ok((p, predict_class(p)))
    }
}

/// Batch classification of windows, assigning per-device sequence numbers
/// exactly as the streaming path does.
pub fn classify_windows(classifier: &Classifier, windows: &[Window]) -> Result<Vec<Detection>> {
    let mut seqs = HashMap::new();
    windows
        .iter()
        .map(|w| detection_for(classifier, w, &mut seqs))
        .collect()
}

fn detection_for(
    classifier: &Classifier,
    window: &Window,
    seqs: &mut HashMap<String, u64>,
) -> Result<Detection> {
    let (p_fall, class) = classifier.classify(window)?;
    let seq = seqs.entry(window.device_id.clone()).or_insert(0);
    let det = Detection {
        device_id: window.device_id.clone(),
        t_start_ms: window.t_start,
        t_end_ms: window.t_end,
        p_fall,
        class,
        seq: *seq,
        model_digest: classifier.digest.clone(),
    };
    *seq += 1;
    Ok(det)
}

/// A constructed, not yet running, sample source.
pub enum Source {
    Replay(ReplaySource),
    Socket(SocketSource),
}

impl Source {
    pub fn default_policy(&self) -> OverflowPolicy {
        match self {
            Source::Replay(_) => OverflowPolicy::Block,
            Source::Socket(_) => OverflowPolicy::DropOldest,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StageOptions {
    pub window: WindowConfig,
    pub queue_capacity: usize,
    pub overflow: OverflowPolicy,
}

/// Handle to a pipeline whose stages run on their own threads.
pub struct RunningPipeline {
    counters: Arc<Counters>,
    shutdown: Arc<AtomicBool>,
    source: JoinHandle<Result<()>>,
    process: JoinHandle<Result<()>>,
    deliver: JoinHandle<()>,
}

impl RunningPipeline {
    /// Starts source → windowing/classification → sinks.
    ///
    /// Samples pass through a bounded queue governed by `opts.overflow`;
    /// detections pass through a second bounded queue that always blocks,
    /// so per-device order is preserved end to end.
    pub fn start(
        source: Source,
        classifier: Classifier,
        sinks: Vec<Box<dyn Sink>>,
        opts: StageOptions,
        shutdown: Arc<AtomicBool>,
    ) -> Result<Self> {
        opts.window.validate()?;
        if sinks.is_empty() {
            return Err(Error::Config("at least one sink is required".into()));
        }
        if opts.queue_capacity == 0 {
            return Err(Error::Config("queue capacity must be at least 1".into()));
        }
        let counters = Arc::new(Counters::default());
        let (sample_tx, sample_rx) = bounded::<Sample>(opts.queue_capacity);
        let (det_tx, det_rx) = bounded::<Detection>(opts.queue_capacity);

        let queue = Arc::new(SampleQueue {
            tx: sample_tx,
            evict: sample_rx.clone(),
            policy: opts.overflow,
            counters: Arc::clone(&counters),
        });
        let source = {
            let shutdown = Arc::clone(&shutdown);
            thread::Builder::new()
                .name("fallstream-source".into())
                .spawn(move || match source {
                    Source::Replay(replay) => {
                        replay.run(queue.as_ref(), &shutdown);
                        Ok(())
                    }
                    Source::Socket(socket) => socket.run(queue, shutdown),
                })?
        };
        let process = {
            let counters = Arc::clone(&counters);
            let window = opts.window;
            thread::Builder::new()
                .name("fallstream-process".into())
                .spawn(move || process_stage(sample_rx, det_tx, classifier, window, &counters))?
        };
        let deliver = {
            let counters = Arc::clone(&counters);
            thread::Builder::new()
                .name("fallstream-sinks".into())
                .spawn(move || deliver_stage(det_rx, sinks, &counters))?
        };
        Ok(Self {
            counters,
            shutdown,
            source,
            process,
            deliver,
        })
    }

    pub fn stats(&self) -> PipelineStats {
        self.counters.snapshot()
    }

    /// Asks the source to stop; in-flight samples still drain.
    pub fn shutdown(&self) {
        self.shutdown.store(true, Ordering::Relaxed);
    }

    pub fn is_finished(&self) -> bool {
        self.deliver.is_finished()
    }

    /// Waits for every stage to drain and returns the final counters.
    pub fn join(self) -> Result<PipelineStats> {
        let source = self.source.join().map_err(|_| panic_error("source"))?;
        let process = self.process.join().map_err(|_| panic_error("processing"))?;
        self.deliver.join().map_err(|_| panic_error("sink"))?;
        source?;
        process?;
        Ok(self.counters.snapshot())
    }
}

fn panic_error(stage: &str) -> Error {
    Error::Config(format!("{stage} stage panicked"))
}

fn process_stage(
    samples: Receiver<Sample>,
    detections: Sender<Detection>,
    classifier: Classifier,
    window: WindowConfig,
    counters: &Counters,
) -> Result<()> {
    let mut windower = Windower::new(window);
    let mut seqs = HashMap::new();
    let mut outcome = Ok(());
    for sample in samples.iter() {
        // after a failure keep draining so a blocked producer can finish
        if outcome.is_err() {
            continue;
        }
        let Some(w) = windower.push(sample) else {
            continue;
        };
        Counters::bump(&counters.windows_emitted);
        match detection_for(&classifier, &w, &mut seqs) {
            Ok(det) => {
                Counters::bump(&counters.detections);
                if detections.send(det).is_err() {
                    outcome = Err(Error::Sink("detection consumer stopped".into()));
                }
            }
            Err(e) => outcome = Err(e),
        }
    }
    let stats = windower.finish();
    counters
        .partial_window_drops
        .store(stats.partial_drops, Ordering::Relaxed);
    counters
        .timestamp_regressions
        .store(stats.timestamp_regressions, Ordering::Relaxed);
    counters.gaps.store(stats.gaps, Ordering::Relaxed);
    outcome
}

fn deliver_stage(
    detections: Receiver<Detection>,
    mut sinks: Vec<Box<dyn Sink>>,
    counters: &Counters,
) {
    for det in detections.iter() {
        for sink in sinks.iter_mut() {
            let ok = sink.deliver(&det).is_ok() || sink.deliver(&det).is_ok();
            if ok {
                Counters::bump(&counters.sink_deliveries);
            } else {
                Counters::bump(&counters.sink_failures);
            }
        }
    }
}

/// Where samples come from, as written in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Replay {
        path: PathBuf,
        /// Column mapping file; positional `t,ax,ay,az[,label]` when absent.
        #[serde(default)]
        mapping: Option<PathBuf>,
        #[serde(default = "default_rate")]
        rate_hz: f64,
        #[serde(default)]
        speed: Speed,
        /// Overrides the device id (the file stem by default).
        #[serde(default)]
        device_id: Option<String>,
    },
    Socket {
        listen: String,
    },
}

fn default_rate() -> f64 {
    20.0
}

fn default_capacity() -> usize {
    DEFAULT_QUEUE_CAPACITY
}

/// A complete streaming run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub source: SourceConfig,
    #[serde(default)]
    pub window: WindowConfig,
    pub artifact: PathBuf,
    pub sinks: Vec<SinkSpec>,
    #[serde(default = "default_capacity")]
    pub queue_capacity: usize,
    /// Defaults to `block` for replay and `drop_oldest` for sockets.
    #[serde(default)]
    pub overflow: Option<OverflowPolicy>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))
    }
}

/// Builds the configured source. Socket sources bind here.
pub fn build_source(config: &SourceConfig) -> Result<Source> {
    match config {
        SourceConfig::Replay {
            path,
            mapping,
            rate_hz,
            speed,
            device_id,
        } => {
            let mapping = match mapping {
                Some(p) => ColumnMapping::load(p)?,
                None => ColumnMapping::positional(false),
            };
            let mut trial = load_trial(path, &mapping)?;
            if let Some(id) = device_id {
                for s in &mut trial.samples {
                    s.device_id.clone_from(id);
                }
            }
            Ok(Source::Replay(ReplaySource::new(
                trial.samples,
                *rate_hz,
                *speed,
            )?))
        }
        SourceConfig::Socket { listen } => Ok(Source::Socket(SocketSource::bind(listen.as_str())?)),
    }
}

/// Starts a pipeline from configuration: loads the artifact, builds the
/// source and sinks, and wires the stages.
pub fn start_pipeline(
    config: &PipelineConfig,
    shutdown: Arc<AtomicBool>,
) -> Result<RunningPipeline> {
    if config.sinks.is_empty() {
        return Err(Error::Config("at least one sink is required".into()));
    }
    let artifact = Arc::new(load_artifact(&config.artifact)?);
    let classifier = Classifier::new(artifact)?;
    let source = build_source(&config.source)?;
    let sinks = config
        .sinks
        .iter()
        .map(SinkSpec::build)
        .collect::<Result<Vec<_>>>()?;
    let opts = StageOptions {
        window: config.window,
        queue_capacity: config.queue_capacity,
        overflow: config.overflow.unwrap_or(source.default_policy()),
    };
    RunningPipeline::start(source, classifier, sinks, opts, shutdown)
}

/// Runs until the source ends (or `shutdown` is set) and every in-flight
/// window has been delivered.
pub fn run_pipeline(config: &PipelineConfig, shutdown: Arc<AtomicBool>) -> Result<PipelineStats> {
    start_pipeline(config, shutdown)?.join()
}
