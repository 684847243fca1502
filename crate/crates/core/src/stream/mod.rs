//! The streaming pipeline: sources, windowing and classification, sinks.

mod detection;
mod pipeline;
mod sink;

pub use detection::{emit_jsonl, format_probability, Detection};
pub use pipeline::{
    build_source, classify_windows, run_pipeline, start_pipeline, Classifier, OverflowPolicy,
    PipelineConfig, PipelineStats, RunningPipeline, Source, SourceConfig, StageOptions,
    DEFAULT_QUEUE_CAPACITY,
};
pub use sink::{
    emit_webhook, file_sink, stdout_sink, JsonlSink, Sink, SinkSpec, WebhookSink, WEBHOOK_TIMEOUT,
};
