use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::detection::{emit_jsonl, Detection};
use crate::error::{Error, Result};

/// Default webhook deadline per attempt.
pub const WEBHOOK_TIMEOUT: Duration = Duration::from_secs(2);

/// A detection consumer. Failed deliveries are retried once by the
/// pipeline, then counted and dropped for that sink only.
pub trait Sink: Send {
    fn name(&self) -> String;
    fn deliver(&mut self, detection: &Detection) -> Result<()>;
}

/// Newline-delimited JSON to any writer, flushed per line.
pub struct JsonlSink<W: Write + Send> {
    name: String,
    out: W,
}

impl<W: Write + Send> JsonlSink<W> {
    pub fn new(name: impl Into<String>, out: W) -> Self {
        Self {
            name: name.into(),
            out,
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write + Send> Sink for JsonlSink<W> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn deliver(&mut self, detection: &Detection) -> Result<()> {
        emit_jsonl(detection, &mut self.out).map_err(|e| Error::Sink(format!("{}: {e}", self.name)))
    }
}

pub fn stdout_sink() -> JsonlSink<std::io::Stdout> {
    JsonlSink::new("stdout", std::io::stdout())
}

pub fn file_sink(path: &std::path::Path) -> Result<JsonlSink<BufWriter<File>>> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    Ok(JsonlSink::new(
        format!("file:{}", path.display()),
        BufWriter::new(file),
    ))
}

/// POSTs each detection line to a URL. 2xx is success; anything else,
/// including a timeout, is a failed attempt.
pub struct WebhookSink {
    url: reqwest::Url,
    client: reqwest::blocking::Client,
}

impl WebhookSink {
    pub fn new(url: &str, timeout: Duration) -> Result<Self> {
        let url = reqwest::Url::parse(url)
            .map_err(|e| Error::Config(format!("webhook url `{url}`: {e}")))?;
        // built without TLS
        if url.scheme() != "http" {
            return Err(Error::Config(format!("webhook url must be http: {url}")));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Self { url, client })
    }
}

/// Sends one detection to a webhook.
pub fn emit_webhook(detection: &Detection, sink: &WebhookSink) -> Result<()> {
    let resp = sink
        .client
        .post(sink.url.clone())
        .header(reqwest::header::CONTENT_TYPE, "application/json")
        .body(detection.to_json_line())
        .send()
        .map_err(|e| Error::Sink(format!("webhook {}: {e}", sink.url)))?;
    if resp.status().is_success() {
        Ok(())
    } else {
        Err(Error::Sink(format!(
            "webhook {} returned {}",
            sink.url,
            resp.status()
        )))
    }
}

impl Sink for WebhookSink {
    fn name(&self) -> String {
        format!("webhook:{}", self.url)
    }

    fn deliver(&mut self, detection: &Detection) -> Result<()> {
        emit_webhook(detection, self)
    }
}

/// Sink selection as written on the command line or in config:
/// `stdout`, `file:<path>`, or `webhook:<url>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SinkSpec {
    Stdout,
    File(PathBuf),
    Webhook(String),
}

impl FromStr for SinkSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "stdout" {
            return Ok(SinkSpec::Stdout);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if !path.is_empty() {
                return Ok(SinkSpec::File(PathBuf::from(path)));
            }
        }
        if let Some(url) = s.strip_prefix("webhook:") {
            if !url.is_empty() {
                return Ok(SinkSpec::Webhook(url.to_string()));
            }
        }
        Err(Error::Config(format!(
            "sink must be `stdout`, `file:<path>` or `webhook:<url>`, got `{s}`"
        )))
    }
}

impl TryFrom<String> for SinkSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SinkSpec> for String {
    fn from(spec: SinkSpec) -> String {
        match spec {
            SinkSpec::Stdout => "stdout".into(),
            SinkSpec::File(p) => format!("file:{}", p.display()),
            SinkSpec::Webhook(u) => format!("webhook:{u}"),
        }
    }
}

impl SinkSpec {
    pub fn build(&self) -> Result<Box<dyn Sink>> {
        Ok(match self {
            SinkSpec::Stdout => Box::new(stdout_sink()),
            SinkSpec::File(p) => Box::new(file_sink(p)?),
            SinkSpec::Webhook(u) => Box::new(WebhookSink::new(u, WEBHOOK_TIMEOUT)?),
        })
    }
}
