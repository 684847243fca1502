use std::io::{BufRead, BufReader, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::sample::Sample;
use crate::error::{Error, Result};

/// Destination for samples produced by a source.
pub trait SampleOutlet: Send + Sync {
    /// Hands one sample downstream. Returns `false` once the consumer is gone.
    fn push(&self, sample: Sample) -> bool;

    /// Records a record that could not be parsed.
    fn malformed(&self);
}

/// Replay pacing: a multiple of the recorded rate, or unpaced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Speed {
    Factor(f64),
    #[default]
    Max,
}

impl FromStr for Speed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(Speed::Max);
        }
        match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f.is_finite() => Ok(Speed::Factor(f)),
            _ => Err(Error::Config(format!(
                "speed must be `max` or a positive number, got `{s}`"
            ))),
        }
    }
}

impl Serialize for Speed {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Speed::Max => s.serialize_str("max"),
            Speed::Factor(f) => s.serialize_f64(*f),
        }
    }
}

impl<'de> Deserialize<'de> for Speed {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(f) => Speed::from_str(&f.to_string()),
            Raw::Text(t) => Speed::from_str(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Replays a recorded sample sequence, optionally paced in real time.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    samples: Vec<Sample>,
    rate_hz: f64,
    speed: Speed,
}

impl ReplaySource {
    pub fn new(samples: Vec<Sample>, rate_hz: f64, speed: Speed) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "rate_hz must be positive, got {rate_hz}"
            )));
        }
        Ok(Self {
            samples,
            rate_hz,
            speed,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Interval between consecutive emissions, `None` when unpaced.
    pub fn period(&self) -> Option<Duration> {
        match self.speed {
            Speed::Max => None,
            Speed::Factor(f) => Some(Duration::from_secs_f64(1.0 / (self.rate_hz * f))),
        }
    }

    /// Emits every sample in order. Sample `i` is released no earlier than
    /// `i × period` after the start. Stops early on shutdown or when the
    /// outlet closes; returns the number of samples emitted.
    pub fn run(self, outlet: &dyn SampleOutlet, shutdown: &AtomicBool) -> usize {
        let period = self.period();
        let start = Instant::now();
        let mut sent = 0;
        for (i, sample) in self.samples.into_iter().enumerate() {
            if shutdown.load(Ordering::Relaxed) {
                break;
            }
            if let Some(p) = period {
                let due = start + p.mul_f64(i as f64);
                let now = Instant::now();
                if due > now {
                    thread::sleep(due - now);
                }
            }
            if !outlet.push(sample) {
                break;
            }
            sent += 1;
        }
        sent
    }
}

const MAX_DEVICE_ID: usize = 64;

/// Parses one wire line `device_id,t_ms,ax,ay,az` (without the newline).
pub fn parse_wire_line(line: &[u8]) -> Option<Sample> {
    let line = std::str::from_utf8(line).ok()?;
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut parts = line.split(',');
    let device = parts.next()?;
    if device.is_empty()
        || device.len() > MAX_DEVICE_ID
        || !device
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
    {
        return None;
    }
    let t_ms: i64 = parts.next()?.parse().ok()?;
    let mut axis = || -> Option<f64> {
        let v: f64 = parts.next()?.parse().ok()?;
        v.is_finite().then_some(v)
    };
    let (ax, ay, az) = (axis()?, axis()?, axis()?);
    if parts.next().is_some() {
        return None;
    }
    Some(Sample::new(device, t_ms, ax, ay, az))
}

const POLL: Duration = Duration::from_millis(50);

/// Accepts TCP connections speaking the newline-delimited sample protocol.
#[derive(Debug)]
pub struct SocketSource {
    listener: TcpListener,
}

impl SocketSource {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(Self { listener })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Serves connections until `shutdown` is set. Each connection runs on
    /// its own thread; lines within a connection are forwarded in order.
    pub fn run(self, outlet: Arc<dyn SampleOutlet>, shutdown: Arc<AtomicBool>) -> Result<()> {
        let mut workers = Vec::new();
        while !shutdown.load(Ordering::Relaxed) {
            match self.listener.accept() {
                Ok((stream, _)) => {
                    let outlet = Arc::clone(&outlet);
                    let shutdown = Arc::clone(&shutdown);
                    workers.push(thread::spawn(move || {
                        serve_connection(stream, outlet.as_ref(), &shutdown)
                    }));
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
            workers.retain(|w| !w.is_finished());
        }
        for w in workers {
            let _ = w.join();
        }
        Ok(())
    }
}

fn serve_connection(stream: TcpStream, outlet: &dyn SampleOutlet, shutdown: &AtomicBool) {
    if stream.set_nonblocking(false).is_err() || stream.set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::with_capacity(128);
    loop {
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => {
                // peer closed; a final unterminated line is still a record
                if !buf.is_empty() {
                    forward(&buf, outlet);
                }
                return;
            }
            Ok(_) => {
                if buf.last() == Some(&b'\n') {
                    buf.pop();
                    if !forward(&buf, outlet) {
                        return;
                    }
                    buf.clear();
                }
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                if shutdown.load(Ordering::Relaxed) {
                    return;
                }
            }
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(_) => return,
        }
    }
}

fn forward(line: &[u8], outlet: &dyn SampleOutlet) -> bool {
    if line.iter().all(|b| b.is_ascii_whitespace()) {
        return true;
    }
    match parse_wire_line(line) {
        Some(sample) => outlet.push(sample),
        None => {
            outlet.malformed();
            true
        }
    }
}
