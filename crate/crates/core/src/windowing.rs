//! Count-based windowing with majority-vote labels.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ActivityCode, BinaryClass, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default = "default_size")]
    pub stride: usize,
    /// Timestamp jumps larger than this are counted as gaps. Gaps never
    /// split a window.
    #[serde(default = "default_gap_ms")]
    pub gap_ms: i64,
}

fn default_size() -> usize {
    200
}
fn default_gap_ms() -> i64 {
    1_000
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            size: default_size(),
            stride: default_size(),
            gap_ms: default_gap_ms(),
        }
    }
}

impl WindowConfig {
    pub fn new(size: usize, stride: usize) -> Result<Self> {
        let cfg = Self {
            size,
            stride,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.stride > self.size {
            return Err(Error::Config(format!(
                "window stride must satisfy 1 <= stride <= size, got size {} stride {}",
                self.size, self.stride
            )));
        }
        Ok(())
    }

    /// Windows produced from `n` samples of one device.
    pub fn window_count(&self, n: usize) -> usize {
        if n < self.size {
            0
        } else {
            (n - self.size) / self.stride + 1
        }
    }
}

/// A full run of `size` consecutive samples from one device.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub device_id: String,
    pub samples: Vec<Sample>,
    pub t_start: i64,
    pub t_end: i64,
    pub majority_code: Option<ActivityCode>,
}

impl Window {
    /// Builds a window from a non-empty run of samples; the majority code is
    /// set when every sample is labeled.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InsufficientData("empty window".into()))?;
        let last = samples.last().unwrap_or(first);
        Ok(Self {
            device_id: first.device_id.clone(),
            t_start: first.t_ms,
            t_end: last.t_ms,
            majority_code: majority_label(&samples).ok(),
            samples,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn label_class(&self) -> Option<BinaryClass> {
        self.majority_code.as_ref().map(|c| c.class)
    }
}

/// Most frequent activity code. Ties go to a FALL code if one is tied, then
/// to the lexicographically smallest code.
pub fn majority_label(samples: &[Sample]) -> Result<ActivityCode> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples to label".into()));
    }
    let mut counts: HashMap<&str, (usize, BinaryClass)> = HashMap::new();
    for s in samples {
        let label = s.label.as_ref().ok_or(Error::MissingLabel)?;
        counts.entry(&label.code).or_insert((0, label.class)).0 += 1;
    }
    let (code, (_, class)) = counts
        .into_iter()
        .min_by(|(code_a, (n_a, class_a)), (code_b, (n_b, class_b))| {
            n_b.cmp(n_a)
                // Fall < Adl in the enum order
                .then(class_a.cmp(class_b))
                .then(code_a.cmp(code_b))
        })
        .expect("non-empty");
    Ok(ActivityCode {
        code: code.to_string(),
        class,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WindowStats {
    pub samples: u64,
    pub windows: u64,
    /// Samples never covered by an emitted window when the stream ended.
    pub partial_drops: u64,
    pub timestamp_regressions: u64,
    pub gaps: u64,
}

impl WindowStats {
    fn absorb(&mut self, other: &WindowStats) {
        self.samples += other.samples;
        self.windows += other.windows;
        self.partial_drops += other.partial_drops;
        self.timestamp_regressions += other.timestamp_regressions;
        self.gaps += other.gaps;
    }
}

/// Buffers one device's samples and emits windows as they fill.
#[derive(Debug)]
pub struct WindowAssembler {
    config: WindowConfig,
    buf: VecDeque<Sample>,
    /// Leading buffered samples that already belong to an emitted window.
    covered: usize,
    last_t: Option<i64>,
    stats: WindowStats,
}

impl WindowAssembler {
    pub fn new(config: WindowConfig) -> Self {
        Self {
            config,
            buf: VecDeque::with_capacity(config.size),
            covered: 0,
            last_t: None,
            stats: WindowStats::default(),
        }
    }

    pub fn push(&mut self, sample: Sample) -> Option<Window> {
        self.stats.samples += 1;
        if let Some(prev) = self.last_t {
            if sample.t_ms < prev {
                self.stats.timestamp_regressions += 1;
            } else if sample.t_ms - prev > self.config.gap_ms {
                self.stats.gaps += 1;
            }
        }
        self.last_t = Some(sample.t_ms);
        self.buf.push_back(sample);
        if self.buf.len() < self.config.size {
            return None;
        }
        let samples: Vec<Sample> = self.buf.iter().cloned().collect();
        self.buf.drain(..self.config.stride);
        self.covered = self.config.size - self.config.stride;
        self.stats.windows += 1;
        Some(Window::from_samples(samples).expect("full window is non-empty"))
    }

    /// Ends the stream, discarding the partial tail.
    pub fn finish(&mut self) -> WindowStats {
        self.stats.partial_drops += (self.buf.len() - self.covered) as u64;
        self.buf.clear();
        self.covered = 0;
        self.stats
    }

    pub fn stats(&self) -> WindowStats {
        self.stats
    }

    /// Samples buffered that no emitted window has covered yet.
    pub fn pending(&self) -> usize {
        self.buf.len() - self.covered
    }
}

/// Routes a multi-device stream to one assembler per device.
#[derive(Debug)]
pub struct Windower {
    config: WindowConfig,
    devices: HashMap<String, WindowAssembler>,
    finished: WindowStats,
}

impl Windower {
    pub fn new(config: WindowConfig) -> Self {
        Self {
            config,
            devices: HashMap::new(),
            finished: WindowStats::default(),
        }
    }

    pub fn push(&mut self, sample: Sample) -> Option<Window> {
        if let Some(asm) = self.devices.get_mut(&sample.device_id) {
            return asm.push(sample);
        }
        let mut asm = WindowAssembler::new(self.config);
        let key = sample.device_id.clone();
        let out = asm.push(sample);
        self.devices.insert(key, asm);
        out
    }

    pub fn stats(&self) -> WindowStats {
        let mut total = self.finished;
        for asm in self.devices.values() {
            total.absorb(&asm.stats());
        }
        total
    }

    pub fn pending(&self) -> usize {
        self.devices.values().map(WindowAssembler::pending).sum()
    }

    /// Flushes every device, dropping partial tails.
    pub fn finish(&mut self) -> WindowStats {
        for (_, mut asm) in self.devices.drain() {
            self.finished.absorb(&asm.finish());
        }
        self.finished
    }
}

/// Batch windowing of a sample sequence (possibly multi-device). Windows are
/// returned in emission order, which is per-device stream order.
pub fn assemble_windows(
    samples: impl IntoIterator<Item = Sample>,
    config: WindowConfig,
) -> Result<(Vec<Window>, WindowStats)> {
    config.validate()?;
    let mut windower = Windower::new(config);
    let windows = samples
        .into_iter()
        .filter_map(|s| windower.push(s))
        .collect();
    Ok((windows, windower.finish()))
}
