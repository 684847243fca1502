use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Default buffer width in samples.
pub const DEFAULT_WIDTH: usize = 256;

/// The most recent `capacity` tri-axial samples.
#[derive(Debug, Clone)]
pub struct SlidingBuffer {
    capacity: usize,
    dt: f64,
    buf: VecDeque<[f64; 3]>,
}

/// Characteristics C2, C3, C8, C9 and C13 at the newest buffered sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisFallFeatures {
    /// Horizontal-plane magnitude `√(ax² + az²)` of the newest sample.
    pub c2: f64,
    /// RMS over the three axes of each axis' range within the buffer.
    pub c3: f64,
    /// `√(σx² + σz²)`.
    pub c8: f64,
    /// `√(σx² + σy² + σz²)`.
    pub c9: f64,
    /// Left Riemann sum of `√(ax² + az²)` over the buffer, times `dt`.
    pub c13: f64,
}

impl SlidingBuffer {
    pub fn new(capacity: usize, dt: f64) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::Config(format!(
                "sliding buffer capacity must be at least 2, got {capacity}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "sample period must be positive, got {dt}"
            )));
        }
        Ok(Self {
            capacity,
            dt,
            buf: VecDeque::with_capacity(capacity),
        })
    }

    pub fn push(&mut self, a: [f64; 3]) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(a);
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn characteristics(&self) -> Result<SisFallFeatures> {
        sisfall_characteristics(self)
    }
}

pub fn sisfall_characteristics(buf: &SlidingBuffer) -> Result<SisFallFeatures> {
    if !buf.is_full() {
        return Err(Error::NotReady {
            have: buf.len(),
            need: buf.capacity,
        });
    }
    let n = buf.buf.len() as f64;
    let newest = buf.buf.back().expect("full buffer");
    let c2 = (newest[0] * newest[0] + newest[2] * newest[2]).sqrt();

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut sum = [0.0; 3];
    let mut c13 = 0.0;
    for a in &buf.buf {
        for k in 0..3 {
            lo[k] = lo[k].min(a[k]);
            hi[k] = hi[k].max(a[k]);
            sum[k] += a[k];
        }
        c13 += (a[0] * a[0] + a[2] * a[2]).sqrt() * buf.dt;
    }
    let range_sq: f64 = (0..3).map(|k| (hi[k] - lo[k]) * (hi[k] - lo[k])).sum();
    let c3 = (range_sq / 3.0).sqrt();

    let mut var = [0.0; 3];
    for k in 0..3 {
        if hi[k] == lo[k] {
            continue;
        }
        let m = sum[k] / n;
        var[k] = buf.buf.iter().map(|a| (a[k] - m) * (a[k] - m)).sum::<f64>() / (n - 1.0);
    }
    let xz = var[0] + var[2];
    Ok(SisFallFeatures {
        c2,
        c3,
        c8: xz.sqrt(),
        c9: (xz + var[1]).sqrt(),
        c13,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(cap: usize, f: impl Fn(usize) -> [f64; 3]) -> SlidingBuffer {
        let mut b = SlidingBuffer::new(cap, 0.005).unwrap();
        for i in 0..cap {
            b.push(f(i));
        }
        b
    }

    #[test]
    fn not_ready_until_full() {
        let mut b = SlidingBuffer::new(4, 0.01).unwrap();
        b.push([0.0; 3]);
        assert!(matches!(
            b.characteristics(),
            Err(Error::NotReady { have: 1, need: 4 })
        ));
        for _ in 0..3 {
            b.push([0.0; 3]);
        }
        assert!(b.characteristics().is_ok());
        b.push([1.0; 3]);
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn constant_buffer() {
        let c = filled(DEFAULT_WIDTH, |_| [0.3, -9.7, 1.1])
            .characteristics()
            .unwrap();
        assert_eq!((c.c3, c.c8, c.c9), (0.0, 0.0, 0.0));
    }

    #[test]
    fn newest_sample_c2() {
        let c = filled(8, |i| if i == 7 { [3.0, 100.0, 4.0] } else { [0.0; 3] })
            .characteristics()
            .unwrap();
        assert_eq!(c.c2, 5.0);
    }

    #[test]
    fn zero_buffer_c13() {
        assert_eq!(filled(16, |_| [0.0; 3]).characteristics().unwrap().c13, 0.0);
    }

    #[test]
    fn known_values() {
        // x alternates 0/2, y and z constant
        let b = filled(4, |i| [if i % 2 == 0 { 0.0 } else { 2.0 }, 1.0, 0.0]);
        let c = b.characteristics().unwrap();
        assert!((c.c3 - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
        // sample variance of [0,2,0,2] = 4/3
        assert!((c.c8 - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(c.c8, c.c9);
        assert!((c.c13 - 2.0 * 2.0 * 0.005).abs() < 1e-15);
    }
}
