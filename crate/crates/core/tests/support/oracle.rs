//! Brute-force reference implementations used only by tests.
//!
//! Written directly from the feature definitions with compensated sums and
//! no code shared with the library, so agreement is meaningful.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kahan-compensated sum.
pub fn ksum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

fn all_equal(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

pub fn o_mean(v: &[f64]) -> f64 {
    if all_equal(v) {
        return v[0];
    }
    ksum(v.iter().copied()) / v.len() as f64
}

pub fn o_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n.is_multiple_of(2) {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    } else {
        s[(n - 1) / 2]
    }
}

fn central_moment(v: &[f64], k: i32) -> f64 {
    let m = o_mean(v);
    ksum(v.iter().map(|x| (x - m).powi(k))) / v.len() as f64
}

pub fn o_sd(v: &[f64]) -> f64 {
    if all_equal(v) {
        return 0.0;
    }
    let m = o_mean(v);
    (ksum(v.iter().map(|x| (x - m) * (x - m))) / (v.len() as f64 - 1.0)).sqrt()
}

pub fn o_skew(v: &[f64]) -> f64 {
    if all_equal(v) {
        return 0.0;
    }
    let m2 = central_moment(v, 2);
    central_moment(v, 3) / (m2 * m2.sqrt())
}

pub fn o_kurt(v: &[f64]) -> f64 {
    if all_equal(v) {
        return 0.0;
    }
    let m2 = central_moment(v, 2);
    central_moment(v, 4) / (m2 * m2) - 3.0
}

pub fn o_min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn o_max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn seven(v: &[f64]) -> [f64; 7] {
    [
        o_mean(v),
        o_median(v),
        o_sd(v),
        o_skew(v),
        o_kurt(v),
        o_min(v),
        o_max(v),
    ]
}

pub fn o_zcr(v: &[f64]) -> f64 {
    if all_equal(v) {
        return 0.0;
    }
    let m = o_mean(v);
    // resolve signs, zeros carrying the last nonzero sign
    let mut signs = Vec::with_capacity(v.len());
    let mut last = 0.0f64;
    for x in v {
        let d = x - m;
        if d != 0.0 {
            last = d.signum();
        }
        signs.push(last);
    }
    let changes = (1..signs.len())
        .filter(|&i| signs[i - 1] != 0.0 && signs[i] != 0.0 && signs[i] != signs[i - 1])
        .count();
    changes as f64 / (v.len() - 1) as f64
}

pub fn o_aad(v: &[f64]) -> f64 {
    let m = o_mean(v);
    ksum(v.iter().map(|x| (x - m).abs())) / v.len() as f64
}

/// The 58 features of a window given as `(x, y, z)` triples.
pub fn oracle_features(w: &[(f64, f64, f64)]) -> Vec<f64> {
    let x: Vec<f64> = w.iter().map(|p| p.0).collect();
    let y: Vec<f64> = w.iter().map(|p| p.1).collect();
    let z: Vec<f64> = w.iter().map(|p| p.2).collect();
    let mut out = Vec::new();
    for axis in [&x, &y, &z] {
        out.extend(seven(axis));
    }
    for axis in [&x, &y, &z] {
        let a: Vec<f64> = axis.iter().map(|v| v.abs()).collect();
        out.extend(seven(&a));
    }
    let range = |v: &[f64]| o_max(v) - o_min(v);
    let slope = |a: &[f64], b: &[f64], c: &[f64]| {
        (range(a).powi(2) + range(b).powi(2) + range(c).powi(2)).sqrt()
    };
    out.push(slope(&x, &y, &z));
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let ay: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    let az: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    out.push(slope(&ax, &ay, &az));

    let mag: Vec<f64> = w
        .iter()
        .map(|p| (p.0.powi(2) + p.1.powi(2) + p.2.powi(2)).sqrt())
        .collect();
    let tilt: Vec<f64> = w
        .iter()
        .zip(&mag)
        .map(|(p, m)| {
            if *m == 0.0 {
                0.0
            } else {
                (p.1 / m).clamp(-1.0, 1.0).asin()
            }
        })
        .collect();
    out.extend([o_mean(&tilt), o_sd(&tilt), o_skew(&tilt), o_kurt(&tilt)]);
    out.extend([
        o_mean(&mag),
        o_sd(&mag),
        o_min(&mag),
        o_max(&mag),
        o_max(&mag) - o_min(&mag),
        o_zcr(&mag),
    ]);
    out.extend([o_aad(&x), o_aad(&y), o_aad(&z)]);
    out.push(ksum(mag.iter().copied()) * (1.0 / w.len() as f64));
    out
}

/// Relative error with both-zero treated as exact agreement.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// A plausible accelerometer window: gravity on a drifting axis, body
/// motion, noise, and an occasional impact spike.
pub fn random_window(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64, f64)> {
    let g = 9.80665;
    let freq = rng.random_range(0.5..3.0);
    let amp = rng.random_range(0.1..6.0);
    let tilt0 = rng.random_range(-1.2..1.2);
    let spike_at = rng.random_range(0..n);
    let spike = if rng.random_bool(0.3) {
        rng.random_range(10.0..40.0)
    } else {
        0.0
    };
    (0..n)
        .map(|i| {
            let t = i as f64 / 20.0;
            let th = tilt0 + 0.2 * (t * 0.3).sin();
            let body = amp * (std::f64::consts::TAU * freq * t).sin();
            let mut p = (
                g * th.sin() + 0.3 * body + rng.random_range(-0.5..0.5),
                g * th.cos() + body + rng.random_range(-0.5..0.5),
                0.5 * body + rng.random_range(-0.8..0.8),
            );
            if i == spike_at {
                p.0 += spike;
                p.1 -= spike * 0.5;
            }
            p
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
