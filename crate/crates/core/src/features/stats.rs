use crate::error::{Error, Result};

/// Summary statistics of one series.
///
/// `sd` uses the n−1 denominator. `skew` and `kurtosis` are built from
/// population central moments (m3/m2^1.5 and excess m4/m2² − 3) and are 0
/// for a constant series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisStats {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub skew: f64,
    pub kurtosis: f64,
    pub min: f64,
    pub max: f64,
}

/// Arithmetic mean; exactly the common value for a constant series.
pub fn mean(values: &[f64]) -> f64 {
    match values.first() {
        Some(&first) if values.iter().all(|&v| v == first) => first,
        _ => values.iter().sum::<f64>() / values.len() as f64,
    }
}

pub fn axis_stats(values: &[f64]) -> Result<AxisStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "statistics need at least 2 values, got {n}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[n - 1]);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = mean(values);
    if min == max {
        return Ok(AxisStats {
            mean,
            median,
            sd: 0.0,
            skew: 0.0,
            kurtosis: 0.0,
            min,
            max,
        });
    }

    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    let nf = n as f64;
    let (m2, m3, m4) = (s2 / nf, s3 / nf, s4 / nf);
    let (skew, kurtosis) = if m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    Ok(AxisStats {
        mean,
        median,
        sd: (s2 / (nf - 1.0)).sqrt(),
        skew,
        kurtosis,
        min,
        max,
    })
}

/// Fraction of consecutive pairs whose de-meaned values change sign.
///
/// Zeros of the de-meaned series inherit the previous nonzero sign. The
/// result is the number of sign changes divided by `n − 1`.
pub fn zero_crossing_rate(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "zero-crossing rate needs at least 2 values, got {n}"
        )));
    }
    let constant = series.iter().all(|&v| v == series[0]);
    if constant {
        return Ok(0.0);
    }
    let m = mean(series);
    let mut prev_sign = 0i8;
    let mut changes = 0usize;
    for &v in series {
        let d = v - m;
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            prev_sign
        };
        if prev_sign != 0 && sign != prev_sign {
            changes += 1;
        }
        prev_sign = sign;
    }
    Ok(changes as f64 / (n - 1) as f64)
}

/// Mean absolute deviation from the mean.
pub fn average_absolute_difference(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData(
            "average absolute difference of an empty series".into(),
        ));
    }
    let m = mean(values);
    Ok(values.iter().map(|v| (v - m).abs()).sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_symmetric() {
        let s = axis_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (2.0, 2.0, 1.0, 3.0));
        assert_eq!(s.sd, 1.0);
        assert_eq!(s.skew, 0.0);
        // m2 = 2/3, m4 = 2/3 -> 1.5 - 3
        assert!((s.kurtosis + 1.5).abs() < 1e-15);
    }

    #[test]
    fn constant_series() {
        let s = axis_stats(&[5.0; 4]).unwrap();
        assert_eq!((s.sd, s.skew, s.kurtosis), (0.0, 0.0, 0.0));
        let s = axis_stats(&[0.1; 200]).unwrap();
        assert_eq!((s.sd, s.skew, s.kurtosis), (0.0, 0.0, 0.0));
    }

    #[test]
    fn even_median() {
        assert_eq!(axis_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
    }

    #[test]
    fn skewed_series() {
        // [0, 0, 0, 4]: mean 1, deviations -1,-1,-1,3
        // m2 = 12/4 = 3, m3 = (-3 + 27)/4 = 6, m4 = (3 + 81)/4 = 21
        let s = axis_stats(&[0.0, 0.0, 0.0, 4.0]).unwrap();
        assert!((s.skew - 6.0 / 3f64.powf(1.5)).abs() < 1e-15);
        assert!((s.kurtosis - (21.0 / 9.0 - 3.0)).abs() < 1e-15);
        assert!((s.sd - 2.0).abs() < 1e-15);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            axis_stats(&[1.0]),
            Err(Error::InsufficientData(_))
        ));
        assert!(zero_crossing_rate(&[1.0]).is_err());
        assert!(average_absolute_difference(&[]).is_err());
    }

    #[test]
    fn zcr_examples() {
        assert_eq!(zero_crossing_rate(&[2.0; 10]).unwrap(), 0.0);
        assert_eq!(zero_crossing_rate(&[1.0, 3.0, 1.0, 3.0]).unwrap(), 1.0);
        // de-meaned: -1, 0, +1 -> the zero carries '-', one change over 2 pairs
        assert_eq!(zero_crossing_rate(&[1.0, 2.0, 3.0]).unwrap(), 0.5);
    }

    #[test]
    fn aad_examples() {
        assert_eq!(average_absolute_difference(&[3.0; 7]).unwrap(), 0.0);
        assert_eq!(average_absolute_difference(&[0.0, 2.0]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn zcr_reversal_symmetric(v in proptest::collection::vec(-50i32..50, 2..100)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let mut r = v.clone();
            r.reverse();
            let a = zero_crossing_rate(&v).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            // integer data keeps the mean exact in either summation order
            prop_assert_eq!(a, zero_crossing_rate(&r).unwrap());
        }

        #[test]
        fn aad_translation_invariant(
            v in proptest::collection::vec(-100i32..100, 1..50),
            shift in -1000i32..1000,
        ) {
            let a: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
            let b: Vec<f64> = v.iter().map(|&x| f64::from(x + shift)).collect();
            let (da, db) = (
                average_absolute_difference(&a).unwrap(),
                average_absolute_difference(&b).unwrap(),
            );
            prop_assert!((da - db).abs() <= 1e-9 * da.max(1.0));
        }
    }
}
