use super::schema::{FeatureSchema, FeatureVector, FEATURE_COUNT};
use super::stats::{average_absolute_difference, axis_stats, mean, zero_crossing_rate, AxisStats};
use crate::error::{Error, Result};
use crate::ingest::Sample;
use crate::windowing::Window;

pub fn magnitude(sample: &Sample) -> f64 {
    (sample.ax * sample.ax + sample.ay * sample.ay + sample.az * sample.az).sqrt()
}

/// Angle between the acceleration vector and the device y-axis plane,
/// `asin(y / |a|)`, in `[-π/2, π/2]`. Zero for a zero vector.
pub fn tilt_angle(sample: &Sample) -> f64 {
    let m = magnitude(sample);
    if m == 0.0 {
        return 0.0;
    }
    (sample.ay / m).clamp(-1.0, 1.0).asin()
}

/// Euclidean norm of the per-axis ranges, over raw or absolute values.
pub fn slope(window: &Window, use_abs: bool) -> f64 {
    slope_of(&window.samples, use_abs)
}

fn slope_of(samples: &[Sample], use_abs: bool) -> f64 {
    let f = |v: f64| if use_abs { v.abs() } else { v };
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in samples {
        for (k, v) in [s.ax, s.ay, s.az].into_iter().map(f).enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    if samples.is_empty() {
        return 0.0;
    }
    (0..3)
        .map(|k| (hi[k] - lo[k]) * (hi[k] - lo[k]))
        .sum::<f64>()
        .sqrt()
}

pub fn average_resultant_acceleration(window: &Window) -> f64 {
    let mags: Vec<f64> = window.samples.iter().map(magnitude).collect();
    if mags.is_empty() {
        return 0.0;
    }
    mean(&mags)
}

/// Computes the 58-value feature vector of a window in schema order.
pub fn extract_features(window: &Window, schema: &FeatureSchema) -> Result<FeatureVector> {
    let values = feature_values(&window.samples, schema)?;
    Ok(FeatureVector {
        schema_version: schema.version.to_string(),
        values,
        device_id: window.device_id.clone(),
        t_start: window.t_start,
        t_end: window.t_end,
        label: window.majority_code.clone(),
    })
}

/// Feature values of a run of samples (at least two).
pub fn feature_values(samples: &[Sample], schema: &FeatureSchema) -> Result<Vec<f64>> {
    let supported = FeatureSchema::v1();
    if schema.version != supported.version {
        return Err(Error::SchemaMismatch {
            expected: supported.version.into(),
            found: schema.version.into(),
        });
    }
    let n = samples.len();
    let mut axes: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut tilt = Vec::with_capacity(n);
    let mut mags = Vec::with_capacity(n);
    for s in samples {
        axes[0].push(s.ax);
        axes[1].push(s.ay);
        axes[2].push(s.az);
        tilt.push(tilt_angle(s));
        mags.push(magnitude(s));
    }

    let mut out = Vec::with_capacity(FEATURE_COUNT);
    let push_stats = |out: &mut Vec<f64>, s: AxisStats| {
        out.extend([s.mean, s.median, s.sd, s.skew, s.kurtosis, s.min, s.max]);
    };
    for axis in &axes {
        push_stats(&mut out, axis_stats(axis)?);
    }
    for axis in &axes {
        let abs: Vec<f64> = axis.iter().map(|v| v.abs()).collect();
        push_stats(&mut out, axis_stats(&abs)?);
    }
    out.push(slope_of(samples, false));
    out.push(slope_of(samples, true));

    let t = axis_stats(&tilt)?;
    out.extend([t.mean, t.sd, t.skew, t.kurtosis]);

    let m = axis_stats(&mags)?;
    out.extend([
        m.mean,
        m.sd,
        m.min,
        m.max,
        m.max - m.min,
        zero_crossing_rate(&mags)?,
    ]);

    for axis in &axes {
        out.push(average_absolute_difference(axis)?);
    }
    // identical to the magnitude mean
    out.push(mean(&mags));

    debug_assert_eq!(out.len(), FEATURE_COUNT);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::STANDARD_GRAVITY;
    use std::f64::consts::FRAC_PI_2;

    fn window(points: &[(f64, f64, f64)]) -> Window {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| Sample::new("d", i as i64 * 50, x, y, z))
            .collect();
        Window::from_samples(samples).unwrap()
    }

    #[test]
    fn magnitude_and_tilt() {
        assert_eq!(magnitude(&Sample::new("d", 0, 3.0, 4.0, 0.0)), 5.0);
        assert_eq!(magnitude(&Sample::new("d", 0, -3.0, -4.0, 0.0)), 5.0);
        assert_eq!(magnitude(&Sample::new("d", 0, 0.0, 0.0, 0.0)), 0.0);
        assert_eq!(tilt_angle(&Sample::new("d", 0, 0.0, 9.81, 0.0)), FRAC_PI_2);
        assert_eq!(
            tilt_angle(&Sample::new("d", 0, 0.0, -9.81, 0.0)),
            -FRAC_PI_2
        );
        assert_eq!(tilt_angle(&Sample::new("d", 0, 9.81, 0.0, 0.0)), 0.0);
        assert_eq!(tilt_angle(&Sample::new("d", 0, 0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn slope_examples() {
        let w = window(&[(1.0, 1.0, 1.0); 5]);
        assert_eq!(slope(&w, false), 0.0);
        let w = window(&[(0.0, 0.0, 0.0), (1.0, 2.0, 2.0), (0.5, 1.0, 0.0)]);
        assert_eq!(slope(&w, false), 3.0);
        assert_eq!(slope(&w, true), slope(&w, false));
        let w = window(&[(-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        assert_eq!(slope(&w, false), 2.0);
        assert_eq!(slope(&w, true), 0.0);
    }

    #[test]
    fn resultant_acceleration() {
        assert_eq!(
            average_resultant_acceleration(&window(&[(0.0, 3.0, 4.0); 10])),
            5.0
        );
        assert_eq!(
            average_resultant_acceleration(&window(&[(0.0, 0.0, 0.0); 10])),
            0.0
        );
    }

    #[test]
    fn constant_gravity_window() {
        let w = window(&[(0.0, STANDARD_GRAVITY, 0.0); 200]);
        let fv = extract_features(&w, &FeatureSchema::v1()).unwrap();
        assert_eq!(fv.len(), FEATURE_COUNT);
        let schema = FeatureSchema::v1();
        let get = |name: &str| fv.values[schema.index_of(name).unwrap()];
        assert!((get("tilt_mean") - FRAC_PI_2).abs() < 1e-12);
        for name in &schema.names {
            let zero = [
                "_sd",
                "_skew",
                "_kurtosis",
                "slope_",
                "_zcr",
                "mag_range",
                "aad_",
            ]
            .iter()
            .any(|p| name.contains(p));
            if zero {
                assert_eq!(get(name), 0.0, "{name}");
            }
        }
        assert_eq!(get("y_median"), STANDARD_GRAVITY);
        assert_eq!(get("mag_max"), STANDARD_GRAVITY);
    }

    #[test]
    fn too_short_window() {
        let w = window(&[(1.0, 2.0, 3.0)]);
        assert!(matches!(
            extract_features(&w, &FeatureSchema::v1()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn magnitude_mean_matches_resultant() {
        let pts: Vec<_> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.37;
                (t.sin() * 3.0, 9.0 + t.cos(), (t * 1.7).sin())
            })
            .collect();
        let w = window(&pts);
        let schema = FeatureSchema::v1();
        let fv = extract_features(&w, &schema).unwrap();
        let mag_mean = fv.values[schema.index_of("mag_mean").unwrap()];
        assert_eq!(mag_mean, fv.values[57]);
        assert_eq!(mag_mean, average_resultant_acceleration(&w));
    }
}
