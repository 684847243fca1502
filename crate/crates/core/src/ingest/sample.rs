use serde::{Deserialize, Serialize};

use super::activity::ActivityCode;

/// Standard gravity, used to bring g-valued datasets into m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// One timestamped tri-axial acceleration reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub device_id: String,
    pub t_ms: i64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub label: Option<ActivityCode>,
}

impl Sample {
    pub fn new(device_id: impl Into<String>, t_ms: i64, ax: f64, ay: f64, az: f64) -> Self {
        Self {
            device_id: device_id.into(),
            t_ms,
            ax,
            ay,
            az,
            label: None,
        }
    }

    pub fn with_label(mut self, label: ActivityCode) -> Self {
        self.label = Some(label);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.ax.is_finite() && self.ay.is_finite() && self.az.is_finite()
    }
}

/// Converts a raw signed converter count to acceleration in g.
///
/// `range_g` is the full-scale range (±range_g), `resolution_bits` the
/// converter width, expected in `8..=16`.
pub fn convert_adc_to_g(bits: i64, range_g: f64, resolution_bits: u32) -> f64 {
    debug_assert!((8..=16).contains(&resolution_bits));
    bits as f64 * (2.0 * range_g / (1u64 << resolution_bits) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adc_conversion() {
        assert_eq!(convert_adc_to_g(0, 16.0, 13), 0.0);
        assert_eq!(convert_adc_to_g(4096, 16.0, 13), 16.0);
        assert_eq!(convert_adc_to_g(-4096, 16.0, 13), -16.0);
        assert_eq!(convert_adc_to_g(-128, 2.0, 8), -2.0);
        assert_eq!(convert_adc_to_g(1 << 15, 8.0, 16), 8.0);
    }
}
