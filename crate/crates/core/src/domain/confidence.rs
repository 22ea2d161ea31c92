use serde::{Deserialize, Serialize};

/// Thresholds mapping a raw recognizer score onto low/medium/high.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBins {
    pub low: f64,
    pub high: f64,
}

impl ConfidenceBins {
    pub fn new(low: f64, high: f64) -> Self {
        assert!(low <= high, "confidence thresholds out of order: {low} > {high}");
        Self { low, high }
    }

    /// Empirical tertiles of `samples`, giving three (nearly) equally populated bins.
    pub fn calibrate(samples: &[f64]) -> Self {
        assert!(samples.len() >= 3, "need at least three calibration samples");
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        Self::new(sorted[n / 3], sorted[2 * n / 3])
    }

    pub fn bin(&self, raw: f64) -> u8 {
        bin_confidence(raw, (self.low, self.high))
    }
}

impl Default for ConfidenceBins {
    fn default() -> Self {
        Self::new(1.0 / 3.0, 2.0 / 3.0)
    }
}

/// `raw < low` → 0, `low <= raw < high` → 1, otherwise 2.
pub fn bin_confidence(raw: f64, (low, high): (f64, f64)) -> u8 {
    debug_assert!(low <= high);
    if raw < low {
        0
    } else if raw < high {
        1
    } else {
        2
    }
}
