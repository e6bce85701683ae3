use serde::{Deserialize, Serialize};

pub const DEFAULT_HALF_LIFE: f64 = 10.0;

/// Exponentially weighted running average; an observation's weight halves
/// after `half_life` newer observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningAverage {
    alpha: f64,
    value: Option<f64>,
    count: u64,
}

impl Default for RunningAverage {
    fn default() -> Self {
        Self::with_half_life(DEFAULT_HALF_LIFE)
    }
}

impl RunningAverage {
    pub fn with_half_life(half_life: f64) -> Self {
        assert!(half_life > 0.0, "half-life must be positive");
        Self { alpha: 1.0 - 0.5f64.powf(1.0 / half_life), value: None, count: 0 }
    }

    pub fn from_observations(values: impl IntoIterator<Item = f64>) -> Self {
        let mut avg = Self::default();
        values.into_iter().for_each(|v| avg.observe(v));
        avg
    }

    pub fn observe(&mut self, x: f64) {
        self.value = Some(match self.value {
            None => x,
            Some(v) => v + self.alpha * (x - v),
        });
        self.count += 1;
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_halves_after_half_life() {
        let mut a = RunningAverage::default();
        a.observe(1.0);
        for _ in 0..10 {
            a.observe(0.0);
        }
        assert!((a.value().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(a.count(), 11);
    }

    #[test]
    fn constant_stream_is_constant() {
        let a = RunningAverage::from_observations([75.6; 7]);
        assert!((a.value().unwrap() - 75.6).abs() < 1e-12);
        assert_eq!(RunningAverage::default().value(), None);
    }
}
