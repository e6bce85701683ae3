use serde::{Deserialize, Serialize};

use super::{PerfError, Result};

pub const FLOPS_PER_GFLOP: f64 = 1e9;
pub const FLOPS_PER_TFLOP: f64 = 1e12;

/// A GPU type with its peak capacity in teraflops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpuSpec {
    pub name: String,
    pub capacity_tflops: f64,
    pub memory_gb: Option<f64>,
}

impl GpuSpec {
    pub fn new(name: impl Into<String>, capacity_tflops: f64) -> Result<Self> {
        let name = name.into();
        if !(capacity_tflops > 0.0 && capacity_tflops.is_finite()) {
            return Err(PerfError::InvalidInput(format!(
                "GPU {name}: capacity must be positive, got {capacity_tflops}"
            )));
        }
        let memory_gb = match name.as_str() {
            "K80" => Some(12.0),
            "P100" | "V100" => Some(16.0),
            _ => None,
        };
        Ok(Self { name, capacity_tflops, memory_gb })
    }

    pub fn k80() -> Self {
        Self::new("K80", 4.11).unwrap()
    }

    pub fn p100() -> Self {
        Self::new("P100", 9.53).unwrap()
    }

    pub fn v100() -> Self {
        Self::new("V100", 14.13).unwrap()
    }
}

/// A CNN and its complexity in GFLOPs per image per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub name: String,
    pub complexity_gflops: f64,
}

impl CnnModel {
    pub fn new(name: impl Into<String>, complexity_gflops: f64) -> Result<Self> {
        let name = name.into();
        if !(complexity_gflops > 0.0 && complexity_gflops.is_finite()) {
            return Err(PerfError::InvalidInput(format!(
                "CNN {name}: complexity must be positive, got {complexity_gflops}"
            )));
        }
        Ok(Self { name, complexity_gflops })
    }
}

/// Model complexity over GPU capacity, both expressed in FLOP units.
pub fn computation_ratio(cnn: &CnnModel, gpu: &GpuSpec) -> f64 {
    (cnn.complexity_gflops * FLOPS_PER_GFLOP) / (gpu.capacity_tflops * FLOPS_PER_TFLOP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_converts_units() {
        let resnet32 = CnnModel::new("ResNet-32", 1.54).unwrap();
        assert!((computation_ratio(&resnet32, &GpuSpec::k80()) - 3.747e-4).abs() < 5e-8);
        let big = CnnModel::new("Shake-Shake-Big", 21.3).unwrap();
        assert!((computation_ratio(&big, &GpuSpec::v100()) - 1.5074e-3).abs() < 5e-8);
        let aligned = CnnModel::new("x", 1000.0).unwrap();
        assert_eq!(computation_ratio(&aligned, &GpuSpec::new("g", 1.0).unwrap()), 1.0);
    }

    #[test]
    fn rejects_non_positive_specs() {
        assert!(GpuSpec::new("K80", 0.0).is_err());
        assert!(CnnModel::new("m", -1.0).is_err());
        assert_eq!(GpuSpec::k80().memory_gb, Some(12.0));
    }
}
