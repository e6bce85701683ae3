use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_text, DataError, Result};
use crate::perf::{
    CheckpointFiles, CheckpointTimeModel, CheckpointVariant, ClusterObservation, CnnModel, GpuSpec, PsCapacity,
    StepTimeModel, StepTimeVariant,
};
use crate::revocation::{LifetimeTable, ReplacementOverheadModel, StartupTable};

pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of one ingested CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDigest {
    pub file_name: String,
    pub sha256: String,
}

impl SourceDigest {
    pub fn of_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let file_name =
            path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        Ok(Self { file_name, sha256: sha256_hex(&bytes) })
    }
}

/// Everything the planner needs, keyed so serialization order is fixed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    /// Keyed by variant, or `variant/GPU` for GPU-specific variants.
    pub step_time_models: BTreeMap<String, StepTimeModel>,
    pub checkpoint_models: BTreeMap<String, CheckpointTimeModel>,
    pub gpus: BTreeMap<String, GpuSpec>,
    pub cnns: BTreeMap<String, CnnModel>,
    pub checkpoint_files: BTreeMap<String, CheckpointFiles>,
    /// Keyed by `CNN/ps_count`.
    pub ps_capacities: BTreeMap<String, PsCapacity>,
    pub cluster_observations: Vec<ClusterObservation>,
    pub lifetimes: LifetimeTable,
    pub startups: StartupTable,
    pub replacement: ReplacementOverheadModel,
    /// Revocations per local hour of day, per GPU.
    pub revocation_hours: BTreeMap<String, Vec<u32>>,
    /// Keyed by role (`step_times`, `revocations`, ...).
    #[serde(skip)]
    pub provenance: BTreeMap<String, SourceDigest>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<P> {
    format_version: u32,
    provenance: BTreeMap<String, SourceDigest>,
    payload_sha256: String,
    payload: P,
}

impl ModelBundle {
    pub fn step_key(variant: StepTimeVariant, gpu: Option<&str>) -> String {
        match gpu {
            Some(g) if variant.is_gpu_specific() => format!("{variant}/{g}"),
            _ => variant.to_string(),
        }
    }

    pub fn capacity_key(cnn: &str, ps_count: u32) -> String {
        format!("{cnn}/{ps_count}")
    }

    pub fn step_model(&self, variant: StepTimeVariant, gpu: &str) -> Option<&StepTimeModel> {
        self.step_time_models.get(&Self::step_key(variant, Some(gpu)))
    }

    pub fn checkpoint_model(&self, variant: CheckpointVariant) -> Option<&CheckpointTimeModel> {
        self.checkpoint_models.get(variant.as_str())
    }

    /// Per-server cap for `cnn` at `ps_count`, falling back to the
    /// single-server calibration. `None` when nothing was calibrated.
    pub fn ps_capacity(&self, cnn: &str, ps_count: u32) -> Option<PsCapacity> {
        self.ps_capacities
            .get(&Self::capacity_key(cnn, ps_count))
            .or_else(|| self.ps_capacities.get(&Self::capacity_key(cnn, 1)))
            .copied()
    }

    fn payload_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| DataError::Bundle(e.to_string()))
    }

    /// Pretty JSON with a digest over the compact payload encoding.
    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format_version: FORMAT_VERSION,
            provenance: self.provenance.clone(),
            payload_sha256: sha256_hex(self.payload_json()?.as_bytes()),
            payload: self,
        };
        let mut s = serde_json::to_string_pretty(&env).map_err(|e| DataError::Bundle(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(text).map_err(|e| DataError::Bundle(format!("malformed bundle: {e}")))?;
        if v.format_version != FORMAT_VERSION {
            return Err(DataError::Bundle(format!(
                "unsupported format version {} (this build reads {FORMAT_VERSION})",
                v.format_version
            )));
        }
        let env: Envelope<ModelBundle> =
            serde_json::from_str(text).map_err(|e| DataError::Bundle(format!("malformed bundle: {e}")))?;
        let mut bundle = env.payload;
        let digest = sha256_hex(bundle.payload_json()?.as_bytes());
        if digest != env.payload_sha256 {
            return Err(DataError::Bundle(format!(
                "payload digest mismatch: recorded {}, computed {digest}",
                env.payload_sha256
            )));
        }
        bundle.provenance = env.provenance;
        Ok(bundle)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?).map_err(|e| match e {
            DataError::Bundle(m) => DataError::Bundle(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Loads `path` when it exists, else starts empty.
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        std::fs::write(path, text)
            .map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_tamper_detection() {
        let mut b = ModelBundle::default();
        b.ps_capacities.insert(ModelBundle::capacity_key("ResNet-32", 1), PsCapacity::new(41.7275).unwrap());
        b.ps_capacities.insert(ModelBundle::capacity_key("ResNet-15", 1), PsCapacity::unbounded());
        b.gpus.insert("K80".into(), GpuSpec::k80());
        b.provenance.insert("x".into(), SourceDigest { file_name: "x.csv".into(), sha256: "00".into() });
        let text = b.to_json().unwrap();
        let back = ModelBundle::from_json(&text).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back.ps_capacity("ResNet-32", 2).unwrap().max_aggregate_steps_per_sec, 41.7275);
        assert!(!back.ps_capacity("ResNet-15", 1).unwrap().is_bounded());

        let tampered = text.replace("41.7275", "41.7276");
        assert!(ModelBundle::from_json(&tampered).unwrap_err().to_string().contains("digest mismatch"));
        let future = text.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(ModelBundle::from_json(&future).unwrap_err().to_string().contains("unsupported format version 9"));
    }
}
