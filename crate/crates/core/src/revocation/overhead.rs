use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, RevocationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Offering {
    Transient,
    OnDemand,
}

impl Offering {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Transient => "transient",
            Self::OnDemand => "on-demand",
        }
    }
}

impl fmt::Display for Offering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Offering {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "transient" => Ok(Self::Transient),
            "on-demand" => Ok(Self::OnDemand),
            other => Err(format!("unknown offering {other:?}, expected transient or on-demand")),
        }
    }
}

/// One observed server startup broken into its three stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartupRecord {
    pub gpu_name: String,
    pub region: String,
    pub offering: Offering,
    pub provisioning_sec: f64,
    pub staging_sec: f64,
    pub running_sec: f64,
}

impl StartupRecord {
    pub fn total_sec(&self) -> f64 {
        self.provisioning_sec + self.staging_sec + self.running_sec
    }

    fn stages(&self) -> [f64; 3] {
        [self.provisioning_sec, self.staging_sec, self.running_sec]
    }
}

/// Observed stage triples for one (GPU, region, offering). Sampling keeps
/// each triple together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartupModel {
    pub gpu_name: String,
    pub region: String,
    pub offering: Offering,
    samples: Vec<[f64; 3]>,
}

impl StartupModel {
    pub fn new(gpu_name: &str, region: &str, offering: Offering, samples: Vec<[f64; 3]>) -> Result<Self> {
        if samples.is_empty() {
            return Err(RevocationError::EmptyStartupModel(format!("{gpu_name}/{region}/{offering}")));
        }
        if samples.iter().flatten().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(RevocationError::InvalidRecord("startup stage durations must be positive".into()));
        }
        Ok(Self { gpu_name: gpu_name.into(), region: region.into(), offering, samples })
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn mean_total(&self) -> f64 {
        self.samples.iter().map(|s| s.iter().sum::<f64>()).sum::<f64>() / self.samples.len() as f64
    }

    /// T_p: the total of one observed record, chosen uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.samples[rng.gen_range(0..self.samples.len())].iter().sum()
    }

    /// Like [`Self::sample`] with the deviation from the mean stretched by
    /// `multiplier`. Used to widen startup spread after a revocation; a
    /// multiplier of 1 is identical to `sample`. Results are kept positive.
    pub fn sample_scaled<R: Rng + ?Sized>(&self, rng: &mut R, multiplier: f64) -> f64 {
        let draw = self.sample(rng);
        if multiplier == 1.0 {
            return draw;
        }
        let mean = self.mean_total();
        (mean + multiplier * (draw - mean)).max(f64::MIN_POSITIVE)
    }
}

/// Startup models keyed by (GPU, region, offering).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<StartupModel>", into = "Vec<StartupModel>")]
pub struct StartupTable {
    by_key: BTreeMap<(String, String, Offering), StartupModel>,
}

impl From<Vec<StartupModel>> for StartupTable {
    fn from(v: Vec<StartupModel>) -> Self {
        Self { by_key: v.into_iter().map(|m| ((m.gpu_name.clone(), m.region.clone(), m.offering), m)).collect() }
    }
}

impl From<StartupTable> for Vec<StartupModel> {
    fn from(t: StartupTable) -> Self {
        t.by_key.into_values().collect()
    }
}

impl StartupTable {
    pub fn build(records: &[StartupRecord]) -> Result<Self> {
        let mut groups: BTreeMap<(String, String, Offering), Vec<[f64; 3]>> = BTreeMap::new();
        for r in records {
            groups.entry((r.gpu_name.clone(), r.region.clone(), r.offering)).or_default().push(r.stages());
        }
        let mut by_key = BTreeMap::new();
        for ((g, reg, off), samples) in groups {
            let m = StartupModel::new(&g, &reg, off, samples)?;
            by_key.insert((g, reg, off), m);
        }
        Ok(Self { by_key })
    }

    pub fn get(&self, gpu_name: &str, region: &str, offering: Offering) -> Option<&StartupModel> {
        self.by_key.get(&(gpu_name.to_string(), region.to_string(), offering))
    }

    /// All regions of one GPU and offering merged, for regions without
    /// their own measurements.
    pub fn pooled(&self, gpu_name: &str, offering: Offering) -> Option<StartupModel> {
        let samples: Vec<[f64; 3]> = self
            .by_key
            .values()
            .filter(|m| m.gpu_name == gpu_name && m.offering == offering)
            .flat_map(|m| m.samples.iter().copied())
            .collect();
        StartupModel::new(gpu_name, "*", offering, samples).ok()
    }

    /// Exact match first, then the pooled model for the GPU.
    pub fn lookup(&self, gpu_name: &str, region: &str, offering: Offering) -> Result<StartupModel> {
        self.get(gpu_name, region, offering)
            .cloned()
            .or_else(|| self.pooled(gpu_name, offering))
            .ok_or_else(|| RevocationError::EmptyStartupModel(format!("{gpu_name}/{region}/{offering}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &StartupModel> {
        self.by_key.values()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    /// A newly requested server joining training.
    Cold,
    /// Restarting the framework on an already running server.
    Warm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplacementOverhead {
    pub cold_start_sec: f64,
    pub warm_start_sec: f64,
}

/// Cold and warm start overheads per CNN.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplacementOverheadModel {
    entries: BTreeMap<String, ReplacementOverhead>,
}

impl ReplacementOverheadModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cnn_name: &str, cold_start_sec: f64, warm_start_sec: f64) -> Result<()> {
        if !(warm_start_sec > 0.0 && cold_start_sec >= warm_start_sec && cold_start_sec.is_finite()) {
            return Err(RevocationError::InvalidRecord(format!(
                "{cnn_name}: need cold >= warm > 0, got cold {cold_start_sec}, warm {warm_start_sec}"
            )));
        }
        self.entries.insert(cnn_name.into(), ReplacementOverhead { cold_start_sec, warm_start_sec });
        Ok(())
    }

    pub fn get(&self, cnn_name: &str) -> Option<ReplacementOverhead> {
        self.entries.get(cnn_name).copied()
    }

    pub fn cnn_names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// T_s for `cnn`.
pub fn replacement_overhead(model: &ReplacementOverheadModel, cnn: &str, kind: StartKind) -> Result<f64> {
    let o = model.get(cnn).ok_or_else(|| RevocationError::UnknownCnn(cnn.into()))?;
    Ok(match kind {
        StartKind::Cold => o.cold_start_sec,
        StartKind::Warm => o.warm_start_sec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_record_startup() {
        let m = StartupModel::new("K80", "r", Offering::Transient, vec![[10.0, 20.0, 30.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..20).all(|_| m.sample(&mut rng) == 60.0));
        assert_eq!(m.sample_scaled(&mut rng, 3.0), 60.0);
    }

    #[test]
    fn empty_startup_rejected() {
        assert!(StartupModel::new("K80", "r", Offering::Transient, vec![]).is_err());
        assert!(StartupTable::default().lookup("K80", "r", Offering::Transient).is_err());
    }

    #[test]
    fn pooled_fallback() {
        let recs: Vec<StartupRecord> = ["a", "b"]
            .iter()
            .map(|r| StartupRecord {
                gpu_name: "K80".into(),
                region: (*r).into(),
                offering: Offering::Transient,
                provisioning_sec: 1.0,
                staging_sec: 2.0,
                running_sec: 3.0,
            })
            .collect();
        let t = StartupTable::build(&recs).unwrap();
        assert_eq!(t.lookup("K80", "c", Offering::Transient).unwrap().samples().len(), 2);
        assert_eq!(t.lookup("K80", "a", Offering::Transient).unwrap().samples().len(), 1);
    }

    #[test]
    fn replacement_lookup() {
        let mut m = ReplacementOverheadModel::new();
        m.insert("ResNet-15", 75.6, 14.8).unwrap();
        assert_eq!(replacement_overhead(&m, "ResNet-15", StartKind::Cold).unwrap(), 75.6);
        assert_eq!(replacement_overhead(&m, "ResNet-15", StartKind::Warm).unwrap(), 14.8);
        assert!(matches!(replacement_overhead(&m, "x", StartKind::Cold), Err(RevocationError::UnknownCnn(_))));
        assert!(m.insert("bad", 1.0, 2.0).is_err());
    }
}
