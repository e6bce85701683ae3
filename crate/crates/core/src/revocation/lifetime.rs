use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, RevocationError};

/// Transient servers are reclaimed after at most 24 hours.
pub const MAX_LIFETIME_SEC: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workload {
    Idle,
    Stressed,
}

impl std::str::FromStr for Workload {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "idle" => Ok(Self::Idle),
            "stressed" => Ok(Self::Stressed),
            other => Err(format!("unknown workload {other:?}, expected idle or stressed")),
        }
    }
}

/// One observed transient server.
#[derive(Debug, Clone, PartialEq)]
pub struct RevocationRecord {
    pub gpu_name: String,
    pub region: String,
    pub launch_time: DateTime<Utc>,
    pub lifetime_sec: f64,
    /// The server survived to the 24 h limit.
    pub censored: bool,
    pub workload: Workload,
}

impl RevocationRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime_sec >= 0.0 && self.lifetime_sec.is_finite()) {
            return Err(RevocationError::InvalidRecord(format!(
                "lifetime {} is not a valid duration",
                self.lifetime_sec
            )));
        }
        if self.censored && self.lifetime_sec != MAX_LIFETIME_SEC {
            return Err(RevocationError::InvalidRecord(format!(
                "censored record must have lifetime {MAX_LIFETIME_SEC}, got {}",
                self.lifetime_sec
            )));
        }
        if !self.censored && self.lifetime_sec >= MAX_LIFETIME_SEC {
            return Err(RevocationError::InvalidRecord(format!(
                "revoked record must have lifetime below {MAX_LIFETIME_SEC}, got {}",
                self.lifetime_sec
            )));
        }
        Ok(())
    }

    pub fn revoked_at(&self) -> Option<DateTime<Utc>> {
        if self.censored {
            return None;
        }
        Some(self.launch_time + chrono::Duration::milliseconds((self.lifetime_sec * 1000.0).round() as i64))
    }
}

/// Empirical lifetime CDF for one (GPU, region), with censored servers
/// counted in the total but never revoked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr")]
pub struct LifetimeDistribution {
    pub gpu_name: String,
    pub region: String,
    /// Sorted ascending.
    revocation_lifetimes: Vec<f64>,
    total_count: usize,
}

#[derive(Deserialize)]
struct DistributionRepr {
    gpu_name: String,
    region: String,
    revocation_lifetimes: Vec<f64>,
    total_count: usize,
}

impl TryFrom<DistributionRepr> for LifetimeDistribution {
    type Error = RevocationError;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        let censored = r.total_count.checked_sub(r.revocation_lifetimes.len()).ok_or_else(|| {
            RevocationError::InvalidRecord(format!(
                "total_count {} is below the {} recorded revocations",
                r.total_count,
                r.revocation_lifetimes.len()
            ))
        })?;
        Self::from_lifetimes(r.gpu_name, r.region, r.revocation_lifetimes, censored)
    }
}

impl LifetimeDistribution {
    pub fn from_lifetimes(
        gpu_name: impl Into<String>,
        region: impl Into<String>,
        mut revocation_lifetimes: Vec<f64>,
        censored_count: usize,
    ) -> Result<Self> {
        let (gpu_name, region) = (gpu_name.into(), region.into());
        if let Some(bad) = revocation_lifetimes.iter().find(|&&l| !(0.0..MAX_LIFETIME_SEC).contains(&l)) {
            return Err(RevocationError::InvalidRecord(format!("revocation lifetime {bad} outside [0, 86400)")));
        }
        let total_count = revocation_lifetimes.len() + censored_count;
        if total_count == 0 {
            return Err(RevocationError::EmptyGroup { gpu_name, region });
        }
        revocation_lifetimes.sort_by(f64::total_cmp);
        Ok(Self { gpu_name, region, revocation_lifetimes, total_count })
    }

    pub fn revocation_lifetimes(&self) -> &[f64] {
        &self.revocation_lifetimes
    }

    pub fn total_count(&self) -> usize {
        self.total_count
    }

    pub fn revoked_count(&self) -> usize {
        self.revocation_lifetimes.len()
    }

    /// Fraction of uncensored lifetimes at or below `t` seconds, over all servers.
    pub fn cdf(&self, t: f64) -> f64 {
        let n = self.revocation_lifetimes.partition_point(|&l| l <= t);
        n as f64 / self.total_count as f64
    }

    pub fn revoked_fraction(&self) -> f64 {
        self.revoked_count() as f64 / self.total_count as f64
    }

    /// Mean lifetime of the servers that were revoked. Censored servers are
    /// left out, so this is not the expected lifetime of a fresh server.
    pub fn mean_time_to_revocation(&self) -> Option<f64> {
        if self.revocation_lifetimes.is_empty() {
            return None;
        }
        Some(self.revocation_lifetimes.iter().sum::<f64>() / self.revocation_lifetimes.len() as f64)
    }

    /// Draws one lifetime by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LifetimeSample {
        let idx = rng.gen_range(0..self.total_count);
        match self.revocation_lifetimes.get(idx) {
            Some(&l) => LifetimeSample::RevokedAt(l),
            None => LifetimeSample::Survived24h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LifetimeSample {
    RevokedAt(f64),
    Survived24h,
}

/// Pr(revoked within `duration_sec`), capped at the 24 h limit.
pub fn prob_revoked_within(dist: &LifetimeDistribution, duration_sec: f64) -> f64 {
    if duration_sec < 0.0 {
        return 0.0;
    }
    dist.cdf(duration_sec.min(MAX_LIFETIME_SEC))
}

/// N_r: expected revocations among the given workers within `duration_sec`.
pub fn expected_revocations(dists: &[&LifetimeDistribution], duration_sec: f64) -> f64 {
    dists.iter().map(|d| prob_revoked_within(d, duration_sec)).sum()
}

/// Builds the distribution for one (GPU, region) from raw records.
pub fn build_lifetime_distribution(
    records: &[RevocationRecord],
    gpu_name: &str,
    region: &str,
) -> Result<LifetimeDistribution> {
    let mut lifetimes = Vec::new();
    let mut censored = 0;
    for r in records.iter().filter(|r| r.gpu_name == gpu_name && r.region == region) {
        r.validate()?;
        if r.censored {
            censored += 1;
        } else {
            lifetimes.push(r.lifetime_sec);
        }
    }
    LifetimeDistribution::from_lifetimes(gpu_name, region, lifetimes, censored)
}

/// Distributions for every (GPU, region) present in a record set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<LifetimeDistribution>", into = "Vec<LifetimeDistribution>")]
pub struct LifetimeTable {
    by_key: BTreeMap<(String, String), LifetimeDistribution>,
}

impl From<Vec<LifetimeDistribution>> for LifetimeTable {
    fn from(v: Vec<LifetimeDistribution>) -> Self {
        Self { by_key: v.into_iter().map(|d| ((d.gpu_name.clone(), d.region.clone()), d)).collect() }
    }
}

impl From<LifetimeTable> for Vec<LifetimeDistribution> {
    fn from(t: LifetimeTable) -> Self {
        t.by_key.into_values().collect()
    }
}

impl LifetimeTable {
    pub fn build(records: &[RevocationRecord]) -> Result<Self> {
        let mut keys: Vec<(String, String)> = records.iter().map(|r| (r.gpu_name.clone(), r.region.clone())).collect();
        keys.sort();
        keys.dedup();
        let mut by_key = BTreeMap::new();
        for (g, reg) in keys {
            let d = build_lifetime_distribution(records, &g, &reg)?;
            by_key.insert((g, reg), d);
        }
        Ok(Self { by_key })
    }

    pub fn get(&self, gpu_name: &str, region: &str) -> Option<&LifetimeDistribution> {
        self.by_key.get(&(gpu_name.to_string(), region.to_string()))
    }

    pub fn require(&self, gpu_name: &str, region: &str) -> Result<&LifetimeDistribution> {
        self.get(gpu_name, region)
            .ok_or_else(|| RevocationError::EmptyGroup { gpu_name: gpu_name.into(), region: region.into() })
    }

    pub fn iter(&self) -> impl Iterator<Item = &LifetimeDistribution> {
        self.by_key.values()
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn toy_cdf_counts() {
        let d = LifetimeDistribution::from_lifetimes("K80", "r", vec![10800.0, 3600.0, 7200.0], 0).unwrap();
        assert_eq!(d.cdf(7200.0), 2.0 / 3.0);
        assert_eq!(d.cdf(0.0), 0.0);
        assert_eq!(prob_revoked_within(&d, 7200.0), 2.0 / 3.0);
        assert_eq!(prob_revoked_within(&d, 0.0), 0.0);
        assert_eq!(d.mean_time_to_revocation(), Some(7200.0));
    }

    #[test]
    fn all_censored_never_revokes() {
        let d = LifetimeDistribution::from_lifetimes("K80", "r", vec![], 5).unwrap();
        assert_eq!(d.cdf(MAX_LIFETIME_SEC), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| d.sample(&mut rng) == LifetimeSample::Survived24h));
        assert_eq!(d.mean_time_to_revocation(), None);
    }

    #[test]
    fn single_lifetime_always_sampled() {
        let d = LifetimeDistribution::from_lifetimes("K80", "r", vec![3600.0], 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..100).all(|_| d.sample(&mut rng) == LifetimeSample::RevokedAt(3600.0)));
    }

    #[test]
    fn expected_revocations_sums() {
        let d = LifetimeDistribution::from_lifetimes("K80", "r", vec![100.0], 3).unwrap();
        assert_eq!(expected_revocations(&[&d, &d, &d, &d], 1000.0), 1.0);
        assert_eq!(expected_revocations(&[], 1000.0), 0.0);
    }

    #[test]
    fn empty_group_and_bad_records() {
        assert!(matches!(build_lifetime_distribution(&[], "K80", "x"), Err(RevocationError::EmptyGroup { .. })));
        let rec = RevocationRecord {
            gpu_name: "K80".into(),
            region: "x".into(),
            launch_time: DateTime::UNIX_EPOCH,
            lifetime_sec: 100.0,
            censored: true,
            workload: Workload::Idle,
        };
        assert!(rec.validate().is_err());
    }

    #[test]
    fn table_serializes_as_list() {
        let d = LifetimeDistribution::from_lifetimes("K80", "r", vec![100.0], 1).unwrap();
        let t = LifetimeTable::from(vec![d]);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.starts_with('['));
        let back: LifetimeTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
