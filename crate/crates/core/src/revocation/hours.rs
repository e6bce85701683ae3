use std::collections::BTreeMap;

use chrono::{FixedOffset, Timelike};

use super::{Result, RevocationError, RevocationRecord};

/// Fixed UTC offsets per region. Daylight saving is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTimezones {
    offsets: BTreeMap<String, FixedOffset>,
}

impl Default for RegionTimezones {
    fn default() -> Self {
        let mut t = Self { offsets: BTreeMap::new() };
        for (region, hours) in [
            ("us-east1", -5),
            ("us-central1", -6),
            ("us-west1", -8),
            ("europe-west1", 1),
            ("europe-west4", 1),
            ("asia-east1", 8),
        ] {
            t.set(region, hours * 3600).expect("static offsets are valid");
        }
        t
    }
}

impl RegionTimezones {
    pub fn empty() -> Self {
        Self { offsets: BTreeMap::new() }
    }

    pub fn set(&mut self, region: &str, offset_sec: i32) -> Result<()> {
        let off = FixedOffset::east_opt(offset_sec)
            .ok_or_else(|| RevocationError::InvalidParameter(format!("UTC offset {offset_sec} s out of range")))?;
        self.offsets.insert(region.into(), off);
        Ok(())
    }

    pub fn get(&self, region: &str) -> Option<FixedOffset> {
        self.offsets.get(region).copied()
    }
}

/// Counts revocations by the local hour at which they happened.
pub fn hour_of_day_histogram(records: &[RevocationRecord], zones: &RegionTimezones) -> Result<[u32; 24]> {
    let mut hist = [0u32; 24];
    for r in records {
        let Some(at) = r.revoked_at() else { continue };
        let tz = zones.get(&r.region).ok_or_else(|| RevocationError::UnknownRegion(r.region.clone()))?;
        hist[at.with_timezone(&tz).hour() as usize] += 1;
    }
    Ok(hist)
}
