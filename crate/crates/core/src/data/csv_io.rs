use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use csv::{ReaderBuilder, StringRecord, Trim};

use super::{read_text, DataError, Result};
use crate::perf::{CheckpointFiles, CheckpointObservation, ClusterObservation, CnnModel, GpuSpec, StepObservation};
use crate::revocation::{Offering, ReplacementOverheadModel, RevocationRecord, StartupRecord, Workload};

pub const STEP_TIME_HEADER: &str = "cnn_name,cnn_gflops,gpu_name,gpu_tflops,step_time_sec";
pub const CHECKPOINT_HEADER: &str = "cnn_name,data_mb,meta_mb,index_mb,checkpoint_sec";
pub const CLUSTER_HEADER: &str = "gpu_mix,k80_count,p100_count,v100_count,ps_count,cnn_name,cluster_steps_per_sec";
pub const REVOCATION_HEADER: &str = "gpu_name,region,launch_time_iso8601,lifetime_sec,censored,workload";
pub const STARTUP_HEADER: &str = "gpu_name,region,offering,provisioning_sec,staging_sec,running_sec";
pub const REPLACEMENT_HEADER: &str = "cnn_name,cold_start_sec,warm_start_sec";

struct Row<'a> {
    source: &'a str,
    line: u64,
    rec: StringRecord,
}

impl Row<'_> {
    fn err(&self, message: impl Into<String>) -> DataError {
        DataError::Schema { source_name: self.source.into(), line: self.line, message: message.into() }
    }

    fn str(&self, i: usize) -> &str {
        &self.rec[i]
    }

    fn parse<T: FromStr>(&self, i: usize, name: &str) -> Result<T> {
        self.rec[i].parse().map_err(|_| self.err(format!("column {name}: cannot parse {:?}", &self.rec[i])))
    }

    fn real(&self, i: usize, name: &str) -> Result<f64> {
        let v: f64 = self.parse(i, name)?;
        if !v.is_finite() {
            return Err(self.err(format!("column {name}: value must be finite")));
        }
        Ok(v)
    }

    fn nonneg(&self, i: usize, name: &str) -> Result<f64> {
        let v = self.real(i, name)?;
        if v < 0.0 {
            return Err(self.err(format!("column {name}: value must be nonnegative, got {v}")));
        }
        Ok(v)
    }

    fn positive(&self, i: usize, name: &str) -> Result<f64> {
        let v = self.real(i, name)?;
        if v <= 0.0 {
            return Err(self.err(format!("column {name}: value must be positive, got {v}")));
        }
        Ok(v)
    }

    fn text(&self, i: usize, name: &str) -> Result<String> {
        let s = self.str(i);
        if s.is_empty() {
            return Err(self.err(format!("column {name}: empty value")));
        }
        Ok(s.to_string())
    }
}

/// Checks the header exactly and returns the data rows. Lines starting with
/// `#` are comments.
fn rows<'a>(text: &str, source: &'a str, header: &str) -> Result<Vec<Row<'a>>> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let want: Vec<&str> = header.split(',').collect();
    let mut out = Vec::new();
    let mut seen_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            DataError::Schema { source_name: source.into(), line, message: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if !seen_header {
            let got: Vec<&str> = rec.iter().collect();
            if got != want {
                return Err(DataError::Schema {
                    source_name: source.into(),
                    line,
                    message: format!("expected header {header:?}, found {:?}", got.join(",")),
                });
            }
            seen_header = true;
            continue;
        }
        if rec.len() != want.len() {
            return Err(DataError::Schema {
                source_name: source.into(),
                line,
                message: format!("expected {} fields, found {}", want.len(), rec.len()),
            });
        }
        out.push(Row { source, line, rec });
    }
    if !seen_header {
        return Err(DataError::Schema {
            source_name: source.into(),
            line: 1,
            message: format!("missing header {header:?}"),
        });
    }
    if out.is_empty() {
        return Err(DataError::Schema { source_name: source.into(), line: 2, message: "no data rows".into() });
    }
    Ok(out)
}

fn read_file<T>(path: &Path, parse: fn(&str, &str) -> Result<T>) -> Result<T> {
    parse(&read_text(path)?, &path.display().to_string())
}

pub fn parse_step_times(text: &str, source: &str) -> Result<Vec<StepObservation>> {
    rows(text, source, STEP_TIME_HEADER)?
        .iter()
        .map(|r| {
            let cnn = CnnModel::new(r.text(0, "cnn_name")?, r.positive(1, "cnn_gflops")?)
                .map_err(|e| r.err(e.to_string()))?;
            let gpu =
                GpuSpec::new(r.text(2, "gpu_name")?, r.positive(3, "gpu_tflops")?).map_err(|e| r.err(e.to_string()))?;
            Ok(StepObservation { cnn, gpu, step_time_sec: r.positive(4, "step_time_sec")? })
        })
        .collect()
}

pub fn parse_checkpoints(text: &str, source: &str) -> Result<Vec<CheckpointObservation>> {
    rows(text, source, CHECKPOINT_HEADER)?
        .iter()
        .map(|r| {
            let files =
                CheckpointFiles::new(r.nonneg(1, "data_mb")?, r.nonneg(2, "meta_mb")?, r.nonneg(3, "index_mb")?)
                    .map_err(|e| r.err(e.to_string()))?;
            Ok(CheckpointObservation {
                cnn_name: r.text(0, "cnn_name")?,
                files,
                checkpoint_sec: r.positive(4, "checkpoint_sec")?,
            })
        })
        .collect()
}

pub fn parse_cluster_speeds(text: &str, source: &str) -> Result<Vec<ClusterObservation>> {
    rows(text, source, CLUSTER_HEADER)?
        .iter()
        .map(|r| {
            let obs = ClusterObservation {
                gpu_mix: r.text(0, "gpu_mix")?,
                k80_count: r.parse(1, "k80_count")?,
                p100_count: r.parse(2, "p100_count")?,
                v100_count: r.parse(3, "v100_count")?,
                ps_count: r.parse(4, "ps_count")?,
                cnn_name: r.text(5, "cnn_name")?,
                cluster_steps_per_sec: r.positive(6, "cluster_steps_per_sec")?,
            };
            if obs.worker_count() == 0 {
                return Err(r.err("cluster has no workers"));
            }
            if obs.ps_count == 0 {
                return Err(r.err("column ps_count: must be at least 1"));
            }
            Ok(obs)
        })
        .collect()
}

pub fn parse_revocations(text: &str, source: &str) -> Result<Vec<RevocationRecord>> {
    rows(text, source, REVOCATION_HEADER)?
        .iter()
        .map(|r| {
            let launch_time: DateTime<Utc> = DateTime::parse_from_rfc3339(r.str(2))
                .map_err(|e| r.err(format!("column launch_time_iso8601: {e}")))?
                .with_timezone(&Utc);
            let censored = match r.str(4) {
                "true" => true,
                "false" => false,
                other => return Err(r.err(format!("column censored: expected true or false, got {other:?}"))),
            };
            let rec = RevocationRecord {
                gpu_name: r.text(0, "gpu_name")?,
                region: r.text(1, "region")?,
                launch_time,
                lifetime_sec: r.nonneg(3, "lifetime_sec")?,
                censored,
                workload: r.str(5).parse::<Workload>().map_err(|e| r.err(format!("column workload: {e}")))?,
            };
            rec.validate().map_err(|e| r.err(e.to_string()))?;
            Ok(rec)
        })
        .collect()
}

pub fn parse_startups(text: &str, source: &str) -> Result<Vec<StartupRecord>> {
    rows(text, source, STARTUP_HEADER)?
        .iter()
        .map(|r| {
            Ok(StartupRecord {
                gpu_name: r.text(0, "gpu_name")?,
                region: r.text(1, "region")?,
                offering: r.str(2).parse::<Offering>().map_err(|e| r.err(format!("column offering: {e}")))?,
                provisioning_sec: r.positive(3, "provisioning_sec")?,
                staging_sec: r.positive(4, "staging_sec")?,
                running_sec: r.positive(5, "running_sec")?,
            })
        })
        .collect()
}

pub fn parse_replacement(text: &str, source: &str) -> Result<ReplacementOverheadModel> {
    let mut model = ReplacementOverheadModel::new();
    for r in rows(text, source, REPLACEMENT_HEADER)? {
        let name = r.text(0, "cnn_name")?;
        if model.get(&name).is_some() {
            return Err(r.err(format!("duplicate CNN {name:?}")));
        }
        model
            .insert(&name, r.positive(1, "cold_start_sec")?, r.positive(2, "warm_start_sec")?)
            .map_err(|e| r.err(e.to_string()))?;
    }
    Ok(model)
}

pub fn read_step_times(path: &Path) -> Result<Vec<StepObservation>> {
    read_file(path, parse_step_times)
}

pub fn read_checkpoints(path: &Path) -> Result<Vec<CheckpointObservation>> {
    read_file(path, parse_checkpoints)
}

pub fn read_cluster_speeds(path: &Path) -> Result<Vec<ClusterObservation>> {
    read_file(path, parse_cluster_speeds)
}

pub fn read_revocations(path: &Path) -> Result<Vec<RevocationRecord>> {
    read_file(path, parse_revocations)
}

pub fn read_startups(path: &Path) -> Result<Vec<StartupRecord>> {
    read_file(path, parse_startups)
}

pub fn read_replacement(path: &Path) -> Result<ReplacementOverheadModel> {
    read_file(path, parse_replacement)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let text = "# note\ncnn_name,cnn_gflops,gpu_name,gpu_tflops,step_time_sec\nResNet-32,1.54,K80,4.11,0.2193\n";
        let v = parse_step_times(text, "s.csv").unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].gpu.name, "K80");
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let err = parse_step_times("", "s.csv").unwrap_err();
        assert!(err.to_string().starts_with("s.csv:1:"), "{err}");
        let err = parse_step_times("cnn,gflops\n", "s.csv").unwrap_err();
        assert!(err.to_string().contains("expected header"), "{err}");
        let text = format!("{STEP_TIME_HEADER}\na,1,K80,4.11,0.2\nb,x,K80,4.11,0.2\n");
        let err = parse_step_times(&text, "s.csv").unwrap_err();
        assert_eq!(err.to_string(), "s.csv:3: column cnn_gflops: cannot parse \"x\"");
        let text = format!("{STEP_TIME_HEADER}\na,1,K80,4.11\n");
        assert!(parse_step_times(&text, "s.csv").unwrap_err().to_string().starts_with("s.csv:2:"));
    }

    #[test]
    fn revocation_rows_are_validated() {
        let text = format!("{REVOCATION_HEADER}\nK80,us-west1,2019-10-02T14:00:00Z,100,true,idle\n");
        assert!(parse_revocations(&text, "r.csv").is_err());
        let text = format!("{REVOCATION_HEADER}\nK80,us-west1,2019-10-02T14:00:00Z,100,false,busy\n");
        assert!(parse_revocations(&text, "r.csv").unwrap_err().to_string().contains("workload"));
        let text = format!("{REVOCATION_HEADER}\nK80,us-west1,2019-10-02T14:00:00Z,100,false,idle\n");
        assert_eq!(parse_revocations(&text, "r.csv").unwrap()[0].lifetime_sec, 100.0);
    }
}
