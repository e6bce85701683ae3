use super::{DataError, Result};
use crate::simulator::SpeedSample;

/// Parses `time_sec,steps_per_sec[,worker_i...]` lines. The header is
/// optional; empty worker fields mean the slot was not measured.
pub fn parse_speed_stream(text: &str, source: &str) -> Result<Vec<SpeedSample>> {
    let err =
        |line: usize, message: String| DataError::Schema { source_name: source.into(), line: line as u64, message };
    let mut out = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(err(line, format!("expected at least 2 fields, found {}", fields.len())));
        }
        if fields[0] == "time_sec" {
            if fields[1] != "steps_per_sec" || !out.is_empty() {
                return Err(err(line, format!("unexpected header {raw:?}")));
            }
            width = Some(fields.len());
            continue;
        }
        match width {
            Some(w) if w != fields.len() => {
                return Err(err(line, format!("expected {w} fields, found {}", fields.len())));
            }
            None => width = Some(fields.len()),
            _ => {}
        }
        let num = |idx: usize, name: &str| -> Result<f64> {
            fields[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| err(line, format!("{name}: expected a nonnegative number, got {:?}", fields[idx])))
        };
        let end_time_sec = num(0, "time_sec")?;
        let steps_per_sec = num(1, "steps_per_sec")?;
        let mut worker_speeds = Vec::with_capacity(fields.len() - 2);
        for idx in 2..fields.len() {
            worker_speeds.push(if fields[idx].is_empty() { None } else { Some(num(idx, "worker speed")?) });
        }
        if let Some(prev) = out.last().map(|s: &SpeedSample| s.end_time_sec) {
            if end_time_sec < prev {
                return Err(err(line, format!("time {end_time_sec} goes backwards from {prev}")));
            }
        }
        out.push(SpeedSample { end_time_sec, steps_per_sec, worker_speeds });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::format_speed_series;

    #[test]
    fn round_trips_simulator_output() {
        let series = vec![
            SpeedSample { end_time_sec: 10.5, steps_per_sec: 9.1, worker_speeds: vec![Some(4.5), None] },
            SpeedSample { end_time_sec: 21.0, steps_per_sec: 9.25, worker_speeds: vec![Some(4.6), Some(4.65)] },
        ];
        let text = format_speed_series(&series, true);
        assert_eq!(parse_speed_stream(&text, "s").unwrap(), series);
    }

    #[test]
    fn bad_lines_are_located() {
        let err = parse_speed_stream("time_sec,steps_per_sec\n1,2\n2,x\n", "s").unwrap_err();
        assert_eq!(err.to_string(), "s:3: steps_per_sec: expected a nonnegative number, got \"x\"");
        assert!(parse_speed_stream("5,1\n4,1\n", "s").is_err());
        assert!(parse_speed_stream("5,1,2\n6,1\n", "s").is_err());
    }
}
