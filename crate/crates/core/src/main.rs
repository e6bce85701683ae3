use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use transim::advisor::{
    predict_training_time, recommend_mitigation, AlertMode, Classification, Detector, DetectorConfig,
    MitigationContext, DEFAULT_THRESHOLD, DEFAULT_WARMUP_SEC,
};
use transim::data::{
    cluster_speed_csv, lifetime_cdf_csv, parse_speed_stream, read_checkpoints, read_cluster_speeds, read_replacement,
    read_revocations, read_startups, read_step_times, revocation_hours_csv, startup_breakdown_csv, ModelBundle,
    Scenario, SourceDigest,
};
use transim::perf::{
    calibrate_ps_capacity, evaluate_checkpoint_variant, evaluate_step_time_variant, fit_checkpoint_model,
    fit_step_time_model, CheckpointVariant, FitOptions, FitReport, StepObservation, StepTimeVariant,
};
use transim::revocation::{hour_of_day_histogram, LifetimeTable, RegionTimezones, StartupTable};
use transim::simulator::{format_speed_series, format_trace, replay_many, simulate_many, RunStats, SimResult};

/// Minimum records for a scored fit (4:1 split plus cross-validation).
const MIN_REPORT_RECORDS: usize = 5;
const STEP_TIME_RANGE_SEC: (f64, f64) = (0.001, 100.0);

#[derive(Parser)]
#[command(name = "transim", version, about = "Training-time planning for transient GPU clusters")]
struct Cli {
    /// Output format for results on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Fit step-time models from step_times.csv into a bundle.
    FitSpeed(FitSpeedArgs),
    /// Fit checkpoint-time models from checkpoints.csv into a bundle.
    FitCheckpoint(FitCheckpointArgs),
    /// Build lifetime, startup and replacement models into a bundle.
    BuildRevocation(BuildRevocationArgs),
    /// Predict total training time for a scenario.
    Predict(ScenarioArgs),
    /// Simulate a scenario one or more times.
    Simulate(SimulateArgs),
    /// Watch a speed stream for bottlenecks.
    Detect(DetectArgs),
    /// Write plot-ready CSV series from a bundle.
    Report(ReportArgs),
}

#[derive(Args)]
struct FitCommon {
    /// Measurement CSV.
    #[arg(long)]
    input: PathBuf,
    /// Bundle to update; created when missing.
    #[arg(long)]
    bundle: PathBuf,
    /// Variant name, or "all".
    #[arg(long, default_value = "all")]
    variant: String,
    /// Seed for the train/test split and folds.
    #[arg(long)]
    seed: u64,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    k: usize,
}

#[derive(Args)]
struct FitSpeedArgs {
    #[command(flatten)]
    common: FitCommon,
    /// Restrict GPU-specific variants to this GPU.
    #[arg(long)]
    gpu: Option<String>,
    /// cluster_speeds.csv for parameter-server cap calibration.
    #[arg(long)]
    cluster_speeds: Option<PathBuf>,
    /// Relative shortfall below the baseline sum that marks a saturated cluster.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    saturation_threshold: f64,
    /// Accept step times outside (0.001, 100) seconds.
    #[arg(long)]
    allow_unusual_units: bool,
}

#[derive(Args)]
struct FitCheckpointArgs {
    #[command(flatten)]
    common: FitCommon,
}

#[derive(Args)]
struct BuildRevocationArgs {
    /// revocations.csv
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    bundle: PathBuf,
    /// startups.csv
    #[arg(long)]
    startups: Option<PathBuf>,
    /// replacement.csv
    #[arg(long)]
    replacement: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Scenario TOML.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Overrides the scenario seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the first run's event trace here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the first run's speed series here.
    #[arg(long)]
    speed_out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Speed stream CSV, or "-" for stdin.
    #[arg(long)]
    stream: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_WARMUP_SEC)]
    warmup_sec: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::PerWindow)]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PerWindow,
    RunningMean,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Spacing of the lifetime CDF series in hours.
    #[arg(long, default_value_t = 0.25)]
    cdf_step_hours: f64,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    let format = cli.format;
    match cli.command {
        Command::FitSpeed(a) => fit_speed(a, format),
        Command::FitCheckpoint(a) => fit_checkpoint(a, format),
        Command::BuildRevocation(a) => build_revocation(a, format),
        Command::Predict(a) => predict(a, format),
        Command::Simulate(a) => simulate(a, format),
        Command::Detect(a) => detect(a, format),
        Command::Report(a) => report(a),
    }
}

fn emit(format: Format, text: String, value: serde_json::Value) -> Result<String> {
    match format {
        Format::Text => Ok(text),
        Format::Json => Ok(serde_json::to_string_pretty(&value)? + "\n"),
    }
}

fn parse_variants<V: Copy + std::str::FromStr<Err = String>>(name: &str, all: &[V]) -> Result<Vec<V>> {
    if name == "all" {
        return Ok(all.to_vec());
    }
    name.parse::<V>().map(|v| vec![v]).map_err(anyhow::Error::msg)
}

fn check_units(records: &[StepObservation]) -> Result<()> {
    let (lo, hi) = STEP_TIME_RANGE_SEC;
    if let Some(r) = records.iter().find(|r| !(r.step_time_sec > lo && r.step_time_sec < hi)) {
        bail!(
            "step time {} s for {} on {} is outside ({lo}, {hi}) s; check the units or pass --allow-unusual-units",
            r.step_time_sec,
            r.cnn.name,
            r.gpu.name
        );
    }
    Ok(())
}

fn table_header(out: &mut String) {
    let _ = writeln!(
        out,
        "{:<34} {:<20} {:>12} {:>12} {:>10}",
        "Model", "Input feature", "K-fold MAE", "Test MAE", "Test MAPE"
    );
}

fn table_row(out: &mut String, label: &str, feature: &str, report: Option<&FitReport>) {
    match report {
        Some(r) => {
            let _ = writeln!(
                out,
                "{label:<34} {feature:<20} {:>12.6} {:>12.6} {:>9.2}%",
                r.kfold.mean_mae, r.test_mae, r.test_mape
            );
        }
        None => {
            let _ = writeln!(out, "{label:<34} {feature:<20} {:>12} {:>12} {:>10}", "n/a", "n/a", "n/a");
        }
    }
}

fn fit_options(k: usize) -> Result<FitOptions> {
    if k < 2 {
        bail!("--k must be at least 2, got {k}");
    }
    Ok(FitOptions { k, ..FitOptions::default() })
}

fn fit_speed(a: FitSpeedArgs, format: Format) -> Result<String> {
    let c = &a.common;
    let records = read_step_times(&c.input)?;
    if !a.allow_unusual_units {
        check_units(&records)?;
    }
    let variants = parse_variants(&c.variant, &StepTimeVariant::ALL)?;
    let opts = fit_options(c.k)?;
    let mut bundle = ModelBundle::load_or_default(&c.bundle)?;

    let mut by_gpu: BTreeMap<String, Vec<StepObservation>> = BTreeMap::new();
    for r in &records {
        by_gpu.entry(r.gpu.name.clone()).or_default().push(r.clone());
        bundle.gpus.insert(r.gpu.name.clone(), r.gpu.clone());
        bundle.cnns.insert(r.cnn.name.clone(), r.cnn.clone());
    }
    if let Some(g) = &a.gpu {
        if !by_gpu.contains_key(g) {
            bail!("no step-time records for GPU {g}");
        }
    }

    let mut text = String::new();
    table_header(&mut text);
    let mut reports = Vec::new();
    for variant in variants {
        let groups: Vec<(Option<&str>, &[StepObservation])> = if variant.is_gpu_specific() {
            by_gpu
                .iter()
                .filter(|(g, _)| a.gpu.as_deref().is_none_or(|want| want == g.as_str()))
                .map(|(g, v)| (Some(g.as_str()), v.as_slice()))
                .collect()
        } else {
            vec![(None, records.as_slice())]
        };
        for (gpu, recs) in groups {
            let model = fit_step_time_model(recs, variant, &opts, c.seed)
                .with_context(|| format!("fitting {}", variant.label(gpu)))?;
            bundle.step_time_models.insert(ModelBundle::step_key(variant, gpu), model);
            let report = if recs.len() >= MIN_REPORT_RECORDS {
                Some(evaluate_step_time_variant(recs, variant, &opts, c.seed)?)
            } else {
                eprintln!("note: {} has {} records; scores need {MIN_REPORT_RECORDS}", variant.label(gpu), recs.len());
                None
            };
            table_row(&mut text, &variant.label(gpu), variant.input_feature(), report.as_ref());
            reports.push(json!({
                "key": ModelBundle::step_key(variant, gpu),
                "variant": variant,
                "gpu": gpu,
                "records": recs.len(),
                "report": report,
            }));
        }
    }
    bundle.provenance.insert("step_times".into(), SourceDigest::of_file(&c.input)?);

    let mut capacities = serde_json::Map::new();
    if let Some(path) = &a.cluster_speeds {
        let rows = read_cluster_speeds(path)?;
        let groups: std::collections::BTreeSet<(String, u32)> =
            rows.iter().map(|r| (r.cnn_name.clone(), r.ps_count)).collect();
        let _ = writeln!(text, "\n{:<20} {:>4} {:>28}", "CNN", "PS", "Cap (steps/s per server)");
        for (cnn, ps) in groups {
            let cap = calibrate_ps_capacity(&rows, &cnn, ps, a.saturation_threshold)?;
            let shown =
                if cap.is_bounded() { format!("{:.4}", cap.max_aggregate_steps_per_sec) } else { "unbounded".into() };
            let _ = writeln!(text, "{cnn:<20} {ps:>4} {shown:>28}");
            let key = ModelBundle::capacity_key(&cnn, ps);
            capacities.insert(key.clone(), serde_json::to_value(cap)?);
            bundle.ps_capacities.insert(key, cap);
        }
        bundle.cluster_observations = rows;
        bundle.provenance.insert("cluster_speeds".into(), SourceDigest::of_file(path)?);
    }

    bundle.save(&c.bundle)?;
    eprintln!("wrote {}", c.bundle.display());
    emit(format, text, json!({ "command": "fit-speed", "models": reports, "ps_capacities": capacities }))
}

fn fit_checkpoint(a: FitCheckpointArgs, format: Format) -> Result<String> {
    let c = &a.common;
    let records = read_checkpoints(&c.input)?;
    let variants = parse_variants(&c.variant, &CheckpointVariant::ALL)?;
    let opts = fit_options(c.k)?;
    let mut bundle = ModelBundle::load_or_default(&c.bundle)?;
    for r in &records {
        bundle.checkpoint_files.insert(r.cnn_name.clone(), r.files);
    }

    let mut text = String::new();
    table_header(&mut text);
    let mut reports = Vec::new();
    for variant in variants {
        let model = fit_checkpoint_model(&records, variant, &opts, c.seed)
            .with_context(|| format!("fitting {}", variant.label()))?;
        bundle.checkpoint_models.insert(variant.as_str().into(), model);
        let report = if records.len() >= MIN_REPORT_RECORDS {
            Some(evaluate_checkpoint_variant(&records, variant, &opts, c.seed)?)
        } else {
            eprintln!("note: {} records; scores need {MIN_REPORT_RECORDS}", records.len());
            None
        };
        table_row(&mut text, variant.label(), variant.input_feature(), report.as_ref());
        reports.push(json!({ "variant": variant, "records": records.len(), "report": report }));
    }
    bundle.provenance.insert("checkpoints".into(), SourceDigest::of_file(&c.input)?);
    bundle.save(&c.bundle)?;
    eprintln!("wrote {}", c.bundle.display());
    emit(format, text, json!({ "command": "fit-checkpoint", "models": reports }))
}

fn lifetime_table_text(table: &LifetimeTable) -> String {
    let mut out = format!(
        "{:<6} {:<14} {:>6} {:>8} {:>10} {:>9}\n",
        "GPU", "Region", "Total", "Revoked", "Revoked %", "MTTR (h)"
    );
    for d in table.iter() {
        let mttr = d.mean_time_to_revocation().map_or_else(|| "n/a".into(), |s| format!("{:.2}", s / 3600.0));
        let _ = writeln!(
            out,
            "{:<6} {:<14} {:>6} {:>8} {:>10.2} {:>9}",
            d.gpu_name,
            d.region,
            d.total_count(),
            d.revoked_count(),
            d.revoked_fraction() * 100.0,
            mttr
        );
    }
    out
}

fn startup_table_text(table: &StartupTable) -> String {
    let mut out =
        format!("{:<6} {:<14} {:<10} {:>8} {:>14}\n", "GPU", "Region", "Offering", "Samples", "Mean total (s)");
    for m in table.iter() {
        let _ = writeln!(
            out,
            "{:<6} {:<14} {:<10} {:>8} {:>14.2}",
            m.gpu_name,
            m.region,
            m.offering,
            m.samples().len(),
            m.mean_total()
        );
    }
    out
}

fn build_revocation(a: BuildRevocationArgs, format: Format) -> Result<String> {
    let records = read_revocations(&a.input)?;
    let mut bundle = ModelBundle::load_or_default(&a.bundle)?;
    bundle.lifetimes = LifetimeTable::build(&records)?;
    let zones = RegionTimezones::default();
    let gpus: std::collections::BTreeSet<&str> = records.iter().map(|r| r.gpu_name.as_str()).collect();
    bundle.revocation_hours.clear();
    for gpu in gpus {
        let subset: Vec<_> = records.iter().filter(|r| r.gpu_name == gpu).cloned().collect();
        bundle.revocation_hours.insert(gpu.to_string(), hour_of_day_histogram(&subset, &zones)?.to_vec());
    }
    bundle.provenance.insert("revocations".into(), SourceDigest::of_file(&a.input)?);

    let mut text = lifetime_table_text(&bundle.lifetimes);
    if let Some(path) = &a.startups {
        bundle.startups = StartupTable::build(&read_startups(path)?)?;
        bundle.provenance.insert("startups".into(), SourceDigest::of_file(path)?);
        text.push('\n');
        text.push_str(&startup_table_text(&bundle.startups));
    }
    if let Some(path) = &a.replacement {
        bundle.replacement = read_replacement(path)?;
        bundle.provenance.insert("replacement".into(), SourceDigest::of_file(path)?);
        let _ = writeln!(text, "\n{:<20} {:>10} {:>10}", "CNN", "Cold (s)", "Warm (s)");
        for name in bundle.replacement.cnn_names() {
            let o = bundle.replacement.get(name).expect("listed name");
            let _ = writeln!(text, "{name:<20} {:>10.2} {:>10.2}", o.cold_start_sec, o.warm_start_sec);
        }
    }
    bundle.save(&a.bundle)?;
    eprintln!("wrote {}", a.bundle.display());
    let value = json!({
        "command": "build-revocation",
        "lifetimes": bundle.lifetimes.iter().map(|d| json!({
            "gpu_name": d.gpu_name,
            "region": d.region,
            "total": d.total_count(),
            "revoked": d.revoked_count(),
            "revoked_fraction": d.revoked_fraction(),
            "mean_time_to_revocation_sec": d.mean_time_to_revocation(),
        })).collect::<Vec<_>>(),
        "startups": bundle.startups.iter().map(|m| json!({
            "gpu_name": m.gpu_name,
            "region": m.region,
            "offering": m.offering,
            "samples": m.samples().len(),
            "mean_total_sec": m.mean_total(),
        })).collect::<Vec<_>>(),
        "replacement": bundle.replacement,
    });
    emit(format, text, value)
}

fn load_scenario(a: &ScenarioArgs) -> Result<(ModelBundle, Scenario)> {
    let bundle = ModelBundle::load(&a.bundle)?;
    let scenario = Scenario::load(&a.scenario)?;
    Ok((bundle, scenario))
}

fn predict(a: ScenarioArgs, format: Format) -> Result<String> {
    let (bundle, scenario) = load_scenario(&a)?;
    let resolved = scenario.resolve(&bundle)?;
    let p = predict_training_time(&resolved.prediction_inputs())?;
    let c = p.components;
    let mut text = String::new();
    let _ = writeln!(text, "{:<28} {:>16.6}", "cluster speed (steps/s)", p.speed_steps_per_sec);
    let _ = writeln!(text, "{:<28} {:>16.6}", "compute (s)", c.compute_sec);
    let _ = writeln!(text, "{:<28} {:>16}", "checkpoints", p.checkpoint_count);
    let _ = writeln!(text, "{:<28} {:>16.6}", "checkpoint time (s)", c.checkpoint_sec);
    let _ = writeln!(text, "{:<28} {:>16.6}", "expected revocations", p.expected_revocations);
    let _ = writeln!(text, "{:<28} {:>16.6}", "revocation overhead (s)", c.revocation_sec);
    let _ = writeln!(text, "{:<28} {:>16.6}", "total (s)", p.total_time_sec);
    let value = json!({
        "command": "predict",
        "inputs": {
            "worker_speeds": resolved.worker_speeds,
            "ps_count": resolved.config.ps_count,
            "ps_cap": resolved.models.ps_cap,
            "checkpoint_sec": resolved.models.checkpoint_sec,
            "startup_sec": resolved.startup_sec,
            "replacement_sec": resolved.replacement_sec,
        },
        "prediction": p,
    });
    emit(format, text, value)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate(a: SimulateArgs, format: Format) -> Result<String> {
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let (bundle, scenario) = load_scenario(&a.scenario)?;
    let mut resolved = scenario.resolve(&bundle)?;
    if let Some(seed) = a.seed {
        resolved.config.seed = seed;
    }
    let results = if resolved.revocations {
        simulate_many(&resolved.config, &resolved.models, a.runs)
    } else {
        replay_many(&resolved.config, &resolved.models, &[], a.runs)
    };
    let results: Vec<SimResult> = results.into_iter().collect::<std::result::Result<_, _>>()?;

    if let Some(path) = &a.trace_out {
        write_file(path, &format_trace(&results[0].trace))?;
    }
    if let Some(path) = &a.speed_out {
        write_file(path, &format_speed_series(&results[0].speed_series, true))?;
    }

    let base = resolved.config.seed;
    let mut text = format!(
        "{:>6} {:>20} {:>16} {:>12} {:>12} {:>12}\n",
        "run", "seed", "total (s)", "revocations", "checkpoints", "recomputed"
    );
    let mut runs = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        let seed = base.wrapping_add(i as u64);
        let _ = writeln!(
            text,
            "{i:>6} {seed:>20} {:>16.3} {:>12} {:>12} {:>12.0}",
            r.total_time_sec, r.revocation_count, r.checkpoint_count, r.breakdown.recomputed_steps
        );
        runs.push(json!({
            "run": i,
            "seed": seed,
            "total_time_sec": r.total_time_sec,
            "revocations": r.revocation_count,
            "replacements": r.replacement_count,
            "checkpoints": r.checkpoint_count,
            "breakdown": r.breakdown,
        }));
    }
    let totals: Vec<f64> = results.iter().map(|r| r.total_time_sec).collect();
    let stats = RunStats::from_values(&totals).expect("at least one run");
    let _ = writeln!(
        text,
        "\nT over {} runs: mean {:.3} s, p5 {:.3} s, p95 {:.3} s, std {:.3} s",
        stats.runs, stats.mean, stats.p5, stats.p95, stats.std
    );
    emit(format, text, json!({ "command": "simulate", "runs": runs, "total_time_stats": stats }))
}

fn read_stream(spec: &str) -> Result<(String, String)> {
    if spec == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok((s, "<stdin>".into()));
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    Ok((text, spec.into()))
}

fn detect(a: DetectArgs, format: Format) -> Result<String> {
    let (bundle, scenario) = load_scenario(&a.scenario)?;
    let resolved = scenario.resolve(&bundle)?;
    let (text_in, source) = read_stream(&a.stream)?;
    let stream = parse_speed_stream(&text_in, &source)?;
    if stream.is_empty() {
        bail!("{source}: speed stream is empty");
    }
    let config = DetectorConfig {
        threshold: a.threshold,
        warmup_sec: a.warmup_sec,
        mode: match a.mode {
            ModeArg::PerWindow => AlertMode::PerWindow,
            ModeArg::RunningMean => AlertMode::RunningMean,
        },
        ..DetectorConfig::default()
    };
    // The additive prediction is the baseline; a parameter-server cap shows
    // up as a deficit against it.
    let predicted: f64 = resolved.worker_speeds.iter().sum();
    let mut detector = Detector::new(predicted, Some(resolved.worker_speeds.clone()), config)?;

    let mut text = format!("predicted {predicted:.4} steps/s, threshold {:.1}%\n", a.threshold * 100.0);
    let mut alerts = Vec::new();
    let mut done_steps = 0.0;
    let mut last_t = 0.0;
    for sample in &stream {
        done_steps += sample.steps_per_sec * (sample.end_time_sec - last_t).max(0.0);
        last_t = sample.end_time_sec;
        let Some(alert) = detector.observe(sample)? else { continue };
        let _ = writeln!(
            text,
            "{:.3}s {}: measured {:.4} vs predicted {:.4} steps/s ({:.2}% below). {}",
            alert.detected_at_sec,
            alert.classification.as_str(),
            alert.measured_speed,
            alert.predicted_speed,
            alert.deficit_fraction * 100.0,
            alert.recommendation
        );
        let mitigation = if alert.classification == Classification::ParameterServer {
            let ctx = MitigationContext {
                ps_count: resolved.config.ps_count,
                worker_speeds: resolved.worker_speeds.clone(),
                ps_cap: resolved.models.ps_cap,
                remaining_steps: (resolved.config.workload_steps as f64 - done_steps).max(0.0),
            };
            let m = recommend_mitigation(&alert, &ctx)?;
            let _ = writeln!(text, "  {}", m.text);
            Some(m)
        } else {
            None
        };
        alerts.push(json!({ "alert": alert, "mitigation": mitigation }));
    }
    if alerts.is_empty() {
        let _ = writeln!(text, "no bottleneck detected in {} windows", detector.samples_seen());
    }
    let value = json!({
        "command": "detect",
        "predicted_speed": predicted,
        "windows_after_warmup": detector.samples_seen(),
        "alerts": alerts,
    });
    emit(format, text, value)
}

fn report(a: ReportArgs) -> Result<String> {
    if !(a.cdf_step_hours > 0.0 && a.cdf_step_hours <= 24.0) {
        bail!("--cdf-step-hours must be in (0, 24], got {}", a.cdf_step_hours);
    }
    let bundle = ModelBundle::load(&a.bundle)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut files = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        write_file(&a.out_dir.join(name), &body)?;
        files.push(name.to_string());
        Ok(())
    };
    if !bundle.lifetimes.is_empty() {
        put("lifetime_cdf.csv", lifetime_cdf_csv(&bundle.lifetimes, a.cdf_step_hours))?;
    }
    if !bundle.revocation_hours.is_empty() {
        put("revocations_by_hour.csv", revocation_hours_csv(&bundle.revocation_hours))?;
    }
    if !bundle.startups.is_empty() {
        put("startup_breakdown.csv", startup_breakdown_csv(&bundle.startups))?;
    }
    if !bundle.cluster_observations.is_empty() {
        put("cluster_speed.csv", cluster_speed_csv(&bundle.cluster_observations, &bundle.ps_capacities))?;
    }
    if files.is_empty() {
        bail!("{} holds no data to report", a.bundle.display());
    }
    let mut text = String::new();
    if !bundle.lifetimes.is_empty() {
        text.push_str(&lifetime_table_text(&bundle.lifetimes));
    }
    for f in &files {
        eprintln!("wrote {}", a.out_dir.join(f).display());
    }
    Ok(text)
}
