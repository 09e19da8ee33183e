use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use locbench_core::activity::{load_activity_models, ActivityError};
use locbench_core::data::{
    generate_default_walk, generate_synthetic_imu, generate_synthetic_rssi, parse_beacon_csv, parse_imu_csv,
    parse_rssi_csv, write_beacon_csv, write_imu_csv, write_rssi_csv, BeaconDistanceSample, DataError, Dataset,
    SplitConfig,
};
use locbench_core::evaluation::{format_cm, RegressionReport};
use locbench_core::learners::{Family, LearnerError, LearnerSpec};
use locbench_core::pipelines::{
    compare_models, coord_predictions_csv, run_coords, run_zone_imu, run_zone_rssi, zone_predictions_csv,
    CompareConfig, PipelineConfig, PipelineError, ZoneRun,
};
use serde_json::{json, Value};

use crate::output::{json_text, write_atomic, OutDir};
use crate::{
    Command, CompareArgs, Format, LearnerArgs, MetricsArgs, OutputArgs, PipelineArgs, SynthArgs, SynthKind,
    ValidateArgs, ZoneArgs, ZoneImuArgs,
};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Diverged(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
            CliError::Diverged(m) => write!(f, "training diverged: {m}"),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> CliError {
        if e.is_divergence() {
            CliError::Diverged(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<LearnerError> for CliError {
    fn from(e: LearnerError) -> CliError {
        CliError::Input(e.to_string())
    }
}

pub fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::ZoneRssi(a) => zone_rssi(a),
        Command::ZoneImu(a) => zone_imu(a),
        Command::Coords(a) => coords(a),
        Command::Compare(a) => compare(a),
        Command::ValidateActivities(a) => validate_activities(a),
        Command::Synth(a) => synth(a),
        Command::Metrics(a) => metrics(a),
    }
    .map(|()| ExitCode::SUCCESS)
    .or_else(|e| match e {
        Outcome::Fail(e) => Err(e),
        Outcome::Exit(code) => Ok(code),
    })
}

enum Outcome {
    Fail(CliError),
    /// A completed run with a non-zero status.
    Exit(ExitCode),
}

impl<E: Into<CliError>> From<E> for Outcome {
    fn from(e: E) -> Outcome {
        Outcome::Fail(e.into())
    }
}

type CmdResult = Result<(), Outcome>;

/// Overrides from the learner flags on top of `spec`.
fn apply_overrides(spec: &mut LearnerSpec, a: &LearnerArgs) -> Result<(), CliError> {
    let mut set = |key: &str, value: Option<String>| -> Result<(), CliError> {
        if let Some(v) = value {
            spec.set(key, &v).map_err(|e| CliError::Input(format!("--{key}: {e}")))?;
        }
        Ok(())
    };
    set("k", a.k.map(|v| v.to_string()))?;
    set("trees", a.trees.map(|v| v.to_string()))?;
    set("depth", a.depth.map(|v| v.to_string()))?;
    set("rate", a.rate.map(|v| v.to_string()))?;
    set("layers", a.layers.clone())?;
    set("epochs", a.epochs.map(|v| v.to_string()))?;
    set("c", a.c.map(|v| v.to_string()))?;
    set("epsilon", a.epsilon.map(|v| v.to_string()))?;
    set("gamma", a.gamma.map(|v| v.to_string()))?;
    set("kernel", a.kernel.clone())?;
    spec.seed = a.seed;
    Ok(())
}

fn learner_spec(a: &LearnerArgs, default: Family) -> Result<LearnerSpec, CliError> {
    let family = match &a.model {
        Some(m) => m.parse::<Family>().map_err(|e| CliError::Input(format!("--model: {e}")))?,
        None => default,
    };
    let mut spec = LearnerSpec::preset(family);
    apply_overrides(&mut spec, a)?;
    spec.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(spec)
}

fn check_ratio(ratio: f64) -> Result<(), CliError> {
    if ratio > 0.0 && ratio < 1.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("--train-ratio: {ratio} must lie strictly between 0 and 1")))
    }
}

/// Prints the effective configuration to stderr and returns it for the report.
fn echo_config(command: &str, entries: BTreeMap<String, String>) -> Value {
    let line: Vec<String> = entries.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("{command}: {}", line.join(" "));
    json!(entries)
}

fn base_entries(data: &Path, train_ratio: f64, output: &OutputArgs) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("data".into(), data.display().to_string());
    m.insert("train_ratio".into(), train_ratio.to_string());
    m.insert("out_dir".into(), output.out_dir.display().to_string());
    m.insert("format".into(), format!("{:?}", output.format).to_ascii_lowercase());
    m
}

fn spec_entries(m: &mut BTreeMap<String, String>, spec: &LearnerSpec) {
    for (k, v) in spec.resolved() {
        m.insert(k.to_string(), v);
    }
}

/// Report config without the locations that vary between otherwise identical runs.
fn report_config(mut config: Value) -> Value {
    if let Some(obj) = config.as_object_mut() {
        obj.remove("out_dir");
        obj.remove("format");
    }
    config
}

fn zone_report(command: &str, config: Value, run: &ZoneRun) -> Value {
    json!({
        "command": command,
        "config": report_config(config),
        "report": run.report,
        "train_rows": run.train_rows.len(),
        "test_rows": run.test_rows,
    })
}

fn finish_zone(command: &str, config: Value, run: ZoneRun, output: &OutputArgs) -> CmdResult {
    let report = zone_report(command, config, &run);
    let predictions = zone_predictions_csv(&run.predictions);
    let confusion = run.report.to_markdown();
    let mut out = OutDir::new(&output.out_dir);
    out.write("report.json", &json_text(&report))?;
    out.write("predictions.csv", &predictions)?;
    out.write("confusion.md", &confusion)?;
    out.report_written();
    match output.format {
        Format::Json => print!("{}", json_text(&report)),
        Format::Csv => print!("{predictions}"),
        Format::Md => print!("{confusion}"),
    }
    if output.format != Format::Md {
        eprintln!("accuracy: {}%", format_cm(run.report.accuracy * 100.0));
    }
    Ok(())
}

fn zone_rssi(a: ZoneArgs) -> CmdResult {
    check_ratio(a.train_ratio)?;
    let spec = learner_spec(&a.learner, Family::Knn)?;
    let mut entries = base_entries(&a.data, a.train_ratio, &a.output);
    entries.insert("stratified".into(), "true".into());
    spec_entries(&mut entries, &spec);
    let config = echo_config("zone-rssi", entries);
    let ds = parse_rssi_csv(&a.data)?;
    let cfg = PipelineConfig {
        split: SplitConfig::new(a.train_ratio, a.learner.seed, true),
        learner: spec,
        window: None,
    };
    let run = run_zone_rssi(&ds, &cfg)?;
    finish_zone("zone-rssi", config, run, &a.output)
}

fn zone_imu(a: ZoneImuArgs) -> CmdResult {
    check_ratio(a.train_ratio)?;
    let spec = learner_spec(&a.learner, Family::RandomForest)?;
    let mut entries = base_entries(&a.data, a.train_ratio, &a.output);
    entries.insert("stratified".into(), "true".into());
    entries.insert("window".into(), a.window.map_or("off".into(), |w| w.to_string()));
    spec_entries(&mut entries, &spec);
    let config = echo_config("zone-imu", entries);
    let ds = parse_imu_csv(&a.data)?;
    let cfg = PipelineConfig {
        split: SplitConfig::new(a.train_ratio, a.learner.seed, true),
        learner: spec,
        window: a.window,
    };
    let run = run_zone_imu(&ds, &cfg)?;
    finish_zone("zone-imu", config, run, &a.output)
}

fn metrics_json(r: &RegressionReport) -> Value {
    json!({
        "rmse_x": r.rmse_x,
        "rmse_y": r.rmse_y,
        "horizontal_error": r.horizontal_error,
        "n": r.n,
    })
}

fn metrics_markdown(r: &RegressionReport) -> String {
    format!(
        "| metric | value |\n|---|---|\n| rmse_x | {} |\n| rmse_y | {} |\n| horizontal_error | {} |\n",
        format_cm(r.rmse_x),
        format_cm(r.rmse_y),
        format_cm(r.horizontal_error)
    )
}

fn load_beacons(path: &Path) -> Result<Dataset<BeaconDistanceSample>, CliError> {
    let ds = parse_beacon_csv(path)?;
    let zeros = ds.zero_distance_rows();
    if zeros > 0 {
        eprintln!("{}: {zeros} of {} rows hold a zero distance (kept as read)", path.display(), ds.len());
    }
    Ok(ds)
}

fn coords(a: PipelineArgs) -> CmdResult {
    check_ratio(a.train_ratio)?;
    let spec = learner_spec(&a.learner, Family::RandomForest)?;
    let mut entries = base_entries(&a.data, a.train_ratio, &a.output);
    entries.insert("stratified".into(), "false".into());
    spec_entries(&mut entries, &spec);
    let config = echo_config("coords", entries);
    let ds = load_beacons(&a.data)?;
    let cfg = PipelineConfig {
        split: SplitConfig::new(a.train_ratio, a.learner.seed, false),
        learner: spec,
        window: None,
    };
    let run = run_coords(&ds, &cfg)?;
    let report = json!({
        "command": "coords",
        "config": report_config(config),
        "metrics": metrics_json(&run.report),
        "feature_importance_x": run.importance_x,
        "feature_importance_y": run.importance_y,
        "train_rows": run.train_rows.len(),
        "test_rows": run.test_rows,
    });
    let px = coord_predictions_csv(&run.predictions_x, 'X');
    let py = coord_predictions_csv(&run.predictions_y, 'Y');
    let mut out = OutDir::new(&a.output.out_dir);
    out.write("report.json", &json_text(&report))?;
    out.write("predictions_x.csv", &px)?;
    out.write("predictions_y.csv", &py)?;
    out.report_written();
    match a.output.format {
        Format::Json => print!("{}", json_text(&report)),
        Format::Csv => print!("{px}"),
        Format::Md => print!("{}", metrics_markdown(&run.report)),
    }
    Ok(())
}

/// `1..10` and `1..=10` are inclusive ranges; otherwise a comma list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Input(format!("--seeds: cannot parse `{text}`"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds = if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        text.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn compare(a: CompareArgs) -> CmdResult {
    check_ratio(a.train_ratio)?;
    if a.learner.model.is_some() {
        return Err(CliError::Input("compare takes --models, not --model".into()).into());
    }
    let seeds = match &a.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![a.learner.seed],
    };
    let families: Vec<Family> = match &a.models {
        Some(list) => {
            let mut fs = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<Family>().map_err(|e| CliError::Input(format!("--models: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            fs.sort();
            fs.dedup();
            fs
        }
        None => Family::ALL.to_vec(),
    };
    if families.is_empty() {
        return Err(CliError::Input("--models: empty list".into()).into());
    }
    let mut config = CompareConfig::new(seeds.clone());
    config.train_ratio = a.train_ratio;
    config.specs = families
        .iter()
        .map(|&f| {
            let mut spec = LearnerSpec::preset(f);
            apply_overrides(&mut spec, &a.learner)?;
            spec.validate()?;
            Ok(spec)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut entries = base_entries(&a.data, a.train_ratio, &a.output);
    let seed_list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    entries.insert("seeds".into(), seed_list.join(","));
    entries.insert("seed".into(), a.learner.seed.to_string());
    for spec in &config.specs {
        let resolved: Vec<String> = spec
            .resolved()
            .into_iter()
            .filter(|(k, _)| *k != "family" && *k != "seed")
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        entries.insert(format!("learner.{}", spec.family), resolved.join(";"));
    }
    let cfg_json = echo_config("compare", entries);
    let ds = load_beacons(&a.data)?;
    let comparison = compare_models(&ds, &config)?;
    let md = comparison.table.to_markdown();
    let csv = comparison.table.to_csv();
    let report = json!({
        "command": "compare",
        "config": report_config(cfg_json),
        "comparison": comparison,
    });
    let mut out = OutDir::new(&a.output.out_dir);
    out.write("comparison.md", &md)?;
    out.write("comparison.csv", &csv)?;
    out.write("report.json", &json_text(&report))?;
    out.report_written();
    for (family, n) in &comparison.failures {
        if *n > 0 {
            eprintln!("{family}: failed on {n} of {} seeds", seeds.len());
        }
    }
    match a.output.format {
        Format::Json => print!("{}", json_text(&report)),
        Format::Csv => print!("{csv}"),
        Format::Md => print!("{md}"),
    }
    Ok(())
}

fn validate_activities(a: ValidateArgs) -> CmdResult {
    eprintln!("validate-activities: path={}", a.path.display());
    let models = load_activity_models(&a.path).map_err(|e| match e {
        ActivityError::NoModels => CliError::Input(format!("{}: no models found", a.path.display())),
        other => CliError::Input(other.to_string()),
    })?;
    let mut all_ok = true;
    for model in &models {
        let violations = model.validate();
        if violations.is_empty() {
            println!("PASS {}", model.name);
        } else {
            all_ok = false;
            println!("FAIL {}", model.name);
            for v in violations {
                println!("  - {v}");
            }
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(Outcome::Exit(ExitCode::from(1)))
    }
}

fn synth(a: SynthArgs) -> CmdResult {
    let kind = format!("{:?}", a.kind).to_ascii_lowercase();
    let path = a.out.clone().unwrap_or_else(|| a.out_dir.join(format!("synthetic_{kind}.csv")));
    let mut entries = BTreeMap::new();
    entries.insert("kind".to_string(), kind);
    entries.insert("rows".into(), a.rows.to_string());
    entries.insert("seed".into(), a.seed.to_string());
    entries.insert("out".into(), path.display().to_string());
    match a.kind {
        SynthKind::Beacon | SynthKind::Imu => entries.insert("noise".into(), a.noise.to_string()),
        SynthKind::Rssi => entries.insert("bleed".into(), a.bleed.to_string()),
    };
    echo_config("synth", entries);
    let mut buf = Vec::new();
    let written = match a.kind {
        SynthKind::Beacon => write_beacon_csv(&generate_default_walk(a.rows, a.noise, a.seed)?, &mut buf),
        SynthKind::Rssi => write_rssi_csv(&generate_synthetic_rssi(a.rows, a.bleed, a.seed)?, &mut buf),
        SynthKind::Imu => write_imu_csv(&generate_synthetic_imu(a.rows, a.noise, a.seed)?, &mut buf),
    };
    written.map_err(|e| CliError::Input(e.to_string()))?;
    write_atomic(&path, &buf)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// One number per line; blank lines, `#` comments and a non-numeric first
/// line (a header) are skipped.
pub fn read_errors(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cell = line.split(',').next().unwrap_or("").trim();
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ if first => {}
            _ => {
                return Err(CliError::Input(format!(
                    "{}: line {}: `{cell}` is not a finite number",
                    path.display(),
                    i + 1
                )))
            }
        }
        first = false;
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no error values", path.display())));
    }
    Ok(out)
}

fn metrics(a: MetricsArgs) -> CmdResult {
    eprintln!(
        "metrics: errors_x={} errors_y={} format={}",
        a.errors_x.display(),
        a.errors_y.display(),
        format!("{:?}", a.format).to_ascii_lowercase()
    );
    let ex = read_errors(&a.errors_x)?;
    let ey = read_errors(&a.errors_y)?;
    let report = RegressionReport::from_errors(ex, ey).map_err(|e| CliError::Input(e.to_string()))?;
    match a.format {
        Format::Json => print!("{}", json_text(&metrics_json(&report))),
        Format::Csv => println!(
            "rmse_x,rmse_y,horizontal_error\n{},{},{}",
            report.rmse_x, report.rmse_y, report.horizontal_error
        ),
        Format::Md => {
            println!("rmse_x: {:.4}", report.rmse_x);
            println!("rmse_y: {:.4}", report.rmse_y);
            println!("horizontal_error: {:.4}", report.horizontal_error);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1..10").unwrap(), (1..=10).collect::<Vec<_>>());
        assert_eq!(parse_seeds("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_seeds("7, 2,9").unwrap(), vec![7, 2, 9]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("a,b").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn train_ratio_bounds() {
        assert!(check_ratio(0.7).is_ok());
        assert!(check_ratio(0.0).is_err());
        assert!(check_ratio(1.0).is_err());
    }

    #[test]
    fn error_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        fs::write(&p, "error\n# comment\n3\n\n4\n").unwrap();
        assert_eq!(read_errors(&p).unwrap(), vec![3.0, 4.0]);
        fs::write(&p, "1\nx\n").unwrap();
        assert!(read_errors(&p).unwrap_err().to_string().contains("line 2"));
        fs::write(&p, "").unwrap();
        assert!(read_errors(&p).is_err());
    }

    #[test]
    fn divergence_maps_to_exit_two() {
        let e: CliError = PipelineError::Learner(LearnerError::Diverged {
            epoch: 3,
            detail: "loss is NaN".into(),
        })
        .into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = PipelineError::InvalidWindow(0).into();
        assert_eq!(e.exit_code(), 1);
    }
}
