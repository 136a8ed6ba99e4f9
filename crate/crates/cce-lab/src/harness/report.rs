//! Result persistence: per-run JSON and CSV files, comparison tables,
//! sweep tables, and timing-stripped views for reproducibility checks.

use super::RunResult;
use crate::error::{Error, Result};
use serde_json::Value;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Median of a non-empty slice (mean of the middle pair for even
/// lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite medians"));
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// The run's JSON with wall-time fields removed (`timing_summary`,
/// `epoch_wall_time`); byte-stable across reruns of the same config and
/// seed.
pub fn comparable_json(result: &RunResult) -> Value {
    let mut value = serde_json::to_value(result).expect("results serialize");
    strip_timing(&mut value);
    value
}

/// Like [`comparable_json`] but also drops the config echo and run id,
/// leaving only the training trajectory; two runs that followed
/// identical trajectories under different configured objectives (such
/// as focal loss at exponent zero versus plain cross entropy) compare
/// equal here.
pub fn trajectory_json(result: &RunResult) -> Value {
    let mut value = comparable_json(result);
    if let Value::Object(map) = &mut value {
        map.remove("config_echo");
        map.remove("run_id");
    }
    value
}

fn strip_timing(value: &mut Value) {
    if let Value::Object(map) = value {
        map.remove("timing_summary");
        if let Some(Value::Array(records)) = map.get_mut("per_epoch") {
            for record in records {
                if let Value::Object(r) = record {
                    r.remove("epoch_wall_time");
                }
            }
        }
    }
}

/// Writes one run's files into `dir`: `<run_id>.json` (the full
/// result), `<run_id>_confusion.csv`, and `<run_id>_curve.csv`
/// (`epoch,test_error_percent`). Returns the created paths.
pub fn write_run_files(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let json_path = dir.join(format!("{}.json", result.run_id));
    std::fs::write(&json_path, serde_json::to_string_pretty(result)?)?;
    written.push(json_path);

    let cm_path = dir.join(format!("{}_confusion.csv", result.run_id));
    let mut cm_out = Vec::new();
    result.confusion.write_csv(&mut cm_out, &result.class_names)?;
    std::fs::write(&cm_path, cm_out)?;
    written.push(cm_path);

    let curve_path = dir.join(format!("{}_curve.csv", result.run_id));
    let mut curve = String::from("epoch,test_error_percent\n");
    for record in &result.per_epoch {
        curve.push_str(&format!("{},{}\n", record.epoch, record.test_error));
    }
    std::fs::write(&curve_path, curve)?;
    written.push(curve_path);

    Ok(written)
}

/// Comparison table over runs: one row per objective, one column per
/// dataset label, cells holding the median final balanced accuracy of
/// the matching runs (blank when none).
pub fn comparison_table(results: &[RunResult]) -> String {
    let datasets: BTreeSet<&str> = results.iter().map(|r| r.dataset_label.as_str()).collect();
    let mut table = String::from("objective");
    for ds in &datasets {
        table.push(',');
        table.push_str(ds);
    }
    table.push('\n');
    for objective in ["erm", "focal", "cot", "cce"] {
        let row_runs: Vec<&RunResult> = results
            .iter()
            .filter(|r| r.config_echo.objective.name() == objective)
            .collect();
        if row_runs.is_empty() {
            continue;
        }
        table.push_str(objective);
        for ds in &datasets {
            let baccs: Vec<f64> = row_runs
                .iter()
                .filter(|r| r.dataset_label == *ds)
                .map(|r| r.final_bacc)
                .collect();
            table.push(',');
            if let Some(m) = median(&baccs) {
                table.push_str(&format!("{m:.6}"));
            }
        }
        table.push('\n');
    }
    table
}

/// Sweep table: one row per modulating factor, one column per dataset
/// label, cells holding the median final balanced accuracy.
pub fn sweep_table(results: &[RunResult]) -> String {
    let datasets: BTreeSet<&str> = results.iter().map(|r| r.dataset_label.as_str()).collect();
    let mut gammas: Vec<f64> = results
        .iter()
        .map(|r| r.config_echo.loss.gamma)
        .collect::<Vec<_>>();
    gammas.sort_by(|a, b| b.partial_cmp(a).expect("finite gammas"));
    gammas.dedup();
    let mut table = String::from("gamma");
    for ds in &datasets {
        table.push(',');
        table.push_str(ds);
    }
    table.push('\n');
    for gamma in gammas {
        table.push_str(&format!("{gamma}"));
        for ds in &datasets {
            let baccs: Vec<f64> = results
                .iter()
                .filter(|r| r.config_echo.loss.gamma == gamma && r.dataset_label == *ds)
                .map(|r| r.final_bacc)
                .collect();
            table.push(',');
            if let Some(m) = median(&baccs) {
                table.push_str(&format!("{m:.6}"));
            }
        }
        table.push('\n');
    }
    table
}

/// Writes every run's files plus `comparison.csv` into `out_dir`.
pub fn write_report(results: &[RunResult], out_dir: &Path) -> Result<()> {
    if results.is_empty() {
        return Err(Error::Config("report needs at least one run".to_string()));
    }
    std::fs::create_dir_all(out_dir)?;
    for result in results {
        write_run_files(result, out_dir)?;
    }
    let mut f = std::fs::File::create(out_dir.join("comparison.csv"))?;
    f.write_all(comparison_table(results).as_bytes())?;
    Ok(())
}

/// Writes sweep run files plus `sweep.csv` into `out_dir`.
pub fn write_sweep_report(results: &[RunResult], out_dir: &Path) -> Result<()> {
    if results.is_empty() {
        return Err(Error::Config("sweep report needs runs".to_string()));
    }
    std::fs::create_dir_all(out_dir)?;
    for result in results {
        write_run_files(result, out_dir)?;
    }
    let mut f = std::fs::File::create(out_dir.join("sweep.csv"))?;
    f.write_all(sweep_table(results).as_bytes())?;
    Ok(())
}

/// Loads every `*.json` run result directly inside `dir` (recursing one
/// level into subdirectories), sorted by run id for stable output.
pub fn load_results(dir: &Path) -> Result<Vec<RunResult>> {
    let mut results = Vec::new();
    let mut stack = vec![(dir.to_path_buf(), 0usize)];
    while let Some((current, depth)) = stack.pop() {
        for entry in std::fs::read_dir(&current)? {
            let path = entry?.path();
            if path.is_dir() && depth == 0 {
                stack.push((path, 1));
            } else if path.extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(&path)?;
                match serde_json::from_str::<RunResult>(&text) {
                    Ok(r) => results.push(r),
                    Err(_) => continue, // unrelated JSON files are skipped
                }
            }
        }
    }
    results.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::super::tests::blob_config;
    use super::super::{run_experiment, Objective};
    use super::*;

    #[test]
    fn median_rules() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0]), Some(3.0));
        assert_eq!(median(&[1.0, 2.0, 9.0]), Some(2.0));
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]), Some(2.5));
    }

    #[test]
    fn run_files_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let result = run_experiment(&blob_config(Objective::Erm, 2, 3)).unwrap();
        let files = write_run_files(&result, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        let back: RunResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, result);
        let curve = std::fs::read_to_string(&files[2]).unwrap();
        let mut lines = curve.lines();
        assert_eq!(lines.next(), Some("epoch,test_error_percent"));
        assert_eq!(curve.lines().count(), 1 + result.per_epoch.len());
    }

    #[test]
    fn comparable_json_drops_only_timing() {
        let result = run_experiment(&blob_config(Objective::Cce, 2, 5)).unwrap();
        let v = comparable_json(&result);
        assert!(v.get("timing_summary").is_none());
        assert!(v.get("config_echo").is_some());
        let records = v.get("per_epoch").unwrap().as_array().unwrap();
        assert!(records.iter().all(|r| r.get("epoch_wall_time").is_none()));
        assert!(records.iter().all(|r| r.get("test_bacc").is_some()));
    }

    #[test]
    fn report_writes_comparison_and_all_runs() {
        let dir = tempfile::tempdir().unwrap();
        let a = run_experiment(&blob_config(Objective::Erm, 1, 3)).unwrap();
        let b = run_experiment(&blob_config(Objective::Cce, 1, 3)).unwrap();
        write_report(&[a.clone(), b.clone()], dir.path()).unwrap();
        let table = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
        assert!(table.starts_with("objective,blobs\n"));
        assert!(table.contains("\ncce,"));
        assert!(table.contains("erm,"));
        let json_count = std::fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .path()
                    .extension()
                    .is_some_and(|x| x == "json")
            })
            .count();
        assert_eq!(json_count, 2);
        // loading the directory back recovers both runs
        let loaded = load_results(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert!(loaded.iter().any(|r| r.run_id == a.run_id));
    }

    #[test]
    fn sweep_table_one_row_per_gamma() {
        let base = blob_config(Objective::Cce, 1, 3);
        let results = super::super::sweep_gamma(&base, &[-1.0, -5.0]).unwrap();
        let table = sweep_table(&results);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "gamma,blobs");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("-1,"));
        assert!(lines[2].starts_with("-5,"));
    }
}
