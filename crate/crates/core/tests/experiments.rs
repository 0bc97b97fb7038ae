use std::fs;

use ostar_vlc::experiments::{
    load_config, read_rows, replay_row, run_oracle, run_scenario, run_trial, summarize, write_outputs, write_rows,
    ExperimentConfig, ExperimentError, ScenarioId, RESULT_HEADER,
};

fn quick(scenario: ScenarioId) -> ExperimentConfig {
    ExperimentConfig {
        scenario,
        trials: 3,
        seed: 11,
        t: 40,
        ..Default::default()
    }
}

fn csv_bytes(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_rows(&run_scenario(cfg).unwrap(), &mut buf).unwrap();
    buf
}

#[test]
fn same_seed_gives_identical_csv() {
    for id in ScenarioId::ALL {
        let cfg = quick(id);
        assert_eq!(csv_bytes(&cfg), csv_bytes(&cfg), "{id}");
    }
    let other = ExperimentConfig {
        seed: 12,
        ..quick(ScenarioId::PowerSweep)
    };
    assert_ne!(csv_bytes(&quick(ScenarioId::PowerSweep)), csv_bytes(&other));
}

#[test]
fn row_counts_per_scenario() {
    let expect = [
        (ScenarioId::PowerSweep, 7 * 2),
        (ScenarioId::Wavelength, 2 * 2),
        (ScenarioId::UserCount, 4 * 2),
        (ScenarioId::AllocStrategies, 7 * 3),
        (ScenarioId::ElementSweep, 8 * 2),
    ];
    for (id, per_trial) in expect {
        let cfg = ExperimentConfig {
            trials: 1,
            ..quick(id)
        };
        assert_eq!(run_scenario(&cfg).unwrap().len(), per_trial, "{id}");
    }
}

#[test]
fn averages_do_not_depend_on_trial_order() {
    let cfg = quick(ScenarioId::Wavelength);
    let forward = summarize(&run_scenario(&cfg).unwrap());
    let mut reversed = Vec::new();
    for t in (0..cfg.trials).rev() {
        reversed.extend(run_trial(&cfg, t).unwrap());
    }
    // per-cell order is irrelevant once rows are grouped by (scheme, value)
    reversed.sort_by(|a, b| (a.scheme.as_str(), a.trial).cmp(&(b.scheme.as_str(), b.trial)).reverse());
    let backward = summarize(&reversed);
    for f in &forward {
        let b = backward
            .iter()
            .find(|b| b.scheme == f.scheme && b.swept_value == f.swept_value)
            .unwrap();
        assert!((f.sum_rate_mean - b.sum_rate_mean).abs() <= 1e-9 * f.sum_rate_mean.abs().max(1.0));
        assert_eq!(f.trials, b.trials);
    }
}

#[test]
fn element_sweep_power_column_matches_power_model() {
    let cfg = quick(ScenarioId::ElementSweep);
    let model = cfg.power_model();
    let ps = cfg.budget().electrical_power();
    for r in run_scenario(&cfg).unwrap() {
        let half = r.swept_value as usize / 2;
        assert_eq!(r.total_power, model.total_power(ps, half, half));
        assert_eq!(r.see, r.sum_rate / r.total_power);
    }
}

#[test]
fn every_row_replays_from_its_seed() {
    for id in ScenarioId::ALL {
        let cfg = quick(id);
        let mut buf = Vec::new();
        write_rows(&run_scenario(&cfg).unwrap(), &mut buf).unwrap();
        for row in read_rows(buf.as_slice()).unwrap() {
            let again = replay_row(&cfg, &row).unwrap();
            assert!(
                (again - row.sum_rate).abs() <= 1e-9 * row.sum_rate.abs().max(f64::MIN_POSITIVE),
                "{id}: {} vs {again}",
                row.sum_rate
            );
        }
    }
}

#[test]
fn replay_rejects_foreign_rows() {
    let cfg = quick(ScenarioId::Wavelength);
    let mut row = run_trial(&cfg, 0).unwrap().remove(0);
    let other = quick(ScenarioId::PowerSweep);
    assert!(matches!(replay_row(&other, &row), Err(ExperimentError::Replay(_))));
    row.scheme = "tdma".into();
    assert!(matches!(replay_row(&cfg, &row), Err(ExperimentError::Replay(_))));
}

#[test]
fn output_files_have_the_expected_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(ScenarioId::UserCount);
    let rows = run_scenario(&cfg).unwrap();
    let files = write_outputs(&cfg, &rows, &dir.path().join("nested")).unwrap();

    let text = fs::read_to_string(&files.rows).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), RESULT_HEADER.join(","));
    assert_eq!(lines.count(), rows.len());
    assert!(files.rows.ends_with("user_count.csv"));

    let summary = fs::read_to_string(&files.summary).unwrap();
    assert!(summary.starts_with(
        "scenario,scheme,swept_value,trials,sum_rate_mean,sum_rate_stderr,total_power_mean,total_power_stderr,see_mean,see_stderr\n"
    ));
    assert_eq!(summary.lines().count(), 1 + 2 * 4);

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files.meta).unwrap()).unwrap();
    assert_eq!(meta["config"]["trials"], 3);
    assert_eq!(meta["rows"], rows.len());
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let cfg = quick(ScenarioId::Wavelength);
    let rows = run_scenario(&cfg).unwrap();
    assert!(matches!(write_outputs(&cfg, &rows, &blocker), Err(ExperimentError::Io(_))));
}

#[test]
fn config_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");

    fs::write(&path, "{}").unwrap();
    assert_eq!(load_config(&path).unwrap(), ExperimentConfig::default());

    fs::write(&path, r#"{"phi_half_deg": 60, "a_pd_cm2": 1.0, "v_th": 1.34, "scenario": "element_sweep"}"#).unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.phi_half_deg, 60.0);
    assert_eq!(cfg.scenario, ScenarioId::ElementSweep);

    fs::write(&path, r#"{"mu_noma": 0.4}"#).unwrap();
    assert!(load_config(&path).unwrap_err().to_string().contains("mu_noma"));

    fs::write(&path, r#"{"v_threshold": 1.0}"#).unwrap();
    assert!(load_config(&path).unwrap_err().to_string().contains("v_threshold"));

    assert!(matches!(
        load_config(&dir.path().join("missing.json")),
        Err(ExperimentError::Read { .. })
    ));
}

#[test]
fn oracle_mode_reports_both_optima() {
    let cfg = ExperimentConfig {
        t: 400,
        ..quick(ScenarioId::PowerSweep)
    };
    let rows = run_oracle(&cfg, 2, 5).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.swept_value, 1.0);
        assert!(r.grid_best >= 0.0 && r.sca_best >= 0.0);
    }
}
