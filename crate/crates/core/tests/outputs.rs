use pg_bandits::experiment::{emit_outputs, run_experiment, Algorithm, ExperimentConfig};
use pg_bandits::ode::theorem2_regret_bound;

fn rows(path: &std::path::Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn empty_checkpoint_list_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new(Algorithm::SambaOde, vec![0.3, 0.7], 1.0, 10.0);
    config.checkpoint_times = Some(vec![]);
    let result = run_experiment(&config).unwrap();
    emit_outputs(&result, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("regret.csv")).unwrap();
    assert_eq!(text, "time,mean_rg,mean_Rg,std_Rg,theorem_bound\n");
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj, "time,p_0,p_1,rg,Rg\n");
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap())
            .unwrap();
    assert!(fit["skipped"].is_string());
}

#[test]
fn three_checkpoints_give_four_lines() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new(Algorithm::Samba, vec![0.3, 0.7], 0.1, 100.0);
    config.checkpoint_times = Some(vec![10.0, 50.0, 100.0]);
    config.replications = 3;
    emit_outputs(&run_experiment(&config).unwrap(), dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("regret.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn samba_ode_bound_column_and_monotone_regret() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::new(Algorithm::SambaOde, vec![0.3, 0.7], 1.0, 1e4);
    let result = run_experiment(&config).unwrap();
    emit_outputs(&result, dir.path()).unwrap();
    let instance = config.instance().unwrap();
    let table = rows(&dir.path().join("regret.csv"));
    assert_eq!(table.len(), 81);
    let mut previous = 0.0;
    for row in &table {
        let t: f64 = row[0].parse().unwrap();
        let regret: f64 = row[2].parse().unwrap();
        let bound: f64 = row[4].parse().unwrap();
        assert_eq!(bound, theorem2_regret_bound(&instance, 1.0, t).unwrap());
        assert!(regret <= bound);
        assert!(regret >= previous);
        previous = regret;
    }
    let fit = result.fit.result.unwrap();
    assert_eq!(fit.predicted_slope, 2.5);
    assert!((fit.ratio - fit.log_slope / 2.5).abs() < 1e-15);
}

#[test]
fn softmax_ode_bound_dominates() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::new(Algorithm::SoftmaxOde, vec![0.3, 0.7], 1.0, 1e3);
    let result = run_experiment(&config).unwrap();
    assert_eq!(result.fit.result.unwrap().predicted_slope, 4.0);
    emit_outputs(&result, dir.path()).unwrap();
    for row in rows(&dir.path().join("regret.csv")) {
        let regret: f64 = row[2].parse().unwrap();
        let bound: f64 = row[4].parse().unwrap();
        assert!(regret <= bound + 1e-9, "{regret} > {bound}");
    }
}

#[test]
fn stochastic_mean_regret_is_monotone() {
    for algorithm in [Algorithm::Samba, Algorithm::SoftmaxPg] {
        let mut config = ExperimentConfig::new(algorithm, vec![0.2, 0.5, 0.6], 0.2, 3000.0);
        config.replications = 5;
        let result = run_experiment(&config).unwrap();
        assert!(result
            .rows
            .windows(2)
            .all(|w| w[0].mean_regret <= w[1].mean_regret));
        assert!(result.rows.iter().all(|r| r.std_regret >= 0.0));
    }
}

#[test]
fn non_constant_schedule_leaves_bound_blank() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new(Algorithm::SambaOde, vec![0.3, 0.7], 1.0, 10.0);
    config.schedule = pg_bandits::ScheduleKind::InverseLogTime;
    emit_outputs(&run_experiment(&config).unwrap(), dir.path()).unwrap();
    assert!(rows(&dir.path().join("regret.csv"))
        .iter()
        .all(|r| r[4].is_empty()));
}
