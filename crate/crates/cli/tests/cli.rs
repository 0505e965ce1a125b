//! Subcommand output contracts and process-level behaviour of the binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use almab_cli::config::{ExperimentConfig, Subcommand};
use almab_cli::table::{read_table, sig6};
use almab_cli::{execute, Options};
use almab_core::scaling::optimal_agents;

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn simulate_writes_one_row_per_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"runs": [{"rounds": 10, "agents": 1, "policy": "ucb"}]}"#);
    let out = dir.path().join("out");
    let opts = Options { config: Some(cfg), out: Some(out.clone()), ..Default::default() };
    execute(Subcommand::Simulate, &opts).unwrap();
    let text = std::fs::read_to_string(out.join("run0_rep0.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# almab run-history v1");
    assert_eq!(
        lines[1],
        "round,arm,reward_realized,reward_mean_agents,regret_pseudo_increment,regret_pseudo_cum,\
regret_realized_cum,comm_cost_cum,issue_round,apply_round,wall_ms"
    );
    assert_eq!(lines.len() - 2, 10);
}

#[test]
fn simulate_reruns_are_byte_identical_and_landscape_has_one_marker_per_arm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"environment": {"kind": "mixture", "arms": 12},
            "runs": [{"rounds": 60, "agents": 1, "policy": "thompson"},
                     {"rounds": 60, "agents": 3, "policy": "ucb", "delay_max": 2}],
            "replicates": 2}"#,
    );
    let run = |out: &str| {
        let opts = Options { config: Some(cfg.clone()), out: Some(dir.path().join(out)), ..Default::default() };
        execute(Subcommand::Simulate, &opts).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let svg = std::fs::read_to_string(dir.path().join("a/simulate_landscape.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="marker""#).count(), 12);
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: u64, out: &str| {
        let opts = Options { out: Some(dir.path().join(out)), seed: Some(seed), ..Default::default() };
        execute(Subcommand::Simulate, &opts).unwrap();
        std::fs::read(dir.path().join(out).join("run1_rep0.csv")).unwrap()
    };
    assert_ne!(run(1, "a"), run(2, "b"));
}

#[test]
fn compare_single_agent_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"environment": {"kind": "mixture", "eval_cost_ms": 1.0},
            "compare": {"sequential": {"rounds": 30, "agents": 1, "policy": "ucb"},
                        "distributed": {"rounds": 30, "agents": 1, "policy": "ucb"}},
            "replicates": 6}"#,
    );
    let opts = Options { config: Some(cfg), out: Some(dir.path().to_path_buf()), ..Default::default() };
    execute(Subcommand::Compare, &opts).unwrap();
    let (header, rows) = read_table(&dir.path().join("compare.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 6 + 2);
    for s in column(&header, &rows, "speedup") {
        assert!((0.9..=1.1).contains(&s));
    }
    let (_, tests) = read_table(&dir.path().join("compare_tests.csv")).unwrap();
    // identical regrets: the paired test is undefined and says so
    assert_eq!(tests[0][4], "NA");
}

#[test]
fn airfoil_top_rows_are_sorted_by_drag() {
    let dir = tempfile::tempdir().unwrap();
    let opts = Options { out: Some(dir.path().to_path_buf()), replicates: Some(3), ..Default::default() };
    execute(Subcommand::Airfoil, &opts).unwrap();
    let (header, rows) = read_table(&dir.path().join("airfoil_top.csv")).unwrap();
    assert_eq!(rows.len(), 15);
    let drag = column(&header, &rows, "drag");
    for rep in 0..3 {
        let d = &drag[rep * 5..rep * 5 + 5];
        assert!(d.windows(2).all(|w| w[0] <= w[1]), "{d:?}");
    }
    let (_, samples) = read_table(&dir.path().join("airfoil_samples.csv")).unwrap();
    assert_eq!(samples.len(), 3 * 15);
    let svg = std::fs::read_to_string(dir.path().join("airfoil.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="marker""#).count(), 2 * 15);
}

#[test]
fn scaling_sweep_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let ideal = write_config(
        dir.path(),
        "ideal.json",
        r#"{"scaling": {"k_max": 64, "params": {"serial_fraction": 0.0, "efficiency": 1.0, "comm_alpha": 0.0,
            "comm_beta": 0.5, "task_costs": [1.0, 2.0]}}}"#,
    );
    let opts = Options { config: Some(ideal), out: Some(dir.path().join("ideal")), ..Default::default() };
    execute(Subcommand::Scaling, &opts).unwrap();
    let (header, rows) = read_table(&dir.path().join("ideal/scaling.csv")).unwrap();
    assert_eq!(rows.len(), 64);
    let k = column(&header, &rows, "k");
    let s = column(&header, &rows, "amdahl_speedup");
    assert!(k.iter().zip(&s).all(|(k, s)| (k - s).abs() <= 1e-12));
    assert!(rows.iter().all(|r| r[7].is_empty() && r[8].is_empty()));

    let opts = Options { out: Some(dir.path().join("default")), ..Default::default() };
    execute(Subcommand::Scaling, &opts).unwrap();
    let (header, rows) = read_table(&dir.path().join("default/scaling.csv")).unwrap();
    let s = column(&header, &rows, "amdahl_speedup");
    let g = column(&header, &rows, "gustafson_speedup");
    assert!(s.iter().zip(&g).all(|(s, g)| g >= s));
    let opt = optimal_agents(&ExperimentConfig::default_for(Subcommand::Scaling).scaling.params).unwrap();
    assert!(rows.iter().all(|r| r[7] == sig6(opt.closed_form) && r[8] == sig6(opt.numeric)));
    let svg = std::fs::read_to_string(dir.path().join("default/scaling.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="vline""#).count(), 2);
}

#[test]
fn analyze_summarizes_simulate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let opts = Options { out: Some(dir.path().to_path_buf()), replicates: Some(8), ..Default::default() };
    execute(Subcommand::Simulate, &opts).unwrap();
    execute(Subcommand::Analyze, &opts).unwrap();
    let (header, rows) = read_table(&dir.path().join("analyze_summary.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[1] == "8"));
    let lo = column(&header, &rows, "ci_lower");
    let hi = column(&header, &rows, "ci_upper");
    assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
    let (header, tests) = read_table(&dir.path().join("analyze_tests.csv")).unwrap();
    assert_eq!(tests.len(), 1);
    let p = column(&header, &tests, "p_value")[0];
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn config_round_trip_keeps_keys_and_values() {
    for cmd in [Subcommand::Simulate, Subcommand::Compare, Subcommand::Airfoil, Subcommand::Scaling, Subcommand::Analyze] {
        let text = ExperimentConfig::default_for(cmd).to_json();
        let reparsed = ExperimentConfig::parse(&text).unwrap().to_json();
        let a: serde_json::Value = serde_json::from_str(&text).unwrap();
        let b: serde_json::Value = serde_json::from_str(&reparsed).unwrap();
        assert_eq!(a, b);
    }
}

fn almab(args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_almab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("ALMAB_THREADS", t),
        None => cmd.env_remove("ALMAB_THREADS"),
    };
    cmd.output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    assert_eq!(almab(&["scaling", "--out", out_s], None).status.code(), Some(0));

    let typo = write_config(dir.path(), "typo.json", "{\n  \"replicate\": 2\n}");
    let o = almab(&["simulate", "--config", typo.to_str().unwrap(), "--out", out_s], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(almab(&["simulate", "--out", out_s], Some("zero")).status.code(), Some(2));

    // four grid points and ten noiseless-surrogate iterations must repeat a design
    let singular = write_config(
        dir.path(),
        "singular.json",
        r#"{"environment": {"kind": "drag"},
            "airfoil": {"grid_per_axis": 2, "surrogate": {"lengthscale": 0.5, "signal_var": 1.0, "noise_var": 0.0}}}"#,
    );
    let o = almab(&["airfoil", "--config", singular.to_str().unwrap(), "--out", out_s], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let file = dir.path().join("not_a_dir");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(almab(&["scaling", "--out", file.to_str().unwrap()], None).status.code(), Some(4));
}

#[test]
fn thread_cap_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in [None, Some("1"), Some("2")].into_iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let o = almab(&["simulate", "--replicates", "2", "--out", out.to_str().unwrap()], threads);
        assert!(o.status.success());
        outputs.push(std::fs::read(out.join("run1_rep1.csv")).unwrap());
    }
    assert!(outputs.iter().all(|o| *o == outputs[0]));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (file, cmd) in [
        ("simulate.json", Subcommand::Simulate),
        ("compare.json", Subcommand::Compare),
        ("airfoil.json", Subcommand::Airfoil),
        ("scaling.json", Subcommand::Scaling),
        ("analyze.json", Subcommand::Analyze),
    ] {
        let config = ExperimentConfig::load(&dir.join(file)).unwrap();
        config.validate(cmd).unwrap_or_else(|e| panic!("{file}: {e}"));
        assert_eq!(ExperimentConfig::parse(&config.to_json()).unwrap(), config);
    }
}
