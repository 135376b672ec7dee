use std::process::{Command, Output};

use gcore::analytics::SimulationReport;
use gcore::attacks::security_threshold;

fn gcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcore"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn honest_run_is_clean_and_reproducible() {
    let args = [
        "run",
        "--particles",
        "3",
        "--dim",
        "2",
        "--units",
        "100",
        "--key",
        "001",
        "--seed",
        "7",
    ];
    let a = gcore(&args);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let b = gcore(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a.stdout, b.stdout);
    let report = SimulationReport::from_json(&stdout(&a)).unwrap();
    let run = &report.runs[0];
    assert_eq!(run.label_error.value, 0.0);
    assert!(run.keys_agree);
    assert_eq!(run.units, 100);
}

#[test]
fn intercept_resend_exits_two() {
    let o = gcore(&[
        "run",
        "--units",
        "100",
        "--seed",
        "7",
        "--adversary",
        "intercept-resend",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = gcore(&[
        "attack",
        "--dim",
        "3",
        "--particles",
        "2",
        "--key",
        "01",
        "--units",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let report = SimulationReport::from_json(&stdout(&o)).unwrap();
    let attack = report.runs[0].attack.as_ref().unwrap();
    assert_eq!(attack.paper_error_rates.len(), 2);
    assert!((attack.uniform_outcome_error - 8.0 / 9.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_one() {
    let o = gcore(&["run", "--dim", "4", "--particles", "6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--particles/--dim"));
    assert_eq!(gcore(&["run", "--nonsense"]).status.code(), Some(1));
    assert_eq!(gcore(&["run", "--key", "0x1"]).status.code(), Some(1));
    assert_eq!(
        gcore(&["tables", "--dim", "4", "--particles", "6"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        gcore(&["cloner-curve", "--grid-points", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(gcore(&["--help"]).status.code(), Some(0));
}

#[test]
fn failures_leave_no_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = gcore(&["run", "--particles", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    let missing = dir.path().join("no-such-dir").join("curve.csv");
    let o = gcore(&["cloner-curve", "--out", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    let o = gcore(&["run", "--units", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    SimulationReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.toml");
    std::fs::write(
        &path,
        "particles = 2\ndim = 3\nkey = \"0121\"\nunits = 20\nseed = 3\n",
    )
    .unwrap();
    let o = gcore(&["run", "--config", path.to_str().unwrap(), "--units", "30"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = SimulationReport::from_json(&stdout(&o)).unwrap();
    let config = &report.runs[0].config;
    assert_eq!(
        (config.dim, config.particles, config.units, config.seed),
        (3, 2, 30, 3)
    );

    std::fs::write(&path, "particles = 2\nbogus = 1\n").unwrap();
    let o = gcore(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cloner_curve_brackets_threshold() {
    let o = gcore(&["cloner-curve", "--grid-points", "201"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("F,F_E,I_AB,I_AE"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 201);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    let f_star = security_threshold(3).unwrap().fidelity;
    let i = rows.iter().position(|r| r[0] > f_star).unwrap();
    let gap = |r: &Vec<f64>| r[2] - r[3];
    assert!(gap(&rows[i - 1]) < 0.0 && gap(&rows[i]) > 0.0);
    assert_eq!(rows[200][0], 1.0);
    assert!((rows[200][2] - 3f64.log2()).abs() < 1e-12);
}

#[test]
fn tables_print_listings() {
    let o = gcore(&["tables", "--dim", "2", "--particles", "3"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("E_5 (101) = [8,7,6,5,4,3,2,1]"));
    let text = stdout(&gcore(&["tables", "--dim", "3", "--particles", "2"]));
    assert_eq!(text.lines().count(), 9);
    assert!(text.contains("E_1 (01) = [2,3,4,5,6,7,8,9,1]"));
    let text = stdout(&gcore(&["tables", "--dim", "3", "--particles", "3"]));
    assert_eq!(text.lines().count(), 27);
    assert!(text.contains("E_3 (100)"));
    assert!(text.contains("E_9 (010)"));
}

#[test]
fn verify_paper_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ledger.json");
    let o = gcore(&["verify-paper", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("PASS threshold d=3: 0.788675 ± 1e-9"));
    assert!(!text.contains("FAIL"));
    let report = SimulationReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.ledger.unwrap().all_pass());
}
