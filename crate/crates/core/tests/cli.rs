use std::path::Path;
use std::process::{Command, Output};

use ferrysim::capacity::{self, ScheduleProgram, SynthesisOptions};
use ferrysim::experiment::{self, DELAY_HEADER, RESULT_HEADER};
use ferrysim::model::{NetworkSpec, RateModel};

fn ferrysim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ferrysim"))
        .args(args)
        .output()
        .expect("spawn ferrysim")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SWEEP: &str = r#"{
    "network": {
        "flows": [ { "distance": 25, "lambda": 0.2 }, { "distance": 100, "lambda": 0.2 } ],
        "n_robots": 4, "velocity": 4, "epoch_len": 50
    },
    "horizon_epochs": 40,
    "sweep": { "variable": "T", "values": [20, 50] },
    "output": "out.csv"
}"#;

#[test]
fn sweep_writes_csv_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SWEEP);
    stdout(&ferrysim(&["sweep", &cfg]));
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], RESULT_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("T,20.0,1,"));
    assert!(lines[4].starts_with("T,50.0,2,"));
    // T=20 puts the far sink out of reach within an epoch: no inner bound.
    assert_eq!(lines[1].split(',').nth(9), Some(""));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SWEEP);
    let a = stdout(&ferrysim(&["sweep", &cfg, "-o", "-"]));
    let b = stdout(&ferrysim(&["sweep", &cfg, "-o", "-"]));
    assert_eq!(a, b);
}

#[test]
fn run_ignores_sweep_and_honours_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SWEEP);
    let out = stdout(&ferrysim(&["run", &cfg, "--horizon", "8", "--output", "-"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with(",,1,0.2,"));
    assert!(!ferrysim(&["run", &cfg, "--horizon", "2"]).status.success());
}

#[test]
fn seed_changes_random_placement_only() {
    let dir = tempfile::tempdir().unwrap();
    let text = SWEEP
        .replace("\"velocity\": 4", "\"velocity\": 0.1")
        .replace(
            "\"epoch_len\": 50",
            "\"epoch_len\": 50, \"initial_robot_positions\": \"random\"",
        );
    let cfg = write(dir.path(), "c.json", &text);
    let a = stdout(&ferrysim(&[
        "run",
        &cfg,
        "-o",
        "-",
        "--seed",
        "1",
        "--horizon",
        "6",
    ]));
    let b = stdout(&ferrysim(&[
        "run",
        &cfg,
        "-o",
        "-",
        "--seed",
        "1",
        "--horizon",
        "6",
    ]));
    let c = stdout(&ferrysim(&[
        "run",
        &cfg,
        "-o",
        "-",
        "--seed",
        "2",
        "--horizon",
        "6",
    ]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn invalid_configs_fail_with_a_reason() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SWEEP.replace("\"n_robots\": 4", "\"n_robots\": 5");
    let cfg = write(dir.path(), "bad.json", &bad);
    let o = ferrysim(&["sweep", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("N <= 2K"));

    let cfg = write(
        dir.path(),
        "typo.json",
        &SWEEP.replace("\"horizon_epochs\"", "\"horizon\""),
    );
    let o = ferrysim(&["sweep", &cfg]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `horizon`"));

    let single = SWEEP.replace(
        ",\n    \"sweep\": { \"variable\": \"T\", \"values\": [20, 50] }",
        "",
    );
    assert!(!single.contains("sweep"));
    let no_sweep = write(dir.path(), "single.json", &single);
    let o = ferrysim(&["sweep", &no_sweep]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no `sweep` section"));
}

#[test]
fn static_program_file_is_loaded_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let spec = NetworkSpec::with_default_layout(
        &[10.0, 10.0],
        &[0.3, 0.3],
        3,
        4.0,
        50,
        RateModel::default(),
    )
    .unwrap();
    let program =
        capacity::oracle_program(&[0.3, 0.3], &spec, 0.05, &SynthesisOptions::default()).unwrap();
    write(dir.path(), "prog.json", &program.to_json().unwrap());
    let cfg = r#"{
        "network": {
            "flows": [ { "distance": 10, "lambda": 0.3 }, { "distance": 10, "lambda": 0.3 } ],
            "n_robots": 3, "velocity": 4, "epoch_len": 50
        },
        "scheduler": { "kind": "static", "program": "prog.json" },
        "horizon_epochs": 200
    }"#;
    let cfg = write(dir.path(), "c.json", cfg);
    let loaded = experiment::load_config(Path::new(&cfg)).unwrap();
    assert_eq!(
        loaded.scheduler,
        experiment::SchedulerKind::Static(
            ScheduleProgram::from_json(&program.to_json().unwrap()).unwrap()
        )
    );
    let out = stdout(&ferrysim(&["run", &cfg, "-o", "-"]));
    for line in out.lines().skip(1) {
        assert_eq!(line.split(',').nth(7), Some("true"), "{line}");
    }
}

#[test]
fn delay_table_marks_infeasible_rows() {
    let out = stdout(&ferrysim(&[
        "delay-table",
        "--d",
        "10",
        "--v",
        "2",
        "--T",
        "10",
        "--lambda",
        "0.05,0.3,0.6",
        "--horizon",
        "200",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], DELAY_HEADER);
    assert!(lines[1].contains("depletes_in_transit"));
    assert!(lines[2].contains("depletes_at_sink"));
    assert!(lines[3].ends_with(",infeasible"));

    let out = stdout(&ferrysim(&[
        "delay-table",
        "--d",
        "0",
        "--v",
        "1",
        "--T",
        "20",
        "--fractions",
        "0.5",
        "--horizon",
        "50",
    ]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let lam: f64 = row[3].parse().unwrap();
    let closed: f64 = row[7].parse().unwrap();
    assert!((closed - (10.0 + lam * 10.0)).abs() < 1e-6, "{row:?}");
}

#[test]
fn capacity_check_reports_all_regions() {
    // On the sum facet: in the closure only.
    let out = stdout(&ferrysim(&[
        "capacity",
        "check",
        "--lambda",
        "0.75,0.75",
        "--robots",
        "3",
    ]));
    assert!(out.contains("capacity_region: false"));
    assert!(out.contains("hull: true"));
    assert!(!out.contains("inner_bound"));
    assert!(out.contains("decomposition:"));

    let out = stdout(&ferrysim(&[
        "capacity", "check", "--lambda", "1,1", "--robots", "3", "--d", "10", "--v", "2", "--T",
        "10",
    ]));
    assert!(out.contains("capacity_region: false"));
    assert!(out.contains("hull: false"));
    assert!(out.contains("inner_bound: false"));
    assert!(!out.contains("decomposition"));

    let out = stdout(&ferrysim(&[
        "capacity", "check", "--lambda", "0.1", "--robots", "2", "--d", "30", "--v", "1", "--T",
        "10",
    ]));
    assert!(out.contains("inner_bound: undefined"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            experiment::load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 3);
}
