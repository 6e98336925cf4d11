use std::path::PathBuf;

use simplechar::cli::{exit_code, run, Command, RunConfig, StudySpec};
use simplechar::harness::{preset_scenario, solve, Preset};
use simplechar::io::read_fields;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("simplechar-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn config(command: Command, preset: &str, points: usize) -> RunConfig {
    RunConfig {
        command,
        scenario: Some(preset_scenario(Preset::from_name(preset).unwrap(), points)),
        out: None,
        threads: None,
        seed: None,
        study: None,
        family: None,
        emit_pieces: false,
    }
}

#[test]
fn analyze_reports_double_characteristic() {
    let out = scratch("analyze");
    let o = run(&config(Command::Analyze, "laplacian", 16), &out).unwrap();
    assert_eq!(o.reported_error, Some(3));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(v["double_characteristic"], true);
    assert_eq!(v["certified"], false);

    let o = run(&config(Command::Analyze, "helmholtz", 32), &out).unwrap();
    assert_eq!(o.reported_error, None);
}

#[test]
fn solve_outputs_round_trip_and_repeat() {
    let cfg = config(Command::Solve, "helmholtz", 64);
    let (a, b) = (scratch("solve-a"), scratch("solve-b"));
    run(&cfg, &a).unwrap();
    run(&cfg, &b).unwrap();
    for name in ["u.field", "report.json"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let fields = read_fields(&a.join("u.field")).unwrap();
    let direct = solve(cfg.scenario.as_ref().unwrap()).unwrap();
    let u = direct.u.as_scalar().unwrap();
    assert_eq!(fields.len(), 1);
    assert_eq!(fields[0].data, u.data);
}

#[test]
fn bad_input_is_a_validation_error() {
    let mut cfg = config(Command::Solve, "helmholtz", 64);
    cfg.threads = Some(0);
    assert_eq!(exit_code(&run(&cfg, &scratch("bad")).unwrap_err()), 2);
    let cfg = RunConfig::from_json(r#"{"command": "study"}"#).unwrap();
    assert_eq!(exit_code(&cfg.validate().unwrap_err()), 2);
}

#[test]
fn counterexample_study_and_report() {
    let out = scratch("study");
    let mut cfg = config(Command::Study, "laplacian", 16);
    cfg.scenario = None;
    cfg.study = Some(StudySpec::Counterexample {
        a_values: vec![10.0, 20.0, 40.0, 80.0],
        radius: 100.0,
    });
    let o = run(&cfg, &out).unwrap();
    assert_eq!(o.study_pass, Some(true));
    let rep = run(
        &RunConfig::from_json(r#"{"command": "report"}"#).unwrap(),
        &out,
    )
    .unwrap();
    let text = std::fs::read_to_string(&rep.written[0]).unwrap();
    assert!(text.contains("study: pass true"), "{text}");
}
