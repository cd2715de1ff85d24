use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use symchord_core::kepler::{tau_kl, ResonanceLabel};

fn symchord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symchord")).args(args).output().expect("binary runs")
}

fn stderr_error(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    serde_json::from_str(lines[0]).expect("error line is JSON")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn tau_table_matches_the_formula() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "tau.csv");
    let out = symchord(&["tau-table", "--set", "cover=2", "--set", "tau_table.k_max=9", "--csv", &csv]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["schema_version"], 1);
    let text = fs::read_to_string(&csv).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("k,l,tau,doubly_symmetric"));
    let mut n = 0;
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let (k, l): (u64, u64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        assert_eq!(k - l, 2);
        assert_eq!(f[2].parse::<f64>().unwrap(), tau_kl(ResonanceLabel::new(k, l).unwrap()));
        n += 1;
    }
    assert_eq!(n, 4);
}

#[test]
fn homology_completion_query() {
    let out = symchord(&[
        "homology",
        "--set",
        "homology.fixed=1",
        "--set",
        "homology.target=0:1",
        "--set",
        "homology.pairing=true",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["size"], 2);
    assert_eq!(json["completions"], serde_json::json!([[0, 0]]));
}

#[test]
fn homology_of_a_complex_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "cx.json");
    fs::write(
        &file,
        r#"{"generators":[{"label":"c","degree":2},{"label":"d","degree":1},{"label":"rd","degree":1}],"boundary":[[2,0]]}"#,
    )
    .unwrap();
    let out = symchord(&["homology", "--set", &format!("homology.complex={file}")]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["homology"], serde_json::json!({ "1": 1 }));

    fs::write(&file, r#"{"generators":[{"label":"a","degree":0},{"label":"b","degree":2}],"boundary":[[0,1]]}"#).unwrap();
    let out = symchord(&["homology", "--set", &format!("homology.complex={file}")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["kind"], "config");
}

#[test]
fn realizability_table() {
    let out = symchord(&["homology", "--set", "homology.degrees=3;0,2,3;0,1", "--set", "homology.target=0:1"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = json["rows"].as_array().unwrap();
    let verdicts: Vec<bool> = rows.iter().map(|r| r["realizable"].as_bool().unwrap()).collect();
    assert_eq!(verdicts, vec![false, true, false]);
    assert!(rows.iter().all(|r| r["realizable"] == r["brute_force"]));
}

#[test]
fn scan_is_deterministic_and_counts_events() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "scan.cfg");
    fs::write(&cfg, "# doubly covered direct circular orbit\nsystem = rotating-kepler\ninvolution = rho0\ncover = 2\ntau.min = -2.2\ntau.max = -1.515 # past tau_{7,5}\n").unwrap();
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let (json, csv, svg) = (
            path(dir.path(), &format!("s{run}.json")),
            path(dir.path(), &format!("s{run}.csv")),
            path(dir.path(), &format!("s{run}.svg")),
        );
        let out = symchord(&["scan", "-c", &cfg, "-o", &json, "--csv", &csv, "--svg", &svg, "--expect-events", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        artifacts.push([fs::read(&json).unwrap(), fs::read(&csv).unwrap(), fs::read(&svg).unwrap()]);
    }
    assert_eq!(artifacts[0][0], artifacts[1][0]);
    assert_eq!(artifacts[0][1], artifacts[1][1]);
    let strip = |b: &[u8]| String::from_utf8_lossy(b).lines().filter(|l| !l.starts_with("<!--")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&artifacts[0][2]), strip(&artifacts[1][2]));

    let json: serde_json::Value = serde_json::from_slice(&artifacts[0][0]).unwrap();
    assert_eq!(json["schema_version"], 1);
    let taus: Vec<f64> = json["primary_event_taus"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (t, (k, l)) in taus.iter().zip([(3, 1), (5, 3), (7, 5)]) {
        assert!((t - tau_kl(ResonanceLabel::new(k, l).unwrap())).abs() < 1e-6);
    }
    let csv = String::from_utf8_lossy(&artifacts[0][1]);
    assert!(csv.starts_with("family_id,tau,s,T,eta,mu_x2,m\n"));
    let svg = String::from_utf8_lossy(&artifacts[0][2]);
    assert!(svg.contains("<polyline") && svg.contains("<circle"));
}

#[test]
fn unmet_expectation_exits_with_four() {
    let out = symchord(&["scan", "--set", "cover=2", "--set", "tau.min=-2.2", "--set", "tau.max=-1.7", "--expect-events", "3"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_error(&out)["error"]["kind"], "expectation");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let json = path(dir.path(), "out.json");
    for args in [
        vec!["find-chord", "--set", "nonsense=1"],
        vec!["find-chord", "--set", "tau=-1.0"],
        vec!["continue", "--set", "tau.min=-1.6", "--set", "tau.max=-1.7"],
        vec!["find-chord", "--set", "system=three-body", "--set", "tau=-1.8"],
        vec!["index", "--set", "flow.abs_tol=0", "--set", "tau=-1.8"],
    ] {
        let mut args = args.clone();
        args.extend(["-o", &json]);
        let out = symchord(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_error(&out)["error"]["code"], 2);
        assert!(!Path::new(&json).exists());
    }
}

#[test]
fn numerical_failure_exits_with_three_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let json = path(dir.path(), "chord.json");
    let out = symchord(&[
        "find-chord",
        "--set",
        "tau=-1.8",
        "--set",
        "seed.s=0.6",
        "--set",
        "seed.T=0.4",
        "--set",
        "shoot.max_iterations=2",
        "-o",
        &json,
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_error(&out)["error"]["kind"], "numerical");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn find_chord_and_index() {
    let out = symchord(&["index", "--set", "tau=-1.8", "--set", "cover=2"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let chord = &json["chord"];
    for key in ["system", "involution", "tau", "s", "T", "eta", "m", "nondegenerate", "residual"] {
        assert!(!chord[key].is_null(), "missing {key}");
    }
    assert_eq!(chord["m"], 2);
    assert_eq!(json["index"]["mu_x2"], 4);
    assert!(json["index"]["crossings"].is_array());
}

#[test]
fn verify_reports_small_residuals() {
    for system in ["rotating-kepler", "hill-lunar", "rotating-oscillator-test"] {
        let out = symchord(&["verify", "--set", &format!("system={system}")]);
        assert!(out.status.success(), "{system}");
        let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(json["passes"], true);
    }
}

#[test]
fn continue_writes_family_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "fam.csv");
    let out = symchord(&["continue", "--set", "cover=2", "--set", "tau.min=-1.76", "--set", "tau.max=-1.71", "--csv", &csv]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["events"].as_array().unwrap().len(), 1);
    assert_eq!(json["plateaus"].as_array().unwrap().len(), 2);
    assert!(fs::read_to_string(&csv).unwrap().lines().count() > 5);
}
