use std::process::{Command, Output};

fn pdmean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdmean")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn density_bridge_law() {
    let o = pdmean(&["density", "--alpha", "0.5", "--theta", "0.5", "--measure", "bernoulli:0.5", "--grid", "0.1:0.9:9"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("y,q,Q,flag"));
    let r = rows(&o);
    assert_eq!(r.len(), 9);
    for row in r {
        let q: f64 = row[1].parse().unwrap();
        assert!((q - 1.0).abs() < 1e-6);
        assert_eq!(row[3], "ok");
    }
}

#[test]
fn cdf_symmetry() {
    let o = pdmean(&["cdf", "--alpha", "0.5", "--theta", "0", "--measure", "bernoulli:0.5", "--grid", "0.5:0.5:1"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 1);
    assert!((r[0][2].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn atom_points_are_flagged_not_fatal() {
    let o = pdmean(&["density", "--alpha", "0.5", "--measure", "bernoulli:0.5", "--grid", "0,0.5,1"]);
    assert!(o.status.success());
    let flags: Vec<String> = rows(&o).into_iter().map(|r| r[3].clone()).collect();
    assert_eq!(flags, ["atom_collision", "ok", "atom_collision"]);
}

#[test]
fn sampling_is_deterministic() {
    let args = ["sample", "--method", "cftp", "--alpha", "0.5", "--theta", "2", "--n", "3", "--seed", "7"];
    let a = pdmean(&args);
    let b = pdmean(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a).lines().next(), Some("value"));
    assert_eq!(rows(&a).len(), 3);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["sample", "--alpha", "0.3", "--theta", "1", "--n", "20", "--seed", "3"];
    let a = Command::new(env!("CARGO_BIN_EXE_pdmean")).args(args).env("PDMEAN_THREADS", "1").output().unwrap();
    let b = pdmean(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn measure_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"type": "atoms", "atoms": [[0.0, 0.5], [1.0, 0.5]]}"#).unwrap();
    let out = dir.path().join("grid.json");
    let o = pdmean(&[
        "density",
        "--alpha",
        "0.5",
        "--theta",
        "0.5",
        "--measure",
        m.to_str().unwrap(),
        "--grid",
        "0.25,0.75",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[1]["Q"].as_f64().unwrap() - 0.75).abs() < 1e-6);
}

#[test]
fn transform_rows() {
    let o = pdmean(&["transform", "--alpha", "0.5", "--theta", "0.5", "--measure", "bernoulli:0.5", "--z", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("z,value"));
    let v: f64 = rows(&o)[0][1].parse().unwrap();
    assert!((v - 0.828427124746190).abs() < 1e-12);
}

#[test]
fn malformed_input_exits_one() {
    for args in [
        vec!["density", "--grid", "0.9:0.1:5"],
        vec!["density", "--grid", "0.1:0.9:0"],
        vec!["density", "--alpha", "1.5", "--grid", "0.5"],
        vec!["density", "--measure", "bernoulli:2", "--grid", "0.5"],
        vec!["density", "--measure", "/no/such/file.json", "--grid", "0.5"],
        vec!["sample", "--method", "nope"],
        vec!["validate", "--check", "99"],
        vec!["density", "--bogus"],
    ] {
        let o = pdmean(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn validate_subset() {
    let o = pdmean(&["validate", "--check", "1", "--check", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("id,check,statistic,threshold,pass,detail"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn stick_accepts_negative_theta() {
    let o = pdmean(&["sample", "--alpha", "0.5", "--theta", "-0.2", "--n", "20", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let vals: Vec<f64> = rows(&o).iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(vals.len(), 20);
    assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
    let d = pdmean(&["density", "--alpha", "0.5", "--theta", "-0.2", "--grid", "0.5"]);
    assert_eq!(d.status.code(), Some(1));
}
