use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_einbein"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("einbein-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_documents_exit_codes() {
    let o = bin().arg("--help").output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("2  configuration error") && s.contains("3  numerical failure"));
    for cmd in ["field", "thimbles", "caustics", "laurent", "pade", "monodromy", "arrivals"] {
        assert!(s.contains(cmd), "{cmd}");
    }
}

#[test]
fn monodromy_of_the_index_loop() {
    let out = scratch("monodromy");
    let o = run(&["monodromy", "--config", config("constant.json").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(out.join("monodromy.json"));
    assert_eq!(v["monodromy"]["matrix"], serde_json::json!([[1, 1], [0, 1]]));
    assert!(v["confirmation_error"].as_f64().unwrap() < 1e-6);
    assert!(out.join("transported.json").exists());
}

#[test]
fn pade_finds_the_channel_pole() {
    let out = scratch("pade");
    let o = run(&["pade", "--config", config("channel.json").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(out.join("pade.json"));
    let poles = v["ghost_poles"].as_array().unwrap();
    let best = poles.iter().map(|p| p["beta"][0].as_f64().unwrap()).filter(|b| *b > 0.0).fold(f64::INFINITY, f64::min);
    assert!((best - 15.70796).abs() < 1e-3, "{best}");
}

#[test]
fn caustics_of_the_cusp() {
    let out = scratch("caustics");
    let o = run(&["caustics", "--config", config("cusp.json").to_str().unwrap(), "--grid", "11,11"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(out.join("caustics.json"));
    assert_eq!(v["cusps"], serde_json::json!([[0.0, 2.0], [0.0, -2.0]]));
    let csv = std::fs::read_to_string(out.join("caustics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 121);
}

#[test]
fn field_output_is_deterministic() {
    let (a, b) = (scratch("field-a"), scratch("field-b"));
    let cfg = config("linear.json");
    let args = ["field", "--config", cfg.to_str().unwrap(), "--grid", "6,3", "--k0", "5"];
    for d in [&a, &b] {
        let o = run(&args, d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["field_k5.csv", "field_k5.json", "field_k5.svg"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.join("field_k5.csv")).unwrap();
    assert!(csv.starts_with("x,z,re,im,abs,zone\n"));
    assert_eq!(csv.lines().count(), 1 + 18);
}

#[test]
fn arrivals_on_the_ghost_source_line() {
    let out = scratch("arrivals");
    let o = run(&["arrivals", "--config", config("cusp.json").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("arrivals.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // inside the cusp every point on x = 0 has a direct arrival then a loop arrival
    let at = |z: &str| rows.iter().filter(|r| r[1] == z).collect::<Vec<_>>();
    let pair = at("1");
    assert_eq!(pair.len(), 2);
    assert_eq!((pair[0][8], pair[1][8]), ("false", "true"));
    assert!(pair[0][2].parse::<f64>().unwrap() < pair[1][2].parse::<f64>().unwrap());
}

#[test]
fn configuration_errors_exit_with_two() {
    let out = scratch("bad");
    let o = run(&["field", "--config", "/nonexistent/config.json"], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["field", "--config", config("linear.json").to_str().unwrap(), "--grid", "1,5"], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["field", "--config", config("linear.json").to_str().unwrap(), "--k0", "-1"], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["field", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let out = scratch("caustic");
    // thimbles exactly on the fold
    let o = run(&["thimbles", "--config", config("linear.json").to_str().unwrap(), "--point", "10,0"], &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
