use std::path::PathBuf;
use std::process::{Command, Output};

fn ustc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ustc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(out: &'a str, key: &str) -> Option<&'a str> {
    out.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('\t'))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ustc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn evaluate_prints_the_golden_product() {
    let o = ustc(&["evaluate", "--builtin", "sl2f5"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "product"), Some("0.309016994375"));
    assert_eq!(field(&out, "L"), Some("120"));
}

#[test]
fn single_element_file_is_a_validation_error() {
    let path = scratch("single.json");
    let o = ustc(&["builtin-export", "--builtin", "sl2f5"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mut one = json.clone();
    let elements = one["elements"].as_array_mut().unwrap();
    elements.truncate(1);
    std::fs::write(&path, one.to_string()).unwrap();
    let o = ustc(&["evaluate", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = ustc(&["evaluate", "--in", "/nonexistent/ustc.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(ustc(&["evaluate", "--bogus"]).status.code(), Some(1));
    assert_eq!(ustc(&["evaluate", "--builtin", "sl2f5", "--in", "x"]).status.code(), Some(1));
    assert_eq!(ustc(&["simulate", "--builtin", "sl2f5", "--snr-db", "5:0:1"]).status.code(), Some(1));
    assert_eq!(ustc(&["optimize-sa", "--objective", "chernoff"]).status.code(), Some(1));
    assert_eq!(ustc(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_builtin_and_table_are_rejected() {
    assert_eq!(ustc(&["evaluate", "--builtin", "nope"]).status.code(), Some(2));
    let o = ustc(&["reproduce", "--table", "table11"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("table10"));
}

#[test]
fn seeded_runs_are_reproducible() {
    let sa = ["optimize-sa", "--structure", "akbl", "--p", "2", "--q", "2", "--seed", "11", "--iterations", "500"];
    assert_eq!(stdout(&ustc(&sa)), stdout(&ustc(&sa)));
    let ga = ["optimize-ga", "--size", "4", "--seed", "11", "--iterations", "500", "--objective", "sum"];
    assert_eq!(stdout(&ustc(&ga)), stdout(&ustc(&ga)));
    let sim = ["simulate", "--builtin", "optimal3dim2", "--snr-db", "0:4:2", "--trials", "3000", "--seed", "3"];
    let a = ustc(&sim);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&ustc(&sim)));
}

#[test]
fn missing_seed_is_reported() {
    let o = ustc(&["optimize-ga", "--size", "3", "--iterations", "50"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(field(&out, "seed").unwrap().parse::<u64>().is_ok());
}

#[test]
fn optimized_constellation_round_trips_through_evaluate() {
    let path = scratch("opt.json");
    let p = path.to_str().unwrap();
    let o = ustc(&["optimize-sa", "--structure", "ab", "--p", "5", "--seed", "2", "--iterations", "800", "--out", p]);
    assert!(o.status.success());
    let best = field(&stdout(&o), "best_value").unwrap().to_string();
    let e = stdout(&ustc(&["evaluate", "--in", p]));
    assert_eq!(field(&e, "product"), Some(best.as_str()));

    let r = ustc(&["optimize-sa", "--in", p, "--seed", "2", "--iterations", "200"]);
    assert!(r.status.success());
    let refined: f64 = field(&stdout(&r), "best_value").unwrap().parse().unwrap();
    assert!(refined >= best.parse::<f64>().unwrap() - 1e-12);
}

#[test]
fn curve_and_grid_search_run() {
    let o = ustc(&["curve", "--builtin", "sl2f5", "--snr-db", "0:10:5", "--exact"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = ustc(&["grid-search", "--structure", "akbl", "--p", "1", "--q", "1", "--density", "2", "--objective", "sum"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
