use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_revinv");

fn small_config(out: &Path, extra: &str) -> String {
    format!(
        r#"output_dir = "{}"

[model]
mu_c = 0.2
sigma_c = 1.0
mu_f = 0.6
f_c = 1.0
c_plus = 1.0
c_minus = 0.8
horizon = 1.0

[grid]
n_steps = 100

[pde]
n_x = 160
n_t = 80
epsilon = 1e-3

[sim]
n_paths = 400
dt = 1e-2
seed = 3

[value]
t_points = 5
x_points = 21

[verify]
ys = [1.5]
dt_ladder = [2e-2]
skorokhod_paths = 100
comparison_paths = 400
marginal_paths = 400
dump_paths = 2
{extra}"#,
        out.display()
    )
}

struct Case {
    _dir: tempfile::TempDir,
    config: PathBuf,
    out: PathBuf,
}

fn case(edit: impl Fn(String) -> String) -> Case {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = dir.path().join("run.toml");
    fs::write(&config, edit(small_config(&out, ""))).unwrap();
    Case { _dir: dir, config, out }
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(BIN).args(args).arg("--config").arg(config).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn solve_writes_curves_with_forced_terminal_row() {
    let c = case(|s| s);
    let o = run(&["solve"], &c.config);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["boundaries.csv", "boundaries.json", "boundaries.svg"] {
        assert!(c.out.join(f).is_file(), "{f}");
    }
    let text = fs::read_to_string(c.out.join("boundaries.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,y_plus,y_minus");
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last, vec![1.0, 0.0, 2.44140625]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(c.out.join("boundaries.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["t_grid"].as_array().unwrap().len(), 101);
}

#[test]
fn value_uses_a_curves_file_and_reports_diagnostics() {
    let c = case(|s| s);
    assert_eq!(code(&run(&["solve"], &c.config)), 0);
    let curves = c.out.join("boundaries.csv");
    let o = Command::new(BIN)
        .args(["value", "--curves"])
        .arg(&curves)
        .arg("--config")
        .arg(&c.config)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(c.out.join("value_diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["pass"], true);
    let grid = fs::read_to_string(c.out.join("value_grid.csv")).unwrap();
    assert_eq!(grid.lines().next().unwrap(), "t,x,y,v,source");
    assert_eq!(grid.lines().count(), 1 + 5 * 21);
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = run(&["solve"], Path::new("/nonexistent/run.toml"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("usage"));
}

#[test]
fn invalid_costs_are_rejected_with_the_field_named() {
    let c = case(|s| s.replace("c_plus = 1.0", "c_plus = 0.7"));
    let o = run(&["solve"], &c.config);
    assert_eq!(code(&o), 3);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert!(err["error"]["message"].as_str().unwrap().contains("c_plus"));
    assert!(c.out.join("error.json").is_file());
}

#[test]
fn short_oracle_domain_is_a_numerical_failure() {
    let c = case(|s| s.replace("[pde]\n", "[pde]\nx_max = 1.0\n"));
    let o = run(&["value", "--oracle"], &c.config);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "extraction");
}

#[test]
fn swapped_curves_fail_verification() {
    let c = case(|s| s);
    assert_eq!(code(&run(&["solve"], &c.config)), 0);
    let text = fs::read_to_string(c.out.join("boundaries.csv")).unwrap();
    let mut swapped = String::from("t,y_plus,y_minus\n");
    for line in text.lines().skip(1) {
        let v: Vec<&str> = line.split(',').collect();
        swapped.push_str(&format!("{},{},{}\n", v[0], v[2], v[1]));
    }
    let bad = c.out.join("swapped.csv");
    fs::write(&bad, swapped).unwrap();
    let o = Command::new(BIN)
        .args(["verify", "--curves"])
        .arg(&bad)
        .arg("--config")
        .arg(&c.config)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn verify_is_reproducible_and_dumps_paths() {
    let c = case(|s| s);
    assert_eq!(code(&run(&["solve"], &c.config)), 0);
    let curves = c.out.join("boundaries.csv");
    let verify = |threads: &str| {
        let o = Command::new(BIN)
            .args(["verify", "--dump-paths", "--threads", threads, "--curves"])
            .arg(&curves)
            .arg("--config")
            .arg(&c.config)
            .output()
            .unwrap();
        assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(c.out.join("verify.json")).unwrap()
    };
    let first = verify("1");
    let second = verify("2");
    assert_eq!(first, second);
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["seed"], 3);
    let paths = fs::read_dir(c.out.join("paths")).unwrap().count();
    assert_eq!(paths, 2);
}
