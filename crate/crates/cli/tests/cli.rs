use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use padicx::anticyclo::{split_tower, GroupElem, LevelIndex};
use padicx::harmonic::HarmonicCocycle;
use padicx::padic::{iwasawa_log, PadicNumber};
use padicx::theta::GrossPointData;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_padicx"));
    c.env_remove("PADICX_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn padic(v: &Value) -> PadicNumber {
    v.as_str().expect("string").parse().expect("tagged p-adic")
}

/// A Dirac tower at (1,0,1) of level 4 with one log functional on gamma.
fn dirac_files(dir: &Path) -> PathBuf {
    let tower = split_tower(3, 2, 4);
    let mut tf = tower.to_file();
    tf.logs.insert("s".into(), [("gamma".to_string(), "3^1 * 1 + O(3^20)".to_string())].into());
    std::fs::write(dir.join("tower.json"), serde_json::to_string(&tf).unwrap()).unwrap();
    let d = GrossPointData::dirac(tower, 3, 20, &LevelIndex::single(4), &GroupElem(vec![1, 0, 1])).unwrap();
    let mut f = d.to_file();
    f.tower = "tower.json".into();
    let path = dir.join("data.json");
    std::fs::write(&path, serde_json::to_string(&f).unwrap()).unwrap();
    path
}

#[test]
fn tate_q_valuation_and_roundtrip() {
    let o = run(&["tate-q", "--j", "3^-5 * 2 + O(3^15)"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["result"]["ord"], 5);
    assert!(v["result"]["j_recomputed_agreement"].as_i64().unwrap() >= 13);
    assert!(v["result"]["q"].as_str().unwrap().contains("+ O(3^"));
}

#[test]
fn linvariant_from_j() {
    let o = run(&["linvariant", "--j", "3^-5 * 2 + O(3^15)"]);
    assert!(o.status.success());
    let v = json_of(&o);
    let q = padic(&v["result"]["q"]);
    let unit = q.checked_div(&PadicNumber::from_int(3, 243, q.prec())).unwrap();
    let want = iwasawa_log(&unit).unwrap().div_int(5);
    assert!(padic(&v["result"]["l_invariant"]).agreement(&want) >= 12);
}

#[test]
fn linvariant_axis_file() {
    let dir = scratch("axis");
    let path = dir.join("axis.json");
    let c = HarmonicCocycle::axis_cocycle(&PadicNumber::from_int(3, 3, 20), 9).unwrap();
    std::fs::write(&path, c.to_json()).unwrap();
    let o = run(&["linvariant", "--cocycle", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(padic(&json_of(&o)["result"]["l_invariant"]).is_zero());
    // log_u with u = 12 kills log(3) + log(4), so L = -log(4)
    let o = run(&["linvariant", "--cocycle", path.to_str().unwrap(), "--branch", "u:12"]);
    assert!(o.status.success());
    let l = padic(&json_of(&o)["result"]["l_invariant"]);
    let four = iwasawa_log(&PadicNumber::from_int(3, 4, 20)).unwrap();
    assert!((&l + &four).val_or_prec() >= 15, "{l}");
}

#[test]
fn invalid_cocycle_lists_violations() {
    let dir = scratch("invalid");
    let path = dir.join("bad.json");
    let c = HarmonicCocycle::axis_cocycle(&PadicNumber::from_int(3, 3, 20), 4).unwrap();
    let mut f: Value = serde_json::from_str(&c.to_json()).unwrap();
    let edges = f["edges"].as_object_mut().unwrap();
    let key = edges.keys().next().unwrap().clone();
    edges[&key] = serde_json::json!(["3^0 * 5 + O(3^20)"]);
    std::fs::write(&path, f.to_string()).unwrap();
    let o = run(&["linvariant", "--cocycle", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = json_of(&o);
    assert_eq!(v["error"]["kind"], "validation");
    assert!(!v["error"]["details"].as_array().unwrap().is_empty());
}

#[test]
fn shallow_table_is_a_convergence_error() {
    let dir = scratch("shallow");
    let path = dir.join("axis.json");
    let c = HarmonicCocycle::axis_cocycle(&PadicNumber::from_int(3, 3, 20), 4).unwrap();
    std::fs::write(&path, c.to_json()).unwrap();
    let o = run(&["linvariant", "--cocycle", path.to_str().unwrap(), "--depth", "8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn theta_and_lfun_on_dirac_data() {
    let dir = scratch("dirac");
    let data = dirac_files(&dir);
    let data = data.to_str().unwrap();
    let o = run(&["theta", "--data", data, "--level", "[4]"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["result"]["theta"]["n=[4]"]["(1,0,1)"], "3^0 * 1 + O(3^20)");

    let eval = json_of(&run(&["lfun-eval", "--data", data]));
    assert_eq!(eval["result"]["theta_chi"], "3^0 * 1 + O(3^20)");
    let o = run(&["lfun-eval", "--data", data, "--prefactor", "2"]);
    assert_eq!(json_of(&o)["result"]["l_value_normalized"], "3^0 * 2 + O(3^20)");

    let o = run(&["lfun-deriv", "--data", data, "--order", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    let c: Vec<PadicNumber> = v["result"]["coeffs"].as_array().unwrap().iter().map(padic).collect();
    // a point mass gives the exponential series exp(l·t)
    assert_eq!(c[0].to_string(), eval["result"]["theta_chi"].as_str().unwrap());
    assert!(!c[1].is_zero());
    assert!(c[2].agreement(&(&c[1] * &c[1]).div_int(2)) >= 15);
    assert!(c[3].agreement(&(&(&c[1] * &c[1]) * &c[1]).div_int(6)) >= 14);
}

#[test]
fn local_factor_cases() {
    let dir = scratch("local");
    let path = dir.join("params.json");
    std::fs::write(&path, r#"{"abs_df": "1/3", "abs_dk": "1/9"}"#).unwrap();
    let o = run(&["local-factor", "--case", "nonsplit-principal", "--params", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(json_of(&o)["result"]["value"], "1/3 * (1/3)^(1/2)");
    let o = run(&["local-factor", "--case", "no-such-case", "--params", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::write(&path, r#"{"bogus": 1}"#).unwrap();
    let o = run(&["local-factor", "--case", "split-principal", "--params", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_suites() {
    let a = run(&["check", "padic"]);
    assert!(a.status.success());
    assert_eq!(json_of(&a)["result"]["failed"], 0);
    let o = run(&["check", "nonsense"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["check", "local"]);
    assert!(o.status.success());
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(&["linvariant"]).status.code(), Some(3));
    assert_eq!(run(&["tate-q", "--j", "2"]).status.code(), Some(3));
    assert_eq!(run(&["linvariant", "--j", "1/243", "--p", "3", "--branch", "bogus"]).status.code(), Some(3));
    assert_eq!(run(&["tate-q", "--j", "9", "--p", "3"]).status.code(), Some(1));
}

#[test]
fn deterministic_and_precision_tagged() {
    let args = ["tate-q", "--j", "1/243", "--p", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert_eq!(v["config"]["precision"], 20);
    assert!(v["result"]["q"].as_str().unwrap().ends_with("+ O(3^30)"));
    let o = bin().args(args).env("PADICX_PRECISION", "12").output().unwrap();
    let v = json_of(&o);
    assert_eq!(v["config"]["precision"], 12);
    assert!(v["result"]["q"].as_str().unwrap().ends_with("+ O(3^22)"));
}

#[test]
fn tsv_output_is_aligned() {
    let o = run(&["tate-q", "--j", "1/243", "--p", "3", "--format", "tsv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let cols: Vec<usize> = text.lines().map(|l| l.find('\t').unwrap()).collect();
    assert!(cols.windows(2).all(|w| w[0] == w[1]));
    assert!(text.lines().any(|l| l.starts_with("result.q") && l.contains("O(3^30)")));
}
