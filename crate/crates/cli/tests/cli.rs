use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lt-forge"))
        .args(args)
        .env_remove("LT_FORGE_PRECISION")
        .output()
        .unwrap()
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn minval_of_fourth_root_of_three() {
    let out = run(&["verify", "--theorem", "minval", "--tower", "3,1,4", "--series", "multiplicative"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    assert_eq!(r["status"], "consistent");
    assert_eq!(r["details"]["value"], -1);
    assert_eq!(r["details"]["gamma"], 1);
}

#[test]
fn log_of_uniformiser() {
    let out = run(&["log", "--tower", "3,1,4", "--element", "ϖ"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    assert_eq!(r["valuation"], -1);
    assert_eq!(r["ell"], 1);
}

#[test]
fn element_json_round_trips_through_log() {
    let field = run(&["field", "--tower", "3,1,4"]);
    let w = lines(&field)[0]["uniformizer"].to_string();
    let a = run(&["log", "--tower", "3,1,4", "--element", &w]);
    let b = run(&["log", "--tower", "3,1,4", "--element", "w"]);
    assert_eq!(lines(&a)[0]["log"], lines(&b)[0]["log"]);
}

#[test]
fn kernel_at_level_one() {
    let out = run(&["verify", "--theorem", "kernel", "--lt-level", "1", "--p", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    assert_eq!(r["status"], "consistent");
    assert_eq!(r["field"]["lt_level"], 1);
}

#[test]
fn parse_errors_exit_two() {
    for args in [
        vec!["verify", "--theorem", "nope"],
        vec!["log", "--tower", "3,1", "--element", "w"],
        vec!["log", "--tower", "3,1,4", "--element", "w +"],
        vec!["field", "--tower", "4,1,1"],
        vec!["field", "--tower", "3,1,2", "--eis", "[1,0,1]"],
        vec!["ctx", "--p", "3", "--series", "{not json"],
        vec!["bogus"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_one() {
    let out = run(&["log", "--tower", "3,1,4", "--element", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(lines(&out)[0]["error"].is_string());
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let args = ["verify", "--theorem", "log-hom", "--theorem", "genval2", "--p", "3", "--samples", "3", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_lt-forge"))
        .args(["verify", "--theorem", "regisolem", "--tower", "3,1,2"])
        .env("LT_FORGE_PRECISION", "24")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(lines(&out)[0]["precision"], 24);
}

#[test]
fn regularity_and_bases() {
    let r = lines(&run(&["regular", "--tower", "3,1,2", "--eis", "[3,0,1]"]))[0].clone();
    assert_eq!(r["regular"], false);
    let r = lines(&run(&["regular", "--tower", "3,1,4"]))[0].clone();
    assert_eq!(r["regular"], true);
    let b = lines(&run(&["basis", "--tower", "3,1,4"]))[0].clone();
    assert_eq!(b["size"], 4);
    assert_eq!(b["kind"], "BL");
    let s = lines(&run(&["basis", "--lt-level", "1", "--p", "3"]))[0].clone();
    assert_eq!(s["S_n"]["size"], 3);
    assert_eq!(s["B_n"].as_array().unwrap().len(), 2);
}

#[test]
fn context_series() {
    let out = run(&["ctx", "--p", "3", "--series", "basic", "--degree", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    assert_eq!(r["kind"], "basic");
    assert_eq!(r["D"], 16);
    // a Lubin-Tate series given as JSON is accepted back
    let s = r["lt_series"].to_string();
    let again = run(&["ctx", "--p", "3", "--series", &s]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));
}

#[test]
fn minval_ratio_too_small() {
    let r = lines(&run(&["minval", "--tower", "3,1,1"]))[0].clone();
    assert_eq!(r["min"], 1);
}
