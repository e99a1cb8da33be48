use std::path::PathBuf;
use std::process::{Command, Output};

fn eq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eq")).args(args).output().expect("run eq")
}

fn lang(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "languages", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn preserve_f3_odd3() {
    let o = eq(&["preserve", "--op", "f3", "--rel", "odd3", "--exact"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "Preserves");
}

#[test]
fn violation_exit_status() {
    let args = ["preserve", "--op", "f3", "--rel", "Rneq3"];
    let o = eq(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("Violates"));
    let mut strict = args.to_vec();
    strict.push("--fail-on-violates");
    assert_eq!(eq(&strict).status.code(), Some(1));
}

#[test]
fn order_cmp_length_condition() {
    let o = eq(&["order", "cmp", "(1,1,w)", "(2,w)"]);
    assert_eq!(stdout(&o).trim(), "false");
    let o = eq(&["order", "cmp", "(2,w)", "(1,1,w)"]);
    assert_eq!(stdout(&o).trim(), "true");
}

#[test]
fn classify_horn_language() {
    let o = eq(&["classify", &lang("N.lang")]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("position: H\n"), "{s}");
    assert!(s.contains("above_H=true above_B=false"), "{s}");
}

#[test]
fn json_round_trips_byte_identical() {
    for args in [
        vec!["classify", "--json", &lang("S.lang")],
        vec!["preserve", "--json", "--op", "richard", "--rel", "odd3", "--samples", "500", "--seed", "9"],
        vec!["monoid", "of", "--json", "odd3", "neq"],
    ] {
        let o = eq(&args);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text);
        assert!(v["version"].is_string());
        assert!(v["caps"]["partition_cap"].is_u64());
        assert!(v.get("seed").is_some());
    }
}

#[test]
fn usage_and_resource_errors() {
    assert_eq!(eq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(eq(&["preserve", "--op", "f3", "--rel", "nope"]).status.code(), Some(2));
    assert_eq!(eq(&["order", "cmp", "(1,1", "(w)"]).status.code(), Some(2));
    let o = eq(&["--budget", "10", "preserve", "--op", "f4", "--rel", "Runder3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn csp_solve_files() {
    let o = eq(&["csp", "solve", &lang("odd3.csp")]);
    assert!(stdout(&o).starts_with("Sat:"));
    let o = eq(&["csp", "solve", &lang("implication.csp")]);
    assert!(stdout(&o).starts_with("Unsat"));
    let o = eq(&["csp", "solve", "--brute", &lang("implication.csp")]);
    assert!(stdout(&o).starts_with("Unsat"));
}

#[test]
fn formula_and_pp_commands() {
    let o = eq(&["formula", "classify", "x=y | y=z"]);
    assert!(stdout(&o).contains("horn=false"));
    let o = eq(&["ppeval", "vars x,y: exists u: neq(x,u) & neq(u,y)"]);
    assert_eq!(stdout(&o).trim(), "orbits { [1,1], [1,2] }");
    let o = eq(&["formula", "expand", "vars a,b,c,d: a!=b | c=d"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn continuum_report() {
    let o = eq(&["continuum", "--n", "3", "--k", "4", "--samples", "200", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["violation"]["ok"], true);
    assert_eq!(v["result"]["cross"][0]["verdict"]["verdict"], "no_counterexample_found");
    assert_eq!(v["seed"], 42);
}
