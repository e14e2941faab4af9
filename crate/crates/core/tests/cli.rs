use std::path::PathBuf;
use std::process::Command;

use causalid::cli::run;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("causalid").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn identify_front_door_matches_golden() {
    let (code, out, _) = cli(&["identify", &data("front_door.dag"), "--x", "X", "--y", "Y"]);
    assert_eq!(code, 0);
    assert_eq!(out, golden("identify_front_door.txt"));
}

#[test]
fn identify_loyalty_latex_matches_golden() {
    let (code, out, _) = cli(&["identify", &data("loyalty.dag"), "--x", "X", "--y", "Y", "--latex"]);
    assert_eq!(code, 0);
    assert_eq!(out, golden("identify_loyalty_latex.txt"));
}

#[test]
fn identify_pricing_is_known_non_identifiable() {
    let (code, out, _) = cli(&["identify", &data("pricing.dag"), "--x", "X", "--y", "Y"]);
    assert_eq!(code, 1);
    assert_eq!(out, golden("identify_pricing.txt"));
}

#[test]
fn identify_small_budget_fails() {
    let (code, out, _) = cli(&["identify", &data("front_door.dag"), "--x", "X", "--y", "Y", "--budget", "3"]);
    assert_eq!(code, 1);
    assert!(out.starts_with("NOT-IDENTIFIED-WITHIN-BUDGET (3)\n"), "{out}");
    let (code, _, err) = cli(&["identify", &data("front_door.dag"), "--x", "X", "--y", "Y", "--budget", "0"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error: "), "{err}");
}

#[test]
fn identify_json_document() {
    let (code, out, _) = cli(&["identify", &data("front_door.dag"), "--x", "X", "--y", "Y", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["status"], "identified");
    assert_eq!(v["formula"], "sum_Z p(Z|X) sum_{X'} p(Y|X',Z) p(X')");
    assert_eq!(v["derivation"].as_array().unwrap().len(), 9);
}

#[test]
fn eval_confounder_matches_golden() {
    let args = [
        "eval",
        &data("confounder.model"),
        "--formula",
        "sum_z p(y|x,z) p(z)",
        "--do",
        "x",
        "--target",
        "y",
        "--check",
    ];
    let (code, out, _) = cli(&args);
    assert_eq!(code, 0);
    assert_eq!(out, golden("eval_confounder.txt"));
}

#[test]
fn eval_front_door_formula_checks() {
    let formula = "sum_z p(z|x) sum_{x'} p(y|x',z) p(x')";
    let (code, out, _) =
        cli(&["eval", &data("front_door.model"), "--formula", formula, "--do", "x", "--target", "y", "--check"]);
    assert_eq!(code, 0);
    assert!(out.ends_with("max difference: 0\n"), "{out}");
}

#[test]
fn eval_wrong_formula_exits_one() {
    let (code, out, _) =
        cli(&["eval", &data("confounder.model"), "--formula", "p(y|x)", "--do", "x", "--target", "y", "--check"]);
    assert_eq!(code, 1);
    assert!(!out.ends_with("max difference: 0\n"), "{out}");
}

#[test]
fn eval_positivity_violation() {
    let (code, _, err) = cli(&["eval", &data("positivity.model"), "--formula", "p(y|w)", "--bind", "y=0,w=1"]);
    assert_eq!(code, 2);
    assert!(err.contains("p(w=1) = 0 in term p(y|w)"), "{err}");
}

#[test]
fn dsep_verdicts() {
    let (code, out, _) = cli(&["dsep", &data("fork.dag"), "--x", "X", "--y", "Y"]);
    assert_eq!((code, out.as_str()), (0, "CONNECTED X<-Z->Y\n"));
    let (code, out, _) = cli(&["dsep", &data("fork.dag"), "--x", "X", "--y", "Y", "--given", "Z"]);
    assert_eq!((code, out.as_str()), (0, "SEPARATED\n"));
    let (code, out, _) = cli(&["dsep", &data("collider.dag"), "--x", "X", "--y", "Y", "--given", "Z"]);
    assert_eq!((code, out.as_str()), (0, "CONNECTED X->Z<-Y\n"));
}

#[test]
fn equiv_and_pattern() {
    let (code, out, _) = cli(&["equiv", &data("chain.dag"), &data("fork.dag")]);
    assert_eq!((code, out.as_str()), (0, "EQUIVALENT\n"));
    let (code, out, _) = cli(&["equiv", &data("chain.dag"), &data("collider.dag")]);
    assert_eq!(code, 1);
    assert!(out.starts_with("DISTINCT "), "{out}");
    let (code, out, _) = cli(&["pattern", &data("collider.dag")]);
    assert_eq!((code, out.as_str()), (0, "X->Z  Y->Z\n"));
}

#[test]
fn corpus_run_matches_golden() {
    let (code, out, _) = cli(&["corpus", "--run"]);
    assert_eq!(code, 0);
    assert_eq!(out, golden("corpus_run.txt"));
}

#[test]
fn usage_and_input_errors() {
    let (code, _, err) = cli(&["identify"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
    let (code, _, err) = cli(&["dsep", &data("cyclic.dag"), "--x", "X", "--y", "Y"]);
    assert_eq!(code, 2);
    assert!(err.contains("cycle"), "{err}");
    let (code, _, err) = cli(&["dsep", &data("missing.dag"), "--x", "X", "--y", "Y"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.dag"), "{err}");
    let (code, _, _) = cli(&["dsep", &data("fork.dag"), "--x", "X", "--y", "Q"]);
    assert_eq!(code, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_causalid");
    let status = |args: &[&str]| Command::new(bin).args(args).env("NO_COLOR", "1").output().unwrap();
    let ok = status(&["identify", &data("loyalty.dag"), "--x", "X", "--y", "Y"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("IDENTIFIED\n"));
    assert_eq!(status(&["identify", &data("pricing.dag"), "--x", "X", "--y", "Y"]).status.code(), Some(1));
    assert_eq!(status(&["bogus"]).status.code(), Some(2));
    let run1 = status(&["corpus", "--run"]);
    let run2 = status(&["corpus", "--run"]);
    assert_eq!(run1.status.code(), Some(0));
    assert_eq!(run1.stdout, run2.stdout);
}
