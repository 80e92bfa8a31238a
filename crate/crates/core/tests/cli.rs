//! Argument parsing, dispatch and exit codes of the command-line front end.

use bvcheck::cli::{run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("bvcheck").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn verify_one_suite_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (code, out, _) = call(&["verify", "--suite", "master_equation", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS, "{out}");
    assert!(out.starts_with("PASS master_equation"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let r = &json[0];
    assert_eq!(
        (r["suite"].as_str(), r["status"].as_str()),
        (Some("master_equation"), Some("pass"))
    );
    assert!(r["seed"].is_u64() && r["millis"].is_u64() && !r["residual"].is_null());
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let (code, _, err) = call(&["verify", "--suite", "nosuch"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("nosuch"), "{err}");
}

#[test]
fn scalar_theory_skips_gauge_suites() {
    let (code, out, _) = call(&[
        "verify",
        "--theory",
        "scalar",
        "--suite",
        "scalar_split",
        "--suite",
        "jacobi",
        "--suite",
        "star_commutator",
    ]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("SKIP jacobi"), "{out}");
    assert!(out.contains("PASS scalar_split"), "{out}");
}

#[test]
fn mutation_fails_its_suite() {
    let (code, out, _) = call(&["verify", "--suite", "ym_shift_prop", "--mutation", "psi_sign"]);
    assert_eq!(code, EXIT_FAIL);
    assert!(out.contains("FAIL ym_shift_prop") && out.contains("residual:"), "{out}");
    let (code, _, err) = call(&["verify", "--suite", "jacobi", "--mutation", "bogus"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("psi_sign"), "{err}");
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"seed": 5, "trials": {"star_assoc": 3}}"#).unwrap();
    let out_path = dir.path().join("r.json");
    let (code, _, _) = call(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--suite",
        "star_assoc",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS);
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("\"seed\": 9") && text.contains("3 triples"), "{text}");

    std::fs::write(&cfg, r#"{"unknown_key": 1}"#).unwrap();
    let (code, _, err) = call(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE, "{err}");
    let (code, _, _) = call(&["verify", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn lattice_rejects_cfl_violation() {
    let (code, _, err) = call(&["lattice", "--dt", "0.2"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.to_lowercase().contains("cfl"), "{err}");
}

#[test]
fn lattice_dump_writes_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = call(&[
        "lattice",
        "--nx",
        "32",
        "--nt",
        "64",
        "--dx",
        "0.5",
        "--dt",
        "0.25",
        "--dump",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.contains("lattice_green") && out.contains("order"), "{out}");
    assert!(code == EXIT_PASS || code == EXIT_FAIL);
    let bg = std::fs::read_to_string(dir.path().join("background.txt")).unwrap();
    assert_eq!(bg.lines().count(), 65);
    assert_eq!(bg.lines().next().unwrap().split_whitespace().count(), 32);
}

#[test]
fn expr_normalizes_and_grades() {
    let (code, out, _) = call(&["expr", "(* (C I) (C I))"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(out.lines().next(), Some("0"));
    let (code, out, _) = call(&["expr", "(A @0 1)", "--apply", "s0"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(out.lines().next(), Some("(* (D 1 (C a0)) (comb a0 @0))"));
    assert!(out.contains("ghost 1"));
    let (code, out, _) = call(&["expr", "(* (D ^mu (Fbar @0 mu 1)) (phi))", "--region", "u"]);
    assert_eq!((code, out.lines().next()), (EXIT_PASS, Some("0")));
}

#[test]
fn expr_parse_errors() {
    let (code, _, err) = call(&["expr", "(* (phi) (phi)"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("parse"), "{err}");
    let (code, _, _) = call(&["expr", "(phi)", "--dim", "7"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "--all", "--suite", "jacobi"]).0, EXIT_USAGE);
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("verify") && out.contains("lattice"));
    let (code, out, _) = call(&["suites"]);
    assert_eq!((code, out.lines().count()), (EXIT_PASS, 19));
}
