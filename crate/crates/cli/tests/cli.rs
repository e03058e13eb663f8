use mucert_cli::{run, RunOutcome, EXIT_FOUND, EXIT_INCONCLUSIVE, EXIT_NONEXISTENT, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn mucert(args: &[&str]) -> RunOutcome {
    run(std::iter::once("mucert").chain(args.iter().copied()))
}

fn json(out: &RunOutcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", out.stdout))
}

#[test]
fn describe_reports_counts() {
    let out = mucert(&["describe", "--d", "6", "--sizes", "5,3,3,3"]);
    assert_eq!(out.code, EXIT_OK);
    let v = json(&out);
    assert_eq!(v["counts"]["s"], 8);
    assert_eq!(v["counts"]["num_phases"], 40);
    assert_eq!(v["config"]["command"]["subcommand"], "describe");
    assert_eq!(v["version"], mucert_cli::VERSION);
}

#[test]
fn describe_named_problem() {
    let v = json(&mucert(&["describe", "--problem", "spectral-pair"]));
    assert_eq!(v["counts"]["num_real_vars"], 20);
    assert_eq!(v["counts"]["n_eq"], 23);
    let v = json(&mucert(&["describe", "--problem", "spectral-pair-reduced"]));
    assert_eq!(v["counts"]["n_eq"], 21);
}

#[test]
fn text_reports() {
    let out = mucert(&["--report", "text", "describe", "--d", "2", "--sizes", "1,1,1,1"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("real variables=4"), "{}", out.stdout);
    let out = mucert(&["polysys", "--d", "2", "--sizes", "1,1,1,1", "--report", "text"]);
    assert!(out.stdout.contains("p5 ="), "{}", out.stdout);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["frobnicate"][..],
        &["describe", "--d", "2"],
        &["describe", "--d", "2", "--sizes", "1,x"],
        &["describe", "--d", "3", "--sizes", "2,3"],
        &["grid", "--d", "2", "--sizes", "1,1,1,1"],
        &["grid", "--d", "6", "--sizes", "5,3,3,3", "--resolution", "2"],
        &["groebner", "--d", "2", "--sizes", "1,1,1", "--order", "weird"],
        &["sdp-run", "--d", "2", "--sizes", "1,1,1", "--r", "4:2"],
        &["describe", "--d", "2", "--sizes", "1,1", "--problem", "spectral-pair"],
        &["check-mu", "--matrix", "fourier:x"],
    ] {
        let out = mucert(args);
        assert_eq!(out.code, EXIT_USAGE, "{args:?}: {}", out.stdout);
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(mucert(&["--help"]).code, EXIT_OK);
}

#[test]
fn groebner_certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let path = path.to_str().unwrap();
    let out = mucert(&["groebner", "--d", "2", "--sizes", "1,1,1,1", "--output", path]);
    assert_eq!(out.code, EXIT_NONEXISTENT, "{}", out.stderr);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["trivial"], true);
    assert_eq!(v["status"], "done");
    assert_eq!(v["certificate"].as_array().unwrap().len(), 5);

    let out = mucert(&["verify-cert", "--cert", path]);
    assert_eq!(out.code, EXIT_NONEXISTENT);
    assert_eq!(json(&out)["valid"], true);
    // Checked against freshly generated polynomials instead of the stored ones.
    let out = mucert(&["verify-cert", "--cert", path, "--d", "2", "--sizes", "1,1,1,1"]);
    assert_eq!(json(&out)["valid"], true);

    let mut v = v;
    v["certificate"][0] = v["certificate"][1].clone();
    std::fs::write(path, v.to_string()).unwrap();
    let out = mucert(&["verify-cert", "--cert", path]);
    assert_eq!(out.code, EXIT_INCONCLUSIVE);
    assert_eq!(json(&out)["valid"], false);
}

#[test]
fn groebner_non_trivial_and_limits() {
    let out = mucert(&["groebner", "--d", "2", "--sizes", "1,1,1"]);
    assert_eq!(out.code, EXIT_INCONCLUSIVE);
    let v = json(&out);
    assert_eq!(v["trivial"], false);
    assert!(v["certificate"].is_null());

    let out = mucert(&["groebner", "--d", "2", "--sizes", "1,1,1,1", "--max-pairs", "1"]);
    assert_eq!(out.code, EXIT_INCONCLUSIVE);
    assert_eq!(json(&out)["status"], "resource_exceeded");
}

#[test]
fn missing_certificate_file() {
    let out = mucert(&["verify-cert", "--cert", "/nonexistent/cert.json"]);
    assert_eq!(out.code, 1);
}

#[test]
fn grid_verdicts() {
    let out = mucert(&["grid", "--d", "2", "--sizes", "1,1,1,1", "--resolution", "12"]);
    assert_eq!(out.code, EXIT_NONEXISTENT);
    assert_eq!(json(&out)["verdict"], "excluded_everywhere");

    let out = mucert(&["grid", "--d", "2", "--sizes", "1,1,1,1", "--resolution", "4", "--witnesses", "3"]);
    assert_eq!(out.code, EXIT_INCONCLUSIVE);
    let v = json(&out);
    assert_eq!(v["surviving"], 9);
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 3);

    let out = mucert(&["grid", "--d", "2", "--sizes", "1,1,1,1", "--per-var", "12,24"]);
    assert_eq!(json(&out)["resolutions"], serde_json::json!([12, 24]));
}

#[test]
fn sdp_build_formats() {
    let out = mucert(&["sdp-build", "--d", "2", "--sizes", "1,1,1,1", "--r", "2"]);
    assert_eq!(out.code, EXIT_OK);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[2], "69");

    let inst = mucert::sdpsolve::sdpa::read_sdpa(&out.stdout).unwrap();
    assert_eq!(inst.n, 69);

    let out = mucert(&["sdp-build", "--d", "2", "--sizes", "1,1,1,1", "--r", "2", "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["n"], 69);

    let out = mucert(&["sdp-build", "--d", "2", "--sizes", "1,1,1,1", "--r", "1"]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn sdp_run_found_and_inconclusive() {
    let out = mucert(&["sdp-run", "--d", "2", "--sizes", "1,1,1", "--r", "2"]);
    assert_eq!(out.code, EXIT_FOUND, "{}", out.stdout);
    let v = json(&out);
    assert_eq!(v["verdict"]["verdict"], "found");
    assert_eq!(v["levels"].as_array().unwrap().len(), 1);

    let out = mucert(&["sdp-run", "--d", "2", "--sizes", "1,1,1,1", "--r", "2"]);
    assert_eq!(out.code, EXIT_INCONCLUSIVE);
    let b = json(&out)["levels"][0]["bound"].as_f64().unwrap();
    assert!(b.abs() <= 1e-4);
}

#[test]
fn check_mu_builtins_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    let f = mucert::linalg::fourier_matrix(3).unwrap();
    std::fs::write(&path, serde_json::to_string(&f).unwrap()).unwrap();
    let out = mucert(&["check-mu", "--matrix", "identity:3", "--matrix", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let v = json(&out);
    assert!(v["pairs"][0]["residual"].as_f64().unwrap() < 1e-12);

    let v = json(&mucert(&["check-mu", "--matrix", "fourier:6", "--matrix", "spectral"]));
    assert!(v["pairs"][0]["residual"].as_f64().unwrap() > 0.1);

    let out = mucert(&["check-mu", "--matrix", "identity:2", "--matrix", "identity:3"]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn report_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = mucert(&["describe", "--d", "2", "--sizes", "1,1,1,1", "--output", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["config"]["output"], path.to_str().unwrap());
}
