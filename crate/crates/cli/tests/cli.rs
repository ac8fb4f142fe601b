use std::path::Path;
use std::process::Command as Process;

use dyadic_cli::{run, run_with, Env, EXIT_CAP, EXIT_CONFIG, EXIT_OK, EXIT_VERIFY};
use dyadic_core::commutator::cases::{case_terms, CaseInput, CaseTerm};
use dyadic_core::shift::ShiftMap;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn invoke(env: &Env, args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["dyadic"];
    full.extend_from_slice(args);
    let code = run_with(env, full, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn cli(args: &[&str]) -> Run {
    invoke(&Env::default(), args)
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn fixtures() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/norm_ratios.json").to_str().unwrap().to_string()
}

#[test]
fn default_verify_cases_passes() {
    let r = cli(&["verify-cases"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.starts_with("shift,depth,label,pairs,mismatches\n"));
    assert!(r.err.contains("0 mismatches"));
}

fn flipped_terms(input: &CaseInput, sigma: &ShiftMap) -> Vec<CaseTerm> {
    let mut t = case_terms(input, sigma);
    // sign error in the diagonal case only
    if input.i == input.i_prime {
        if let Some(first) = t.first_mut() {
            first.coeff = -&first.coeff;
        }
    }
    t
}

#[test]
fn injected_sign_error_is_located() {
    let env = Env { case_terms: flipped_terms };
    let r = invoke(&env, &["verify-cases"]);
    assert_eq!(r.code, EXIT_VERIFY);
    assert!(r.err.contains("mismatch [first-child, depth 2] Diagonal"), "{}", r.err);
    assert!(r.err.contains("closed form:") && r.err.contains("direct:"));
    let bad_rows: Vec<&str> = r.out.lines().filter(|l| !l.ends_with(",0")).skip(1).collect();
    assert!(!bad_rows.is_empty() && bad_rows.iter().all(|l| l.contains("Diagonal")), "{bad_rows:?}");
}

#[test]
fn empty_grid_warns_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"version": 1, "grid": {"dims": [1], "depths": [0]}}"#);
    let r = cli(&["verify-cases", "--config", &cfg]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.out, "shift,depth,label,pairs,mismatches\n");
    assert!(r.err.contains("warning: empty grid"));
    assert!(r.err.contains("0 pairs"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("unknown.json", r#"{"version": 1, "seed": [1]}"#),
        ("version.json", r#"{"version": 7}"#),
        ("preset.json", r#"{"version": 1, "shifts": ["spiral"]}"#),
        ("file.json", r#"{"version": 1, "shifts": [{"file": "nowhere.json"}]}"#),
        ("syntax.json", "{"),
    ] {
        let cfg = write_config(dir.path(), name, body);
        let r = cli(&["verify-cases", "--config", &cfg]);
        assert_eq!(r.code, EXIT_CONFIG, "{name}: {}", r.err);
        assert!(r.err.starts_with("config error"), "{name}: {}", r.err);
    }
    assert_eq!(cli(&["verify-cases", "--config", "/nonexistent/c.json"]).code, EXIT_CONFIG);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_CONFIG);
    assert_eq!(cli(&["bmo", "--seed-list", "1,x"]).code, EXIT_CONFIG);
}

#[test]
fn shift_map_files_resolve_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rot.json"), ShiftMap::rotating(1).to_json()).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"version": 1, "grid": {"dims": [1], "depths": [3]}, "shifts": [{"file": "rot.json"}]}"#,
    );
    let r = cli(&["verify-cases", "--config", &cfg]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.lines().skip(1).all(|l| l.starts_with("rot.json,")));
}

#[test]
fn horizon_violation_is_explained() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"version": 1, "horizon_margin": 1}"#);
    let r = cli(&["verify-decomposition", "--config", &cfg]);
    assert_eq!(r.code, EXIT_CONFIG);
    assert!(r.err.contains("horizon_margin = 1 violates the truncation horizon"), "{}", r.err);
}

#[test]
fn decomposition_runs_pass() {
    let r = cli(&["verify-decomposition", "--seed-list", "0..20"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert_eq!(r.out.lines().count(), 21);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"version": 1, "grid": {"dims": [1, 1], "depths": [3, 3]}, "shifts": ["first-child", "rotating"],
            "seeds": {"from": 0, "to": 25}}"#,
    );
    let r = cli(&["verify-decomposition", "--config", &cfg]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.lines().skip(1).all(|l| l.ends_with(",25,0")), "{}", r.out);
}

#[test]
fn resource_caps_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("verify-cases", r#"{"version": 1, "grid": {"dims": [1], "depths": [5]}}"#),
        ("opnorm", r#"{"version": 1, "grid": {"dims": [1], "depths": [13]}}"#),
        ("bmo", r#"{"version": 1, "grid": {"dims": [1], "depths": [6]}, "bmo_modes": ["exact-bruteforce"]}"#),
        ("riesz", r#"{"version": 1, "riesz": {"depth": 11, "m_max": 2}}"#),
        ("ratio", r#"{"version": 1, "depths": [13]}"#),
    ];
    for (i, (cmd, body)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.json"), body);
        let r = cli(&[cmd, "--config", &cfg]);
        assert_eq!(r.code, EXIT_CAP, "{cmd}: {}", r.err);
        assert!(r.err.starts_with("resource cap"), "{cmd}: {}", r.err);
    }
}

#[test]
fn bmo_of_single_haar_is_inverse_root_volume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"version": 1, "grid": {"dims": [1], "depths": [3]},
            "function": {"kind": "haar", "cubes": [{"level": 2, "pos": [1]}], "sig": ["0"]}}"#,
    );
    let r = cli(&["bmo", "--config", &cfg]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let rows: Vec<&str> = r.out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|l| l.ends_with(",2.0,4")), "{rows:?}");
}

#[test]
fn opnorm_of_constant_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "c.json", r#"{"version": 1, "function": {"kind": "constant", "value": "-5/3"}}"#);
    let r = cli(&["opnorm", "--config", &cfg]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert_eq!(r.out, "seed,depth,op_norm\n0,4,0.0\n");
}

#[test]
fn ratio_matches_fixtures() {
    let r = cli(&["ratio", "--fixtures", &fixtures()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.err.contains("24 compared with fixtures, 0 outside"), "{}", r.err);

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixtures()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let x = v["single_haar"][4]["ratio"].as_f64().unwrap();
    v["single_haar"][4]["ratio"] = serde_json::json!(x + 1e-6);
    let bad = write_config(dir.path(), "bad.json", &v.to_string());
    let r = cli(&["ratio", "--fixtures", &bad]);
    assert_eq!(r.code, EXIT_VERIFY);
    assert!(r.err.contains("fixture mismatch"), "{}", r.err);
}

#[test]
fn outputs_are_reproducible_and_mirrored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"version": 1, "family": "random", "depths": [4], "seeds": [3, 1, 2, 1]}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let r = cli(&["ratio", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(r.code, EXIT_OK, "{}", r.err);
    }
    let csv = std::fs::read(a.join("ratio.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("ratio.csv")).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("ratio.json")).unwrap()).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(json["rows"].as_array().unwrap().len(), lines.len() - 1);
    // seeds sorted and deduplicated
    let members: Vec<&str> = json["rows"].as_array().unwrap().iter().map(|r| r["member"].as_str().unwrap()).collect();
    assert_eq!(members, ["seed 1", "seed 2", "seed 3"]);
    assert_eq!(json["rows"][0]["ratio"].as_str().unwrap(), lines[1].split(',').nth(5).unwrap());
}

#[test]
fn dry_run_prints_plan_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    for cmd in ["verify-cases", "verify-decomposition", "bmo", "opnorm", "ratio", "riesz", "para-bound"] {
        let r = cli(&[cmd, "--dry-run", "--out", out.to_str().unwrap()]);
        assert_eq!(r.code, EXIT_OK, "{cmd}: {}", r.err);
        let plan: serde_json::Value = serde_json::from_str(r.out.split("\noutputs:").next().unwrap()).unwrap();
        assert_eq!(plan["command"], cmd);
    }
    assert!(!out.exists());
}

#[test]
fn riesz_and_para_bound_report() {
    let r = cli(&["riesz", "--seed-list", "4"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let res: Vec<f64> = r.out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(res.len(), 65);
    assert_eq!(res[0], 1.0);
    assert!(res.windows(2).all(|w| w[1] <= w[0]));

    let r = cli(&["para-bound", "--seed-list", "0..5"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.starts_with("seed,depth,ratio,bmo_mode\n"));
    assert_eq!(r.out.lines().count(), 6);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"version": 1, "paraproduct": {"eps1": ["1"], "eps2": ["0"], "eps3": ["0"]}}"#,
    );
    assert_eq!(cli(&["para-bound", "--config", &cfg]).code, EXIT_CONFIG);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dyadic");
    let ok = Process::new(bin).args(["opnorm", "--seed-list", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8(ok.stdout).unwrap().starts_with("seed,depth,op_norm\n1,4,"));
    let bad = Process::new(bin).args(["verify-decomposition", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
    let help = Process::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
}

#[test]
fn run_uses_default_environment() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(run(["dyadic", "verify-cases", "--dry-run"], &mut out, &mut err), EXIT_OK);
    assert!(String::from_utf8(out).unwrap().contains("\"verify-cases\""));
}
