use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("leibniz-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.0.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn leibniz(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leibniz"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LEIBNIZ_REPORT")
        .output()
        .unwrap()
}

fn verify(cfg: &Path, report: &Path) -> Output {
    leibniz(
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ],
        cfg.parent().unwrap(),
    )
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn find<'a>(rep: &'a Value, case: &str) -> &'a Value {
    rep["suites"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["cases"].as_array().unwrap())
        .find(|c| c["case"] == case)
        .unwrap_or_else(|| panic!("no case {case}"))
}

#[test]
fn identities_config_passes() {
    let s = Scratch::new("ident");
    let cfg = s.file(
        "run.toml",
        "suites = [\"identities\"]\npoints_per_check = 4\ntriples = 5\ncorpus = [\"sin\", \"exp\", \"cube\", \"log\"]\n",
    );
    let out = verify(&cfg, &s.path("r.json"));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let rep = read_json(&s.path("r.json"));
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["suites"].as_array().unwrap().len(), 1);
    let c = find(&rep, "id2/order2_variable");
    for key in [
        "case",
        "operator",
        "functions",
        "samples",
        "max_residual",
        "scale",
        "tolerance",
        "expect",
        "pass",
    ] {
        assert!(c.get(key).is_some(), "{key}");
    }
    assert_eq!(c["samples"], 20);
}

#[test]
fn counterexample_suite_flags_expected_violation() {
    let s = Scratch::new("cex");
    let cfg = s.file("run.toml", "suites = [\"counterexample\"]\n");
    let out = verify(&cfg, &s.path("r.json"));
    assert!(out.status.success());
    let rep = read_json(&s.path("r.json"));
    let powers = find(&rep, "id_powers/counterexample");
    assert_eq!(
        (powers["expect"].as_str(), powers["pass"].as_bool()),
        (Some("hold"), Some(true))
    );
    let v = find(&rep, "id2/counterexample");
    assert_eq!(
        (v["expect"].as_str(), v["pass"].as_bool()),
        (Some("violation"), Some(true))
    );
}

#[test]
fn numbers_carry_sixteen_digits() {
    let s = Scratch::new("digits");
    let cfg = s.file("run.toml", "suites = [\"faa\"]\n");
    assert!(verify(&cfg, &s.path("r.json")).status.success());
    let text = std::fs::read_to_string(s.path("r.json")).unwrap();
    let line = text.lines().find(|l| l.contains("\"tolerance\"")).unwrap();
    assert!(line.contains("1.000000000000000e-9"), "{line}");
}

#[test]
fn config_errors_exit_with_diagnostic() {
    let s = Scratch::new("bad");
    for (name, body, needle) in [
        ("zero_tol.toml", "tolerance = 0.0\n", "tolerance"),
        (
            "bad_k.toml",
            "[[operator]]\nfamily = \"characterized\"\nc1 = 1.0\nk = 0\n",
            "c1 = c2 = 0",
        ),
        ("bad_fn.toml", "corpus = [\"tangent\"]\n", "tangent"),
        ("bad_suite.toml", "suites = [\"plots\"]\n", "plots"),
    ] {
        let cfg = s.file(name, body);
        let out = verify(&cfg, &s.path("r.json"));
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{name}: {err}");
    }
    let out = leibniz(&["verify", "--config", "/nonexistent/run.toml"], &s.0);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_case_gives_exit_one() {
    let s = Scratch::new("fail");
    let cfg = s.file(
        "run.toml",
        "suites = [\"identities\"]\npoints_per_check = 2\ntriples = 2\n\n[[operator]]\nfamily = \"third_derivative\"\nname = \"claimed\"\n",
    );
    let out = verify(&cfg, &s.path("r.json"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL identities/id2/claimed"));
    let rep = read_json(&s.path("r.json"));
    assert_eq!(rep["pass"], false);
}

#[test]
fn unwritable_report_path() {
    let s = Scratch::new("unwritable");
    let blocker = s.file("blocker", "");
    let cfg = s.file("run.toml", "suites = [\"faa\"]\n");
    let out = verify(&cfg, &blocker.join("r.json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_path_precedence() {
    let s = Scratch::new("paths");
    let cfg = s.file(
        "run.toml",
        "suites = [\"faa\"]\nreport_path = \"from_config.json\"\n",
    );
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_leibniz"));
        cmd.args(["verify", "--config", cfg.to_str().unwrap()])
            .current_dir(&s.0);
        cmd.env_remove("LEIBNIZ_REPORT");
        if let Some(e) = env {
            cmd.env("LEIBNIZ_REPORT", e);
        }
        if let Some(f) = flag {
            cmd.args(["--report", f]);
        }
        assert!(cmd.output().unwrap().status.success());
    };
    run(None, None);
    assert!(s.path("from_config.json").exists());
    run(Some("from_env.json"), None);
    assert!(s.path("from_env.json").exists());
    run(Some("env_loses.json"), Some("from_flag.json"));
    assert!(s.path("from_flag.json").exists());
    assert!(!s.path("env_loses.json").exists());
}

#[test]
fn csv_format_and_flag_overrides() {
    let s = Scratch::new("csv");
    let cfg = s.file("run.toml", "suites = [\"faa\"]\nseed = 1\n");
    let out = leibniz(
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            "csv",
            "--seed",
            "99",
            "--tol",
            "1e-7",
            "--report",
            "r.csv",
        ],
        &s.0,
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(s.path("r.csv")).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().unwrap().clone();
    assert_eq!(&headers[0], "schema");
    let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| &r[1] == "99" && &r[11] == "true"));
}

#[test]
fn auxiliary_subcommands() {
    let s = Scratch::new("aux");
    let out = leibniz(&["faa", "--order", "4"], &s.0);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("sum of 5 terms"));
    assert_eq!(
        leibniz(&["faa", "--order", "9"], &s.0).status.code(),
        Some(2)
    );

    let out = leibniz(
        &["recover", "--operator", "order2_full", "--points", "3"],
        &s.0,
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("1.50000000"));
    let out = leibniz(
        &["recover", "--operator", "counterexample", "--points", "2"],
        &s.0,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rejected"));
    assert_eq!(
        leibniz(&["recover", "--operator", "nope"], &s.0)
            .status
            .code(),
        Some(2)
    );

    let out = leibniz(&["counterexample", "--trials", "50"], &s.0);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("violation at trial"));
    let out = leibniz(
        &["counterexample", "--trials", "5", "--threshold", "1e300"],
        &s.0,
    );
    assert_eq!(out.status.code(), Some(1));

    let out = leibniz(&["aichinger", "--dim", "3", "--samples", "30"], &s.0);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("|v|^3"));
}

#[test]
fn pass_matches_residual_against_tolerance() {
    let rep = leibniz_cli::run(&leibniz_cli::RunConfig::default()).unwrap();
    for (suite, c) in rep.cases() {
        let within = c.max_residual <= c.tolerance * c.scale;
        match c.expect {
            leibniz_cli::registry::Expect::Hold => {
                assert_eq!(c.pass, within && c.note.is_none(), "{suite}/{}", c.case)
            }
            leibniz_cli::registry::Expect::Violation => {
                assert!(!c.pass || !within, "{suite}/{}", c.case)
            }
        }
        assert!(c.scale >= 1.0);
    }
}

#[test]
fn example_config_runs_clean() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/verify.toml");
    let s = Scratch::new("example");
    let out = verify(&cfg, &s.path("r.json"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
