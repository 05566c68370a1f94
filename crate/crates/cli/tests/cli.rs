use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mobsrv_core::{Instance, Point, RequestBatch, Variant};
use tempfile::TempDir;

fn mobsrv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mobsrv"))
        .args(args)
        .current_dir(dir)
        .env("MOBSRV_OUT_DIR", dir.join("out"))
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn load(path: &Path) -> Instance {
    Instance::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_instance(dir: &Path, name: &str, inst: &Instance) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, inst.to_json()).unwrap();
    p
}

#[test]
fn gen_thm1_writes_valid_instance() {
    let dir = TempDir::new().unwrap();
    let o = mobsrv(
        dir.path(),
        &[
            "gen", "thm1", "--T", "100", "--m", "1", "--D", "2", "--seed", "7",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let inst = load(&dir.path().join("out/thm1-seed7.json"));
    assert_eq!(inst.len(), 100);
    assert!(mobsrv_core::model::validate(&inst).is_empty());
}

#[test]
fn gen_thm3_has_two_steps_per_cycle() {
    let dir = TempDir::new().unwrap();
    let o = mobsrv(
        dir.path(),
        &["gen", "thm3", "--cycles", "10", "--r", "8", "-o", "t3.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let inst = load(&dir.path().join("t3.json"));
    assert_eq!(inst.variant, Variant::AnswerFirst);
    assert_eq!(inst.len(), 20);
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    for generator in [
        "thm1",
        "thm2",
        "thm3",
        "moving-client",
        "random",
        "random-agent",
    ] {
        let a = mobsrv(
            dir.path(),
            &[
                "gen",
                generator,
                "--mode",
                "oblivious",
                "--seed",
                "11",
                "-o",
                "a.json",
            ],
        );
        let b = mobsrv(
            dir.path(),
            &[
                "gen",
                generator,
                "--mode",
                "oblivious",
                "--seed",
                "11",
                "-o",
                "b.json",
            ],
        );
        assert!(
            a.status.success() && b.status.success(),
            "{generator}: {}",
            stderr(&a)
        );
        let fa = std::fs::read(dir.path().join("a.json")).unwrap();
        let fb = std::fs::read(dir.path().join("b.json")).unwrap();
        assert_eq!(fa, fb, "{generator}");
    }
}

#[test]
fn gen_rejects_bad_parameters_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let o = mobsrv(dir.path(), &["gen", "thm1", "--T", "5", "--x", "9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("x"));
    let o = mobsrv(dir.path(), &["gen", "thm1", "--D", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mobsrv(dir.path(), &["gen", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_mtc_on_requests_at_start_costs_nothing() {
    let dir = TempDir::new().unwrap();
    let start = Point::new(vec![1.0, -2.0]).unwrap();
    let inst = Instance::new(
        Variant::Standard,
        start.clone(),
        1.0,
        2.0,
        vec![RequestBatch::repeated(&start, 3); 5],
    );
    let p = write_instance(dir.path(), "idle.json", &inst);
    let o = mobsrv(dir.path(), &["run", p.to_str().unwrap(), "--policy", "mtc"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("total=0 "));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/idle.mtc.run.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["total"], 0.0);
}

#[test]
fn static_on_thm1_pays_arithmetic_series() {
    let dir = TempDir::new().unwrap();
    let (t, x) = (64usize, 8usize);
    let o = mobsrv(
        dir.path(),
        &[
            "gen",
            "thm1",
            "--T",
            "64",
            "--x",
            "8",
            "--dimension",
            "1",
            "-o",
            "i.json",
        ],
    );
    assert!(o.status.success());
    let o = mobsrv(
        dir.path(),
        &["run", "i.json", "--policy", "static", "--csv", "steps.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("steps.csv")).unwrap();
    let costs: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    // Serving from the start: nothing during the prefix, then distance t*m.
    for (i, c) in costs.iter().enumerate() {
        let step = i + 1;
        let expected = if step <= x { 0.0 } else { step as f64 };
        assert_eq!(*c, expected, "step {step}");
    }
    let total: f64 = costs.iter().sum();
    let closed = (t * (t + 1) / 2 - x * (x + 1) / 2) as f64;
    assert_eq!(total, closed);
}

#[test]
fn incompatible_policy_names_both_sides() {
    let dir = TempDir::new().unwrap();
    mobsrv(dir.path(), &["gen", "thm3", "-o", "af.json"]);
    let o = mobsrv(
        dir.path(),
        &["run", "af.json", "--policy", "mtc-moving-client"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("mtc_moving_client") && err.contains("answer_first"),
        "{err}"
    );
}

#[test]
fn broken_instance_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"variant\": \"standard\"}").unwrap();
    let o = mobsrv(dir.path(), &["run", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mobsrv(dir.path(), &["run", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unaugmented_ratio_is_at_least_one() {
    let dir = TempDir::new().unwrap();
    for seed in 0..4 {
        let s = seed.to_string();
        for dim in ["1", "2"] {
            let o = mobsrv(
                dir.path(),
                &[
                    "gen",
                    "random",
                    "--T",
                    "12",
                    "--dimension",
                    dim,
                    "--seed",
                    &s,
                    "-o",
                    "r.json",
                ],
            );
            assert!(o.status.success());
            for policy in ["mtc", "static", "follow-center"] {
                let o = mobsrv(
                    dir.path(),
                    &[
                        "ratio",
                        "r.json",
                        "--policy",
                        policy,
                        "--delta",
                        "0",
                        "--iterations",
                        "5000",
                        "-o",
                        "ratio.json",
                    ],
                );
                assert!(o.status.success(), "{}", stderr(&o));
                let report: serde_json::Value = serde_json::from_str(
                    &std::fs::read_to_string(dir.path().join("ratio.json")).unwrap(),
                )
                .unwrap();
                let ratio = report["ratio"].as_f64().unwrap();
                assert!(ratio >= 1.0 - 1e-6, "{policy} seed {seed} d={dim}: {ratio}");
            }
        }
    }
}

#[test]
fn ratio_report_carries_solver_diagnostics() {
    let dir = TempDir::new().unwrap();
    mobsrv(
        dir.path(),
        &[
            "gen",
            "thm1",
            "--T",
            "16",
            "--dimension",
            "1",
            "-o",
            "i.json",
        ],
    );
    let o = mobsrv(
        dir.path(),
        &["ratio", "i.json", "--iterations", "2000", "-o", "r.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    for key in ["objective", "iterations", "converged", "certified_gap"] {
        assert!(report["solver"].get(key).is_some(), "missing solver.{key}");
    }
    assert!(report["oracle"]["grid"]["grid_step"].as_f64().unwrap() > 0.0);
    assert_eq!(report["solver"]["iterations"], 2000);
}

#[test]
fn verify_collapsed_random_has_no_violations() {
    let dir = TempDir::new().unwrap();
    for seed in 0..3 {
        let s = seed.to_string();
        mobsrv(
            dir.path(),
            &[
                "gen",
                "random",
                "--T",
                "10",
                "--collapsed",
                "--seed",
                &s,
                "-o",
                "c.json",
            ],
        );
        let o = mobsrv(
            dir.path(),
            &[
                "verify",
                "c.json",
                "--iterations",
                "5000",
                "--ledger",
                "l.csv",
            ],
        );
        assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
        let out = stdout(&o);
        assert!(
            out.contains("min_slack=") && out.contains("violations=0"),
            "{out}"
        );
        let ledger = std::fs::read_to_string(dir.path().join("l.csv")).unwrap();
        assert_eq!(
            ledger.lines().next().unwrap(),
            "step,phi_before,phi_after,delta_phi,c_alg,c_opt,slack,regime"
        );
        assert_eq!(ledger.lines().count(), 11);
    }
}

#[test]
fn verify_no_collapse_flags_spread_instances() {
    let dir = TempDir::new().unwrap();
    mobsrv(
        dir.path(),
        &["gen", "random", "--T", "8", "--r-min", "2", "-o", "s.json"],
    );
    let o = mobsrv(
        dir.path(),
        &[
            "verify",
            "s.json",
            "--no-collapse",
            "--report-only",
            "--iterations",
            "2000",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("not_collapsed"));
    let o = mobsrv(dir.path(), &["verify", "s.json", "--iterations", "2000"]);
    assert!(!stdout(&o).contains("not_collapsed"));
}

#[test]
fn verify_violation_sets_exit_code_three() {
    let dir = TempDir::new().unwrap();
    mobsrv(
        dir.path(),
        &["gen", "random", "--T", "10", "--collapsed", "-o", "c.json"],
    );
    let o = mobsrv(
        dir.path(),
        &["verify", "c.json", "--K", "1e-6", "--iterations", "2000"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("violations="));
    let o = mobsrv(
        dir.path(),
        &[
            "verify",
            "c.json",
            "--K",
            "1e-6",
            "--iterations",
            "2000",
            "--report-only",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_rejects_zero_delta_center_potential() {
    let dir = TempDir::new().unwrap();
    mobsrv(
        dir.path(),
        &["gen", "random", "--T", "5", "--collapsed", "-o", "c.json"],
    );
    let o = mobsrv(dir.path(), &["verify", "c.json", "--delta", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_moving_client_uses_constant_k() {
    let dir = TempDir::new().unwrap();
    mobsrv(
        dir.path(),
        &[
            "gen",
            "random-agent",
            "--T",
            "40",
            "--seed",
            "5",
            "-o",
            "a.json",
        ],
    );
    let o = mobsrv(
        dir.path(),
        &[
            "verify",
            "a.json",
            "--policy",
            "mtc-moving-client",
            "--iterations",
            "5000",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("K=36 "));
}

const THM1_SWEEP: &str = r#"
seed = 0

[generator]
kind = "thm1"
dimension = 1

[grid]
T = [100, 400, 1600]
delta = [0.0]
"#;

#[test]
fn sweep_emits_growth_row_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("s.toml"), THM1_SWEEP).unwrap();
    let a = mobsrv(dir.path(), &["sweep", "s.toml", "-o", "a.csv"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = mobsrv(dir.path(), &["sweep", "s.toml", "-o", "b.csv"]);
    assert!(b.status.success());
    let ca = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let cb = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(ca, cb);
    let growth: Vec<&str> = ca
        .lines()
        .filter(|l| l.starts_with("growth_exponent"))
        .collect();
    assert_eq!(growth.len(), 1);
    let exponent: f64 = growth[0].rsplit(',').next().unwrap().parse().unwrap();
    assert!((0.3..=0.7).contains(&exponent), "{exponent}");
    assert_eq!(ca.lines().filter(|l| l.starts_with("cell")).count(), 3);
}

#[test]
fn sweep_default_output_goes_to_env_dir() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("tiny.toml"),
        "[generator]\nkind = \"random\"\n[grid]\nT = [5]\n[solver]\niterations = 500\n",
    )
    .unwrap();
    let o = mobsrv(dir.path(), &["sweep", "tiny.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/tiny.csv").exists());
}

#[test]
fn malformed_sweep_reports_location() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "seed = 0\n[generator]\nkind = \"thm1\"\nbogus = 3\n",
    )
    .unwrap();
    let o = mobsrv(dir.path(), &["sweep", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("bogus"), "{err}");

    std::fs::write(
        dir.path().join("bad2.toml"),
        "[generator]\nkind = \"thm9\"\n",
    )
    .unwrap();
    let o = mobsrv(dir.path(), &["sweep", "bad2.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("generator.kind"));
}
