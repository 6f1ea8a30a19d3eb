use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cogrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogrelay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const SWEEP: &str = r#"
mode = "sweep"
seed = 11
slots = 30000
warmup_slots = 1000
mc_draws = 100000

[policy]
names = ["EP-BSL", "AP-BPL"]

[sweep]
axis = "lambda_p"
start = 0.05
stop = 0.15
step = 0.05
"#;

#[test]
fn analytic_header_is_stable() {
    let out = cogrelay(&["--mode", "analytic"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# cogrelay "));
    assert_eq!(
        lines.next().unwrap(),
        "point,policy,reselect_on_silence,n_su,lambda_p,rate_r0,p0_db,pmax_db,p0_over_n0,\
pmax_over_n0,sigma_p_sq,alpha,a,b,beta,f_p,f_ps,f_rstar,f_sstar,max_stable_lambda,\
su_throughput,n_p,n_r,tau,unstable,status"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("0,EP-BSL,analysis-faithful,2,0.1,2,10,7,"));
}

#[test]
fn sweep_output_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (path, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let out = cogrelay(&[
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (a, b, c) = (
        fs::read(a).unwrap(),
        fs::read(b).unwrap(),
        fs::read(c).unwrap(),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 2 + 6);
    assert!(text.lines().nth(1).unwrap().contains("mc_f_rstar"));
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .ends_with("sim_unstable,sim_status"));
}

#[test]
fn slots_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.toml",
        "mode = \"simulate\"\nslots = 50000\nwarmup_slots = 1000\n",
    );
    let out = cogrelay(&["--config", &cfg, "--slots", "20000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("slots=20000"));
    assert_eq!(text.lines().count(), 2 + 4);
}

#[test]
fn bad_input_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "mode = \"analytic\"\n[params]\nn_su = 1\n",
    );
    let out = cogrelay(&["--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(
        cogrelay(&["--config", "/nonexistent/x.toml"]).status.code(),
        Some(2)
    );
    assert!(!cogrelay(&["--mode", "nope"]).status.success());
}

#[test]
fn validate_exit_code_reflects_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "validate.toml",
        "mode = \"validate\"\nslots = 40000\nwarmup_slots = 2000\nmc_draws = 100000\nks_samples = 20000\n",
    );
    let out = cogrelay(&["--config", &cfg]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "criterion,check,observed,reference,delta,tolerance,result,seed,slots"
    );
    let failed = text.lines().skip(2).any(|l| l.contains(",FAIL,"));
    assert_eq!(out.status.success(), !failed);
    assert_eq!(out.status.code(), Some(if failed { 1 } else { 0 }));
}
