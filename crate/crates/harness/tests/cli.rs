use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dms_harness::output::read_csv;
use dms_harness::runner::GbrRow;

fn dms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dms")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dms(&args)
}

const SMALL: &str = "n_bs = 3\nusers_per_bs = 2\nbe_users_per_bs = 2\nisd_m = 150.0\narea_m = [400.0, 400.0]\n\
                     W = 6\ngbr_rate_mbps = 2.0\nseeds = [5, 6]\nepochs = 6\n";

#[test]
fn run_dms_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run("run-dms", &cfg, out, &["--trace"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["dms.csv", "user_rates.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
        assert!(x.starts_with(b"# dms-harness "));
    }
}

#[test]
fn gen_topology_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("gen-topology", &cfg, &a, &[]).status.success());
    assert!(run("gen-topology", &cfg, &b, &["--seeds", "5,6"]).status.success());
    for f in ["topology_seed5.json", "gains_seed6.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn zero_demand_squeezes_to_one_tti() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &SMALL.replace("gbr_rate_mbps = 2.0", "gbr_rate_mbps = 0.0"));
    let out = dir.path().join("out");
    let o = run("run-gbr", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<GbrRow> = read_csv(&out.join("gbr.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r.t, 1);
        assert_eq!(r.total_penalty, 0.0);
    }
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let unknown = config(dir.path(), &format!("{SMALL}colour = \"blue\"\n"));
    assert_eq!(run("run-gbr", &unknown, &out, &[]).status.code(), Some(2));
    let zero_w = config(dir.path(), &SMALL.replace("W = 6", "W = 0"));
    assert_eq!(run("run-gbr", &zero_w, &out, &[]).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    assert_ne!(run("run-gbr", &missing, &out, &[]).status.code(), Some(0));
}

#[test]
fn oracle_beyond_its_limits_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &SMALL.replace("n_bs = 3", "n_bs = 4"));
    let o = run("oracle", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn report_reads_run_dms_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert!(run("run-dms", &cfg, &out, &[]).status.success());
    let o = run("report", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("overhead.csv").exists());
    assert!(out.join("cdf.csv").exists());
}
