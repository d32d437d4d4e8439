//! End-to-end runs of the `maskac` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maskac::analysis::image::encode_pgm;
use maskac::cli::{load_checkpoint, save_checkpoint};
use maskac::network::{init_weights, NetworkConfig, Variant};

const TINY: &str = "\
preset = desk
size = 10
fe_channels = 4,4,4
lstm_channels = 4
branch_channels = 4
n_workers = 1
t_max = 5
";

fn maskac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maskac"))
        .args(args)
        .env("MASKAC_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tiny_cfg(size: usize, n_actions: usize, variant: Variant) -> NetworkConfig {
    let mut cfg = NetworkConfig::desk(size, n_actions, variant);
    cfg.fe_channels = [4, 4, 4];
    cfg.lstm_channels = 4;
    cfg.branch_channels = 4;
    cfg
}

fn checkpoint(dir: &Path, name: &str, cfg: &NetworkConfig) -> PathBuf {
    let w = init_weights::<f32>(cfg, 3).unwrap();
    let path = dir.join(name);
    save_checkpoint(&w, cfg, &path).unwrap();
    path
}

fn checkpoints_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".ma3c"))
        .collect();
    v.sort();
    v
}

#[test]
fn train_zero_budget_writes_one_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("{TINY}total_steps = 0\n")).unwrap();
    let out = dir.path().join("out");
    let o = maskac(&["train", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(checkpoints_in(&out), vec!["ckpt_0.ma3c".to_string()]);
    assert!(out.join("metrics.csv").exists());
    assert!(out.join("config.resolved").exists());
}

#[test]
fn train_smoke_and_resolved_config_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("{TINY}total_steps = 300\nseed = 4\n")).unwrap();
    let a = dir.path().join("a");
    assert_eq!(code(&maskac(&["train", s(&cfg), "--out", s(&a)])), 0);
    let metrics = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert!(metrics.lines().count() > 1);
    let last = checkpoints_in(&a).pop().unwrap();
    load_checkpoint(&a.join(&last)).unwrap();

    let b = dir.path().join("b");
    let o = maskac(&["train", s(&a.join("config.resolved")), "--out", s(&b)]);
    assert_eq!(code(&o), 0);
    assert_eq!(checkpoints_in(&a), checkpoints_in(&b));
    assert_eq!(fs::read(a.join(&last)).unwrap(), fs::read(b.join(&last)).unwrap());
}

#[test]
fn missing_config_exits_2_naming_path() {
    let o = maskac(&["train", "/no/such/run.cfg", "--out", "/tmp/unused"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/run.cfg"));
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "learning_rate = 0.1\n").unwrap();
    assert_eq!(code(&maskac(&["train", s(&cfg), "--out", s(dir.path())])), 2);
}

#[test]
fn eval_prints_stats_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), "both.ma3c", &tiny_cfg(10, 3, Variant::Both));
    let o = maskac(&["eval", "--ckpt", s(&ckpt), "--episodes", "1", "--greedy"]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    let field = |k: &str| -> String {
        line.split_whitespace()
            .find_map(|f| f.strip_prefix(k))
            .unwrap()
            .to_string()
    };
    assert_eq!(field("max="), field("mean="));
    assert_eq!(field("n="), "1");
    let csv = fs::read_to_string(dir.path().join("both.ma3c.eval_normal.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let o = maskac(&["eval", "--ckpt", s(&ckpt), "--episodes", "3", "--mask", "inverse"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn eval_ones_matches_vanilla_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let masked_cfg = tiny_cfg(10, 3, Variant::Both);
    let w = init_weights::<f32>(&masked_cfg, 8).unwrap();
    let masked = dir.path().join("both.ma3c");
    save_checkpoint(&w, &masked_cfg, &masked).unwrap();
    let vanilla_cfg = masked_cfg.clone().with_variant(Variant::Vanilla);
    let vanilla = dir.path().join("vanilla.ma3c");
    save_checkpoint(&w.restrict_to(&vanilla_cfg).unwrap(), &vanilla_cfg, &vanilla).unwrap();
    let a = maskac(&[
        "eval",
        "--ckpt",
        s(&masked),
        "--episodes",
        "6",
        "--mask",
        "ones",
        "--seed",
        "2",
    ]);
    let b = maskac(&["eval", "--ckpt", s(&vanilla), "--episodes", "6", "--seed", "2"]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn corrupt_checkpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), "c.ma3c", &tiny_cfg(10, 3, Variant::Both));
    let mut bytes = fs::read(&ckpt).unwrap();
    bytes[100] ^= 0x10;
    fs::write(&ckpt, bytes).unwrap();
    assert_eq!(code(&maskac(&["eval", "--ckpt", s(&ckpt)])), 3);
}

#[test]
fn inverse_on_vanilla_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), "v.ma3c", &tiny_cfg(10, 3, Variant::Vanilla));
    assert_eq!(code(&maskac(&["eval", "--ckpt", s(&ckpt), "--mask", "inverse"])), 4);
    let out = dir.path().join("viz");
    assert_eq!(code(&maskac(&["viz", "--ckpt", s(&ckpt), "--out", s(&out)])), 4);
}

#[test]
fn viz_counts_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), "b.ma3c", &tiny_cfg(10, 3, Variant::Both));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = maskac(&[
            "viz",
            "--ckpt",
            s(&ckpt),
            "--episodes",
            "2",
            "--out",
            s(out),
            "--seed",
            "5",
        ]);
        assert_eq!(code(&o), 0);
    }
    let names = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
        v.sort();
        v
    };
    let files = names(&a);
    assert_eq!(files, names(&b));
    let count = |ext: &str| files.iter().filter(|f| f.to_string_lossy().ends_with(ext)).count();
    let frames: usize = (0..2)
        .map(|e| {
            fs::read_to_string(a.join(format!("index_{e}.csv")))
                .unwrap()
                .lines()
                .count()
                - 1
        })
        .sum();
    assert_eq!(count(".csv"), 2);
    assert_eq!(count(".pgm"), 3 * frames);
    assert_eq!(count(".ppm"), 2 * frames);
    for f in files {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap());
    }
}

fn sprite(dir: &Path, w: usize, h: usize, level: u8) -> PathBuf {
    let path = dir.join("sprite.pgm");
    fs::write(&path, encode_pgm(w, h, &vec![level; w * h]).unwrap()).unwrap();
    path
}

#[test]
fn inject_bad_window_or_position_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), "b.ma3c", &tiny_cfg(10, 3, Variant::Both));
    let sp = sprite(dir.path(), 2, 2, 255);
    let base = ["inject", "--ckpt", s(&ckpt), "--sprite", s(&sp)];
    let run = |pos: &str, frame: &str| {
        code(&maskac(
            &[&base[..], &["--pos", pos, "--frame", frame, "--window", "4"]].concat(),
        ))
    };
    assert_eq!(run("1,1", "4"), 5);
    assert_eq!(run("9,1", "1"), 5);
    assert_eq!(run("1,1", "1"), 0);
}

#[test]
fn zero_intensity_full_stencil_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), "b.ma3c", &tiny_cfg(10, 3, Variant::Both));
    let sp = sprite(dir.path(), 3, 3, 0);
    let csv = dir.path().join("r.csv");
    let o = maskac(&[
        "inject",
        "--ckpt",
        s(&ckpt),
        "--sprite",
        s(&sp),
        "--stencil-threshold",
        "0",
        "--pos",
        "2,2",
        "--frame",
        "1",
        "--window",
        "5",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(&csv).unwrap();
    assert!(report.lines().nth(2).unwrap().split(',').nth(1) == Some("1"));
}

#[test]
fn fuel_report_has_surfacing_column() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), "f.ma3c", &tiny_cfg(12, 6, Variant::Both));
    let sp = sprite(dir.path(), 12, 1, 255);
    let o = maskac(&[
        "inject",
        "--ckpt",
        s(&ckpt),
        "--sprite",
        s(&sp),
        "--pos",
        "11,0",
        "--frame",
        "2",
        "--window",
        "6",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let header = out.lines().next().unwrap();
    assert!(header.split(',').any(|c| c == "p_up"), "{header}");
    assert!(out.lines().count() > 3);
}

#[test]
fn random_baseline_runs() {
    let o = maskac(&["random-baseline", "--env", "fuel", "--size", "12", "--episodes", "3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("n=3"));
    assert_eq!(code(&maskac(&["random-baseline", "--env", "pong"])), 5);
}
