use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smi_cli::precoder_io::read_precoder;

fn smi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smi"))
        .args(args)
        .current_dir(dir)
        .env_remove("SMI_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn eval_with_zero_power_gives_zero_smi() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        "[run]\nprecoder_power_w = 0.0\nn_trials = 50\n",
    );
    ok(&smi(
        &["eval", "--config", "c.toml", "--out", "o"],
        d.path(),
    ));
    let (h, r) = csv_rows(&d.path().join("o/eval.csv"));
    for name in [
        "smi_asymptotic",
        "smi_upper",
        "smi_lower",
        "smi_mc_mean",
        "smi_mc_stderr",
    ] {
        assert_eq!(col(&h, &r, name), vec![0.0], "{name}");
    }
}

#[test]
fn large_profile_runs_and_respects_ordering() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[run]\nn_trials = 200\n");
    ok(&smi(
        &[
            "eval",
            "--config",
            "c.toml",
            "--profile",
            "paper",
            "--out",
            "o",
        ],
        d.path(),
    ));
    let resolved = fs::read_to_string(d.path().join("o/eval_config.toml")).unwrap();
    assert!(resolved.contains("n_tx = 32") && resolved.contains("n_rx = 16"));
    let (h, r) = csv_rows(&d.path().join("o/eval.csv"));
    let (l, a, u) = (
        col(&h, &r, "smi_lower")[0],
        col(&h, &r, "smi_asymptotic")[0],
        col(&h, &r, "smi_upper")[0],
    );
    assert!(l <= a && a <= u && l > 0.0);
}

#[test]
fn units_flag_converts_to_bits() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[run]\nn_trials = 20\n");
    ok(&smi(
        &["eval", "--config", "c.toml", "--out", "n"],
        d.path(),
    ));
    ok(&smi(
        &[
            "eval", "--config", "c.toml", "--out", "b", "--units", "bits",
        ],
        d.path(),
    ));
    let (h, r) = csv_rows(&d.path().join("n/eval.csv"));
    let (hb, rb) = csv_rows(&d.path().join("b/eval.csv"));
    let nats = col(&h, &r, "smi_upper")[0];
    let bits = col(&hb, &rb, "smi_upper")[0];
    assert!((bits - nats / std::f64::consts::LN_2).abs() <= 1e-10 * bits);
    assert_eq!(col(&h, &r, "dof_upper"), col(&hb, &rb, "dof_upper"));
}

#[test]
fn fig1_columns_behave() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[run]\nn_trials = 2000\n");
    ok(&smi(
        &["fig1", "--config", "c.toml", "--out", "o"],
        d.path(),
    ));
    let (h, r) = csv_rows(&d.path().join("o/fig1.csv"));
    assert_eq!(col(&h, &r, "n_frames"), vec![4.0, 8.0, 16.0, 32.0, 64.0]);
    let ub = col(&h, &r, "smi_upper");
    assert!(ub.iter().all(|&v| v == ub[0]));
    let theo = col(&h, &r, "smi_asymptotic");
    assert!(theo.windows(2).all(|w| w[1] >= w[0]));
    let mc = col(&h, &r, "smi_mc_mean");
    for (t, m) in theo.iter().zip(&mc) {
        assert!((t - m).abs() / m <= 0.03);
    }
}

#[test]
fn fig2_gap_grows_with_targets() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[run]\nn_trials = 50\n");
    ok(&smi(
        &["fig2", "--config", "c.toml", "--out", "o"],
        d.path(),
    ));
    let (h, r) = csv_rows(&d.path().join("o/fig2.csv"));
    let ks = col(&h, &r, "n_targets");
    assert_eq!(ks, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
    let gap: Vec<f64> = col(&h, &r, "smi_upper")
        .iter()
        .zip(col(&h, &r, "smi_asymptotic"))
        .map(|(u, a)| (u - a) / u)
        .collect();
    assert!(gap.windows(2).all(|w| w[1] > w[0]), "{gap:?}");
}

#[test]
fn optimize_writes_monotone_trace_and_readable_precoder() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[run]\nseed = 4\n");
    ok(&smi(
        &["optimize", "--config", "c.toml", "--out", "o"],
        d.path(),
    ));
    let (h, r) = csv_rows(&d.path().join("o/optimize_trace.csv"));
    assert_eq!(h, ["iter", "objective", "grad_norm", "step", "backtracks"]);
    let obj = col(&h, &r, "objective");
    assert!(obj.windows(2).all(|w| w[1] >= w[0]));
    let f = read_precoder(&d.path().join("o/optimize_precoder.txt")).unwrap();
    assert_eq!((f.n_tx(), f.n_streams()), (8, 3));
    assert!((f.power() - 1.0).abs() < 1e-10);

    // feed the optimised precoder back in through the file option
    write(
        d.path(),
        "e.toml",
        "[run]\nseed = 4\nprecoder_file = \"o/optimize_precoder.txt\"\nn_trials = 20\n",
    );
    ok(&smi(
        &["eval", "--config", "e.toml", "--out", "e"],
        d.path(),
    ));
    let (h, r) = csv_rows(&d.path().join("e/eval.csv"));
    let a = col(&h, &r, "smi_asymptotic")[0];
    assert!((a - obj.last().unwrap()).abs() <= 1e-9 * a);
}

#[test]
fn every_command_is_byte_reproducible_and_resolved_config_reruns() {
    let d = tempfile::tempdir().unwrap();
    let cfgs = [
        ("eval", "[run]\nn_trials = 100\nseed = 3\n"),
        ("fig1", "[run]\nn_trials = 100\nseed = 3\ngrid = [4, 16]\n"),
        ("fig2", "[run]\nn_trials = 100\nseed = 3\ngrid = [1, 4]\n"),
        ("fig3", "[run]\nn_trials = 50\nseed = 3\ngrid = [0, 10]\n[scenario]\nn_tx = 8\nn_rx = 4\nn_targets = 4\n"),
        ("optimize", "[run]\nseed = 3\ninit = \"scaled-random\"\n"),
    ];
    for (cmd, text) in cfgs {
        let cfg = format!("{cmd}.toml");
        write(d.path(), &cfg, text);
        let a = format!("{cmd}_a");
        let b = format!("{cmd}_b");
        ok(&smi(&[cmd, "--config", &cfg, "--out", &a], d.path()));
        ok(&smi(&[cmd, "--config", &cfg, "--out", &b], d.path()));
        let resolved = d.path().join(&a).join(format!("{cmd}_config.toml"));
        let c = format!("{cmd}_c");
        ok(&smi(
            &[cmd, "--config", resolved.to_str().unwrap(), "--out", &c],
            d.path(),
        ));
        let mut names: Vec<_> = fs::read_dir(d.path().join(&a))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|n| !n.to_string_lossy().ends_with("_config.toml"))
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            let x = fs::read(d.path().join(&a).join(&n)).unwrap();
            assert_eq!(
                x,
                fs::read(d.path().join(&b).join(&n)).unwrap(),
                "{cmd} {n:?}"
            );
            assert_eq!(
                x,
                fs::read(d.path().join(&c).join(&n)).unwrap(),
                "{cmd} {n:?} rerun"
            );
        }
    }
}

#[test]
fn seed_flag_changes_monte_carlo_only() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        "[run]\nn_trials = 100\n[targets]\nseed = 1\n",
    );
    ok(&smi(
        &["eval", "--config", "c.toml", "--out", "a", "--seed", "1"],
        d.path(),
    ));
    ok(&smi(
        &["eval", "--config", "c.toml", "--out", "b", "--seed", "2"],
        d.path(),
    ));
    let (h, ra) = csv_rows(&d.path().join("a/eval.csv"));
    let (_, rb) = csv_rows(&d.path().join("b/eval.csv"));
    assert_eq!(
        col(&h, &ra, "smi_asymptotic"),
        col(&h, &rb, "smi_asymptotic")
    );
    assert_ne!(col(&h, &ra, "smi_mc_mean"), col(&h, &rb, "smi_mc_mean"));
}

#[test]
fn output_directory_precedence() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        "[run]\nn_trials = 10\noutput = \"from_file\"\n",
    );
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_smi"));
        c.args(["eval", "--config", "c.toml"])
            .args(extra)
            .current_dir(d.path());
        match env {
            Some(v) => c.env("SMI_OUTPUT_DIR", v),
            None => c.env_remove("SMI_OUTPUT_DIR"),
        };
        ok(&c.output().unwrap());
    };
    run(&[], None);
    assert!(d.path().join("from_file/eval.csv").exists());
    run(&[], Some("from_env"));
    assert!(d.path().join("from_env/eval.csv").exists());
    run(&["--out", "from_flag"], Some("from_env"));
    assert!(d.path().join("from_flag/eval.csv").exists());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| smi(args, d.path()).status.code();

    assert_eq!(code(&["eval", "--config", "missing.toml"]), Some(1));
    write(d.path(), "bad.toml", "[scenario]\nn_tx = \"eight\"\n");
    let out = smi(&["eval", "--config", "bad.toml"], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    write(d.path(), "unsorted.toml", "[run]\ngrid = [16, 8]\n");
    let out = smi(&["fig1", "--config", "unsorted.toml"], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.grid"));
    assert_eq!(code(&["frobnicate", "--config", "bad.toml"]), Some(1));
    assert_eq!(code(&["eval"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));

    write(
        d.path(),
        "huge.toml",
        "[run]\nn_trials = 10\n[targets]\nlist = [{ aod_deg = 30.0, aoa_deg = 40.0, reflect_var = 1e308 }, { aod_deg = 35.0, aoa_deg = 45.0, reflect_var = 1e308 }, { aod_deg = 50.0, aoa_deg = 55.0, reflect_var = 1e308 }]\n",
    );
    let out = smi(&["eval", "--config", "huge.toml", "--out", "o"], d.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn timing_flag_adds_column() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[run]\nn_trials = 10\n");
    ok(&smi(
        &["eval", "--config", "c.toml", "--out", "o", "--timing"],
        d.path(),
    ));
    let (h, r) = csv_rows(&d.path().join("o/eval.csv"));
    assert_eq!(h.last().unwrap(), "wall_time_ms");
    assert!(col(&h, &r, "wall_time_ms")[0] >= 0.0);
}
