//! Drives the `ttsv` binary end to end and checks its exit codes.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
D = 12
window_days = 3
noise = ["none", "iid"]
rv_frequencies = [26, 78]
preavg_frequencies = [390]
n_boot = 99
chunk_days = 5
"#;

fn ttsv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttsv"))
        .args(["--out", dir.to_str().unwrap()])
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    std::fs::write(&p, SMALL).unwrap();
    p.to_str().unwrap().to_string()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ttsv(dir.path(), &["--help"])), 0);
    assert_eq!(code(&ttsv(dir.path(), &["bogus"])), 2);
    assert_eq!(code(&ttsv(dir.path(), &[])), 2);
    assert_eq!(code(&ttsv(dir.path(), &["simulate", "--days", "x"])), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    let o = ttsv(dir.path(), &["--config", bad.to_str().unwrap(), "simulate", "--days", "1"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&bad, "D = 0\n").unwrap();
    assert_eq!(code(&ttsv(dir.path(), &["--config", bad.to_str().unwrap(), "experiment"])), 2);
    let o = ttsv(dir.path(), &["simulate", "--days", "1", "--noise", "pink"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = ttsv(dir.path(), &["estimate", "--ticks", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let broken = dir.path().join("ticks.csv");
    std::fs::write(&broken, "day,time_seconds,log_price\n0,1,abc\n").unwrap();
    assert_eq!(code(&ttsv(dir.path(), &["estimate", "--ticks", broken.to_str().unwrap()])), 3);
    assert_eq!(code(&ttsv(dir.path(), &["plotdata"])), 3);
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttsv(dir.path(), &["--seed", "3", "simulate", "--days", "3", "--noise", "iid"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let truth = lines(&dir.path().join("truth.csv"));
    assert_eq!(truth[0], "day,n_ticks,iv,riv,iq");
    assert_eq!(truth.len(), 4);
    assert_eq!(lines(&dir.path().join("ticks.csv"))[0], "day,time_seconds,log_price");

    let ticks = dir.path().join("ticks.csv");
    let o = ttsv(
        dir.path(),
        &[
            "estimate",
            "--ticks",
            ticks.to_str().unwrap(),
            "--scheme",
            "cts",
            "rtts",
            "rbts",
            "--M",
            "26",
            "78",
            "--estimator",
            "rv",
            "preavg",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let est = lines(&dir.path().join("estimates.csv"));
    assert_eq!(est[0], "day,scheme,estimator,M,n_ticks,estimate");
    assert_eq!(est.len(), 1 + 3 * 3 * 2 * 2);

    let o = ttsv(dir.path(), &["estimate", "--ticks", ticks.to_str().unwrap(), "--scheme", "xyz"]);
    assert_eq!(code(&o), 2);
    let o = ttsv(dir.path(), &["estimate", "--ticks", ticks.to_str().unwrap(), "--M", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn experiment_evaluate_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let o = ttsv(dir.path(), &["--config", &cfg, "experiment"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let loss = lines(&dir.path().join("loss_table.csv"));
    assert_eq!(loss[0], "day,asset,estimator,scheme,M,estimate,proxy,mse,qlike");
    // 12 days x 2 noise x 8 schemes x (2 RV + 1 pre-averaging frequencies).
    assert_eq!(loss.len(), 1 + 12 * 2 * 8 * 3);
    assert_eq!(lines(&dir.path().join("aggregate.csv")).len(), 1 + 2 * 8 * 3);

    let o = ttsv(dir.path(), &["--config", &cfg, "evaluate", "--baseline", "cts"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ranking_rv.csv", "ranking_preavg.csv", "ranking_cells.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(code(&ttsv(dir.path(), &["evaluate", "--baseline", "nope"])), 3);
    assert_eq!(code(&ttsv(dir.path(), &["evaluate", "--loss", "mae"])), 2);

    let o = ttsv(dir.path(), &["plotdata", "--svg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let n = std::fs::read_dir(dir.path().join("plotdata")).unwrap().count();
    assert!(n > 0 && n.is_multiple_of(2));
}

#[test]
fn experiment_output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (threads, out) in [("1", &a), ("8", &b)] {
        let o = Command::new(env!("CARGO_BIN_EXE_ttsv"))
            .args(["--config", &cfg, "--threads", threads, "--out", out.to_str().unwrap(), "experiment"])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
    }
    for f in ["loss_table.csv", "aggregate.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn forecast_from_a_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let mut text = String::from("day,asset,estimate\n");
    let mut x: Vec<f64> = (0..22).map(|i| 1.0 + 0.01 * i as f64).collect();
    while x.len() < 80 {
        let d = x.len();
        let week = x[d - 5..].iter().sum::<f64>() / 5.0;
        let month = x[d - 22..].iter().sum::<f64>() / 22.0;
        x.push(0.1 + 0.4 * x[d - 1] + 0.3 * week + 0.2 * month);
    }
    for (d, v) in x.iter().enumerate() {
        text.push_str(&format!("{d},a,{v}\n{d},b,-1\n"));
    }
    std::fs::write(&series, text).unwrap();
    let s = series.to_str().unwrap();
    let o = ttsv(dir.path(), &["forecast", "--series", s, "--filter", "asset=a", "--window", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lines(&dir.path().join("forecasts.csv"));
    assert_eq!(rows[0], "day,target,forecast");
    assert_eq!(rows.len(), 1 + 30);
    for r in &rows[1..] {
        let f: Vec<f64> = r.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[1] - f[2]).abs() < 1e-8, "{r}");
    }
    assert_eq!(code(&ttsv(dir.path(), &["forecast", "--series", s, "--filter", "asset"])), 2);
    assert_eq!(code(&ttsv(dir.path(), &["forecast", "--series", s, "--window", "803"])), 3);
}
