use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn shac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shac"))
        .args(args)
        .output()
        .expect("run shac")
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn demo() -> String {
    root().join("data/demo.csv").to_string_lossy().into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shac-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Columns of the coefficient row for `term` in `fit` output.
fn fit_row(out: &str, term: &str) -> Vec<f64> {
    let line = out
        .lines()
        .find(|l| l.split_whitespace().next() == Some(term))
        .expect("term row");
    line.split_whitespace()
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect()
}

const DEMO_COORDS: [&str; 4] = ["--coord-x", "x_km", "--coord-y", "y_km"];

fn demo_fit(extra: &[&str]) -> Output {
    let d = demo();
    let mut args = vec!["fit", "--input", &d];
    args.extend(DEMO_COORDS);
    args.extend(["--outcome", "outcome", "--regressors", "treatment,noise"]);
    args.extend(extra);
    shac(&args)
}

#[test]
fn fit_demo_hc1_overstates_t() {
    let o = demo_fit(&[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("(auto, crossed)"));
    let r = fit_row(&out, "treatment");
    // estimate, se_hc1, t_hc1, se_shac, t_shac
    assert!(r[2].abs() > r[4].abs());
}

#[test]
fn fit_zero_bandwidth_is_hc0() {
    let out = stdout(&demo_fit(&["--bandwidth", "0"]));
    let r = fit_row(&out, "treatment");
    let hc0 = r[1] * ((1000.0 - 3.0) / 1000.0f64).sqrt();
    assert!((r[3] / hc0 - 1.0).abs() < 2e-6, "{} vs {hc0}", r[3]);
}

#[test]
fn fit_exact_data_is_flagged() {
    let p = tmp("exact.csv");
    let rows: String = (0..8)
        .map(|k| format!("{},0,{k},{}\n", 10 * k, 2 * k + 1))
        .collect();
    std::fs::write(&p, format!("x,y,a,b\n{rows}")).unwrap();
    let o = shac(&[
        "fit",
        "--input",
        p.to_str().unwrap(),
        "--coord-x",
        "x",
        "--coord-y",
        "y",
        "--outcome",
        "b",
        "--regressors",
        "a",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn exit_codes() {
    let d = demo();
    let missing = shac(&[
        "fit",
        "--input",
        &d,
        "--coord-x",
        "x_km",
        "--coord-y",
        "y_km",
        "--outcome",
        "nope",
    ]);
    assert_eq!(missing.status.code(), Some(2));
    let nofile = shac(&[
        "fit",
        "--input",
        "/no/such.csv",
        "--coord-x",
        "a",
        "--coord-y",
        "b",
        "--outcome",
        "y",
    ]);
    assert_eq!(nofile.status.code(), Some(2));
    let singular = demo_fit(&["--regressors", "treatment"]);
    assert_eq!(singular.status.code(), Some(3));
    assert_eq!(shac(&["fit", "--bogus"]).status.code(), Some(2));

    let bad = tmp("bad.toml");
    std::fs::write(&bad, "iters = 5\nfoo = 1\n").unwrap();
    assert_eq!(
        shac(&["mc", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let empty_bins = tmp("empty_bins.toml");
    std::fs::write(
        &empty_bins,
        "iters = 5\nrange_levels = [0]\nestimators = [\"auto:bartlett\"]\n[bins]\ncutoff = 10.0\nn_bins = 5\n",
    )
    .unwrap();
    let o = shac(&["mc", "--config", empty_bins.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn covariogram_csv_and_selection() {
    let d = demo();
    let out = tmp("cg.csv");
    let mut args = vec!["covariogram", "--input", &d];
    args.extend(DEMO_COORDS);
    args.extend([
        "--values",
        "noise",
        "--bins",
        "40",
        "--cutoff",
        "1000",
        "--output",
        out.to_str().unwrap(),
    ]);
    let o = shac(&args);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("bandwidth = "));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("h,chat,count"));
    assert_eq!(csv.lines().count(), 41);
}

#[test]
fn moran_on_demo_residuals() {
    let d = demo();
    let mut args = vec!["moran", "--input", &d];
    args.extend(DEMO_COORDS);
    args.extend([
        "--outcome",
        "outcome",
        "--regressors",
        "treatment,noise",
        "--band",
        "200",
    ]);
    let out = stdout(&shac(&args));
    let z: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("z = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(z > 1.96);

    let mut args = vec!["moran", "--input", &d];
    args.extend(DEMO_COORDS);
    args.extend(["--values", "noise", "--knn", "8"]);
    let o = shac(&args);
    assert!(o.status.success());
}

#[test]
fn simulate_is_reproducible_and_white_at_range_0() {
    let a = shac(&["simulate-field", "--range", "0", "--seed", "11"]);
    let b = shac(&["simulate-field", "--range", "0", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let v: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(v.len(), 1000);
    // Horizontal neighbours on the 40-column lattice.
    let pairs: Vec<(f64, f64)> = (0..999)
        .filter(|i| (i + 1) % 40 != 0)
        .map(|i| (v[i], v[i + 1]))
        .collect();
    let r: f64 = pairs.iter().map(|(a, b)| a * b).sum::<f64>() / pairs.len() as f64;
    assert!(r.abs() < 3.0 / 1000f64.sqrt());
    let c = shac(&["simulate-field", "--range", "0", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_at_input_coordinates() {
    let d = demo();
    let o = shac(&[
        "simulate-field",
        "--input",
        &d,
        "--coord-x",
        "x_km",
        "--coord-y",
        "y_km",
        "--range",
        "50",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1001);
}

#[test]
fn inverse_u_writes_curve() {
    let out = tmp("u.csv");
    let o = shac(&[
        "inverse-u",
        "--points",
        "10",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("bandwidth,se,hc1_se"));
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn mc_threads_do_not_change_ledger() {
    let cfg = root().join("configs/desk.toml");
    let l1 = tmp("l1.csv");
    let l2 = tmp("l2.csv");
    for (t, l) in [("1", &l1), ("3", &l2)] {
        let o = shac(&[
            "mc",
            "--config",
            cfg.to_str().unwrap(),
            "--iters",
            "6",
            "--threads",
            t,
            "--ledger",
            l.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(&l1).unwrap();
    assert_eq!(a, std::fs::read(&l2).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 16 * 6);
}

#[test]
fn mc_desk_config_size_at_level_0() {
    let desk = std::fs::read_to_string(root().join("configs/desk.toml")).unwrap();
    let cfg = tmp("level0.toml");
    let levels = desk
        .lines()
        .find(|l| l.starts_with("range_levels"))
        .unwrap();
    std::fs::write(&cfg, desk.replace(levels, "range_levels = [0]")).unwrap();
    let summary = tmp("summary.csv");
    let o = shac(&[
        "mc",
        "--config",
        cfg.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&summary).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for name in ["rate_hc1", "rate_auto_bartlett", "rate_auto_epanechnikov"] {
        let k = header.iter().position(|h| *h == name).unwrap();
        let rate: f64 = row[k].parse().unwrap();
        assert!((3.0..=7.0).contains(&rate), "{name} = {rate}");
    }
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "fit",
        "covariogram",
        "simulate-field",
        "moran",
        "mc",
        "inverse-u",
    ] {
        let o = shac(&[sub, "--help"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("Usage:"));
    }
}
