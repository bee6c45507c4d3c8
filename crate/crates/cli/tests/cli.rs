use std::fs;
use std::io::Write;
use std::process::{Command, Output};

use polyfreq::NoiseSpec;
use tempfile::TempDir;

const AR1: &str = r#"{"schema":1,"family":"arma","ar":[0.5],"noise":{"kind":"gaussian","sigma":1.0}}"#;

fn polyfreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyfreq"))
        .args(args)
        .env_remove("POLYFREQ_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_file(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data rows of a CSV output, split into fields.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn estimate_two_points() {
    let dir = TempDir::new().unwrap();
    let input = write_file(&dir, "two.csv", "0.25\n0.75\n");
    let out = polyfreq(&[
        "estimate", "--input", &input, "--bandwidth", "1", "--grid-min", "0", "--grid-max", "1", "--grid-step", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("n=2 b=1.0000000000000000e0 p_n=1"), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\nx,histogram,frequency_polygon\n"));
    let fp: Vec<f64> = rows(&text).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(fp, vec![0.5, 1.0, 0.5]);
}

#[test]
fn estimate_header_comments_and_default_grid() {
    let dir = TempDir::new().unwrap();
    let input = write_file(&dir, "with_header.csv", "# produced elsewhere\nvalue\n1.0\n\n2.0\n3.5\n");
    let out = polyfreq(&["estimate", "--input", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["config"]["n"], 3);
    let b = json["config"]["bandwidth"].as_f64().unwrap();
    assert_eq!(b, polyfreq::stone_bandwidth(3).unwrap());
    let rows = json["rows"].as_array().unwrap();
    assert!(rows[0]["x"].as_f64().unwrap() <= 1.0 - b);
}

#[test]
fn estimate_data_errors() {
    let dir = TempDir::new().unwrap();
    let empty = write_file(&dir, "empty.csv", "");
    let out = polyfreq(&["estimate", "--input", &empty]);
    assert_eq!(out.status.code(), Some(2));

    let one = write_file(&dir, "one.csv", "x\n1.0\n");
    assert_eq!(polyfreq(&["estimate", "--input", &one]).status.code(), Some(2));

    let bad = write_file(&dir, "bad.csv", "1.0\nabc\n2.0\nNaN\n3,4\n");
    let out = polyfreq(&["estimate", "--input", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lines 2, 4, 5"), "{}", stderr(&out));

    let missing = dir.path().join("missing.csv");
    let out = polyfreq(&["estimate", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_streams_large_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("big.csv");
    let mut f = std::io::BufWriter::new(fs::File::create(&path).unwrap());
    for i in 0..1_000_000u64 {
        writeln!(f, "{}", ((i * 7919) % 100_003) as f64 / 100_003.0).unwrap();
    }
    f.flush().unwrap();
    drop(f);
    let output = dir.path().join("density.csv");
    let out = polyfreq(&[
        "estimate",
        "--input",
        path.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("n=1000000 "));
    let text = fs::read_to_string(&output).unwrap();
    let fp: Vec<f64> = rows(&text).iter().map(|r| r[2].parse().unwrap()).collect();
    let peak = fp.iter().copied().fold(0.0, f64::max);
    assert!((peak - 1.0).abs() < 0.05, "{peak}");
}

#[test]
fn usage_errors() {
    assert_eq!(polyfreq(&["estimate"]).status.code(), Some(1));
    assert_eq!(polyfreq(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(polyfreq(&["--help"]).status.code(), Some(0));
    assert_eq!(polyfreq(&["--version"]).status.code(), Some(0));
    let dir = TempDir::new().unwrap();
    let input = write_file(&dir, "two.csv", "0.25\n0.75\n");
    assert_eq!(polyfreq(&["estimate", "--input", &input, "--bandwidth", "-1"]).status.code(), Some(1));
    assert_eq!(polyfreq(&["bench", "--n", "100", "--m", "100"]).status.code(), Some(1));
    assert_eq!(polyfreq(&["--threads", "0", "bench"]).status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = polyfreq(&["simulate", "--model", AR1, "--n", "500", "--seed", "42", "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert!(text.contains("#   \"seed\": 42"));
    assert!(text.contains("\"family\": \"arma\""));
    assert_eq!(rows(&text).len(), 500);
    assert!(!text.contains('\r'));

    let env_run = Command::new(env!("CARGO_BIN_EXE_polyfreq"))
        .args(["simulate", "--model", AR1, "--n", "500"])
        .env("POLYFREQ_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(env_run.stdout, text.as_bytes());
}

#[test]
fn simulated_output_feeds_estimate() {
    let dir = TempDir::new().unwrap();
    let sample = dir.path().join("sample.csv");
    let out = polyfreq(&["simulate", "--model", AR1, "--n", "2000", "--output", sample.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = polyfreq(&["estimate", "--input", sample.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("n=2000 "));
}

/// Kolmogorov–Smirnov statistic of an i.i.d. simulation against the noise CDF.
#[test]
fn iid_simulation_passes_ks() {
    let spec = r#"{"schema":1,"family":"nlar_tar","a":0.0,"b":0.0,"noise":{"kind":"laplace","scale":0.7}}"#;
    let out = polyfreq(&["simulate", "--model", spec, "--n", "100000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut xs: Vec<f64> = rows(&stdout(&out)).iter().map(|r| r[0].parse().unwrap()).collect();
    xs.sort_by(f64::total_cmp);
    let noise = NoiseSpec::Laplace { scale: 0.7 };
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = noise.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    // asymptotic 1% critical value
    assert!(d < 1.628 / n.sqrt(), "D = {d}");
}

#[test]
fn model_errors() {
    let out = polyfreq(&["simulate", "--model", "{\"schema\":1,\n\"family\":", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let explosive = r#"{"schema":1,"family":"arma","ar":[1.2]}"#;
    let out = polyfreq(&["simulate", "--model", explosive, "--n", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("A(z)"), "{}", stderr(&out));

    let tar = r#"{"schema":1,"family":"nlar_tar","a":1.0,"b":0.2}"#;
    let out = polyfreq(&["simulate", "--model", tar, "--n", "10"]);
    assert_eq!(out.status.code(), Some(3));

    let dir = TempDir::new().unwrap();
    let path = write_file(&dir, "model.json", AR1);
    assert_eq!(polyfreq(&["simulate", "--model", &path, "--n", "10"]).status.code(), Some(0));
    let laplace_arma = r#"{"schema":1,"family":"arma","ar":[0.5],"noise":{"kind":"laplace","scale":1.0}}"#;
    let out = polyfreq(&["rate", "--model", laplace_arma, "--n-min", "64", "--n-max", "4096", "--reps", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn delta_report() {
    let out = polyfreq(&["delta", "--model", AR1, "--kmax", "6", "--reps", "2000", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\nk,delta_hat,std_error,replications\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 7);
    let d0: f64 = rows[0][1].parse().unwrap();
    let se0: f64 = rows[0][2].parse().unwrap();
    assert!((d0 - 2f64.sqrt()).abs() < 3.0 * se0);
    assert!(stderr(&out).contains("verdict Consistent"), "{}", stderr(&out));

    let json = polyfreq(&["delta", "--model", AR1, "--kmax", "6", "--reps", "2000", "--seed", "9", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let slope = v["summability"]["slope"].as_f64().unwrap();
    assert!((slope - 0.5f64.ln()).abs() < 0.05);

    assert_eq!(polyfreq(&["delta", "--model", AR1, "--reps", "10"]).status.code(), Some(1));
}

#[test]
fn delta_excludes_noise_floor_lags() {
    let iid = r#"{"schema":1,"family":"arma"}"#;
    let out = polyfreq(&["delta", "--model", iid, "--kmax", "3", "--reps", "500", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["summability"]["fitted_lags"], serde_json::json!([0]));
}

#[test]
fn rate_command() {
    let out = polyfreq(&["rate", "--model", AR1, "--n-min", "4096", "--n-max", "1024"]);
    assert_eq!(out.status.code(), Some(1));

    let out = polyfreq(&["rate", "--model", AR1, "--n-min", "64", "--n-max", "4096", "--reps", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("warning:"), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["report"]["slope_ci"].is_null());
    assert_eq!(v["report"]["summaries"].as_array().unwrap().len(), 7);

    let out = polyfreq(&["rate", "--model", AR1, "--n-min", "64", "--n-max", "4096", "--reps", "3", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\nn,b,replication,sup_error,wall_time_ms\n"));
    assert_eq!(rows(&text).len(), 21);
}

#[test]
fn bench_command() {
    let out = polyfreq(&["--threads", "2", "bench", "--n", "10000", "--m", "200", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["report"]["n"], 10000);
    assert!(v["report"]["p_n"].as_u64().unwrap() > 10);
    assert!(v["report"]["kde_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn bench_scaling() {
    use polyfreq_cli::bench::run_bench;
    let base = run_bench(10_000, 2000, 1, 5).unwrap();
    let double_m = run_bench(10_000, 4000, 1, 5).unwrap();
    for (name, ratio) in [
        ("kde", double_m.kde_ms / base.kde_ms),
        ("fp query", double_m.fp_query_ms / base.fp_query_ms),
    ] {
        assert!((1.0..=3.0).contains(&ratio), "{name} m-scaling {ratio}");
    }
    let quad_n = run_bench(40_000, 2000, 1, 5).unwrap();
    let kde_ratio = quad_n.kde_ms / base.kde_ms;
    assert!(kde_ratio > 2.0, "kde n-scaling {kde_ratio}");
    let fp_ratio = quad_n.fp_query_ms / base.fp_query_ms;
    assert!(fp_ratio < 2.0, "fp query n-scaling {fp_ratio}");
}
