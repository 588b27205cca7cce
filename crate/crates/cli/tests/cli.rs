use std::path::Path;
use std::process::Command;

use nlswave::blackscholes::SurfaceSource;
use nlswave_cli::surface_io::{ingest_market_csv, parse_surface_csv};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nlswave"));
    c.env_remove("NLSWAVE_OUT_DIR");
    c
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn generate(dir: &Path, kind: &str, s: &str, t: &str) {
    run_ok(&[
        "generate", "--kind", kind, "--strike", "100", "--rate", "0.05", "--vol", "0.2", "--expiry", "1", "--s", s,
        "--t", t, "--out-dir", dir.to_str().unwrap(),
    ]);
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_row_count_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "call", "50:150:101", "0:0.9:10");
    let first = std::fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert_eq!(first.lines().count(), 1 + 1010);
    assert_eq!(first.lines().next(), Some("s,t,price"));
    generate(dir.path(), "call", "50:150:101", "0:0.9:10");
    assert_eq!(std::fs::read_to_string(dir.path().join("surface.csv")).unwrap(), first);
}

#[test]
fn put_surface_respects_discounted_strike() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "put", "50:150:101", "0:0.9:10");
    let surface = ingest_market_csv(&dir.path().join("surface.csv")).unwrap();
    let tau_min = 1.0 - 0.9;
    assert!(surface.max_price() <= 100.0 * (-0.05f64 * tau_min).exp());
}

#[test]
fn generated_csv_ingests_to_the_same_surface() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "call", "50:150:11", "0:0.9:4");
    let path = dir.path().join("surface.csv");
    let direct = nlswave::blackscholes::generate_surface(
        &nlswave::blackscholes::BsParams {
            strike: 100.0,
            rate: 0.05,
            vol: 0.2,
            expiry: 1.0,
            kind: nlswave::blackscholes::OptionKind::Call,
        },
        nlswave::numerics::Grid1D::from_range(50.0, 150.0, 11).unwrap(),
        nlswave::numerics::Grid1D::from_range(0.0, 0.9, 4).unwrap(),
    )
    .unwrap();
    let ingested = ingest_market_csv(&path).unwrap();
    assert_eq!(ingested.prices, direct.prices);
    match &ingested.source {
        SurfaceSource::File { sha256, .. } => assert_eq!(sha256.len(), 64),
        other => panic!("{other:?}"),
    }

    // shuffled rows ingest identically
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    lines.swap(3, 17);
    let shuffled = format!("{header}\n{}\n", lines.join("\n"));
    let a = parse_surface_csv(&text, SurfaceSource::Synthetic("x".into())).unwrap();
    let b = parse_surface_csv(&shuffled, SurfaceSource::Synthetic("x".into())).unwrap();
    assert_eq!(a, b);

    // one node missing
    let mut missing: Vec<&str> = text.lines().collect();
    let dropped = missing.remove(7).to_string();
    std::fs::write(&path, missing.join("\n")).unwrap();
    let err = ingest_market_csv(&path).unwrap_err().to_string();
    let mut cells = dropped.split(',');
    let (s, t) = (cells.next().unwrap(), cells.next().unwrap());
    let s: f64 = s.parse().unwrap();
    let t: f64 = t.parse().unwrap();
    assert!(err.contains(&format!("(s={s}, t={t})")), "{err}");
}

#[test]
fn synthetic_round_trip_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run_ok(&[
        "sample", "--component", "soliton", "--sigma", "1", "--beta", "1", "--k", "0.8", "--s", "-6:6:61", "--t", "0:1:11",
        "--out-dir", d,
    ]);
    let fit = [
        "fit", "--input", &format!("{d}/sample.csv"), "--components", "soliton", "--sigma", "1", "--beta", "1",
        "--normalize", "false", "--init", "A3=0.7,soliton.k=0.5", "--out-dir", d,
    ];
    run_ok(&fit);
    let report = json(&dir.path().join("fit_report.json"));
    assert_eq!(report["status"], "converged-cost");
    assert!(report["rmse"].as_f64().unwrap() < 1e-8);
    assert!((report["parameters"]["soliton.k"].as_f64().unwrap() - 0.8).abs() < 1e-6);
    assert!((report["parameters"]["A3"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    for key in ["parameters", "cost_trace", "status", "rmse", "config", "input_hash"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["config"]["components"], "soliton");
    let first = std::fs::read(dir.path().join("fit_report.json")).unwrap();
    run_ok(&fit);
    assert_eq!(std::fs::read(dir.path().join("fit_report.json")).unwrap(), first);

    let overlay = std::fs::read_to_string(dir.path().join("fit_overlay.csv")).unwrap();
    assert_eq!(overlay.lines().next(), Some("s,t,price,model"));
    for line in overlay.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] - v[3]).abs() < 1e-7);
    }
}

#[test]
fn nested_models_on_black_scholes_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    generate(dir.path(), "call", "50:150:26", "0:0.9:6");
    let input = format!("{d}/surface.csv");
    run_ok(&["fit", "--input", &input, "--components", "soliton", "--sigma", "0.2", "--beta", "0.05", "--out-dir", d, "--report", "one.json"]);
    run_ok(&["fit", "--input", &input, "--components", "all", "--sigma", "0.2", "--beta", "0.05", "--out-dir", d, "--report", "all.json"]);
    let one = json(&dir.path().join("one.json"))["rmse"].as_f64().unwrap();
    let all = json(&dir.path().join("all.json"))["rmse"].as_f64().unwrap();
    assert!(all <= one, "all {all} > soliton {one}");
}

#[test]
fn sequential_and_parallel_fits_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    generate(dir.path(), "call", "50:150:21", "0:0.9:4");
    let input = format!("{d}/surface.csv");
    for (exec, report) in [("sequential", "seq.json"), ("parallel", "par.json")] {
        run_ok(&[
            "fit", "--input", &input, "--components", "packet,one-rogon", "--sigma", "0.2", "--beta", "0.05", "--starts",
            "2", "--exec", exec, "--report", report, "--out-dir", d,
        ]);
    }
    let a = json(&dir.path().join("seq.json"));
    let b = json(&dir.path().join("par.json"));
    for key in ["parameters", "cost_trace", "rmse", "model", "status"] {
        assert_eq!(a[key], b[key], "{key}");
    }
}

#[test]
fn extrapolation_is_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    generate(dir.path(), "call", "50:150:11", "0:0.5:3");
    run_ok(&[
        "fit", "--input", &format!("{d}/surface.csv"), "--components", "packet", "--sigma", "0.2", "--beta", "0.05",
        "--extrapolate-t", "0:0.9:4", "--out-dir", d,
    ]);
    let text = std::fs::read_to_string(dir.path().join("fit_extrapolation.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("s,t,model,label"));
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.len(), 44);
    assert_eq!(labels.iter().filter(|l| **l == "extrapolation").count(), 22);
    assert_eq!(labels.iter().filter(|l| **l == "in-sample").count(), 22);
}

#[test]
fn verify_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for (component, extra) in [
        ("soliton", vec!["--sigma", "1", "--beta", "1", "--k", "1"]),
        ("packet", vec![]),
        ("two-rogon", vec!["--beta", "0.5", "--k", "0.5"]),
    ] {
        let out = format!("{component}.json");
        let mut args = vec!["verify", "--component", component, "--levels", "3", "--s", "-10:10:201", "--out-dir", d, "--output", &out];
        args.extend(extra);
        run_ok(&args);
        let report = json(&dir.path().join(&out));
        let order = report["order"].as_f64().unwrap();
        assert!((1.8..=2.2).contains(&order), "{component}: {order}");
        assert_eq!(report["levels"].as_array().unwrap().len(), 3);
        let eq = if component == "packet" { "linear" } else { "nls" };
        assert_eq!(report["equation"], eq);
        for key in ["h_s", "h_t", "max_abs", "l2"] {
            assert!(report["levels"][0].get(key).is_some());
        }
    }
}

fn read_greeks(path: &Path) -> Vec<(String, f64, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next(), Some("quantity,re,im,modulus"));
    text.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].to_string(), c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn greeks_analytic_and_fd() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run_ok(&["greeks", "--sigma", "2", "--beta", "-0.5", "--at-s", "0", "--at-t", "0", "--out-dir", d]);
    let rows = read_greeks(&dir.path().join("greeks.csv"));
    let delta = rows.iter().find(|r| r.0 == "delta").unwrap();
    assert!((delta.3 - 2.0).abs() < 1e-12);

    let probe = ["--sigma", "1", "--beta", "-2", "--k", "1.5", "--at-s", "0.8", "--at-t", "0.4", "--out-dir", d];
    let mut a = vec!["greeks", "--output", "a.csv"];
    a.extend(probe);
    let mut f = vec!["greeks", "--method", "fd", "--output", "f.csv"];
    f.extend(probe);
    run_ok(&a);
    run_ok(&f);
    let (ra, rf) = (read_greeks(&dir.path().join("a.csv")), read_greeks(&dir.path().join("f.csv")));
    assert_eq!(ra.len(), rf.len());
    for (x, y) in ra.iter().zip(&rf) {
        assert_eq!(x.0, y.0);
        let diff = ((x.1 - y.1).powi(2) + (x.2 - y.2).powi(2)).sqrt();
        assert!(diff <= 1e-5 * x.3.max(1.0), "{}: {x:?} vs {y:?}", x.0);
    }
    // analytic Greeks exist only for the shock
    assert_eq!(exit_code(&["greeks", "--component", "soliton", "--method", "analytic", "--at-s", "0", "--at-t", "0", "--out-dir", d]), 2);
}

#[test]
fn greeks_of_a_fitted_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    generate(dir.path(), "call", "50:150:11", "0:0.5:3");
    run_ok(&["fit", "--input", &format!("{d}/surface.csv"), "--components", "packet,shock", "--sigma", "0.2", "--beta", "0.05", "--out-dir", d]);
    run_ok(&["greeks", "--model", &format!("{d}/fit_report.json"), "--at-s", "100", "--at-t", "0.2", "--out-dir", d]);
    let rows = read_greeks(&dir.path().join("greeks.csv"));
    assert!(rows.iter().any(|r| r.0 == "rho"));
    assert!(rows.iter().all(|r| r.1.is_finite() && r.2.is_finite()));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    // unknown flag
    assert_eq!(exit_code(&["generate", "--bogus"]), 2);
    // invalid Black-Scholes parameters
    assert_eq!(
        exit_code(&["generate", "--strike", "-1", "--rate", "0", "--vol", "0.2", "--expiry", "1", "--s", "1:2:2", "--t", "0:0.5:2", "--out-dir", d]),
        3
    );
    // missing input file
    assert_eq!(exit_code(&["fit", "--input", &format!("{d}/nope.csv"), "--sigma", "1", "--beta", "1"]), 5);
    // malformed CSV
    std::fs::write(dir.path().join("bad.csv"), "s,t,price\n1,0,1\n2,0,x\n").unwrap();
    let out = bin().args(["fit", "--input", &format!("{d}/bad.csv"), "--sigma", "1", "--beta", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    // over-parameterized: 2 nodes, full model
    std::fs::write(dir.path().join("tiny.csv"), "s,t,price\n1,0,1\n2,0,2\n").unwrap();
    assert_eq!(exit_code(&["fit", "--input", &format!("{d}/tiny.csv"), "--sigma", "1", "--beta", "1", "--out-dir", d]), 2);
    // invalid component parameters (shock needs sigma/beta < 0)
    assert_eq!(exit_code(&["verify", "--component", "shock", "--beta", "1", "--out-dir", d]), 3);
    // help is not an error
    assert_eq!(exit_code(&["--help"]), 0);
}

#[test]
fn numeric_errors_map_to_their_own_code() {
    let e: nlswave_cli::CliError = nlswave::Error::Singular("x".into()).into();
    assert_eq!(e.exit_code(), 4);
}

#[test]
fn config_file_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# defaults\nkind = put\nstrike = 90\nrate = 0.05\nvol = 0.2\nexpiry = 1\ns = 50:150:3\nt = 0:0.5:2\n").unwrap();
    let out = bin()
        .env("NLSWAVE_OUT_DIR", dir.path())
        .args(["generate", "--config", conf.to_str().unwrap(), "--strike", "100"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let surface = ingest_market_csv(&dir.path().join("surface.csv")).unwrap();
    // put with strike 100 (flag beat the file), at s = 50, t = 0
    let want = nlswave::blackscholes::bs_price(
        &nlswave::blackscholes::BsParams {
            strike: 100.0,
            rate: 0.05,
            vol: 0.2,
            expiry: 1.0,
            kind: nlswave::blackscholes::OptionKind::Put,
        },
        50.0,
        0.0,
    )
    .unwrap();
    assert_eq!(surface.prices[0], want);
}
