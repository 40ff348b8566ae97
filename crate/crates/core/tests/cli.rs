use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfscale::calibrate::CalibrationReport;
use mfscale::cli::RunManifest;
use mfscale::io::{fingerprint_file, read_series};
use mfscale::series::to_returns;
use mfscale::Representation;

const BIN: &str = env!("CARGO_BIN_EXE_mfscale");

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/rmd_h05_l14_seed1.csv")
}

fn mfscale(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn mfscale_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(BIN)
        .env("MFSCALE_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_prices(path: &Path, dated: bool, n: usize) {
    let mut text = String::from(if dated { "date,close\n" } else { "close\n" });
    let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    let mut price = 100.0f64;
    let mut state = 12345u64;
    for i in 0..n {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        price *= (0.02 * u).exp();
        if dated {
            let d = start + chrono::Days::new(i as u64);
            text.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), price));
        } else {
            text.push_str(&format!("{price}\n"));
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn analyze_bundled_rmd_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let before = fingerprint_file(&fixture()).unwrap();
    let o = mfscale(&["analyze", s(&fixture()), "--pipeline", "as-profile", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fingerprint_file(&fixture()).unwrap(), before, "input left untouched");

    let metrics = json(&out.join("metrics.json"));
    let width = metrics["width"].as_f64().unwrap();
    // finite-length background band at 2^14 samples: 0.22 ± 0.10
    assert!((width - 0.22).abs() <= 0.10, "width {width}");
    assert!((metrics["hurst"].as_f64().unwrap() - 0.5).abs() < 0.05);
    assert_eq!(metrics["manifest"], "manifest.json");

    let manifest: RunManifest = serde_json::from_value(json(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest.command, "analyze");
    assert_eq!(manifest.input.as_ref().unwrap().sha256, before);
    assert_eq!(manifest.representation_chain, vec![Representation::Profile]);
    assert_eq!(manifest.range_mode.as_deref(), Some("auto"));
    assert_eq!(manifest.ranges.len(), 41);
    let names: Vec<&str> = manifest.outputs.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["surface.csv", "hurst.json", "spectrum.csv", "metrics.json"]);
    for record in &manifest.outputs {
        assert_eq!(fingerprint_file(&out.join(&record.path)).unwrap(), record.sha256);
    }
    let surface = fs::read_to_string(out.join("surface.csv")).unwrap();
    let mut lines = surface.lines();
    let meta: serde_json::Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(meta["manifest"], "manifest.json");
    assert_eq!(meta["input_sha256"], before.as_str());
    assert_eq!(lines.next(), Some("s,q,F,degenerate_count"));
    assert_eq!(lines.count(), 40 * 41);
    let spectrum = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("# manifest: manifest.json\nq,alpha,f\n"));
}

#[test]
fn degenerate_and_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "close\n".to_string() + &"42.0\n".repeat(500)).unwrap();
    let o = mfscale(&["analyze", s(&flat), "--out", s(&dir.path().join("a"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));

    let o = mfscale(&["analyze", s(&dir.path().join("nope.csv")), "--out", s(&dir.path().join("b"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,close\n2001-01-01,1\n2001-01-02,x\n").unwrap();
    let o = mfscale(&["analyze", s(&bad), "--out", s(&dir.path().join("c"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv:3"));

    assert_eq!(mfscale(&["analyze"]).status.code(), Some(1));
    assert_eq!(mfscale(&["generate", "--H", "1.5", "--out", s(&dir.path().join("g.csv"))]).status.code(), Some(1));
    let o = mfscale_threads("zero", &["generate", "--H", "0.5", "--levels", "4", "--out", s(&dir.path().join("g.csv"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = mfscale(&["generate", "--H", "0.7", "--levels", "14", "--seed", "1", "--out", s(p)]);
        assert!(o.status.success());
    }
    assert!(!fs::read(&a).unwrap().is_empty());
    // the files differ only in the manifest name they reference
    let strip = |p: &Path| fs::read_to_string(p).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    let c = dir.path().join("c");
    fs::create_dir(&c).unwrap();
    let o = mfscale(&["generate", "--H", "0.7", "--levels", "14", "--seed", "1", "--out", s(&c.join("a.csv"))]);
    assert!(o.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(c.join("a.csv")).unwrap());
    assert_eq!(fs::read(dir.path().join("a.meta.json")).unwrap(), fs::read(c.join("a.meta.json")).unwrap());
    let meta = json(&dir.path().join("a.meta.json"));
    assert_eq!(meta["H"], 0.7);
    assert_eq!(meta["n"], 16385);
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["algorithm"], mfscale::rmdgen::ALGORITHM_ID);

    let inc = dir.path().join("inc.csv");
    assert!(mfscale(&["generate", "--H", "0.5", "--levels", "6", "--increments", "--out", s(&inc)]).status.success());
    assert_eq!(read_series(&inc, Representation::Return).unwrap().len(), 64);
}

#[test]
fn shuffle_preserves_the_return_multiset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("shuffled.csv");
    let o = mfscale(&["shuffle", s(&fixture()), "--seed", "7", "--pipeline", "as-profile", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sorted = |p: &Path| {
        let x = read_series(p, Representation::Profile).unwrap();
        let mut r = to_returns(&x).unwrap().into_values();
        r.sort_by(f64::total_cmp);
        r
    };
    let (a, b) = (sorted(&fixture()), sorted(&out));
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    assert!(dir.path().join("shuffled.manifest.json").exists());

    let prices = dir.path().join("p.csv");
    write_prices(&prices, true, 300);
    let out = dir.path().join("ps.csv");
    assert!(mfscale(&["shuffle", s(&prices), "--seed", "7", "--out", s(&out)]).status.success());
    let x = read_series(&out, Representation::Price).unwrap();
    assert_eq!(x.len(), 300);
    assert!(x.timestamps().is_some());
}

#[test]
fn surgery_identity_and_dates() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("p.csv");
    write_prices(&prices, true, 400);
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "[]").unwrap();
    let out = dir.path().join("same.csv");
    let o = mfscale(&["surgery", s(&prices), "--spec", s(&empty), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let x = read_series(&prices, Representation::Price).unwrap();
    let y = read_series(&out, Representation::Price).unwrap();
    assert_eq!(x.timestamps(), y.timestamps());
    for (a, b) in x.values().iter().zip(y.values()) {
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"[{"from_date": "2000-01-10", "to_date": "2000-01-14"}, {"start": 100, "end": 110}]"#).unwrap();
    let cut = dir.path().join("cut.csv");
    assert!(mfscale(&["surgery", s(&prices), "--spec", s(&spec), "--out", s(&cut)]).status.success());
    let z = read_series(&cut, Representation::Price).unwrap();
    assert_eq!(z.len(), 400 - 5 - 10);
    let provenance = json(&dir.path().join("cut.provenance.json"));
    assert_eq!(provenance["removed_returns"], 15);
    assert_eq!(provenance["intervals"][0]["start"], 6);
    assert_eq!(provenance["manifest"], "cut.manifest.json");

    fs::write(&spec, r#"[{"start": 1, "end": 5}, {"start": 3, "end": 8}]"#).unwrap();
    let o = mfscale(&["surgery", s(&prices), "--spec", s(&spec), "--out", s(&cut)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn suggested_ranges_feed_manual_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("p.csv");
    write_prices(&prices, false, 4000);
    let ranges = dir.path().join("ranges.json");
    let o = mfscale(&["suggest-ranges", s(&prices), "--q-min", "-2", "--q-max", "2", "--q-step", "0.5", "--out", s(&ranges)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let suggested = json(&ranges);
    assert!(suggested.get("2").is_some());

    let out = dir.path().join("manual");
    let o = mfscale(&[
        "analyze", s(&prices), "--q-min", "-2", "--q-max", "2", "--q-step", "0.5", "--ranges", s(&ranges), "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: RunManifest = serde_json::from_value(json(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest.range_mode.as_deref(), Some("manual"));
    let r2 = manifest.ranges.iter().find(|r| r.q == 2.0).unwrap();
    assert_eq!(r2.s_lo as u64, suggested["2"]["s_lo"].as_u64().unwrap());
    assert_eq!(r2.s_hi as u64, suggested["2"]["s_hi"].as_u64().unwrap());
}

#[test]
fn plot_data_is_plain_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plots");
    let o = mfscale(&["plot-data", s(&fixture()), "--pipeline", "as-profile", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (name, cols) in [("hurst.dat", 3), ("tau.dat", 2), ("spectrum.dat", 2), ("fluctuation.dat", 3)] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# "));
        for line in lines {
            let cells: Vec<f64> = line.split_whitespace().map(|c| c.parse().unwrap()).collect();
            assert_eq!(cells.len(), cols, "{name}: {line}");
        }
    }
}

#[test]
fn calibrate_and_use_as_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let cache = dir.path().join("cache");
    let args = [
        "calibrate", "--lengths", "4096,16384", "--hursts", "0.5", "--ensemble", "3", "--base-seed", "5",
        "--cache-dir", s(&cache), "--out", s(&report_path),
    ];
    let o = mfscale(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = CalibrationReport::load(&report_path).unwrap();
    assert_eq!(report.entries.len(), 2);
    assert_eq!(report.entries[0].seeds, vec![5, 6, 7]);
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    let first = fs::read(&report_path).unwrap();
    assert!(mfscale(&args).status.success());
    assert_eq!(fs::read(&report_path).unwrap(), first);

    let out = dir.path().join("run");
    let o = mfscale(&[
        "analyze", s(&fixture()), "--pipeline", "as-profile", "--baseline", s(&report_path), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = json(&out.join("metrics.json"));
    assert_eq!(metrics["baseline"]["length"], 16384);
    assert!(metrics["excess_width"].is_number());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("one"), dir.path().join("many"));
    for (threads, out) in [("1", &a), ("4", &b)] {
        let o = mfscale_threads(threads, &["analyze", s(&fixture()), "--pipeline", "as-profile", "--out", s(out)]);
        assert!(o.status.success());
    }
    for name in ["surface.csv", "hurst.json", "spectrum.csv", "metrics.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}
