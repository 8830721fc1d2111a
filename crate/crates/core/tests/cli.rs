use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpswf::approx::{ball_l2_distance, eta_bound, VolumeSamples};
use gpswf::basis::{grid_points_in_ball, GridSpec};
use gpswf::io::{read_coefficient_rows, read_manifest, read_volume, write_volume};
use gpswf::radial::{solve_band, BandSpec, SpectrumOptions};
use num_complex::Complex64;
use serde_json::Value;
use tempfile::TempDir;

fn gpswf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpswf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn smooth_volume(dir: &Path, l: u32, c: Option<f64>) -> PathBuf {
    let grid = GridSpec::new(l).unwrap();
    let volume = VolumeSamples::sample_real(grid, |x| (-4.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp() * (1.0 + x[0]));
    let path = dir.join("vol.bin");
    write_volume(&path, &volume, c).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let j = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[j].parse().unwrap()).collect()
}

#[test]
fn usage_errors_exit_64() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&gpswf(dir.path(), &[])), 64);
    assert_eq!(code(&gpswf(dir.path(), &["nonsense"])), 64);
    assert_eq!(code(&gpswf(dir.path(), &["basis", "--c", "not-a-number"])), 64);
    assert_eq!(code(&gpswf(dir.path(), &["--help"])), 0);
}

#[test]
fn missing_input_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = gpswf(dir.path(), &["expand", "--c", "3", "--input", "absent.bin"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_sidecar_exits_3() {
    let dir = TempDir::new().unwrap();
    let vol = smooth_volume(dir.path(), 4, None);
    std::fs::write(dir.path().join("vol.bin.json"), "{ not json").unwrap();
    let out = gpswf(dir.path(), &["expand", "--c", "3", "--input", path_arg(&vol)]);
    assert_eq!(code(&out), 3);
}

#[test]
fn bandlimit_above_critical_exits_2() {
    let dir = TempDir::new().unwrap();
    let vol = smooth_volume(dir.path(), 4, None);
    let c = format!("{}", 4.0 * PI + 0.1);
    let out = gpswf(dir.path(), &["expand", "--c", &c, "--input", path_arg(&vol)]);
    assert_eq!(code(&out), 2);
    let out = gpswf(dir.path(), &["demo-gaussian", "--L", "4", "--c", &c]);
    assert_eq!(code(&out), 2);
}

#[test]
fn empty_manifest_warns_and_succeeds() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("m.json");
    let out = gpswf(
        dir.path(),
        &["basis", "--c", "0.5", "--T", "1e6", "--output", path_arg(&manifest), "--cache-dir", "cache"],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    let m = read_manifest(&manifest).unwrap();
    assert_eq!(m.count, 0);
    assert!(m.indices.is_empty());
}

#[test]
fn expanding_zeros_gives_zero_coefficients() {
    let dir = TempDir::new().unwrap();
    let grid = GridSpec::new(4).unwrap();
    let vol = dir.path().join("zeros.bin");
    write_volume(&vol, &VolumeSamples::zeros(grid, true), Some(2.0 * PI)).unwrap();
    let out = gpswf(dir.path(), &["expand", "--input", path_arg(&vol), "--T", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_coefficient_rows(&dir.path().join("coefficients.csv")).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.re_b_hat == 0.0 && r.im_b_hat == 0.0 && r.re_a_hat == 0.0 && r.im_a_hat == 0.0));
}

#[test]
fn expand_reconstruct_bound_pipeline() {
    let dir = TempDir::new().unwrap();
    let l = 6;
    let c = PI * l as f64;
    let vol = smooth_volume(dir.path(), l, Some(c));
    let cs = format!("{c}");
    let ls = l.to_string();
    for args in [
        vec!["expand", "--input", path_arg(&vol), "--T", "10"],
        vec!["reconstruct", "--input", "coefficients.csv", "--c", &cs, "--L", &ls, "--T", "10"],
        vec!["bound", "--input", path_arg(&vol), "--T", "10"],
    ] {
        let out = gpswf(dir.path(), &args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let (original, _) = read_volume(&vol).unwrap();
    let (rebuilt, header) = read_volume(&dir.path().join("reconstruction.bin")).unwrap();
    assert_eq!(header.l, l);
    assert!(rebuilt.is_real());
    let grid = original.grid();
    let sq: f64 = grid_points_in_ball(grid)
        .iter()
        .map(|&k| (original.value(k) - rebuilt.value(k)).norm_sqr())
        .sum();
    let sample_rms = (sq / (l as f64).powi(3)).sqrt();
    let budget: Value = serde_json::from_slice(&std::fs::read(dir.path().join("budget.json")).unwrap()).unwrap();
    let eta = budget["eta_bound"].as_f64().unwrap();
    assert!((eta - eta_bound(BandSpec::new(c).unwrap(), grid)).abs() <= 1e-12 * eta);
    // a smooth, nearly bandlimited input is recovered closely at the samples
    let total = budget["total"].as_f64().unwrap();
    assert!(total.is_finite() && total > 0.0);
    assert!(sample_rms < 0.2, "sample residual {sample_rms}");
}

#[test]
fn gaussian_bound_matches_the_sweep_column() {
    let dir = TempDir::new().unwrap();
    let common = ["--L", "6", "--T", "1", "--mu", "0.1,-0.05,0.02", "--sigma-list", "0.03"];
    let mut bound = vec!["bound"];
    bound.extend(common);
    let mut sweep = vec!["demo-gaussian"];
    sweep.extend(common);
    assert_eq!(code(&gpswf(dir.path(), &bound)), 0);
    assert_eq!(code(&gpswf(dir.path(), &sweep)), 0);
    let budget: Value = serde_json::from_slice(&std::fs::read(dir.path().join("budget.json")).unwrap()).unwrap();
    let rows = read_csv(&dir.path().join("gaussian_sweep.csv"));
    let total = budget["total"].as_f64().unwrap();
    let column = column(&rows, "bound_total");
    assert_eq!(column.len(), 1);
    assert!((total - column[0]).abs() <= 1e-12 * total, "{total} vs {}", column[0]);
}

#[test]
fn flags_override_config_values() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("job.json"), r#"{ "c": 2.0, "T": [1000], "output": "from_config.json" }"#).unwrap();
    let out = gpswf(dir.path(), &["basis", "--config", "job.json", "--T", "1", "--cache-dir", "cache"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&dir.path().join("from_config.json")).unwrap();
    assert_eq!(m.c, 2.0);
    assert_eq!(m.t, 1.0);

    std::fs::write(dir.path().join("bad.json"), r#"{ "bandwidth": 2.0 }"#).unwrap();
    let out = gpswf(dir.path(), &["basis", "--config", "bad.json"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn xi_scan_slope_is_near_minus_one() {
    let dir = TempDir::new().unwrap();
    let out = gpswf(dir.path(), &["xi", "--L", "8,16,24,32", "--print-summary"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let slope: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("slope").map(|v| v.trim_start_matches([':', '=', ' ']).trim().parse().unwrap()))
        .expect("slope line");
    assert!((-1.2..=-0.9).contains(&slope), "slope {slope}");
    let rows = read_csv(&dir.path().join("xi_scan.csv"));
    assert_eq!(rows.len(), 5);
}

#[test]
fn gram_deviation_shrinks_with_threshold() {
    let dir = TempDir::new().unwrap();
    let out = gpswf(dir.path(), &["gram", "--c", &format!("{}", 4.0 * PI), "--L", "4", "--T", "1,10,100"]);
    assert_eq!(code(&out), 0);
    let dev = column(&read_csv(&dir.path().join("gram.csv")), "max_deviation");
    assert_eq!(dev.len(), 3);
    assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
}

#[test]
fn table1_columns_are_monotone() {
    let dir = TempDir::new().unwrap();
    let out = gpswf(dir.path(), &["table1", "--L", "6,8", "--logT", "-6,-2,0,2,6"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("table1.csv"));
    assert_eq!(rows[0], ["L", "6", "8"]);
    let ratios: Vec<Vec<f64>> = rows[2..].iter().map(|r| r[1..].iter().map(|v| v.parse().unwrap()).collect()).collect();
    for j in 0..2 {
        assert!(ratios.windows(2).all(|w| w[1][j] <= w[0][j]), "column {j}: {ratios:?}");
    }
    let out = gpswf(dir.path(), &["table1", "--L", "6", "--logT", "0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn warm_cache_reproduces_the_manifest() {
    let dir = TempDir::new().unwrap();
    let args = ["basis", "--c", "6", "--T", "1", "--L", "4", "--cache-dir", "cache"];
    assert_eq!(code(&gpswf(dir.path(), &args)), 0);
    let cold = std::fs::read(dir.path().join("manifest.json")).unwrap();
    assert!(std::fs::read_dir(dir.path().join("cache")).unwrap().next().is_some());
    assert_eq!(code(&gpswf(dir.path(), &args)), 0);
    assert_eq!(cold, std::fs::read(dir.path().join("manifest.json")).unwrap());

    let spectrum = solve_band(BandSpec::new(6.0).unwrap(), SpectrumOptions::default()).unwrap();
    let m = read_manifest(&dir.path().join("manifest.json")).unwrap();
    for e in &m.indices {
        let sys = spectrum.system(e.index.degree).unwrap();
        assert_eq!(e.alpha_tilde, sys.alpha_tilde(e.index.radial as usize));
    }
}

#[test]
fn library_reconstruction_agrees_with_distance_helper() {
    // a sanity link between the library pieces the CLI composes
    let l = 5;
    let grid = GridSpec::new(l).unwrap();
    let band = BandSpec::new(PI * l as f64).unwrap();
    let spectrum = solve_band(band, SpectrumOptions::default()).unwrap();
    let set = gpswf::basis::truncation_set(&spectrum, 1.0).unwrap();
    let volume = VolumeSamples::sample_real(grid, |_| 0.0);
    let coeffs = gpswf::approx::expand(&volume, &set, &spectrum).unwrap();
    let rule = gpswf::quadrature::ball_rule(24, 24, 48).unwrap();
    let d = ball_l2_distance(&coeffs, &spectrum, &rule, |_| Complex64::new(0.0, 0.0)).unwrap();
    assert_eq!(d, 0.0);
}
