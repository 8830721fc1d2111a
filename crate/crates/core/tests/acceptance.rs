//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gpswf::approx::{eta_bound, expand, BudgetRegime};
use gpswf::basis::{count_grid_points_in_ball, grid_points_in_ball, truncation_set, GridSpec};
use gpswf::diagnostics::{
    continuous_gram_deviation, eigen_equation_sides, gaussian_sweep, gram_deviation, linear_fit, logspace,
    table1, xi_norm, xi_slope_experiment, BandlimitedCombination, SweepOptions, XiConfig, DEFAULT_GRAM_CAP,
};
use gpswf::quadrature::ball_rule;
use gpswf::radial::{default_quadrature_size, solve_band, solve_radial, BandSpec, SpectrumOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TABLE1_TOL: f64 = 0.03;
const XI_SLOPE: f64 = -1.05;
const XI_SLOPE_TOL: f64 = 0.15;
const GRAM_SLOPE: f64 = -2.0;
const GRAM_SLOPE_TOL: f64 = 0.4;
const GRAM_MIN_EIGEN: f64 = -1e-10;
const CONT_GRAM_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-6;
const TRACE_TOL: f64 = 1e-3;
const SELF_CONV_TOL: f64 = 1e-10;
const SELF_CONV_FLOOR: f64 = 1e-6;
const SELF_CONV_FN_TOL: f64 = 1e-9;
const SELF_CONV_GAP: f64 = 1e-4;
const SELF_CONV_MAX_DEGREE: u32 = 40;
const SAMPLING_SLACK: f64 = 1e-9;

/// Printed ratios for L = 16, 20, 24 and log10 T = -6..=6.
const TABLE1_PRINTED: [[f64; 3]; 13] = [
    [1.65, 1.41, 1.27],
    [1.45, 1.26, 1.14],
    [1.27, 1.12, 1.02],
    [1.08, 0.97, 0.90],
    [0.90, 0.83, 0.78],
    [0.71, 0.68, 0.66],
    [0.53, 0.52, 0.52],
    [0.37, 0.39, 0.41],
    [0.27, 0.31, 0.33],
    [0.21, 0.24, 0.27],
    [0.16, 0.20, 0.23],
    [0.12, 0.16, 0.19],
    [0.09, 0.12, 0.16],
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Result<Outcome, String>;

fn main() {
    let checks: [(&str, Check); 9] = [
        ("table 1 reproduction", table1_reproduction),
        ("sample counts", sample_counts),
        ("xi scaling slope", xi_scaling),
        ("eta bound", eta_bound_holds),
        ("Gram T^-2 law", gram_law),
        ("Gaussian error vs bound", gaussian_error_vs_bound),
        ("basis correctness", basis_correctness),
        ("sampling bound", sampling_bound),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {name}: {} ({:.1}s)", i + 1, result.detail, start.elapsed().as_secs_f64());
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn table1_reproduction() -> Result<Outcome, String> {
    let log_t: Vec<i32> = (-6..=6).collect();
    let table = table1(&[16, 20, 24], &log_t, SpectrumOptions::default()).map_err(err)?;
    let mut worst = (0.0f64, 0, 0);
    for (i, row) in TABLE1_PRINTED.iter().enumerate() {
        for (j, &printed) in row.iter().enumerate() {
            let d = (table.ratios[i][j] - printed).abs();
            if d > worst.0 {
                worst = (d, log_t[i], [16, 20, 24][j]);
            }
        }
    }
    Ok(outcome(
        worst.0 <= TABLE1_TOL,
        format!("max |computed - printed| = {:.3} at log10 T = {}, L = {} (tol {TABLE1_TOL})", worst.0, worst.1, worst.2),
    ))
}

fn sample_counts() -> Result<Outcome, String> {
    let expected = [(16, 17071), (20, 33371), (24, 57747), (52, 588739)];
    let mut got = Vec::new();
    let mut pass = true;
    for (l, n) in expected {
        let grid = GridSpec::new(l).map_err(err)?;
        let count = count_grid_points_in_ball(grid);
        let listed = if l <= 24 { grid_points_in_ball(grid).len() } else { count };
        pass &= count == n && listed == n;
        got.push(format!("L={l}: {count}"));
    }
    Ok(outcome(pass, got.join(", ")))
}

fn xi_scaling() -> Result<Outcome, String> {
    let l_list: Vec<u32> = (8..=48).step_by(4).collect();
    let fit = xi_slope_experiment(&l_list, 0.95, 4.0).map_err(err)?;
    Ok(outcome(
        (fit.slope - XI_SLOPE).abs() <= XI_SLOPE_TOL,
        format!("slope {:.4} over L = 8..48 (target {XI_SLOPE} +- {XI_SLOPE_TOL})", fit.slope),
    ))
}

fn eta_bound_holds() -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    let mut tested = 0;
    for l in [8, 12, 16, 24, 32] {
        for frac in [0.25, 0.5, 1.0] {
            let band = BandSpec::new(frac * PI * l as f64).map_err(err)?;
            let grid = GridSpec::new(l).map_err(err)?;
            let report = xi_norm(&XiConfig::new(band, grid, 1.0, 4.0).map_err(err)?).map_err(err)?;
            // lattice sum plus the certified remainder beyond the truncation radius
            let norm = (report.norm_sq + report.tail_bound).sqrt();
            worst = worst.max(norm / eta_bound(band, grid));
            tested += 1;
        }
    }
    Ok(outcome(worst <= 1.0, format!("max ||xi_c|| / eta over {tested} (c, L) pairs = {worst:.3e}")))
}

fn gram_law() -> Result<Outcome, String> {
    let spectrum = solve_band(BandSpec::new(8.0 * PI).map_err(err)?, SpectrumOptions::default()).map_err(err)?;
    let grid = GridSpec::new(8).map_err(err)?;
    let ts = [1.0, 10.0, 100.0, 1000.0];
    let mut devs = Vec::new();
    let mut min_tau = f64::INFINITY;
    for t in ts {
        let r = gram_deviation(&spectrum, grid, t, DEFAULT_GRAM_CAP).map_err(err)?;
        min_tau = min_tau.min(r.eigenvalues[0]);
        devs.push(r.max_deviation);
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.log10()).collect();
    let ys: Vec<f64> = devs.iter().map(|d| d.log10()).collect();
    let (slope, _) = linear_fit(&xs, &ys).map_err(err)?;
    Ok(outcome(
        (slope - GRAM_SLOPE).abs() <= GRAM_SLOPE_TOL && min_tau >= GRAM_MIN_EIGEN,
        format!(
            "slope {slope:.3} (target {GRAM_SLOPE} +- {GRAM_SLOPE_TOL}), min tau {min_tau:.3e}, deviations {:?}",
            devs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
        ),
    ))
}

fn gaussian_error_vs_bound() -> Result<Outcome, String> {
    let l = 16;
    let grid = GridSpec::new(l).map_err(err)?;
    let spectrum = solve_band(BandSpec::critical(l), SpectrumOptions::default()).map_err(err)?;
    let sigmas = logspace(1e-3, 1e-1, 9);
    let mut pass = true;
    let mut notes = Vec::new();
    for t in [1.0, 1e4] {
        let rows = gaussian_sweep(&sigmas, [0.1; 3], grid, t, &spectrum, SweepOptions::default()).map_err(err)?;
        let below = rows.iter().all(|r| r.measured_error <= r.bound_total);
        let (imin, _) = rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.measured_error.total_cmp(&b.1.measured_error))
            .expect("nonempty sweep");
        let interior = imin > 0 && imin + 1 < rows.len();
        let first = rows.first().expect("nonempty");
        let last = rows.last().expect("nonempty");
        // delta_c enters as delta_c (T + 4), epsilon as epsilon T
        let band_first = first.regime == Some(BudgetRegime::Band) && first.delta_c * (t + 4.0) > first.eps * t;
        let space_last = last.regime == Some(BudgetRegime::Space) && last.eps * t > last.delta_c * (t + 4.0);
        pass &= below && interior && band_first && space_last;
        let ratio = rows.iter().map(|r| r.measured_error / r.bound_total).fold(0.0, f64::max);
        notes.push(format!(
            "T={t}: max measured/bound {ratio:.3}, minimum at sigma {:.2e}, regimes {:?}->{:?}",
            rows[imin].sigma,
            first.regime.expect("set"),
            last.regime.expect("set")
        ));
    }
    Ok(outcome(pass, notes.join("; ")))
}

fn basis_correctness() -> Result<Outcome, String> {
    let band = BandSpec::new(8.0 * PI).map_err(err)?;
    let spectrum = solve_band(band, SpectrumOptions::default()).map_err(err)?;
    let set = truncation_set(&spectrum, 1.0).map_err(err)?;
    let n_max = set.max_degree().unwrap_or(0) as usize;

    // (a) continuous orthonormality on the ball
    let rule = ball_rule(96, n_max + 16, 2 * n_max + 16).map_err(err)?;
    let gram = continuous_gram_deviation(&set, &spectrum, &rule).map_err(err)?;

    // (b) eigen-equation residual at random points, scaled by |alpha| times the RMS of psi on the ball
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eq_rule = ball_rule(64, 72, 144).map_err(err)?;
    let rms = (3.0 / (4.0 * PI)).sqrt();
    let mut residual = 0.0f64;
    for _ in 0..20 {
        let index = set.indices()[rng.random_range(0..set.len())];
        let x = random_point_in_ball(&mut rng);
        let (lhs, rhs) = eigen_equation_sides(index, &spectrum, x, &eq_rule).map_err(err)?;
        let alpha = spectrum.system(index.degree).expect("resolved").alpha(index.radial as usize).norm();
        residual = residual.max((lhs - rhs).norm() / (alpha * rms.max(lhs.norm() / alpha)));
    }

    // (c) sum (2N+1)|alpha|^2 equals the squared volume of the ball
    let trace = spectrum.squared_trace();
    let vol2 = (4.0 * PI / 3.0).powi(2);
    let trace_err = (trace - vol2).abs() / vol2;

    // (d) eigenvalues stable under doubling of the radial rule; radial functions checked
    // where the eigenvalue is separated from its neighbours, since a near-degenerate
    // cluster only determines its span
    let conv_band = BandSpec::new(16.0 * PI).map_err(err)?;
    let mut conv = 0.0f64;
    let mut conv_fn = 0.0f64;
    for degree in 0..=SELF_CONV_MAX_DEGREE {
        let q = default_quadrature_size(conv_band.c(), degree);
        let a = solve_radial(conv_band, degree, q, q).map_err(err)?;
        let b = solve_radial(conv_band, degree, 2 * q, 2 * q).map_err(err)?;
        for n in 0..a.len() {
            let at = a.alpha_tilde(n);
            if at < SELF_CONV_FLOOR {
                break;
            }
            conv = conv.max((at - b.alpha_tilde(n)).abs() / at);
            let gap = [n.checked_sub(1), Some(n + 1)]
                .into_iter()
                .flatten()
                .filter(|&k| k < a.len())
                .map(|k| (a.alpha_tilde(k) - at).abs() / at)
                .fold(f64::INFINITY, f64::min);
            if gap < SELF_CONV_GAP {
                continue;
            }
            for r in [0.1, 0.37, 0.8, 1.0] {
                let (ka, kb) = (a.eval_radial(n, r).map_err(err)?, b.eval_radial(n, r).map_err(err)?);
                conv_fn = conv_fn.max((ka - kb).abs());
            }
        }
    }

    let pass = gram <= CONT_GRAM_TOL && residual <= RESIDUAL_TOL && trace_err <= TRACE_TOL && conv <= SELF_CONV_TOL
        && conv_fn <= SELF_CONV_FN_TOL;
    Ok(outcome(
        pass,
        format!(
            "(a) Gram {gram:.2e} over {} functions, (b) residual {residual:.2e}, (c) trace rel {trace_err:.2e}, (d) doubling: eigenvalues {conv:.2e}, separated radial functions {conv_fn:.2e}",
            set.len()
        ),
    ))
}

fn random_point_in_ball(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= 1.0 {
            return x;
        }
    }
}

fn sampling_bound() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    let mut max_ratio = 0.0f64;
    for _ in 0..20 {
        let l = rng.random_range(5..=8u32);
        let grid = GridSpec::new(l).map_err(err)?;
        let c = rng.random_range(0.4..=1.0) * PI * l as f64;
        let band = BandSpec::new(c).map_err(err)?;
        let spectrum = solve_band(band, SpectrumOptions::default()).map_err(err)?;
        let t = 10f64.powf(rng.random_range(-1.0..2.0));
        let set = truncation_set(&spectrum, t).map_err(err)?;
        if set.is_empty() {
            continue;
        }
        let terms: Vec<_> = (0..rng.random_range(1..=10))
            .map(|_| {
                let index = set.indices()[rng.random_range(0..set.len())];
                (index, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            })
            .collect();
        let f = BandlimitedCombination::new(&spectrum, terms).map_err(err)?;
        let volume = f.sample(grid, 4.0).map_err(err)?;
        let coeffs = expand(&volume, &set, &spectrum).map_err(err)?;
        let n_max = set.max_degree().unwrap_or(0) as usize;
        let rule = ball_rule(72, n_max + 40, 2 * n_max + 80).map_err(err)?;
        let measured = f.l2_distance(&coeffs, &rule).map_err(err)?;
        let xi = xi_norm(&XiConfig::new(band, grid, 1.0, 4.0).map_err(err)?).map_err(err)?;
        let bound =
            volume.outside_energy().sqrt() / (l as f64).powi(3) * (xi.norm_sq + xi.tail_bound).sqrt() + SAMPLING_SLACK;
        worst = worst.max(measured - bound);
        max_ratio = max_ratio.max(measured / bound);
    }
    Ok(outcome(worst <= 0.0, format!("20 random functions, max measured/bound {max_ratio:.3}")))
}

fn determinism() -> Result<Outcome, String> {
    let bin = env!("CARGO_BIN_EXE_gpswf");
    let root = tempfile::tempdir().map_err(err)?;
    let base = root.path();

    // inputs shared by every run
    let l = 6u32;
    let band = BandSpec::critical(l);
    let spectrum = solve_band(band, SpectrumOptions::default()).map_err(err)?;
    let set = truncation_set(&spectrum, 1.0).map_err(err)?;
    let terms = set.indices().iter().take(6).enumerate().map(|(i, &ix)| (ix, Complex64::new(1.0, i as f64))).collect();
    let f = BandlimitedCombination::new(&spectrum, terms).map_err(err)?;
    let volume = f.sample(GridSpec::new(l).map_err(err)?, 2.0).map_err(err)?;
    let vol_path = base.join("volume.bin");
    gpswf::io::write_volume(&vol_path, &volume, Some(band.c())).map_err(err)?;
    let c = band.c().to_string();
    let ls = l.to_string();
    let vol = vol_path.to_str().expect("utf-8 path").to_string();

    let mut pass = true;
    let mut compared = 0;
    for (run, threads) in [(0, "1"), (1, "3"), (2, "1")] {
        let dir = base.join(format!("run{run}"));
        std::fs::create_dir_all(&dir).map_err(err)?;
        // the last run reuses the first run's cache
        let cache = base.join(if run == 2 { "run0" } else { dir.file_name().and_then(|s| s.to_str()).expect("name") }).join("cache");
        let cache = cache.to_str().expect("utf-8").to_string();
        let out = |name: &str| dir.join(name).to_str().expect("utf-8").to_string();
        let coeffs = out("coefficients.csv");
        let commands: Vec<Vec<String>> = vec![
            vec!["basis".into(), "--c".into(), c.clone(), "--L".into(), ls.clone(), "--output".into(), out("manifest.json")],
            vec!["expand".into(), "--input".into(), vol.clone(), "--output".into(), coeffs.clone()],
            vec!["reconstruct".into(), "--input".into(), coeffs.clone(), "--c".into(), c.clone(), "--L".into(), ls.clone(), "--output".into(), out("reconstruction.bin")],
            vec!["bound".into(), "--input".into(), vol.clone(), "--epsilon".into(), "0.01".into(), "--output".into(), out("budget.json")],
            vec!["xi".into(), "--L".into(), "8,10,12".into(), "--output".into(), out("xi_scan.csv")],
            vec!["gram".into(), "--c".into(), (4.0 * PI).to_string(), "--L".into(), "4".into(), "--T".into(), "1,10".into(), "--output".into(), out("gram.csv")],
            vec!["table1".into(), "--L".into(), "6,8".into(), "--logT".into(), "-2,0,2".into(), "--output".into(), out("table1.csv")],
            vec!["demo-gaussian".into(), "--L".into(), "6".into(), "--sigma-list".into(), "0.003,0.01,0.03".into(), "--output".into(), out("gaussian_sweep.csv")],
        ];
        for mut args in commands {
            args.extend(["--parallelism".into(), threads.into(), "--cache-dir".into(), cache.clone()]);
            let status = Command::new(bin).args(&args).status().map_err(err)?;
            if !status.success() {
                return Ok(outcome(false, format!("`gpswf {}` exited with {status}", args.join(" "))));
            }
        }
    }
    let names = [
        "manifest.json",
        "coefficients.csv",
        "reconstruction.bin",
        "reconstruction.bin.json",
        "budget.json",
        "xi_scan.csv",
        "gram.csv",
        "table1.csv",
        "gaussian_sweep.csv",
    ];
    for name in names {
        let first = read(&base.join("run0").join(name))?;
        for run in 1..3 {
            let other = read(&base.join(format!("run{run}")).join(name))?;
            pass &= first == other;
            compared += 1;
        }
    }
    Ok(outcome(pass, format!("{compared} output pairs byte-identical across 1 and 3 threads and a warm cache")))
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}
