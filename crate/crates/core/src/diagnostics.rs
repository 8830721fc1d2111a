//! Numerical experiments: lattice sums of shifted besinc kernels, discrete
//! near-orthogonality of sampled wavefunctions, basis-size tables, and the
//! Gaussian error-versus-bound sweep.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::{ComplexNeumaier, Neumaier};
use crate::approx::{
    ball_l2_distance, ball_l2_distance_spherical, expand, gaussian_oracles, sampled_outside_energy, BudgetRegime,
    CoefficientSet, ErrorBudget, Gaussian, VolumeSamples,
};
use crate::basis::{
    concentration_ratio, count_grid_points_in_ball, eval_basis, harmonic, lattice_inside, truncation_set, BasisIndex, GridSpec,
    SampledBasis, TruncationSet,
};
use crate::error::{domain, Error, Result};
use crate::quadrature::{ball_rule, gauss_legendre, BallRule};
use crate::radial::{concentration_table, solve_band, BandSpec, RadialSpectrum, RadialValues, SpectrumOptions};
use crate::specfun::{besinc_radial, SphericalPoint};

/// Parameters of the lattice sum `xi_c(x)^2 = sum_{|k| >= L} h_c(x - k/L)^2`
/// restricted to `|x| <= r1` and `|k| / L <= lattice_radius`.
#[derive(Debug, Clone)]
pub struct XiConfig {
    band: BandSpec,
    grid: GridSpec,
    r1: f64,
    lattice_radius: f64,
    eval_rule: Option<BallRule>,
}

pub const DEFAULT_LATTICE_RADIUS: f64 = 4.0;

impl XiConfig {
    /// Requires `0 < r1 <= 1` and `lattice_radius - sqrt(3)/L > r1`, which keeps
    /// the tail certificate finite.
    pub fn new(band: BandSpec, grid: GridSpec, r1: f64, lattice_radius: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1 <= 1.0) {
            return domain(format!("inner radius must lie in (0, 1], got {r1}"));
        }
        if !(lattice_radius > 1.0) || !lattice_radius.is_finite() {
            return domain(format!("lattice radius must exceed 1, got {lattice_radius}"));
        }
        let inner = lattice_radius - 3f64.sqrt() / grid.l() as f64;
        if !(inner > r1) {
            return domain(format!(
                "lattice radius {lattice_radius} leaves no room for the tail bound at r1 = {r1}, L = {}",
                grid.l()
            ));
        }
        Ok(Self { band, grid, r1, lattice_radius, eval_rule: None })
    }

    /// Adds a rule on `r1 R` at whose points `xi_c` is summed directly.
    pub fn with_eval_rule(mut self, rule: BallRule) -> Result<Self> {
        if (rule.radius() - self.r1).abs() > 1e-15 {
            return domain(format!("evaluation rule has radius {}, expected {}", rule.radius(), self.r1));
        }
        self.eval_rule = Some(rule);
        Ok(self)
    }

    pub fn band(&self) -> BandSpec {
        self.band
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn lattice_radius(&self) -> f64 {
        self.lattice_radius
    }
}

/// Result of [`xi_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiReport {
    /// Largest `xi_c` over the evaluation rule points, when a rule was given.
    pub pointwise_max: Option<f64>,
    /// `||xi_c||^2` on `r1 R`, lattice truncated at `lattice_radius`.
    pub norm_sq: f64,
    /// Upper bound on the contribution of lattice points beyond `lattice_radius`.
    pub tail_bound: f64,
    pub lattice_points: usize,
}

/// Counts of lattice points by `|k|^2` for `L^2 <= |k|^2 <= (R L)^2`.
fn shell_counts(l: u32, lattice_radius: f64) -> Vec<(u64, u64)> {
    let l2 = (l as u64).pow(2);
    let kmax = (lattice_radius * l as f64).floor() as i64;
    let r2 = ((lattice_radius * l as f64).powi(2)).floor() as u64;
    let mut counts = vec![0u64; r2 as usize + 1];
    for x in 0..=kmax {
        for y in 0..=kmax {
            let xy = (x * x + y * y) as u64;
            if xy > r2 {
                break;
            }
            let mult_xy = if x == 0 { 1 } else { 2 } * if y == 0 { 1 } else { 2 };
            for z in 0..=kmax {
                let s = xy + (z * z) as u64;
                if s > r2 {
                    break;
                }
                counts[s as usize] += mult_xy * if z == 0 { 1 } else { 2 };
            }
        }
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|&(s, n)| s as u64 >= l2 && n > 0)
        .map(|(s, n)| (s as u64, n))
        .collect()
}

/// `int_{|x| <= r1} h_c(x - p)^2 dx` for `|p| = d > r1`, reduced to the
/// distance `s = |x - p|`: the sphere of radius `s` about `p` meets the ball
/// in area `pi s (r1^2 - (d - s)^2) / d`.
fn shell_integral(c: f64, r1: f64, d: f64, rule: &[(f64, f64)]) -> f64 {
    let (lo, hi) = (d - r1, d + r1);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = 0.0;
    for &(x, w) in rule {
        let s = mid + half * x;
        let h = besinc_radial(c, s);
        acc += w * h * h * PI * s * (r1 * r1 - (d - s) * (d - s)) / d;
    }
    acc * half
}

/// Bound on `sum_{|k|/L > R} h_c(x - k/L)^2` for `|x| <= r1`, integrated over `r1 R`.
///
/// With `|h_c(y)|^2 <= (1 + c|y|)^2 / (4 pi^4 |y|^6)` and `|x - k/L|` between
/// `|k|/L - r1` and `|k|/L + r1`, each term is at most `g(|k|/L)` with
/// `g(u) = (1 + c r1 + c u)^2 / (4 pi^4 (u - r1)^6)`, a decreasing function.
/// Comparing the sum with the integral over unit cells of side `1/L` centered
/// at the lattice points bounds it by `4 pi L^3 int_{R - sqrt3/L}^inf (u + delta)^2 g(u) du`
/// with `delta = sqrt3 / (2L)`.
pub fn xi_tail_bound(c: f64, l: u32, r1: f64, lattice_radius: f64) -> f64 {
    let lf = l as f64;
    let delta = 3f64.sqrt() / (2.0 * lf);
    let v0 = lattice_radius - 2.0 * delta - r1;
    let a = r1 + delta;
    let b = 1.0 + 2.0 * c * r1;
    // (v + a)(b + c v) = c v^2 + (b + c a) v + a b, squared
    let q = [a * b, b + c * a, c];
    let mut p = [0.0; 5];
    for i in 0..3 {
        for j in 0..3 {
            p[i + j] += q[i] * q[j];
        }
    }
    let integral: f64 = (0..5).map(|k| p[k] * v0.powi(k as i32 - 5) / (5 - k) as f64).sum();
    let per_point = 4.0 * PI * lf.powi(3) * integral / (4.0 * PI.powi(4));
    4.0 * PI / 3.0 * r1.powi(3) * per_point
}

/// `||xi_c||^2` on `r1 R`, the certified tail, and optionally the pointwise
/// maximum over the configured rule.
pub fn xi_norm(config: &XiConfig) -> Result<XiReport> {
    let c = config.band.c();
    let l = config.grid.l();
    let r1 = config.r1;
    let shells = shell_counts(l, config.lattice_radius);
    let order = (2.0 * c * r1).ceil() as usize + 40;
    let rule: Vec<(f64, f64)> = gauss_legendre(order, (-1.0, 1.0))?.iter().collect();
    let lf = l as f64;
    let terms: Vec<f64> = shells
        .par_iter()
        .map(|&(s, n)| n as f64 * shell_integral(c, r1, (s as f64).sqrt() / lf, &rule))
        .collect();
    let norm_sq = terms.into_iter().collect::<Neumaier>().value();
    let lattice_points = shells.iter().map(|&(_, n)| n as usize).sum();
    let tail_bound = xi_tail_bound(c, l, r1, config.lattice_radius);
    let pointwise_max = match &config.eval_rule {
        Some(rule) => {
            let lattice = outside_lattice(l, config.lattice_radius);
            let max = rule
                .points()
                .par_iter()
                .map(|x| xi_at(c, lf, &lattice, *x))
                .reduce(|| 0.0, f64::max);
            Some(max)
        }
        None => None,
    };
    Ok(XiReport { pointwise_max, norm_sq, tail_bound, lattice_points })
}

fn outside_lattice(l: u32, lattice_radius: f64) -> Vec<[i32; 3]> {
    let kmax = (lattice_radius * l as f64).floor() as i32;
    let r2 = (lattice_radius * l as f64).powi(2);
    let mut out = Vec::new();
    for x in -kmax..=kmax {
        for y in -kmax..=kmax {
            for z in -kmax..=kmax {
                let s = (x as i64).pow(2) + (y as i64).pow(2) + (z as i64).pow(2);
                if !lattice_inside(s, l) && s as f64 <= r2 {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

fn xi_at(c: f64, l: f64, lattice: &[[i32; 3]], x: [f64; 3]) -> f64 {
    let mut acc = Neumaier::default();
    for k in lattice {
        let d = [x[0] - k[0] as f64 / l, x[1] - k[1] as f64 / l, x[2] - k[2] as f64 / l];
        let h = besinc_radial(c, (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
        acc.add(h * h);
    }
    acc.value().sqrt()
}

/// `||xi_c||^2` on `r1 R` by summing the lattice directly at every point of
/// `rule`. Slow; serves as an independent check of [`xi_norm`].
pub fn xi_norm_sq_by_rule(config: &XiConfig, rule: &BallRule) -> f64 {
    let lattice = outside_lattice(config.grid.l(), config.lattice_radius);
    let c = config.band.c();
    let l = config.grid.l() as f64;
    let pts = rule.points();
    let w = rule.weights();
    let terms: Vec<f64> = pts.par_iter().zip(&w).map(|(x, w)| w * xi_at(c, l, &lattice, *x).powi(2)).collect();
    terms.into_iter().collect::<Neumaier>().value()
}

/// One row of the scaling experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiScanRow {
    #[serde(rename = "L")]
    pub l: u32,
    pub c: f64,
    /// `||xi_c||^2 / c^6` on `r1 R`.
    pub norm_sq_scaled: f64,
    /// Tail bound divided by `c^6`.
    pub tail_bound: f64,
}

/// Rows and least-squares fit of `log10(||xi_c||^2 / c^6)` against `log10 L`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSlope {
    pub rows: Vec<XiScanRow>,
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(x, y)` pairs, returned as `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Fit(format!("a line fit needs at least 3 points, got {}", xs.len().min(ys.len()))));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Runs [`xi_norm`] for each `L`, with `c = pi L` unless `c` is given.
pub fn xi_scan(l_list: &[u32], c: Option<f64>, r1: f64, lattice_radius: f64) -> Result<Vec<XiScanRow>> {
    let mut rows = Vec::with_capacity(l_list.len());
    for &l in l_list {
        let band = match c {
            Some(c) => BandSpec::new(c)?,
            None => BandSpec::critical(l),
        };
        let report = xi_norm(&XiConfig::new(band, GridSpec::new(l)?, r1, lattice_radius)?)?;
        let c6 = band.c().powi(6);
        rows.push(XiScanRow { l, c: band.c(), norm_sq_scaled: report.norm_sq / c6, tail_bound: report.tail_bound / c6 });
    }
    Ok(rows)
}

/// Fits `log10(||xi_c||^2 / c^6)` against `log10 L` over scan rows.
pub fn xi_fit(rows: Vec<XiScanRow>) -> Result<XiSlope> {
    let xs: Vec<f64> = rows.iter().map(|r| (r.l as f64).log10()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.norm_sq_scaled.log10()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys)?;
    Ok(XiSlope { rows, slope, intercept })
}

/// Scan with `c = pi L` followed by the line fit.
pub fn xi_slope_experiment(l_list: &[u32], r1: f64, lattice_radius: f64) -> Result<XiSlope> {
    if l_list.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 sampling rates, got {}", l_list.len())));
    }
    xi_fit(xi_scan(l_list, None, r1, lattice_radius)?)
}

/// Spectrum of the Gram matrix of normalized sampled wavefunctions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    #[serde(rename = "T")]
    pub t: f64,
    pub c: f64,
    #[serde(rename = "L")]
    pub l: u32,
    pub size: usize,
    pub eigenvalues: Vec<f64>,
    pub max_deviation: f64,
}

pub const DEFAULT_GRAM_CAP: usize = 5000;

/// Eigenvalues of `H_c = Psi^* Psi` where the columns of `Psi` are the
/// normalized samples `(c / 2 pi L)^{3/2} alpha psi(k / L)` of every index in
/// `Pi_T`.
///
/// The Gram matrix is formed from the real recombination of each `(m, -m)`
/// pair (see [`SampledBasis::real_normalized_vector`]), which is unitarily
/// equivalent and lets a real symmetric eigensolver be used.
pub fn gram_deviation(spectrum: &RadialSpectrum, grid: GridSpec, t: f64, cap: usize) -> Result<GramReport> {
    let set = truncation_set(spectrum, t)?;
    if set.is_empty() {
        return domain(format!("no wavefunction passes the threshold T = {t}"));
    }
    if set.len() > cap {
        return Err(Error::Size(format!(
            "Gram matrix would have {} columns, above the cap of {cap}; raise T or lower L",
            set.len()
        )));
    }
    let sampled = SampledBasis::new(&set, spectrum, grid)?;
    let rows = sampled.points().len();
    let columns: Vec<Vec<f64>> = (0..set.len()).into_par_iter().map(|i| sampled.real_normalized_vector(i)).collect();
    let mut psi = DMatrix::<f64>::zeros(rows, set.len());
    for (j, col) in columns.iter().enumerate() {
        psi.column_mut(j).copy_from_slice(col);
    }
    let gram = psi.tr_mul(&psi);
    let mut eigenvalues: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let max_deviation = eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max((v - 1.0).abs()));
    Ok(GramReport { t, c: spectrum.band().c(), l: grid.l(), size: set.len(), eigenvalues, max_deviation })
}

/// Same spectrum as [`gram_deviation`], computed from the complex sampled
/// vectors with a Hermitian eigensolver. Intended for small sets.
pub fn gram_deviation_complex(spectrum: &RadialSpectrum, grid: GridSpec, t: f64) -> Result<GramReport> {
    let set = truncation_set(spectrum, t)?;
    if set.is_empty() {
        return domain(format!("no wavefunction passes the threshold T = {t}"));
    }
    let sampled = SampledBasis::new(&set, spectrum, grid)?;
    let rows = sampled.points().len();
    let mut psi = DMatrix::<Complex64>::zeros(rows, set.len());
    for j in 0..set.len() {
        let v = sampled.normalized_vector(j);
        psi.column_mut(j).copy_from_slice(&v);
    }
    let gram = psi.ad_mul(&psi);
    let mut eigenvalues: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let max_deviation = eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max((v - 1.0).abs()));
    Ok(GramReport { t, c: spectrum.band().c(), l: grid.l(), size: set.len(), eigenvalues, max_deviation })
}

/// `max |<psi_i, psi_j>_R - delta_ij|` over a truncation set, with the inner
/// products taken by the product rule `rule`.
///
/// Each inner product factors into radial, polar and azimuthal sums, so the
/// cost is linear in the rule size per pair instead of in its cube.
pub fn continuous_gram_deviation(set: &TruncationSet, spectrum: &RadialSpectrum, rule: &BallRule) -> Result<f64> {
    if rule.radius() != 1.0 {
        return domain("ball rule must cover the unit ball");
    }
    if set.is_empty() {
        return Ok(0.0);
    }
    let indices = set.indices();
    let counts = set.radial_counts();
    let radial = rule.radial();
    let radial_values: Vec<RadialValues> =
        radial.nodes.par_iter().map(|&r| RadialValues::compute(spectrum, counts, r)).collect();
    let polar: Vec<f64> = rule.polar().nodes.iter().map(|x| x.acos()).collect();
    let factors: Vec<(Vec<f64>, Vec<f64>)> = indices
        .par_iter()
        .map(|i| {
            let k = radial_values.iter().map(|v| v.get(i.degree as usize, i.radial as usize)).collect();
            let p = polar
                .iter()
                .map(|&t| harmonic(i.degree, i.order, &SphericalPoint { r: 1.0, polar: t, azimuth: 0.0 }).re)
                .collect();
            (k, p)
        })
        .collect();
    let m_max = indices.iter().map(|i| i.order.unsigned_abs()).max().unwrap_or(0) as i32;
    let az = rule.azimuth_nodes();
    let waz = rule.azimuth_weight();
    // azimuthal[d + 2 m_max] = sum_a w e^{i d phi_a}
    let azimuthal: Vec<Complex64> = (-2 * m_max..=2 * m_max)
        .map(|d| az.iter().map(|&a| waz * Complex64::from_polar(1.0, d as f64 * a)).sum())
        .collect();
    let wr = &radial.weights;
    let wp = &rule.polar().weights;
    let rows: Vec<f64> = (0..indices.len())
        .into_par_iter()
        .map(|i| {
            let (ki, pi) = &factors[i];
            let mut worst = 0.0f64;
            for j in i..indices.len() {
                let (kj, pj) = &factors[j];
                let a = azimuthal[(indices[j].order - indices[i].order + 2 * m_max) as usize];
                let p: f64 = wp.iter().zip(pi).zip(pj).map(|((w, x), y)| w * x * y).sum();
                let r: f64 = wr.iter().zip(ki).zip(kj).map(|((w, x), y)| w * x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a * p * r - target).norm());
            }
            worst
        })
        .collect();
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// Both sides of `alpha psi(x) = int_R e^{ic<x,y>} psi(y) dy`, the right side
/// by the product rule `rule`.
pub fn eigen_equation_sides(
    index: BasisIndex,
    spectrum: &RadialSpectrum,
    x: [f64; 3],
    rule: &BallRule,
) -> Result<(Complex64, Complex64)> {
    if rule.radius() != 1.0 {
        return domain("ball rule must cover the unit ball");
    }
    let sys = spectrum
        .system(index.degree)
        .ok_or_else(|| Error::Coverage(format!("degree {} is not resolved", index.degree)))?;
    let lhs = sys.alpha(index.radial as usize) * eval_basis(index, sys, x)?;
    let c = spectrum.band().c();
    let radial: Vec<f64> =
        rule.radial().nodes.iter().map(|&r| sys.eval_radial(index.radial as usize, r)).collect::<Result<_>>()?;
    let polar: Vec<f64> = rule
        .polar()
        .nodes
        .iter()
        .map(|t| harmonic(index.degree, index.order, &SphericalPoint { r: 1.0, polar: t.acos(), azimuth: 0.0 }).re)
        .collect();
    let az = rule.azimuth_nodes();
    let waz = rule.azimuth_weight();
    let terms: Vec<Complex64> = rule
        .radial()
        .iter()
        .zip(&radial)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&((r, wr), k)| {
            let mut acc = ComplexNeumaier::default();
            for ((t, wp), p) in rule.polar().iter().zip(&polar) {
                let s = (1.0 - t * t).max(0.0).sqrt();
                for &a in &az {
                    let y = [r * s * a.cos(), r * s * a.sin(), r * t];
                    let phase = c * (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]) + index.order as f64 * a;
                    acc.add(Complex64::from_polar(wp * p, phase));
                }
            }
            acc.value() * (wr * waz * k)
        })
        .collect();
    let mut rhs = ComplexNeumaier::default();
    for t in terms {
        rhs.add(t);
    }
    Ok((lhs, rhs.value()))
}

/// Ratios `|Pi_T| / #{k : |k| < L}` with `c = pi L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    pub l_list: Vec<u32>,
    pub samples: Vec<usize>,
    pub log_t: Vec<i32>,
    /// `ratios[i][j]` for `log_t[i]` and `l_list[j]`.
    pub ratios: Vec<Vec<f64>>,
    pub counts: Vec<Vec<usize>>,
}

pub fn table1(l_list: &[u32], log_t: &[i32], options: SpectrumOptions) -> Result<Table1> {
    let mut counts = vec![vec![0usize; l_list.len()]; log_t.len()];
    let mut samples = Vec::with_capacity(l_list.len());
    let floor = concentration_ratio(options.cutoff);
    for (j, &l) in l_list.iter().enumerate() {
        let grid = GridSpec::new(l)?;
        samples.push(count_grid_points_in_ball(grid));
        let table = concentration_table(BandSpec::critical(l), options)?;
        for (i, &lt) in log_t.iter().enumerate() {
            let t = 10f64.powi(lt);
            if t <= floor {
                return Err(Error::Coverage(format!(
                    "T = 1e{lt} is below what the eigenvalue cutoff {} resolves",
                    options.cutoff
                )));
            }
            counts[i][j] = table
                .iter()
                .enumerate()
                .map(|(d, at)| (2 * d + 1) * at.iter().filter(|&&a| concentration_ratio(a) > t).count())
                .sum();
        }
    }
    let ratios = counts
        .iter()
        .map(|row| row.iter().zip(&samples).map(|(&n, &s)| n as f64 / s as f64).collect())
        .collect();
    Ok(Table1 { l_list: l_list.to_vec(), samples, log_t: log_t.to_vec(), ratios, counts })
}

/// One row of the Gaussian sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub measured_error: f64,
    pub bound_total: f64,
    pub eps: f64,
    pub delta_c: f64,
    pub eta_term: f64,
    #[serde(skip)]
    pub regime: Option<BudgetRegime>,
}

/// Settings for [`gaussian_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Outside-ball samples are summed over `[-extent, extent]^3`.
    pub outside_extent: f64,
    /// Multiplier on the ball-rule orders used to measure the error.
    pub rule_scale: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { outside_extent: 2.0, rule_scale: 1.0 }
    }
}

/// `n` values spaced evenly in `log10` between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// Ball rule fine enough for `|f - f^|^2` with a Gaussian of variance `sigma`
/// and an expansion of maximal degree `n_max`.
pub fn sweep_rule(sigma: f64, n_max: usize, scale: f64) -> Result<BallRule> {
    let width = 4.0 / sigma.sqrt();
    let radial = ((64f64.max(width) * scale).ceil()) as usize;
    let polar = (((n_max as f64 + 24.0).max(width) * scale).ceil()) as usize;
    ball_rule(radial, polar, 2 * polar)
}

/// For each `sigma`, expands the sampled Gaussian with `c = pi L` and `Pi_T`,
/// measures `||f - f^||_{L^2(R)}` and assembles the error budget.
pub fn gaussian_sweep(
    sigmas: &[f64],
    mu: [f64; 3],
    grid: GridSpec,
    t: f64,
    spectrum: &RadialSpectrum,
    options: SweepOptions,
) -> Result<Vec<SweepRow>> {
    let band = spectrum.band();
    if band.c() != PI * grid.l() as f64 {
        log::warn!("sweep uses c = {} rather than pi L", band.c());
    }
    let set = truncation_set(spectrum, t)?;
    let n_max = set.radial_counts().len().saturating_sub(1);
    let mut rows = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let g = Gaussian::new(sigma, mu)?;
        let volume = VolumeSamples::sample_real(grid, |x| g.value(x));
        let coeffs = expand(&volume, &set, spectrum)?;
        let rule = sweep_rule(sigma, n_max, options.rule_scale)?;
        let measured = ball_l2_distance(&coeffs, spectrum, &rule, |x| Complex64::new(g.value(x), 0.0))?;
        let oracles = gaussian_oracles(&g, band)?;
        let outside = sampled_outside_energy(grid, options.outside_extent, |x| Complex64::new(g.value(x), 0.0))?;
        let budget = ErrorBudget::assemble(band, grid, t, outside, oracles.epsilon, oracles.delta_c)?;
        log::info!("sigma = {sigma:.4e}: measured {measured:.4e}, bound {:.4e}", budget.total);
        rows.push(SweepRow {
            sigma,
            measured_error: measured,
            bound_total: budget.total,
            eps: oracles.epsilon,
            delta_c: oracles.delta_c,
            eta_term: budget.eta_term,
            regime: Some(budget.regime()),
        });
    }
    Ok(rows)
}

/// Finite combination `sum_i w_i psi_i` continued to all of space, which is
/// bandlimited to the ball of radius `c`.
#[derive(Debug, Clone)]
pub struct BandlimitedCombination<'a> {
    spectrum: &'a RadialSpectrum,
    terms: Vec<(BasisIndex, Complex64)>,
    counts: Vec<usize>,
}

impl<'a> BandlimitedCombination<'a> {
    pub fn new(spectrum: &'a RadialSpectrum, terms: Vec<(BasisIndex, Complex64)>) -> Result<Self> {
        let mut counts = Vec::new();
        for (index, _) in &terms {
            let held = spectrum.system(index.degree).map_or(0, |s| s.len());
            if index.radial as usize >= held {
                return Err(Error::Coverage(format!("index {index} is not resolved by the spectrum")));
            }
            let d = index.degree as usize;
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] = counts[d].max(index.radial as usize + 1);
        }
        Ok(Self { spectrum, terms, counts })
    }

    pub fn terms(&self) -> &[(BasisIndex, Complex64)] {
        &self.terms
    }

    /// `K_{n,N}(r)` for every term, continued beyond the unit ball.
    pub fn radial_values(&self, r: f64) -> Vec<f64> {
        let values = RadialValues::compute(self.spectrum, &self.counts, r);
        self.terms.iter().map(|(i, _)| values.get(i.degree as usize, i.radial as usize)).collect()
    }

    /// Value at `p` given `radial = self.radial_values(p.r)`.
    pub fn value_with(&self, p: &SphericalPoint, radial: &[f64]) -> Complex64 {
        self.terms.iter().zip(radial).map(|((i, w), k)| w * harmonic(i.degree, i.order, p) * *k).sum()
    }

    pub fn value(&self, x: [f64; 3]) -> Complex64 {
        let p = SphericalPoint::from_cartesian(x);
        self.value_with(&p, &self.radial_values(p.r))
    }

    /// Samples on the cube, recording the outside-ball energy over `[-extent, extent]^3`.
    pub fn sample(&self, grid: GridSpec, extent: f64) -> Result<VolumeSamples> {
        if !(extent >= 1.0) || !extent.is_finite() {
            return domain(format!("lattice extent must be >= 1, got {extent}"));
        }
        let l = grid.l() as i64;
        let kmax = (extent * l as f64).floor() as i64;
        let max_sq = 3 * kmax * kmax;
        // the radial factor depends on |k|^2 alone
        let radial: Vec<Option<Vec<f64>>> = (0..=max_sq)
            .into_par_iter()
            .map(|s| is_sum_of_three_squares(s).then(|| self.radial_values((s as f64).sqrt() / l as f64)))
            .collect();
        let at = |k: [i64; 3]| {
            let s = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let x = [k[0] as f64 / l as f64, k[1] as f64 / l as f64, k[2] as f64 / l as f64];
            let p = SphericalPoint::from_cartesian(x);
            self.value_with(&p, radial[s as usize].as_ref().expect("attained norm"))
        };
        let values: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = grid.lattice_point(i);
                at([k[0] as i64, k[1] as i64, k[2] as i64])
            })
            .collect();
        let partial: Vec<f64> = (-kmax..=kmax)
            .into_par_iter()
            .map(|x| {
                let mut acc = Neumaier::default();
                for y in -kmax..=kmax {
                    for z in -kmax..=kmax {
                        if !lattice_inside(x * x + y * y + z * z, grid.l()) {
                            acc.add(at([x, y, z]).norm_sqr());
                        }
                    }
                }
                acc.value()
            })
            .collect();
        let outside = partial.into_iter().collect::<Neumaier>().value();
        VolumeSamples::new(grid, values, false)?.with_outside_energy(outside)
    }

    /// `||self - f^||_{L^2(R)}` on `rule`, reusing radial values per rule radius.
    pub fn l2_distance(&self, coeffs: &CoefficientSet, rule: &BallRule) -> Result<f64> {
        let table: HashMap<u64, Vec<f64>> =
            rule.radial().nodes.par_iter().map(|&r| (r.to_bits(), self.radial_values(r))).collect();
        ball_l2_distance_spherical(coeffs, self.spectrum, rule, |p, _| {
            self.value_with(p, &table[&p.r.to_bits()])
        })
    }
}

/// Whether `n` is a sum of three squares: `n` is not of the form `4^a (8b + 7)`.
fn is_sum_of_three_squares(mut n: i64) -> bool {
    if n == 0 {
        return true;
    }
    while n % 4 == 0 {
        n /= 4;
    }
    n % 8 != 7
}

/// Convenience wrapper solving the spectrum for `c = pi L`.
pub fn critical_spectrum(l: u32) -> Result<RadialSpectrum> {
    solve_band(BandSpec::critical(l), SpectrumOptions::default())
}
