//! Expansion coefficients computed from grid samples, reconstruction inside
//! the unit ball, and the error budget of the sampled approximation.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::{ComplexNeumaier, Neumaier};
use crate::basis::{grid_points_in_ball, lattice_inside, BasisIndex, GridSpec, TruncationSet};
use crate::error::{domain, Error, Result};
use crate::quadrature::{composite_gauss_legendre, BallRule};
use crate::radial::{BandSpec, RadialSpectrum, RadialValues};
use crate::specfun::{legendre_order_column, SphericalPoint};

/// Samples `f(k / L)` on the cube `k in [-L, L]^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSamples {
    grid: GridSpec,
    values: Vec<Complex64>,
    real: bool,
    outside_energy: Option<f64>,
}

impl VolumeSamples {
    /// Wraps samples linearized as in [`GridSpec::linear_index`]. NaN entries
    /// mark missing samples.
    pub fn new(grid: GridSpec, values: Vec<Complex64>, real: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "expected {} samples for L = {}, got {}",
                grid.len(),
                grid.l(),
                values.len()
            )));
        }
        if real && values.iter().any(|v| v.im != 0.0) {
            return Err(Error::Input("volume flagged real has nonzero imaginary parts".into()));
        }
        Ok(Self { grid, values, real, outside_energy: None })
    }

    pub fn from_real(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(), true)
    }

    pub fn zeros(grid: GridSpec, real: bool) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()], real, outside_energy: None }
    }

    pub fn sample(grid: GridSpec, f: impl Fn([f64; 3]) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.position(grid.lattice_point(i)))).collect();
        Self { grid, values, real: false, outside_energy: None }
    }

    pub fn sample_real(grid: GridSpec, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| Complex64::new(f(grid.position(grid.lattice_point(i))), 0.0))
            .collect();
        Self { grid, values, real: true, outside_energy: None }
    }

    /// Records `sum_{k/L outside R} |f(k/L)|^2` known from beyond the cube.
    pub fn with_outside_energy(mut self, energy: f64) -> Result<Self> {
        if !(energy >= 0.0) || !energy.is_finite() {
            return domain(format!("outside energy must be finite and >= 0, got {energy}"));
        }
        self.outside_energy = Some(energy);
        Ok(self)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn value(&self, k: [i32; 3]) -> Complex64 {
        self.values[self.grid.linear_index(k)]
    }

    pub fn stored_outside_energy(&self) -> Option<f64> {
        self.outside_energy
    }

    /// `sum |f(k/L)|^2` over cube points outside the ball.
    pub fn cube_outside_energy(&self) -> f64 {
        let mut acc = Neumaier::default();
        for (i, v) in self.values.iter().enumerate() {
            let k = self.grid.lattice_point(i);
            let norm_sq = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as i64;
            if !lattice_inside(norm_sq, self.grid.l()) && !v.re.is_nan() {
                acc.add(v.norm_sqr());
            }
        }
        acc.value()
    }

    /// The stored outside energy, or the cube-only sum when none is stored.
    pub fn outside_energy(&self) -> f64 {
        self.outside_energy.unwrap_or_else(|| self.cube_outside_energy())
    }
}

/// `sum |f(k/L)|^2` over lattice points with `|k| >= L` and `|k_i| <= extent * L`.
pub fn sampled_outside_energy(grid: GridSpec, extent: f64, f: impl Fn([f64; 3]) -> Complex64 + Sync) -> Result<f64> {
    if !(extent >= 1.0) || !extent.is_finite() {
        return domain(format!("lattice extent must be >= 1, got {extent}"));
    }
    let l = grid.l() as i64;
    let kmax = (extent * l as f64).floor() as i64;
    let partial: Vec<f64> = (-kmax..=kmax)
        .into_par_iter()
        .map(|x| {
            let mut acc = Neumaier::default();
            for y in -kmax..=kmax {
                for z in -kmax..=kmax {
                    if !lattice_inside(x * x + y * y + z * z, grid.l()) {
                        let p = [x as f64 / l as f64, y as f64 / l as f64, z as f64 / l as f64];
                        acc.add(f(p).norm_sqr());
                    }
                }
            }
            acc.value()
        })
        .collect();
    Ok(partial.into_iter().collect::<Neumaier>().value())
}

/// Coefficients `b^_{N,m,n}` and `a^_{N,m,n} = alpha_{N,n} b^_{N,m,n}` in the
/// order of a truncation set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    band: BandSpec,
    l: u32,
    t: f64,
    real_input: bool,
    indices: Vec<BasisIndex>,
    alpha_tilde: Vec<f64>,
    b_hat: Vec<Complex64>,
    a_hat: Vec<Complex64>,
}

impl CoefficientSet {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        band: BandSpec,
        l: u32,
        t: f64,
        real_input: bool,
        indices: Vec<BasisIndex>,
        alpha_tilde: Vec<f64>,
        b_hat: Vec<Complex64>,
        a_hat: Vec<Complex64>,
    ) -> Result<Self> {
        let n = indices.len();
        if alpha_tilde.len() != n || b_hat.len() != n || a_hat.len() != n {
            return Err(Error::Input("coefficient columns have different lengths".into()));
        }
        Ok(Self { band, l, t, real_input, indices, alpha_tilde, b_hat, a_hat })
    }

    /// Coefficients with `a^ = alpha b^` for the indices of `set`.
    pub fn from_b_hat(set: &TruncationSet, l: u32, real_input: bool, b_hat: Vec<Complex64>) -> Result<Self> {
        if b_hat.len() != set.len() {
            return Err(Error::Input(format!("expected {} coefficients, got {}", set.len(), b_hat.len())));
        }
        let mut alpha_tilde = Vec::with_capacity(set.len());
        let mut a_hat = Vec::with_capacity(set.len());
        for (index, b) in set.indices().iter().zip(&b_hat) {
            let entry = set.entry(index.degree, index.radial).expect("index belongs to set");
            alpha_tilde.push(entry.alpha_tilde);
            a_hat.push(entry.alpha * b);
        }
        Ok(Self {
            band: set.band(),
            l,
            t: set.t(),
            real_input,
            indices: set.indices().to_vec(),
            alpha_tilde,
            b_hat,
            a_hat,
        })
    }

    pub fn band(&self) -> BandSpec {
        self.band
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn real_input(&self) -> bool {
        self.real_input
    }

    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    pub fn alpha_tilde(&self) -> &[f64] {
        &self.alpha_tilde
    }

    pub fn b_hat(&self) -> &[Complex64] {
        &self.b_hat
    }

    pub fn a_hat(&self) -> &[Complex64] {
        &self.a_hat
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `a^` for `index`, if present.
    pub fn a_hat_of(&self, index: BasisIndex) -> Option<Complex64> {
        self.indices.iter().position(|&i| i == index).map(|p| self.a_hat[p])
    }

    /// `sum |a^|^2`, equal to `||f^||^2` on the ball.
    pub fn energy(&self) -> f64 {
        self.a_hat.iter().map(|a| a.norm_sqr()).collect::<Neumaier>().value()
    }
}

/// Dense `(N, m, n)` layout of the reconstruction coefficients.
pub(crate) struct CoefficientTable {
    counts: Vec<usize>,
    base: Vec<usize>,
    data: Vec<Complex64>,
}

impl CoefficientTable {
    pub(crate) fn new(coeffs: &CoefficientSet, spectrum: &RadialSpectrum) -> Result<Self> {
        if coeffs.band() != spectrum.band() {
            return Err(Error::Input("coefficients and spectrum belong to different bands".into()));
        }
        let mut counts: Vec<usize> = Vec::new();
        for index in coeffs.indices() {
            let d = index.degree as usize;
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] = counts[d].max(index.radial as usize + 1);
        }
        for (d, &k) in counts.iter().enumerate() {
            let held = spectrum.systems().get(d).map_or(0, |s| s.len());
            if k > held {
                return Err(Error::Coverage(format!(
                    "coefficients need {k} radial functions of degree {d}, spectrum holds {held}"
                )));
            }
        }
        let mut base = Vec::with_capacity(counts.len());
        let mut total = 0;
        for (d, &k) in counts.iter().enumerate() {
            base.push(total);
            total += (2 * d + 1) * k;
        }
        let mut table = Self { counts, base, data: vec![Complex64::new(0.0, 0.0); total] };
        for (index, a) in coeffs.indices().iter().zip(coeffs.a_hat()) {
            let slot = table.slot(index.degree as usize, index.order, index.radial as usize);
            table.data[slot] = *a;
        }
        Ok(table)
    }

    #[inline]
    fn slot(&self, degree: usize, order: i32, n: usize) -> usize {
        self.base[degree] + (order + degree as i32) as usize * self.counts[degree] + n
    }

    pub(crate) fn counts(&self) -> &[usize] {
        &self.counts
    }

    fn max_degree(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    /// `C_{N,m}(r) = sum_n a^_{N,m,n} K_{n,N}(r)` for every `(N, m)`, laid out
    /// as `out[N^2 + N + m]`.
    fn radial_sums(&self, radial: &RadialValues, out: &mut [Complex64]) {
        for (d, &k) in self.counts.iter().enumerate() {
            let dd = d as i32;
            for m in -dd..=dd {
                let slot = (d * d) as i32 + dd + m;
                let mut acc = Complex64::new(0.0, 0.0);
                if k > 0 {
                    let start = self.slot(d, m, 0);
                    let ks = radial.degree_slice(d);
                    for n in 0..k {
                        acc += self.data[start + n] * ks[n];
                    }
                }
                out[slot as usize] = acc;
            }
        }
    }

    /// Angular sums `G_m = sum_N C_{N,m} P~_N^m(x)` for `m = -N_max..=N_max`,
    /// stored at `g[m + N_max]`.
    fn angular_sums(&self, sums: &[Complex64], x: f64, column: &mut Vec<f64>, g: &mut [Complex64]) {
        let n_max = self.max_degree();
        for m in 0..=n_max {
            column.resize(n_max - m + 1, 0.0);
            legendre_order_column(m, x, column);
            let mut plus = Complex64::new(0.0, 0.0);
            let mut minus = Complex64::new(0.0, 0.0);
            for d in m..=n_max {
                let p = column[d - m];
                let row = d * d + d;
                plus += sums[row + m] * p;
                if m > 0 {
                    minus += sums[row - m] * p;
                }
            }
            g[n_max + m] = plus;
            if m > 0 {
                g[n_max - m] = if m % 2 == 1 { -minus } else { minus };
            }
        }
    }

    fn sums_len(&self) -> usize {
        self.counts.len() * self.counts.len()
    }
}

fn combine_orders(g: &[Complex64], n_max: usize, phases: &[Complex64]) -> Complex64 {
    let mut total = g[n_max];
    for m in 1..=n_max {
        total += g[n_max + m] * phases[m] + g[n_max - m] * phases[m].conj();
    }
    total
}

fn phases(n_max: usize, azimuth: f64) -> Vec<Complex64> {
    (0..=n_max).map(|m| Complex64::from_polar(1.0, m as f64 * azimuth)).collect()
}

/// Computes `b^_{N,m,n} = c^3/(2 pi L)^3 sum_{|k| < L} f(k/L) conj(alpha psi(k/L))`
/// for every index of `set`.
pub fn expand(volume: &VolumeSamples, set: &TruncationSet, spectrum: &RadialSpectrum) -> Result<CoefficientSet> {
    let grid = volume.grid();
    let c = set.band().c();
    let limit = PI * grid.l() as f64;
    if c > limit {
        return Err(Error::Constraint(format!(
            "c <= pi L is required for sample-based expansion, got c = {c} > pi L = {limit}"
        )));
    }
    if spectrum.band() != set.band() {
        return Err(Error::Input("truncation set and spectrum belong to different bands".into()));
    }
    let points = grid_points_in_ball(grid);
    let mut samples = Vec::with_capacity(points.len());
    for k in &points {
        let v = volume.value(*k);
        if v.re.is_nan() || v.im.is_nan() {
            return Err(Error::Input(format!("sample at k = {k:?} inside the ball is missing")));
        }
        samples.push(v);
    }
    let counts = set.radial_counts();
    if set.is_empty() {
        return CoefficientSet::from_b_hat(set, grid.l(), volume.is_real(), Vec::new());
    }
    let n_max = counts.len() - 1;

    // radial values per shell |k|^2
    let l = grid.l() as f64;
    let mut shell_index: HashMap<i32, usize> = HashMap::new();
    let mut radii = Vec::new();
    let shell_of: Vec<usize> = points
        .iter()
        .map(|k| {
            let s = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            *shell_index.entry(s).or_insert_with(|| {
                radii.push((s as f64).sqrt() / l);
                radii.len() - 1
            })
        })
        .collect();
    let shells: Vec<RadialValues> =
        radii.par_iter().map(|&r| RadialValues::compute(spectrum, counts, r)).collect();
    let spherical: Vec<SphericalPoint> =
        points.iter().map(|&k| SphericalPoint::from_cartesian(grid.position(k))).collect();

    // per-order accumulation keeps every coefficient summed in lattice order
    let real = volume.is_real();
    let per_order: Vec<(Vec<ComplexNeumaier>, Vec<ComplexNeumaier>)> = (0..=n_max)
        .into_par_iter()
        .map(|m| {
            let offsets: Vec<usize> = (m..=n_max)
                .scan(0, |acc, d| {
                    let o = *acc;
                    *acc += counts[d];
                    Some(o)
                })
                .collect();
            let width: usize = counts[m..].iter().sum();
            let mut plus = vec![ComplexNeumaier::default(); width];
            let mut minus = vec![ComplexNeumaier::default(); if m > 0 && !real { width } else { 0 }];
            let mut column = vec![0.0; n_max - m + 1];
            for ((p, &s), f) in spherical.iter().zip(&shell_of).zip(&samples) {
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                legendre_order_column(m, p.polar.cos(), &mut column);
                let e = Complex64::from_polar(1.0, -(m as f64) * p.azimuth);
                let fe = f * e;
                let fe_minus = f * e.conj();
                for d in m..=n_max {
                    let k = counts[d];
                    if k == 0 {
                        continue;
                    }
                    let kp = shells[s].degree_slice(d);
                    let pl = column[d - m];
                    let o = offsets[d - m];
                    for n in 0..k {
                        let w = kp[n] * pl;
                        plus[o + n].add(fe * w);
                        if !minus.is_empty() {
                            minus[o + n].add(fe_minus * w);
                        }
                    }
                }
            }
            (plus, minus)
        })
        .collect();

    let scale = (c / (2.0 * PI * l)).powi(3);
    let mut b_hat = Vec::with_capacity(set.len());
    for index in set.indices() {
        let m = index.order.unsigned_abs() as usize;
        let d = index.degree as usize;
        let o = (m..d).map(|j| counts[j]).sum::<usize>() + index.radial as usize;
        let (plus, minus) = &per_order[m];
        let sum = if index.order >= 0 {
            plus[o].value()
        } else {
            let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
            if real {
                plus[o].value().conj() * sign
            } else {
                minus[o].value() * sign
            }
        };
        let alpha = set.alpha(*index).expect("index belongs to set");
        b_hat.push(alpha.conj() * sum * scale);
    }
    CoefficientSet::from_b_hat(set, grid.l(), real, b_hat)
}

/// Values of the truncated expansion at a list of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: Vec<Complex64>,
    pub real_input: bool,
}

impl Reconstruction {
    /// Largest `|Im f^|`, which should vanish up to rounding for real input.
    pub fn imaginary_residue(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.im.abs()))
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

/// `f^(x) = sum a^_{N,m,n} psi_{N,m,n}(x)` for points in the closed unit ball.
pub fn reconstruct(coeffs: &CoefficientSet, spectrum: &RadialSpectrum, points: &[[f64; 3]]) -> Result<Reconstruction> {
    let spherical: Vec<SphericalPoint> = points.iter().map(|&p| SphericalPoint::from_cartesian(p)).collect();
    if let Some(p) = spherical.iter().find(|p| !(p.r <= 1.0)) {
        return domain(format!("reconstruction point at radius {} lies outside the unit ball", p.r));
    }
    let table = CoefficientTable::new(coeffs, spectrum)?;
    let values = spherical.par_iter().map(|p| eval_table(&table, spectrum, p)).collect();
    Ok(Reconstruction { values, real_input: coeffs.real_input() })
}

fn eval_table(table: &CoefficientTable, spectrum: &RadialSpectrum, p: &SphericalPoint) -> Complex64 {
    if table.counts().is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let n_max = table.max_degree();
    let radial = RadialValues::compute(spectrum, table.counts(), p.r);
    let mut sums = vec![Complex64::new(0.0, 0.0); table.sums_len()];
    table.radial_sums(&radial, &mut sums);
    let mut g = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
    let mut column = Vec::new();
    table.angular_sums(&sums, p.polar.cos(), &mut column, &mut g);
    combine_orders(&g, n_max, &phases(n_max, p.azimuth))
}

/// `||f - f^||_{L^2(R)}` evaluated with a product ball rule, exploiting the
/// separable structure of the expansion.
pub fn ball_l2_distance(
    coeffs: &CoefficientSet,
    spectrum: &RadialSpectrum,
    rule: &BallRule,
    f: impl Fn([f64; 3]) -> Complex64 + Sync,
) -> Result<f64> {
    ball_l2_distance_spherical(coeffs, spectrum, rule, |_, x| f(x))
}

/// Same as [`ball_l2_distance`], with `f` also given the point in spherical
/// coordinates whose radius is exactly a radial node of `rule`.
pub fn ball_l2_distance_spherical(
    coeffs: &CoefficientSet,
    spectrum: &RadialSpectrum,
    rule: &BallRule,
    f: impl Fn(&SphericalPoint, [f64; 3]) -> Complex64 + Sync,
) -> Result<f64> {
    if rule.radius() != 1.0 {
        return domain("ball rule must cover the unit ball");
    }
    let table = CoefficientTable::new(coeffs, spectrum)?;
    let n_max = table.max_degree();
    let empty = table.counts().is_empty();
    let azimuths = rule.azimuth_nodes();
    let az_phases: Vec<Vec<Complex64>> = azimuths.iter().map(|&a| phases(n_max, a)).collect();
    let waz = rule.azimuth_weight();
    let shells: Vec<f64> = rule
        .radial()
        .nodes
        .par_iter()
        .zip(&rule.radial().weights)
        .map(|(&r, &wr)| {
            let mut sums = vec![Complex64::new(0.0, 0.0); table.sums_len()];
            if !empty {
                let radial = RadialValues::compute(spectrum, table.counts(), r);
                table.radial_sums(&radial, &mut sums);
            }
            let mut g = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
            let mut column = Vec::new();
            let mut acc = Neumaier::default();
            for (x, wp) in rule.polar().iter() {
                if !empty {
                    table.angular_sums(&sums, x, &mut column, &mut g);
                }
                let s = (1.0 - x * x).max(0.0).sqrt();
                let polar = x.acos();
                for (a, ph) in azimuths.iter().zip(&az_phases) {
                    let approx = if empty { Complex64::new(0.0, 0.0) } else { combine_orders(&g, n_max, ph) };
                    let point = [r * s * a.cos(), r * s * a.sin(), r * x];
                    let sph = SphericalPoint { r, polar, azimuth: *a };
                    acc.add(wp * (f(&sph, point) - approx).norm_sqr());
                }
            }
            wr * waz * acc.value()
        })
        .collect();
    Ok(shells.into_iter().collect::<Neumaier>().value().sqrt())
}

/// `(4 pi / 3) c^{3/2} L^{3/2}`, the bound on `||xi_c||_{L^2(R)}`.
pub fn eta_bound(band: BandSpec, grid: GridSpec) -> f64 {
    4.0 * PI / 3.0 * band.c().powf(1.5) * (grid.l() as f64).powf(1.5)
}

/// Which group of budget terms is largest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRegime {
    /// `delta_c T + 4 delta_c`: energy outside the frequency ball.
    Band,
    /// `eps T + (eta / L^3) sqrt(outside samples)`: energy outside the unit ball.
    Space,
}

/// Terms of `(eps + delta_c) T + (eta / L^3) sqrt(E_out) + 4 delta_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eta_bound: f64,
    pub outside_sample_energy: f64,
    pub epsilon: f64,
    pub delta_c: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub eta_term: f64,
    pub total: f64,
}

impl ErrorBudget {
    pub fn assemble(
        band: BandSpec,
        grid: GridSpec,
        t: f64,
        outside_sample_energy: f64,
        epsilon: f64,
        delta_c: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("T", t),
            ("outside sample energy", outside_sample_energy),
            ("epsilon", epsilon),
            ("delta_c", delta_c),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return domain(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        let eta = eta_bound(band, grid);
        let eta_term = eta / (grid.l() as f64).powi(3) * outside_sample_energy.sqrt();
        let total = (epsilon + delta_c) * t + eta_term + 4.0 * delta_c;
        Ok(Self { eta_bound: eta, outside_sample_energy, epsilon, delta_c, t, eta_term, total })
    }

    pub fn band_part(&self) -> f64 {
        self.delta_c * self.t + 4.0 * self.delta_c
    }

    pub fn space_part(&self) -> f64 {
        self.epsilon * self.t + self.eta_term
    }

    pub fn regime(&self) -> BudgetRegime {
        if self.band_part() >= self.space_part() {
            BudgetRegime::Band
        } else {
            BudgetRegime::Space
        }
    }
}

/// Budget for `volume`, using its stored outside energy or the cube-only sum.
pub fn error_budget(volume: &VolumeSamples, band: BandSpec, t: f64, epsilon: f64, delta_c: f64) -> Result<ErrorBudget> {
    ErrorBudget::assemble(band, volume.grid(), t, volume.outside_energy(), epsilon, delta_c)
}

/// `f(x) = (2 pi sigma)^{-3/2} exp(-|x - mu|^2 / (2 sigma))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    sigma: f64,
    mu: [f64; 3],
}

impl Gaussian {
    pub fn new(sigma: f64, mu: [f64; 3]) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return domain(format!("sigma must be positive, got {sigma}"));
        }
        let d = norm(mu);
        if !(d < 1.0) {
            return domain(format!("center must lie inside the unit ball, |mu| = {d}"));
        }
        Ok(Self { sigma, mu })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu(&self) -> [f64; 3] {
        self.mu
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let d2 = (0..3).map(|i| (x[i] - self.mu[i]).powi(2)).sum::<f64>();
        (2.0 * PI * self.sigma).powf(-1.5) * (-d2 / (2.0 * self.sigma)).exp()
    }

    /// `F[f](w) = exp(-i <w, mu>) exp(-sigma |w|^2 / 2)`.
    pub fn fourier(&self, w: [f64; 3]) -> Complex64 {
        let phase = -(0..3).map(|i| w[i] * self.mu[i]).sum::<f64>();
        Complex64::from_polar((-self.sigma * norm(w).powi(2) / 2.0).exp(), phase)
    }
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `eps = ||f chi_{R^c}||` and `delta_c = (2 pi)^{-3/2} ||F[f]||_{L^2(Omega^c)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianOracles {
    pub epsilon: f64,
    pub delta_c: f64,
}

const TAIL_EXPONENT: f64 = 750.0;
const PANEL_ORDER: usize = 20;

/// Semi-analytic `eps` and `delta_c` for a Gaussian: each reduces to a
/// one-dimensional radial integral evaluated by composite Gauss-Legendre.
pub fn gaussian_oracles(gaussian: &Gaussian, band: BandSpec) -> Result<GaussianOracles> {
    let sigma = gaussian.sigma();
    let c = band.c();
    let sq = sigma.sqrt();

    // |F|^2 = exp(-sigma w^2); 4 pi int_c^inf w^2 exp(-sigma w^2) dw
    let w_max = (c * c + TAIL_EXPONENT / sigma).sqrt();
    let panels = (((w_max - c) * sq * 2.0).ceil() as usize).max(1);
    let rule = composite_gauss_legendre(panels, PANEL_ORDER, (c, w_max))?;
    let spectral = 4.0 * PI * rule.integrate(|w| w * w * (-sigma * w * w).exp());
    let delta_c = spectral.sqrt() / (2.0 * PI).powf(1.5);

    // integral of exp(-|x - mu|^2 / sigma) over the sphere of radius r is
    // (pi r sigma / d) (exp(-(r-d)^2/sigma) - exp(-(r+d)^2/sigma))
    let d = norm(gaussian.mu());
    let r_max = 1.0f64.max(d) + (TAIL_EXPONENT * sigma).sqrt();
    let panels = (((r_max - 1.0) / (0.5 * sq)).ceil() as usize).max(1);
    let rule = composite_gauss_legendre(panels, PANEL_ORDER, (1.0, r_max))?;
    let shell = |r: f64| {
        if d * r / sigma < 1e-8 {
            4.0 * PI * r * r * (-(r * r + d * d) / sigma).exp()
        } else {
            -PI * r * sigma / d * (-(r - d).powi(2) / sigma).exp() * (-4.0 * r * d / sigma).exp_m1()
        }
    };
    let outside = rule.integrate(shell) / (2.0 * PI * sigma).powi(3);
    Ok(GaussianOracles { epsilon: outside.sqrt(), delta_c })
}
