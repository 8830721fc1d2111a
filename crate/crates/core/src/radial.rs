//! Radial eigenproblem for a fixed angular degree, solved by a Nyström
//! discretization on a Gauss-Legendre rule over `[0, 1]`.
//!
//! With `H_N(z) = i^N 4 pi j_N(z)` the radial equation reads
//! `i^N beta K(r) = int_0^1 K(rho) rho^2 i^N 4 pi j_N(c r rho) d rho`. The
//! phase `i^N` cancels, and substituting `phi_j = sqrt(w_j) rho_j K(rho_j)`
//! turns the discretized operator into the real symmetric matrix
//! `A_ij = 4 pi sqrt(w_i) r_i j_N(c r_i r_j) r_j sqrt(w_j)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{gauss_legendre, Rule1D};
use crate::specfun::{sph_jn, spherical_bessel_array};

pub mod cache;
pub use cache::RadialCache;

/// Bandlimit `c`: the frequency support is the ball of radius `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    c: f64,
}

impl BandSpec {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return domain(format!("bandlimit must be positive and finite, got {c}"));
        }
        Ok(Self { c })
    }

    /// The critical bandlimit `c = pi L` for sampling rate `L`.
    pub fn critical(l: u32) -> Self {
        Self { c: PI * l as f64 }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `(c / 2pi)^3`, the factor mapping `|alpha|^2` to the concentration.
    pub fn concentration_scale(&self) -> f64 {
        (self.c / (2.0 * PI)).powi(3)
    }
}

/// Smallest admissible Nyström rule size for degree `degree`.
pub fn min_quadrature_size(c: f64, degree: u32) -> usize {
    ((2.0 * c / PI + 20.0).ceil() as usize).max(degree as usize + 20)
}

/// Rule size used when none is given explicitly.
pub fn default_quadrature_size(c: f64, degree: u32) -> usize {
    ((2.0 * c / PI).ceil() as usize).max(degree as usize) + 32
}

const RESOLUTION_STEP: usize = 8;
const RESOLUTION_TOL: f64 = 1e-9;

fn kernel_matrix(c: f64, degree: u32, rule: &Rule1D) -> DMatrix<f64> {
    let q = rule.len();
    let scaled: Vec<f64> = rule.iter().map(|(r, w)| w.sqrt() * r).collect();
    let n = degree as usize;
    let mut a = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        for j in 0..=i {
            let v = 4.0 * PI * scaled[i] * scaled[j] * sph_jn(n, c * rule.nodes[i] * rule.nodes[j]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn radial_rule(q: usize) -> Rule1D {
    gauss_legendre(q, (0.0, 1.0)).expect("quadrature size is positive")
}

fn top_magnitude(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc.max(v.abs()))
}

fn check_resolution(band: BandSpec, degree: u32, q: usize, top: f64) -> Result<()> {
    let finer = kernel_matrix(band.c, degree, &radial_rule(q + RESOLUTION_STEP));
    let top_fine = top_magnitude(finer.symmetric_eigenvalues().iter().copied());
    let change = (top_fine - top).abs() / top_fine.max(f64::MIN_POSITIVE);
    if change > RESOLUTION_TOL {
        return Err(Error::Resolution(format!(
            "top eigenvalue for c = {}, N = {degree} moved by {change:.3e} between {q} and {} nodes",
            band.c,
            q + RESOLUTION_STEP
        )));
    }
    Ok(())
}

fn validate_size(band: BandSpec, degree: u32, q: usize) -> Result<()> {
    let min = min_quadrature_size(band.c, degree);
    if q < min {
        return Err(Error::Resolution(format!(
            "{q} radial nodes is below the minimum {min} for c = {}, N = {degree}",
            band.c
        )));
    }
    Ok(())
}

fn concentration(band: BandSpec, beta: f64) -> f64 {
    // rounding can push the top concentrations to 1
    (band.concentration_scale() * beta * beta).min(1.0 - f64::EPSILON)
}

/// Eigenvalues `alpha_{N,n}` and radial eigenfunctions `K_{n,N}` for one degree.
#[derive(Debug, Clone)]
pub struct RadialEigensystem {
    band: BandSpec,
    degree: u32,
    quad: Rule1D,
    betas: Vec<f64>,
    vectors: DMatrix<f64>,
    alpha_tilde: Vec<f64>,
    omitted: f64,
    interp_scale: Vec<f64>,
}

/// Solves the radial equation for degree `degree` with a `q`-node rule and
/// keeps the `n_max` eigenpairs of largest magnitude.
pub fn solve_radial(band: BandSpec, degree: u32, q: usize, n_max: usize) -> Result<RadialEigensystem> {
    validate_size(band, degree, q)?;
    if n_max > q {
        return domain(format!("cannot keep {n_max} eigenpairs from a {q}-node discretization"));
    }
    let rule = radial_rule(q);
    let eig = SymmetricEigen::new(kernel_matrix(band.c, degree, &rule));
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let top = eig.eigenvalues[order[0]].abs();
    check_resolution(band, degree, q, top)?;

    let omitted = order.get(n_max).map_or(0.0, |&k| concentration(band, eig.eigenvalues[k]));
    order.truncate(n_max);
    let mut vectors = DMatrix::<f64>::zeros(q, n_max);
    let mut betas = Vec::with_capacity(n_max);
    for (col, &k) in order.iter().enumerate() {
        let phi = eig.eigenvectors.column(k);
        let sign = if phi[q - 1] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..q {
            vectors[(i, col)] = sign * phi[i] / (rule.weights[i].sqrt() * rule.nodes[i]);
        }
        betas.push(eig.eigenvalues[k]);
    }
    Ok(RadialEigensystem::from_parts(band, degree, rule, betas, vectors, omitted))
}

/// Eigenvalues only, signed, sorted by decreasing magnitude.
pub fn radial_eigenvalues(band: BandSpec, degree: u32, q: usize) -> Result<Vec<f64>> {
    validate_size(band, degree, q)?;
    let rule = radial_rule(q);
    let mut values: Vec<f64> = kernel_matrix(band.c, degree, &rule)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    check_resolution(band, degree, q, values[0].abs())?;
    Ok(values)
}

impl RadialEigensystem {
    pub(crate) fn from_parts(
        band: BandSpec,
        degree: u32,
        quad: Rule1D,
        betas: Vec<f64>,
        vectors: DMatrix<f64>,
        omitted: f64,
    ) -> Self {
        let alpha_tilde = betas.iter().map(|&b| concentration(band, b)).collect();
        let interp_scale = quad.iter().map(|(r, w)| 4.0 * PI * w * r * r).collect();
        Self { band, degree, quad, betas, vectors, alpha_tilde, omitted, interp_scale }
    }

    pub fn band(&self) -> BandSpec {
        self.band
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn quadrature(&self) -> &Rule1D {
        &self.quad
    }

    /// Number of eigenpairs kept.
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Real eigenvalue of the de-phased kernel; `alpha = i^N beta`.
    pub fn beta(&self, n: usize) -> f64 {
        self.betas[n]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// `alpha_{N,n} = i^N beta_{N,n}`.
    pub fn alpha(&self, n: usize) -> Complex64 {
        i_pow(self.degree) * self.betas[n]
    }

    /// `(c / 2pi)^3 |alpha_{N,n}|^2`.
    pub fn alpha_tilde(&self, n: usize) -> f64 {
        self.alpha_tilde[n]
    }

    pub fn alpha_tildes(&self) -> &[f64] {
        &self.alpha_tilde
    }

    /// Concentration of the largest eigenpair that was discarded, or 0 when
    /// the whole discrete spectrum is held.
    pub fn omitted_alpha_tilde(&self) -> f64 {
        self.omitted
    }

    /// `K_{n,N}` at the quadrature nodes.
    pub fn node_values(&self, n: usize) -> Vec<f64> {
        self.vectors.column(n).iter().copied().collect()
    }

    pub(crate) fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Keeps only the first `n_keep` eigenpairs.
    pub fn truncate(&mut self, n_keep: usize) {
        if n_keep >= self.len() {
            return;
        }
        self.omitted = self.alpha_tilde[n_keep];
        self.betas.truncate(n_keep);
        self.alpha_tilde.truncate(n_keep);
        self.vectors = self.vectors.columns(0, n_keep).into_owned();
    }

    /// `K_{n,N}(r)` for `0 <= r <= 1` by Nyström interpolation.
    pub fn eval_radial(&self, n: usize, r: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) {
            return domain(format!("radial argument must lie in [0, 1], got {r}"));
        }
        if n >= self.len() {
            return domain(format!("radial index {n} out of range ({} kept)", self.len()));
        }
        Ok(self.interpolate_one(n, r))
    }

    /// Evaluates the Nyström interpolant for any `r >= 0`. For `r > 1` this is
    /// the bandlimited continuation of `K_{n,N}` outside the unit ball.
    pub fn eval_bandlimited_extension(&self, n: usize, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return domain(format!("radial argument must be finite and >= 0, got {r}"));
        }
        if n >= self.len() {
            return domain(format!("radial index {n} out of range ({} kept)", self.len()));
        }
        Ok(self.interpolate_one(n, r))
    }

    fn interpolate_one(&self, n: usize, r: f64) -> f64 {
        if let Some(i) = self.node_index(r) {
            return self.vectors[(i, n)];
        }
        let deg = self.degree as usize;
        let col = self.vectors.column(n);
        let mut acc = 0.0;
        for (j, (&rho, &s)) in self.quad.nodes.iter().zip(&self.interp_scale).enumerate() {
            acc += s * sph_jn(deg, self.band.c * r * rho) * col[j];
        }
        acc / self.betas[n]
    }

    fn node_index(&self, r: f64) -> Option<usize> {
        self.quad.nodes.iter().position(|&x| x == r)
    }

    /// Fills `out[n] = K_{n,N}(r)` for every kept `n` given the values
    /// `bessel[j] = j_N(c r rho_j)` at the quadrature nodes.
    pub(crate) fn interpolate_with(&self, r: f64, bessel: &[f64], out: &mut [f64]) {
        if let Some(i) = self.node_index(r) {
            for (n, v) in out.iter_mut().enumerate() {
                *v = self.vectors[(i, n)];
            }
            return;
        }
        let q = self.quad.len();
        let mut u = vec![0.0; q];
        for j in 0..q {
            u[j] = self.interp_scale[j] * bessel[j];
        }
        for (n, v) in out.iter_mut().enumerate() {
            let col = self.vectors.column(n);
            let mut acc = 0.0;
            for j in 0..q {
                acc += u[j] * col[j];
            }
            *v = acc / self.betas[n];
        }
    }
}

pub(crate) fn i_pow(n: u32) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Settings for solving every degree of a band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Eigenpairs with concentration at or below this are dropped, and the
    /// degree loop stops at the first degree whose top concentration is.
    pub cutoff: f64,
    /// Nodes added on top of `max(ceil(2c/pi), N)`.
    pub extra_nodes: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { cutoff: 1e-16, extra_nodes: 32 }
    }
}

impl SpectrumOptions {
    pub fn quadrature_size(&self, c: f64, degree: u32) -> usize {
        (((2.0 * c / PI).ceil() as usize).max(degree as usize) + self.extra_nodes)
            .max(min_quadrature_size(c, degree))
    }
}

/// Radial eigensystems for degrees `0..=N_max` of one band.
#[derive(Debug, Clone)]
pub struct RadialSpectrum {
    band: BandSpec,
    systems: Vec<RadialEigensystem>,
    cutoff: f64,
    next_top: f64,
}

impl RadialSpectrum {
    /// Assembles a spectrum from eigensystems of consecutive degrees starting at 0.
    pub fn from_systems(band: BandSpec, systems: Vec<RadialEigensystem>) -> Result<Self> {
        for (k, sys) in systems.iter().enumerate() {
            if sys.degree() as usize != k {
                return Err(Error::Input(format!(
                    "eigensystem {k} has degree {}, expected consecutive degrees from 0",
                    sys.degree()
                )));
            }
            if sys.band() != band {
                return Err(Error::Input("eigensystems belong to different bands".into()));
            }
        }
        let next_top = systems.last().map_or(1.0, |s| s.alpha_tildes().first().copied().unwrap_or(0.0));
        Ok(Self { band, systems, cutoff: 0.0, next_top })
    }

    pub fn band(&self) -> BandSpec {
        self.band
    }

    pub fn systems(&self) -> &[RadialEigensystem] {
        &self.systems
    }

    pub fn system(&self, degree: u32) -> Option<&RadialEigensystem> {
        self.systems.get(degree as usize)
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.systems.len().checked_sub(1).map(|d| d as u32)
    }

    /// Concentration cutoff used when the spectrum was solved.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Upper bound on the concentration of every eigenpair not held here.
    pub fn omitted_bound(&self) -> f64 {
        self.next_top
    }

    /// `sum (2N+1) |alpha_{N,n}|^2` over the held eigenpairs.
    pub fn squared_trace(&self) -> f64 {
        self.systems
            .iter()
            .map(|s| (2 * s.degree() + 1) as f64 * s.betas().iter().map(|b| b * b).sum::<f64>())
            .sum()
    }
}

const DEGREE_BATCH: u32 = 8;

/// Solves every degree whose top concentration exceeds `options.cutoff`.
pub fn solve_band(band: BandSpec, options: SpectrumOptions) -> Result<RadialSpectrum> {
    solve_band_with(band, options, |degree, q| solve_radial(band, degree, q, q))
}

pub(crate) fn solve_band_with(
    band: BandSpec,
    options: SpectrumOptions,
    solve: impl Fn(u32, usize) -> Result<RadialEigensystem> + Sync,
) -> Result<RadialSpectrum> {
    let mut systems = Vec::new();
    let mut start = 0u32;
    loop {
        let batch: Vec<Result<RadialEigensystem>> = (start..start + DEGREE_BATCH)
            .into_par_iter()
            .map(|degree| solve(degree, options.quadrature_size(band.c, degree)))
            .collect();
        for sys in batch {
            let mut sys = sys?;
            let keep = sys.alpha_tildes().iter().take_while(|&&a| a > options.cutoff).count();
            if keep == 0 {
                let next_top = sys.alpha_tildes().first().copied().unwrap_or(0.0);
                return Ok(RadialSpectrum { band, systems, cutoff: options.cutoff, next_top });
            }
            sys.truncate(keep);
            systems.push(sys);
        }
        start += DEGREE_BATCH;
    }
}

/// Concentrations `alpha~_{N,n}` above the cutoff for every degree, without
/// eigenvectors.
pub fn concentration_table(band: BandSpec, options: SpectrumOptions) -> Result<Vec<Vec<f64>>> {
    let mut table = Vec::new();
    let mut start = 0u32;
    loop {
        let batch: Vec<Result<Vec<f64>>> = (start..start + DEGREE_BATCH)
            .into_par_iter()
            .map(|degree| radial_eigenvalues(band, degree, options.quadrature_size(band.c, degree)))
            .collect();
        for values in batch {
            let kept: Vec<f64> = values?
                .iter()
                .map(|&b| concentration(band, b))
                .take_while(|&a| a > options.cutoff)
                .collect();
            if kept.is_empty() {
                return Ok(table);
            }
            table.push(kept);
        }
        start += DEGREE_BATCH;
    }
}

/// Values `K_{n,N}(r)` for every kept `(N, n)` of a spectrum at one radius.
#[derive(Debug, Clone)]
pub struct RadialValues {
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl RadialValues {
    /// Evaluates every held radial function of `spectrum` at `r`, limited to
    /// `counts[N]` functions per degree.
    pub fn compute(spectrum: &RadialSpectrum, counts: &[usize], r: f64) -> Self {
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        let mut total = 0;
        for &k in counts {
            offsets.push(total);
            total += k;
        }
        offsets.push(total);
        let mut values = vec![0.0; total];
        let n_max = counts.len();
        if n_max == 0 {
            return Self { offsets, values };
        }
        let c = spectrum.band().c();
        // all systems of a spectrum share rule sizes only by degree, so
        // Bessel tables are built per distinct rule
        let mut cache: Option<(usize, Vec<Vec<f64>>)> = None;
        for (degree, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let sys = &spectrum.systems()[degree];
            let q = sys.quadrature().len();
            let rebuild = match &cache {
                Some((cq, table)) => *cq != q || table[0].len() <= degree,
                None => true,
            };
            if rebuild {
                let mut table = Vec::with_capacity(q);
                for &rho in &sys.quadrature().nodes {
                    let mut out = vec![0.0; n_max];
                    spherical_bessel_array(c * r * rho, &mut out);
                    table.push(out);
                }
                cache = Some((q, table));
            }
            let table = &cache.as_ref().expect("built above").1;
            let bessel: Vec<f64> = table.iter().map(|row| row[degree]).collect();
            let dst = &mut values[offsets[degree]..offsets[degree] + count];
            let mut full = vec![0.0; sys.len()];
            sys.interpolate_with(r, &bessel, &mut full);
            dst.copy_from_slice(&full[..count]);
        }
        Self { offsets, values }
    }

    #[inline]
    pub fn get(&self, degree: usize, n: usize) -> f64 {
        self.values[self.offsets[degree] + n]
    }

    pub fn degree_slice(&self, degree: usize) -> &[f64] {
        &self.values[self.offsets[degree]..self.offsets[degree + 1]]
    }
}
