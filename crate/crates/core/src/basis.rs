//! Full wavefunctions `psi_{N,m,n}(x) = K_{n,N}(r) S_{m,N}(polar, azimuth)`,
//! the truncation set `Pi_T`, and basis vectors sampled on the Cartesian grid.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::radial::{BandSpec, RadialEigensystem, RadialSpectrum, RadialValues};
use crate::specfun::{legendre_order_column, SphericalPoint};

/// Index `(N, m, n)` of a wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    #[serde(rename = "N")]
    pub degree: u32,
    #[serde(rename = "m")]
    pub order: i32,
    #[serde(rename = "n")]
    pub radial: u32,
}

impl BasisIndex {
    pub fn new(degree: u32, order: i32, radial: u32) -> Result<Self> {
        if order.unsigned_abs() > degree {
            return domain(format!("|m| = {} exceeds degree {degree}", order.unsigned_abs()));
        }
        Ok(Self { degree, order, radial })
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.degree, self.order, self.radial)
    }
}

/// Cartesian sampling grid `x_k = k / L` for `k` in `[-L, L]^3`.
///
/// Samples are linearized with `k_x` slowest and `k_z` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    l: u32,
}

impl GridSpec {
    pub fn new(l: u32) -> Result<Self> {
        if l == 0 {
            return domain("sampling rate L must be at least 1");
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// Points per axis, `2L + 1`.
    pub fn side(&self) -> usize {
        2 * self.l as usize + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of `k` in the linearized cube.
    pub fn linear_index(&self, k: [i32; 3]) -> usize {
        let s = self.side();
        let l = self.l as i32;
        let [a, b, c] = k.map(|v| (v + l) as usize);
        (a * s + b) * s + c
    }

    /// Inverse of [`GridSpec::linear_index`].
    pub fn lattice_point(&self, i: usize) -> [i32; 3] {
        let s = self.side();
        let l = self.l as i32;
        [(i / (s * s)) as i32 - l, ((i / s) % s) as i32 - l, (i % s) as i32 - l]
    }

    pub fn position(&self, k: [i32; 3]) -> [f64; 3] {
        let l = self.l as f64;
        k.map(|v| v as f64 / l)
    }
}

/// Whether a lattice point with `|k|^2 = norm_sq` samples the open unit ball,
/// `|k| < L`. Points on the sphere count as outside, which reproduces the
/// published sample counts.
#[inline]
pub fn lattice_inside(norm_sq: i64, l: u32) -> bool {
    norm_sq < (l as i64) * (l as i64)
}

/// Lattice points `k` with `|k| < L`, in lexicographic order of `(k_x, k_y, k_z)`.
pub fn grid_points_in_ball(grid: GridSpec) -> Vec<[i32; 3]> {
    let l = grid.l() as i32;
    let mut out = Vec::new();
    for x in -l..=l {
        for y in -l..=l {
            for z in -l..=l {
                if lattice_inside((x * x + y * y + z * z) as i64, grid.l()) {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Number of lattice points with `|k| < L` without materializing them.
pub fn count_grid_points_in_ball(grid: GridSpec) -> usize {
    let l = grid.l() as i64;
    let inner = l * l - 1;
    let mut count = 0usize;
    for x in -l..=l {
        for y in -l..=l {
            let rem = inner - x * x - y * y;
            if rem >= 0 {
                count += 2 * isqrt(rem as u64) as usize + 1;
            }
        }
    }
    count
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `sqrt(a / (1 - a))`, the quantity compared against `T`.
pub fn concentration_ratio(alpha_tilde: f64) -> f64 {
    (alpha_tilde / (1.0 - alpha_tilde)).sqrt()
}

/// One admitted radial pair `(N, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialEntry {
    pub degree: u32,
    pub radial: u32,
    pub alpha: Complex64,
    pub alpha_tilde: f64,
}

/// The index set `Pi_T` together with the eigenvalue of every admitted pair.
#[derive(Debug, Clone)]
pub struct TruncationSet {
    band: BandSpec,
    t: f64,
    indices: Vec<BasisIndex>,
    entries: BTreeMap<(u32, u32), RadialEntry>,
    radial_counts: Vec<usize>,
}

/// Builds `Pi_T = {(N, m, n) : sqrt(a~/(1 - a~)) > T, |m| <= N}`.
pub fn truncation_set(spectrum: &RadialSpectrum, t: f64) -> Result<TruncationSet> {
    if !(t > 0.0) || t.is_nan() {
        return domain(format!("truncation parameter must be positive, got {t}"));
    }
    let admitted = |a: f64| concentration_ratio(a) > t;
    if admitted(spectrum.omitted_bound()) {
        return Err(Error::Coverage(format!(
            "degrees beyond N = {} may still reach the threshold T = {t}; solve more degrees",
            spectrum.max_degree().map_or(-1, |d| d as i64)
        )));
    }
    let mut pairs = Vec::new();
    let mut radial_counts = Vec::new();
    for sys in spectrum.systems() {
        let at = sys.alpha_tildes();
        let count = at.iter().take_while(|&&a| admitted(a)).count();
        if count == at.len() && admitted(sys.omitted_alpha_tilde()) {
            return Err(Error::Coverage(format!(
                "all {} radial functions of degree {} are admitted at T = {t}; keep more",
                at.len(),
                sys.degree()
            )));
        }
        radial_counts.push(count);
        for n in 0..count {
            pairs.push(RadialEntry {
                degree: sys.degree(),
                radial: n as u32,
                alpha: sys.alpha(n),
                alpha_tilde: at[n],
            });
        }
    }
    while radial_counts.last() == Some(&0) {
        radial_counts.pop();
    }
    pairs.sort_by(|a, b| {
        b.alpha_tilde
            .total_cmp(&a.alpha_tilde)
            .then(a.degree.cmp(&b.degree))
            .then(a.radial.cmp(&b.radial))
    });
    let mut indices = Vec::new();
    for p in &pairs {
        let deg = p.degree as i32;
        for m in -deg..=deg {
            indices.push(BasisIndex { degree: p.degree, order: m, radial: p.radial });
        }
    }
    let entries = pairs.into_iter().map(|p| ((p.degree, p.radial), p)).collect();
    Ok(TruncationSet { band: spectrum.band(), t, indices, entries, radial_counts })
}

impl TruncationSet {
    pub fn band(&self) -> BandSpec {
        self.band
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Indices in canonical order: decreasing `a~`, then `N`, `n`, and `m`.
    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: BasisIndex) -> bool {
        index.order.unsigned_abs() <= index.degree && self.entries.contains_key(&(index.degree, index.radial))
    }

    /// Eigenvalue data for the pair `(N, n)`, shared by every order `m`.
    pub fn entry(&self, degree: u32, radial: u32) -> Option<&RadialEntry> {
        self.entries.get(&(degree, radial))
    }

    pub fn alpha(&self, index: BasisIndex) -> Option<Complex64> {
        self.entry(index.degree, index.radial).map(|e| e.alpha)
    }

    pub fn alpha_tilde(&self, index: BasisIndex) -> Option<f64> {
        self.entry(index.degree, index.radial).map(|e| e.alpha_tilde)
    }

    /// Number of admitted radial functions for each degree `0..=N_max`.
    pub fn radial_counts(&self) -> &[usize] {
        &self.radial_counts
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.radial_counts.len().checked_sub(1).map(|d| d as u32)
    }
}

/// Leading terms `c^3/32 - c^2 ln(c) ln(T) / (2 pi^2)` of the asymptotic size
/// of `Pi_T`. A qualitative estimate only; it is not accurate at moderate `c`.
pub fn count_asymptotic(band: BandSpec, t: f64) -> f64 {
    let c = band.c();
    c.powi(3) / 32.0 - c * c * c.ln() * t.ln() / (2.0 * PI * PI)
}

fn check_system(index: BasisIndex, sys: &RadialEigensystem) -> Result<()> {
    if sys.degree() != index.degree {
        return Err(Error::Input(format!(
            "index {index} needs the degree-{} eigensystem, got degree {}",
            index.degree,
            sys.degree()
        )));
    }
    if index.order.unsigned_abs() > index.degree {
        return domain(format!("invalid index {index}"));
    }
    if index.radial as usize >= sys.len() {
        return domain(format!("radial index of {index} out of range ({} kept)", sys.len()));
    }
    Ok(())
}

#[inline]
pub(crate) fn harmonic(degree: u32, order: i32, p: &SphericalPoint) -> Complex64 {
    let m = order.unsigned_abs() as usize;
    let mut column = vec![0.0; degree as usize - m + 1];
    legendre_order_column(m, p.polar.cos(), &mut column);
    let mut value = column[degree as usize - m];
    if order < 0 && m % 2 == 1 {
        value = -value;
    }
    Complex64::from_polar(value, order as f64 * p.azimuth)
}

/// `psi_{N,m,n}(x)` for `|x| <= 1`.
pub fn eval_basis(index: BasisIndex, sys: &RadialEigensystem, point: [f64; 3]) -> Result<Complex64> {
    check_system(index, sys)?;
    let p = SphericalPoint::from_cartesian(point);
    if p.r > 1.0 {
        return domain(format!("point at radius {} lies outside the unit ball", p.r));
    }
    let k = sys.eval_radial(index.radial as usize, p.r)?;
    Ok(harmonic(index.degree, index.order, &p) * k)
}

/// Bandlimited continuation of `psi_{N,m,n}` to all of space. Inside the ball it
/// equals [`eval_basis`]; outside it is `alpha^{-1} int_R e^{ic<x,y>} psi(y) dy`.
pub fn eval_basis_extended(index: BasisIndex, sys: &RadialEigensystem, point: [f64; 3]) -> Result<Complex64> {
    check_system(index, sys)?;
    let p = SphericalPoint::from_cartesian(point);
    let k = sys.eval_bandlimited_extension(index.radial as usize, p.r)?;
    Ok(harmonic(index.degree, index.order, &p) * k)
}

/// Grid samples of every function in a truncation set, produced one index at a
/// time.
pub struct SampledBasis<'a> {
    set: &'a TruncationSet,
    grid: GridSpec,
    points: Vec<[i32; 3]>,
    spherical: Vec<SphericalPoint>,
    shell_of: Vec<usize>,
    shells: Vec<RadialValues>,
}

impl<'a> SampledBasis<'a> {
    pub fn new(set: &'a TruncationSet, spectrum: &RadialSpectrum, grid: GridSpec) -> Result<Self> {
        if spectrum.band() != set.band() {
            return Err(Error::Input("truncation set and spectrum belong to different bands".into()));
        }
        if set.band().c() > PI * grid.l() as f64 {
            log::warn!("c = {} exceeds pi L = {}; sampled vectors alias", set.band().c(), PI * grid.l() as f64);
        }
        let points = grid_points_in_ball(grid);
        let l = grid.l() as f64;
        let spherical: Vec<SphericalPoint> = points
            .iter()
            .map(|&k| SphericalPoint::from_cartesian(grid.position(k)))
            .collect();
        let l2 = (grid.l() * grid.l()) as usize;
        let mut shell_index = vec![usize::MAX; l2 + 1];
        let mut radii = Vec::new();
        let shell_of = points
            .iter()
            .map(|k| {
                let s = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize;
                if shell_index[s] == usize::MAX {
                    shell_index[s] = radii.len();
                    radii.push((s as f64).sqrt() / l);
                }
                shell_index[s]
            })
            .collect();
        let counts = set.radial_counts();
        let shells = radii.iter().map(|&r| RadialValues::compute(spectrum, counts, r)).collect();
        Ok(Self { set, grid, points, spherical, shell_of, shells })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Lattice points carrying the samples, in the order of every vector.
    pub fn points(&self) -> &[[i32; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Samples `psi_i(k / L)` of the `i`-th index of the set.
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        let index = self.set.indices()[i];
        let m = index.order.unsigned_abs() as usize;
        let deg = index.degree as usize;
        let flip = index.order < 0 && m % 2 == 1;
        let mut column = vec![0.0; deg - m + 1];
        self.spherical
            .iter()
            .zip(&self.shell_of)
            .map(|(p, &s)| {
                legendre_order_column(m, p.polar.cos(), &mut column);
                let mut v = column[deg - m] * self.shells[s].get(deg, index.radial as usize);
                if flip {
                    v = -v;
                }
                Complex64::from_polar(v, index.order as f64 * p.azimuth)
            })
            .collect()
    }

    /// `(c / 2pi L)^{3/2} alpha_i` times [`SampledBasis::vector`].
    pub fn normalized_vector(&self, i: usize) -> Vec<Complex64> {
        let scale = self.normalization(i);
        let mut v = self.vector(i);
        for x in &mut v {
            *x *= scale;
        }
        v
    }

    fn normalization(&self, i: usize) -> Complex64 {
        let alpha = self.set.alpha(self.set.indices()[i]).expect("index belongs to set");
        alpha * (self.set.band().c() / (2.0 * PI * self.grid.l() as f64)).powf(1.5)
    }

    /// Real-valued companion of [`SampledBasis::normalized_vector`]. For `m > 0`
    /// the pair `(m, -m)` is replaced by `sqrt 2 K P~ cos(m phi)` and
    /// `sqrt 2 K P~ sin(m phi)`, and the phase of `alpha` is dropped. The
    /// resulting vectors are a unitary recombination of the complex ones, so
    /// their Gram matrix has the same spectrum.
    pub fn real_normalized_vector(&self, i: usize) -> Vec<f64> {
        let index = self.set.indices()[i];
        let m = index.order.unsigned_abs() as usize;
        let deg = index.degree as usize;
        let scale = self.normalization(i).norm() * if m == 0 { 1.0 } else { 2f64.sqrt() };
        let mut column = vec![0.0; deg - m + 1];
        self.spherical
            .iter()
            .zip(&self.shell_of)
            .map(|(p, &s)| {
                legendre_order_column(m, p.polar.cos(), &mut column);
                let v = column[deg - m] * self.shells[s].get(deg, index.radial as usize) * scale;
                let angle = m as f64 * p.azimuth;
                if index.order >= 0 {
                    v * angle.cos()
                } else {
                    v * angle.sin()
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{solve_band, SpectrumOptions};

    #[test]
    fn small_grid_counts() {
        // the sphere |k| = L lies outside, so L = 1 keeps only the origin
        let g = GridSpec::new(1).unwrap();
        assert_eq!(grid_points_in_ball(g), vec![[0, 0, 0]]);
        assert_eq!(count_grid_points_in_ball(GridSpec::new(2).unwrap()), 27);
        for l in [1, 2, 5, 16] {
            let g = GridSpec::new(l).unwrap();
            assert_eq!(grid_points_in_ball(g).len(), count_grid_points_in_ball(g));
        }
        assert!(GridSpec::new(0).is_err());
    }

    #[test]
    fn linear_index_roundtrip() {
        let g = GridSpec::new(3).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.linear_index(g.lattice_point(i)), i);
        }
        assert_eq!(g.lattice_point(0), [-3, -3, -3]);
        assert_eq!(g.lattice_point(1), [-3, -3, -2]);
    }

    #[test]
    fn huge_threshold_gives_empty_set() {
        let spectrum = solve_band(BandSpec::new(PI).unwrap(), SpectrumOptions::default()).unwrap();
        let set = truncation_set(&spectrum, 1e300).unwrap();
        assert!(set.is_empty());
        assert!(set.radial_counts().is_empty());
    }

    #[test]
    fn ordering_and_m_degeneracy() {
        let spectrum = solve_band(BandSpec::new(4.0 * PI).unwrap(), SpectrumOptions::default()).unwrap();
        let set = truncation_set(&spectrum, 1.0).unwrap();
        let idx = set.indices();
        for w in idx.windows(2) {
            let (a, b) = (set.alpha_tilde(w[0]).unwrap(), set.alpha_tilde(w[1]).unwrap());
            assert!(a >= b);
            if (w[0].degree, w[0].radial) == (w[1].degree, w[1].radial) {
                assert_eq!(w[1].order, w[0].order + 1);
            }
        }
        let total: usize = set.radial_counts().iter().enumerate().map(|(d, &k)| (2 * d + 1) * k).sum();
        assert_eq!(total, set.len());
    }

    #[test]
    fn coverage_error_when_degrees_missing() {
        let band = BandSpec::new(6.0 * PI).unwrap();
        let full = solve_band(band, SpectrumOptions::default()).unwrap();
        let partial = RadialSpectrum::from_systems(band, full.systems()[..3].to_vec()).unwrap();
        assert!(matches!(truncation_set(&partial, 1.0), Err(Error::Coverage(_))));
    }

    #[test]
    fn count_asymptotic_at_unit_threshold() {
        let band = BandSpec::new(16.0 * PI).unwrap();
        assert_eq!(count_asymptotic(band, 1.0), band.c().powi(3) / 32.0);
        assert!(count_asymptotic(band, 10.0) < count_asymptotic(band, 0.1));
    }

    #[test]
    fn basis_symmetries() {
        let band = BandSpec::new(5.0 * PI).unwrap();
        let spectrum = solve_band(band, SpectrumOptions::default()).unwrap();
        let sys0 = spectrum.system(0).unwrap();
        let i0 = BasisIndex::new(0, 0, 0).unwrap();
        let a = eval_basis(i0, sys0, [0.3, 0.4, 0.0]).unwrap();
        let b = eval_basis(i0, sys0, [0.0, 0.0, -0.5]).unwrap();
        assert!((a - b).norm() < 1e-14);

        let sys = spectrum.system(4).unwrap();
        let p = [0.2, -0.35, 0.5];
        for m in 1..=4 {
            let plus = eval_basis(BasisIndex::new(4, m, 1).unwrap(), sys, p).unwrap();
            let minus = eval_basis(BasisIndex::new(4, -m, 1).unwrap(), sys, p).unwrap();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((minus - plus.conj() * sign).norm() < 1e-14);
        }
        assert!(eval_basis(BasisIndex::new(4, 0, 0).unwrap(), sys, [1.0, 0.1, 0.0]).is_err());
        assert!(eval_basis(BasisIndex::new(3, 0, 0).unwrap(), sys, p).is_err());
    }

    #[test]
    fn sampled_vectors_match_pointwise_evaluation() {
        let band = BandSpec::new(3.0 * PI).unwrap();
        let spectrum = solve_band(band, SpectrumOptions::default()).unwrap();
        let set = truncation_set(&spectrum, 1.0).unwrap();
        let grid = GridSpec::new(3).unwrap();
        let sampled = SampledBasis::new(&set, &spectrum, grid).unwrap();
        for i in 0..set.len() {
            let index = set.indices()[i];
            let v = sampled.vector(i);
            for (k, value) in sampled.points().iter().zip(&v) {
                let sys = spectrum.system(index.degree).unwrap();
                let direct = eval_basis(index, sys, grid.position(*k)).unwrap();
                assert!((direct - value).norm() < 1e-12, "{index} at {k:?}");
            }
        }
    }

    #[test]
    fn origin_sample_is_continuous() {
        let band = BandSpec::new(3.0 * PI).unwrap();
        let spectrum = solve_band(band, SpectrumOptions::default()).unwrap();
        let set = truncation_set(&spectrum, 0.5).unwrap();
        let grid = GridSpec::new(2).unwrap();
        let sampled = SampledBasis::new(&set, &spectrum, grid).unwrap();
        let origin = sampled.points().iter().position(|k| *k == [0, 0, 0]).unwrap();
        for i in 0..set.len() {
            let index = set.indices()[i];
            let sys = spectrum.system(index.degree).unwrap();
            let along_z = eval_basis(index, sys, [0.0, 0.0, 1e-9]).unwrap();
            assert!((sampled.vector(i)[origin] - along_z).norm() < 1e-7, "{index}");
            if index.degree > 0 {
                assert_eq!(sampled.vector(i)[origin], Complex64::new(0.0, 0.0));
            }
        }
    }
}
