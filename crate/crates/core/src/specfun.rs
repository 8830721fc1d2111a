//! Special functions: spherical Bessel functions of the first kind, fully
//! normalized associated Legendre functions, complex spherical harmonics and
//! the three-dimensional besinc kernel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};

/// A point in spherical coordinates. `polar` is the angle from the +z axis and
/// enters the Legendre factor through its cosine; `azimuth` is measured in the
/// xy-plane from the +x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub r: f64,
    pub polar: f64,
    pub azimuth: f64,
}

impl SphericalPoint {
    pub fn new(r: f64, polar: f64, azimuth: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return domain(format!("radius must be finite and non-negative, got {r}"));
        }
        if !(0.0..=PI).contains(&polar) {
            return domain(format!("polar angle must lie in [0, pi], got {polar}"));
        }
        if !(0.0..2.0 * PI).contains(&azimuth) {
            return domain(format!("azimuth must lie in [0, 2pi), got {azimuth}"));
        }
        Ok(Self { r, polar, azimuth })
    }

    /// Converts a Cartesian point. The origin maps to `polar = azimuth = 0`.
    pub fn from_cartesian(x: [f64; 3]) -> Self {
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let r = (rho2 + x[2] * x[2]).sqrt();
        if r == 0.0 {
            return Self { r: 0.0, polar: 0.0, azimuth: 0.0 };
        }
        let polar = rho2.sqrt().atan2(x[2]);
        let mut azimuth = x[1].atan2(x[0]);
        if azimuth < 0.0 {
            azimuth += 2.0 * PI;
        }
        if azimuth >= 2.0 * PI {
            azimuth = 0.0;
        }
        Self { r, polar, azimuth }
    }

    pub fn to_cartesian(&self) -> [f64; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [self.r * sp * ca, self.r * sp * sa, self.r * cp]
    }
}

/// Degree/order pair of a spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub degree: u32,
    pub order: i32,
}

impl HarmonicIndex {
    pub fn new(degree: u32, order: i32) -> Result<Self> {
        if order.unsigned_abs() > degree {
            return domain(format!("|m| = {} exceeds degree {degree}", order.unsigned_abs()));
        }
        Ok(Self { degree, order })
    }
}

/// Spherical Bessel function `j_n(z) = sqrt(pi / (2z)) J_{n+1/2}(z)` for `z >= 0`.
pub fn spherical_bessel(n: u32, z: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return domain(format!("spherical Bessel argument must be finite and >= 0, got {z}"));
    }
    Ok(sph_jn(n as usize, z))
}

/// `j_n(z)` without argument validation.
pub(crate) fn sph_jn(n: usize, z: f64) -> f64 {
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if z < 1.0 {
        return sph_jn_series(n, z);
    }
    if (n as f64) <= z {
        sph_jn_upward(n, z)
    } else {
        let mut out = [0.0];
        sph_jn_backward(n, n, z, &mut out);
        out[0]
    }
}

/// Fills `out[k] = j_k(z)` for `k = 0..out.len()`.
pub fn spherical_bessel_array(z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    if z == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    if z < 1.0 {
        for (k, v) in out.iter_mut().enumerate() {
            *v = sph_jn_series(k, z);
        }
        return;
    }
    let n_max = out.len() - 1;
    sph_jn_backward(0, n_max, z, out);
}

/// Power series, used for `z < 1` where every term is positive after the
/// alternating sign is accounted for and no cancellation occurs.
fn sph_jn_series(n: usize, z: f64) -> f64 {
    let mut prefactor = 1.0;
    for k in 1..=n {
        prefactor *= z / (2 * k + 1) as f64;
        if prefactor == 0.0 {
            return 0.0;
        }
    }
    let h = -0.5 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= h / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    prefactor * sum
}

fn sph_j0_j1(z: f64) -> (f64, f64) {
    let (s, c) = z.sin_cos();
    (s / z, s / (z * z) - c / z)
}

/// Forward recurrence, stable while the order stays below the argument.
fn sph_jn_upward(n: usize, z: f64) -> f64 {
    let (j0, j1) = sph_j0_j1(z);
    if n == 0 {
        return j0;
    }
    let (mut prev, mut cur) = (j0, j1);
    for k in 1..n {
        let next = (2 * k + 1) as f64 / z * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Miller backward recurrence normalized with `sum (2k+1) j_k^2 = 1`.
/// Writes `j_k(z)` for `k in lo..=hi` into `out[k - lo]`.
fn sph_jn_backward(lo: usize, hi: usize, z: f64, out: &mut [f64]) {
    const BIG: f64 = 1e100;
    let top = hi.max(z.ceil() as usize);
    let start = top + (40.0 * top as f64).sqrt() as usize + 16;

    let mut next = 0.0;
    let mut cur = 1e-100;
    let mut sum = 0.0;
    let mut k = start;
    loop {
        sum += (2 * k + 1) as f64 * cur * cur;
        if k >= lo && k <= hi {
            out[k - lo] = cur;
        }
        if k == 0 {
            break;
        }
        let prev = (2 * k + 1) as f64 / z * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > BIG {
            cur /= BIG;
            next /= BIG;
            sum /= BIG * BIG;
            let upper = hi.min(start);
            if k < upper {
                for v in &mut out[(k + 1).max(lo) - lo..=upper - lo] {
                    *v /= BIG;
                }
            }
        }
    }
    // cur = f_0, next = f_1 (unnormalized)
    let (j0, j1) = sph_j0_j1(z);
    let sign = if j0.abs() >= j1.abs() {
        j0.signum() * cur.signum()
    } else {
        j1.signum() * next.signum()
    };
    let scale = sign / sum.sqrt();
    for v in out.iter_mut().take(hi - lo + 1) {
        *v *= scale;
    }
}

/// Fully normalized associated Legendre function `P~_N^m(x)`, scaled so that
/// `P~_N^m(cos polar) e^{i m azimuth}` is orthonormal on the unit sphere. The
/// Condon-Shortley phase is included and `P~_N^{-m} = (-1)^m P~_N^m`.
pub fn assoc_legendre_norm(index: HarmonicIndex, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return domain(format!("Legendre argument must lie in [-1, 1], got {x}"));
    }
    HarmonicIndex::new(index.degree, index.order)?;
    let m = index.order.unsigned_abs() as usize;
    let value = legendre_column(index.degree as usize, m, x);
    Ok(if index.order < 0 && m % 2 == 1 { -value } else { value })
}

/// `P~_m^m(x)` for `m >= 0`.
fn legendre_diagonal(m: usize, x: f64) -> f64 {
    let s = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = (0.25 / PI).sqrt();
    for k in 1..=m {
        pmm *= -s * ((2 * k + 1) as f64 / (2 * k) as f64).sqrt();
    }
    pmm
}

fn legendre_column(degree: usize, m: usize, x: f64) -> f64 {
    let pmm = legendre_diagonal(m, x);
    if degree == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = x * ((2 * m + 3) as f64).sqrt() * pmm;
    for l in m + 2..=degree {
        let next = legendre_step(l, m, x, cur, prev);
        prev = cur;
        cur = next;
    }
    cur
}

#[inline]
fn legendre_step(l: usize, m: usize, x: f64, p1: f64, p2: f64) -> f64 {
    let (lf, mf) = (l as f64, m as f64);
    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
    let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
    a * (x * p1 - b * p2)
}

/// All `P~_N^m(x)` with `0 <= m <= N <= n_max`, stored row by row.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    n_max: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(n_max: usize, x: f64) -> Self {
        let mut values = vec![0.0; (n_max + 1) * (n_max + 2) / 2];
        for m in 0..=n_max {
            Self::fill_order(n_max, m, x, |l, v| values[l * (l + 1) / 2 + m] = v);
        }
        Self { n_max, values }
    }

    fn fill_order(n_max: usize, m: usize, x: f64, mut put: impl FnMut(usize, f64)) {
        let pmm = legendre_diagonal(m, x);
        put(m, pmm);
        if m == n_max {
            return;
        }
        let mut prev = pmm;
        let mut cur = x * ((2 * m + 3) as f64).sqrt() * pmm;
        put(m + 1, cur);
        for l in m + 2..=n_max {
            let next = legendre_step(l, m, x, cur, prev);
            prev = cur;
            cur = next;
            put(l, cur);
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `P~_N^m(x)` for `0 <= m <= N`.
    #[inline]
    pub fn get(&self, degree: usize, m: usize) -> f64 {
        self.values[degree * (degree + 1) / 2 + m]
    }
}

/// Fills `out[l - m] = P~_l^m(x)` for `l = m..m + out.len()`.
pub(crate) fn legendre_order_column(m: usize, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let n_max = m + out.len() - 1;
    LegendreTable::fill_order(n_max, m, x, |l, v| out[l - m] = v);
}

/// `S_{m,N}(polar, azimuth) = P~_N^m(cos polar) e^{i m azimuth}`.
pub fn spherical_harmonic(index: HarmonicIndex, point: SphericalPoint) -> Result<Complex64> {
    SphericalPoint::new(point.r, point.polar, point.azimuth)?;
    let p = assoc_legendre_norm(index, point.polar.cos())?;
    Ok(Complex64::from_polar(p, index.order as f64 * point.azimuth))
}

/// The besinc kernel `h_c(x) = (c / 2pi)^3 int_{|y| <= 1} e^{i c <x, y>} dy`.
pub fn besinc(c: f64, x: [f64; 3]) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!("bandlimit must be positive, got {c}"));
    }
    Ok(besinc_radial(c, (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()))
}

/// `h_c` as a function of `r = |x|`.
#[inline]
pub fn besinc_radial(c: f64, r: f64) -> f64 {
    let z = c * r;
    if z < 1e-2 {
        let z2 = z * z;
        let series = 1.0 / 3.0 - z2 / 30.0 + z2 * z2 / 840.0 - z2 * z2 * z2 / 45360.0;
        c * c * c * series / (2.0 * PI * PI)
    } else {
        let (s, co) = z.sin_cos();
        (s - z * co) / (2.0 * PI * PI * r * r * r)
    }
}
