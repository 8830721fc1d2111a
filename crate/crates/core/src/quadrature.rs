//! Gauss-Legendre rules on intervals and product rules on the unit ball.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::specfun::SphericalPoint;

/// A one-dimensional quadrature rule on `interval`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[lo, hi]`, nodes in ascending order.
pub fn gauss_legendre(n: usize, interval: (f64, f64)) -> Result<Rule1D> {
    if n == 0 {
        return domain("Gauss-Legendre rule needs at least one node");
    }
    let (lo, hi) = interval;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return domain(format!("invalid interval ({lo}, {hi})"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // root i counted from x = 1 downwards
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        *x = mid + half * *x;
        *w *= half;
    }
    Ok(Rule1D { nodes, weights, interval })
}

/// Composite rule: `panels` equal subintervals of `interval`, each carrying an
/// `order`-point Gauss-Legendre rule.
pub fn composite_gauss_legendre(panels: usize, order: usize, interval: (f64, f64)) -> Result<Rule1D> {
    if panels == 0 {
        return domain("composite rule needs at least one panel");
    }
    let (lo, hi) = interval;
    let base = gauss_legendre(order, (0.0, 1.0))?;
    if !(hi > lo) || !hi.is_finite() {
        return domain(format!("invalid interval ({lo}, {hi})"));
    }
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let start = lo + width * p as f64;
        for (x, w) in base.iter() {
            nodes.push(start + width * x);
            weights.push(width * w);
        }
    }
    Ok(Rule1D { nodes, weights, interval })
}

/// Product rule on the unit ball: Gauss-Legendre in `r` with the `r^2`
/// Jacobian folded into the weights, Gauss-Legendre in `cos(polar)` and the
/// trapezoid rule in azimuth.
#[derive(Debug, Clone)]
pub struct BallRule {
    radial: Rule1D,
    polar: Rule1D,
    azimuth_order: usize,
    scale: f64,
}

/// Builds a product rule on the unit ball.
pub fn ball_rule(radial_order: usize, polar_order: usize, azimuth_order: usize) -> Result<BallRule> {
    BallRule::with_radius(1.0, radial_order, polar_order, azimuth_order)
}

impl BallRule {
    /// Product rule on the ball of radius `radius`.
    pub fn with_radius(
        radius: f64,
        radial_order: usize,
        polar_order: usize,
        azimuth_order: usize,
    ) -> Result<Self> {
        if radial_order == 0 || polar_order == 0 || azimuth_order == 0 {
            return domain("ball rule orders must all be at least 1");
        }
        if !(radius > 0.0) {
            return domain(format!("ball radius must be positive, got {radius}"));
        }
        let mut radial = gauss_legendre(radial_order, (0.0, radius))?;
        for (r, w) in radial.nodes.iter().zip(radial.weights.iter_mut()) {
            *w *= r * r;
        }
        let polar = gauss_legendre(polar_order, (-1.0, 1.0))?;
        Ok(Self { radial, polar, azimuth_order, scale: radius })
    }

    pub fn radius(&self) -> f64 {
        self.scale
    }

    pub fn radial_order(&self) -> usize {
        self.radial.len()
    }

    pub fn polar_order(&self) -> usize {
        self.polar.len()
    }

    pub fn azimuth_order(&self) -> usize {
        self.azimuth_order
    }

    /// Radial nodes with `r^2`-weighted weights.
    pub fn radial(&self) -> &Rule1D {
        &self.radial
    }

    /// Nodes in `cos(polar)` on `[-1, 1]`.
    pub fn polar(&self) -> &Rule1D {
        &self.polar
    }

    pub fn azimuth_nodes(&self) -> Vec<f64> {
        (0..self.azimuth_order)
            .map(|j| 2.0 * PI * j as f64 / self.azimuth_order as f64)
            .collect()
    }

    pub fn azimuth_weight(&self) -> f64 {
        2.0 * PI / self.azimuth_order as f64
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.polar.len() * self.azimuth_order
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Iterates `(spherical point, weight)` with the radial index slowest and
    /// the azimuth index fastest.
    pub fn iter(&self) -> impl Iterator<Item = (SphericalPoint, f64)> + '_ {
        let az = self.azimuth_nodes();
        let waz = self.azimuth_weight();
        self.radial.iter().flat_map(move |(r, wr)| {
            let az = az.clone();
            self.polar.iter().flat_map(move |(x, wp)| {
                let polar = x.acos();
                az.clone().into_iter().map(move |a| {
                    (SphericalPoint { r, polar, azimuth: a }, wr * wp * waz)
                })
            })
        })
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        self.iter().map(|(p, _)| p.to_cartesian()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.iter().map(|(_, w)| w).collect()
    }

    /// Integrates `f` given in Cartesian coordinates.
    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p.to_cartesian())).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{besinc_radial, spherical_harmonic, HarmonicIndex};
    use num_complex::Complex64;

    #[test]
    fn small_rules() {
        let r1 = gauss_legendre(1, (-1.0, 1.0)).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert!((r1.weights[0] - 2.0).abs() < 1e-15);
        let r2 = gauss_legendre(2, (-1.0, 1.0)).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r2.nodes[0] + s).abs() < 1e-15 && (r2.nodes[1] - s).abs() < 1e-15);
        assert!((r2.weights[0] - 1.0).abs() < 1e-15 && (r2.weights[1] - 1.0).abs() < 1e-15);
        let r3 = gauss_legendre(3, (-1.0, 1.0)).unwrap();
        assert!((r3.integrate(|x| x.powi(4)) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(gauss_legendre(0, (-1.0, 1.0)).is_err());
        assert!(ball_rule(0, 3, 3).is_err());
        assert!(ball_rule(3, 3, 0).is_err());
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 5, 64, 257, 600] {
            let rule = gauss_legendre(n, (0.0, 1.0)).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "n={n}: {total}");
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(rule.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn polynomial_exactness() {
        let n = 9;
        let rule = gauss_legendre(n, (-0.5, 2.0)).unwrap();
        for deg in 0..2 * n {
            let exact = (2f64.powi(deg as i32 + 1) - (-0.5f64).powi(deg as i32 + 1)) / (deg + 1) as f64;
            let got = rule.integrate(|x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-12 * exact.abs().max(1.0), "deg {deg}");
        }
    }

    #[test]
    fn composite_rule_integrates_peaked_function() {
        let rule = composite_gauss_legendre(40, 12, (0.0, 10.0)).unwrap();
        assert_eq!(rule.len(), 480);
        let got = rule.integrate(|x| (-(x - 3.0) * (x - 3.0) * 50.0).exp());
        let exact = (PI / 50.0).sqrt();
        assert!((got - exact).abs() < 1e-13);
        assert!(composite_gauss_legendre(0, 4, (0.0, 1.0)).is_err());
    }

    #[test]
    fn ball_volume_and_moment() {
        let rule = ball_rule(4, 4, 8).unwrap();
        let vol: f64 = rule.weights().iter().sum();
        assert!((vol - 4.0 * PI / 3.0).abs() < 1e-13);
        let m2 = rule.integrate(|x| x[0] * x[0]);
        assert!((m2 - 4.0 * PI / 15.0).abs() < 1e-13);
        assert!(rule.points().iter().all(|p| p.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-15));
    }

    #[test]
    fn ball_integral_of_besinc_matches_radial_reduction() {
        let c = 3.0;
        let rule = ball_rule(30, 16, 16).unwrap();
        let ball = rule.integrate(|x| besinc_radial(c, (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()));
        let radial = gauss_legendre(40, (0.0, 1.0)).unwrap();
        let reduced = 4.0 * PI * radial.integrate(|r| r * r * besinc_radial(c, r));
        assert!((ball - reduced).abs() < 1e-10);
    }

    #[test]
    fn ball_rule_self_convergence_on_gaussian() {
        let f = |x: [f64; 3]| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
        let coarse = ball_rule(12, 12, 24).unwrap().integrate(f);
        let fine = ball_rule(24, 24, 48).unwrap().integrate(f);
        assert!((coarse - fine).abs() < 1e-12);
    }

    #[test]
    fn harmonic_products_are_orthonormal_under_ball_rule() {
        let rule = ball_rule(22, 24, 48).unwrap();
        let pts: Vec<_> = rule.iter().collect();
        let mut indices = Vec::new();
        for n in [0u32, 3, 7, 20] {
            for m in [-(n as i32), 0, n as i32 / 2] {
                indices.push(HarmonicIndex::new(n, m).unwrap());
            }
        }
        for a in &indices {
            for b in &indices {
                let power = (a.degree + b.degree) as i32;
                let mut acc = Complex64::new(0.0, 0.0);
                for (p, w) in &pts {
                    let sa = spherical_harmonic(*a, *p).unwrap();
                    let sb = spherical_harmonic(*b, *p).unwrap();
                    acc += sa * sb.conj() * p.r.powi(power) * *w;
                }
                let expected = if a == b { 1.0 / (power as f64 + 3.0) } else { 0.0 };
                assert!((acc - expected).norm() < 1e-10, "{a:?} {b:?}: {acc}");
            }
        }
    }
}
