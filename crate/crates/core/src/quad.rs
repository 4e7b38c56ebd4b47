//! Deterministic quadrature rules: equispaced torus rules (normalized Haar
//! measure), composite Gauss–Legendre rules on radial intervals, and a
//! polar tensor rule on disks used by the brute-force oracles.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::testfn::RadialProfile;

/// Default number of Gauss–Legendre points per radial panel.
pub const DEFAULT_ORDER: usize = 16;

/// Panels never exceed this width, so the rule resolves features of size ~0.1.
pub const PANEL_WIDTH: f64 = 0.5;

/// Largest radial support accepted by [`radial_moment`].
pub const MAX_SUPPORT: f64 = 20.0;

/// Composite Gauss–Legendre rule on an interval `[a, b] ⊂ [0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl RadialRule {
    /// `panels` equal panels with `order` Gauss–Legendre points each.
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Self {
        assert!(b >= a && a >= 0.0, "invalid radial interval [{a}, {b}]");
        let order = order.max(1);
        let panels = panels.max(1);
        let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("order ≥ 1"));
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for &(x, w) in gl.as_node_weight_pairs() {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        Self {
            nodes,
            weights,
            order,
        }
    }

    /// Composite rule with panels no wider than [`PANEL_WIDTH`].
    pub fn on_interval(a: f64, b: f64, order: usize) -> Self {
        let panels = ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
        Self::composite(a, b, panels, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `N` equispaced angles on `[0, 2π)` with weight `1/N` each.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusRule {
    pub points: Vec<f64>,
    pub weight: f64,
}

impl TorusRule {
    pub fn new(n: usize) -> Self {
        let n = n.max(1);
        Self {
            points: (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect(),
            weight: 1.0 / n as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Normalized-Haar average of `f` over the torus.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &t in &self.points {
            acc += f(t);
        }
        acc * self.weight
    }
}

/// Radial rule adapted to the support and shape of a profile.
pub fn profile_rule(g: &RadialProfile, order: usize) -> Result<RadialRule> {
    let (r0, r1) = g.support();
    if r1 > MAX_SUPPORT {
        return Err(Error::DomainError(format!(
            "radial profile support [{r0}, {r1}] exceeds {MAX_SUPPORT}"
        )));
    }
    match g {
        // The flat edges of a bump need finer panels than a Gaussian.
        RadialProfile::SmoothBump { .. } => {
            let panels = ((r1 - r0) / (0.1 * PANEL_WIDTH)).ceil().max(1.0) as usize;
            Ok(RadialRule::composite(r0, r1, panels, order))
        }
        RadialProfile::GaussianPoly { .. } => Ok(RadialRule::on_interval(r0, r1, order)),
    }
}

/// `2π ∫_0^∞ ρ^{2q+s} e^{-aρ²} g(ρ) ρ dρ`.
///
/// `a = 0` is allowed (the integral runs over the compact support of `g`).
pub fn radial_moment(q: u64, s: i64, a: f64, g: &RadialProfile) -> Result<f64> {
    if 2 * q as i64 + s < 0 {
        return Err(Error::DomainError(format!(
            "radial moment with negative power 2q+s = {}",
            2 * q as i64 + s
        )));
    }
    let rule = profile_rule(g, DEFAULT_ORDER)?;
    let p = (2 * q as i64 + s + 1) as i32;
    Ok(2.0 * PI * rule.integrate(|rho| rho.powi(p) * (-a * rho * rho).exp() * g.eval(rho)))
}

/// The sequence of radial moments `q ↦ 2π ∫ ρ^{2q+s} e^{-aρ²} g ρ dρ` for
/// `q = q0, q0+1, …`, together with the same moments of `|g|`.
///
/// Node values are cached so each further moment costs one pass over the
/// nodes.
#[derive(Debug, Clone)]
pub struct RadialMomentSeq {
    base: Vec<f64>,
    abs_base: Vec<f64>,
    rho2: Vec<f64>,
    /// Largest node, bounding `ρ²` on the support.
    pub r_max: f64,
}

impl RadialMomentSeq {
    pub fn new(q0: u64, s: i64, a: f64, g: &RadialProfile) -> Result<Self> {
        if 2 * q0 as i64 + s < 0 {
            return Err(Error::DomainError("negative radial power".into()));
        }
        let rule = profile_rule(g, DEFAULT_ORDER)?;
        let p = (2 * q0 as i64 + s + 1) as i32;
        let mut base = Vec::with_capacity(rule.len());
        let mut abs_base = Vec::with_capacity(rule.len());
        let mut rho2 = Vec::with_capacity(rule.len());
        for (&rho, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = 2.0 * PI * w * rho.powi(p) * (-a * rho * rho).exp() * g.eval(rho);
            base.push(v);
            abs_base.push(v.abs());
            rho2.push(rho * rho);
        }
        Ok(Self {
            base,
            abs_base,
            rho2,
            r_max: g.support().1,
        })
    }

    /// Current `(moment, moment of |g|)`, then advance `q` by one.
    pub fn next_pair(&mut self) -> (f64, f64) {
        let m: f64 = self.base.iter().sum();
        let am: f64 = self.abs_base.iter().sum();
        for ((b, ab), r2) in self.base.iter_mut().zip(&mut self.abs_base).zip(&self.rho2) {
            *b *= r2;
            *ab *= r2;
        }
        (m, am)
    }
}

/// Polar tensor rule for `∫_{|z| ≤ R} f(z) dx dy`.
///
/// Uses [`RadialRule::on_interval`] with `order` points per panel and a
/// [`TorusRule`] with `max(4·order, 16)` angles.
pub fn disk_quadrature_2d<F>(f: F, r: f64, order: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    disk_quadrature_polar(f, r, order, (4 * order).max(16))
}

/// [`disk_quadrature_2d`] with an explicit angular node count.
pub fn disk_quadrature_polar<F>(f: F, r: f64, order: usize, angles: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("disk radius {r}")));
    }
    let radial = RadialRule::on_interval(0.0, r, order);
    let torus = TorusRule::new(angles);
    let units: Vec<Complex64> = torus
        .points
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (&rho, &w) in radial.nodes.iter().zip(&radial.weights) {
        let mut ring = Complex64::new(0.0, 0.0);
        for u in &units {
            let v = f(u * rho);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite sample at z = {}",
                    u * rho
                )));
            }
            ring += v;
        }
        acc += ring * (w * rho * torus.weight);
    }
    Ok(acc * (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_factorial;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn flat(cutoff: f64) -> RadialProfile {
        RadialProfile::GaussianPoly {
            coeffs: vec![1.0],
            rate: 0.0,
            cutoff,
        }
    }

    #[test]
    fn gaussian_moments_closed_form() {
        let rule = RadialRule::on_interval(0.0, 20.0, DEFAULT_ORDER);
        for q in 0..=(2 * DEFAULT_ORDER as i32) {
            for &a in &[0.5, 1.0, 2.0] {
                let got = rule.integrate(|r| r.powi(2 * q + 1) * (-a * r * r).exp());
                let want = (ln_factorial(q as u64) - (q as f64 + 1.0) * f64::ln(a)).exp() / 2.0;
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn radial_moment_examples() {
        assert_relative_eq!(radial_moment(0, 0, 1.0, &flat(20.0)).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(
            radial_moment(1, 0, 0.25, &flat(20.0)).unwrap(),
            16.0 * PI,
            max_relative = 1e-10
        );
        assert!(radial_moment(0, 0, 1.0, &flat(25.0)).is_err());
    }

    #[test]
    fn radial_moment_bump_matches_trapezoid() {
        let bump = RadialProfile::SmoothBump {
            inner: 1.0,
            outer: 3.0,
            height: 1.0,
        };
        let got = radial_moment(2, 1, 0.5, &bump).unwrap();
        let n = 100_000;
        let h = 2.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let r = 1.0 + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * r.powi(6) * (-0.5 * r * r).exp() * bump.eval(r);
        }
        let want = 2.0 * PI * acc * h;
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    #[test]
    fn moment_sequence_matches_direct() {
        let g = RadialProfile::GaussianPoly {
            coeffs: vec![0.3, -0.2, 0.05],
            rate: 1.2,
            cutoff: 6.0,
        };
        let mut seq = RadialMomentSeq::new(1, -1, 0.01, &g).unwrap();
        for q in 1..12 {
            let (m, am) = seq.next_pair();
            let direct = radial_moment(q, -1, 0.01, &g).unwrap();
            assert_relative_eq!(m, direct, max_relative = 1e-12, epsilon = 1e-300);
            assert!(am >= m.abs() * (1.0 - 1e-14));
        }
    }

    #[test]
    fn disk_examples() {
        let one = disk_quadrature_2d(|_| Complex64::new(1.0, 0.0), 1.0, 16).unwrap();
        assert!((one - PI).norm() < 1e-12);
        let odd = disk_quadrature_2d(|z| z, 1.0, 16).unwrap();
        assert!(odd.norm() < 1e-12);
        let g = disk_quadrature_2d(|z| Complex64::new((-z.norm_sqr()).exp(), 0.0), 8.0, 16).unwrap();
        assert!((g - PI * (1.0 - (-64.0f64).exp())).norm() < 1e-10);
        let bad = disk_quadrature_2d(|_| Complex64::new(f64::NAN, 0.0), 1.0, 4);
        assert!(matches!(bad, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn disk_order_doubling_plateau() {
        let f = |z: Complex64| {
            let r2 = z.norm_sqr();
            Complex64::new(0.0, 1.3 * z.re).exp() * (1.0 + 0.5 * r2) * (-r2).exp()
        };
        let a = disk_quadrature_2d(f, 6.0, 16).unwrap();
        let b = disk_quadrature_2d(f, 6.0, 32).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn torus_rule_annihilates_modes(n in 2usize..64, m in 1i64..64) {
            prop_assume!((m as usize) < n);
            let rule = TorusRule::new(n);
            let v = rule.integrate(|t| Complex64::from_polar(1.0, m as f64 * t));
            prop_assert!(v.norm() < 1e-13);
            let one = rule.integrate(|_| Complex64::new(1.0, 0.0));
            prop_assert!((one - 1.0).norm() < 1e-14);
        }
    }
}
