//! Test elements `F` of the group algebra, carried as finite tables of
//! partial Fourier data
//!
//! `Ĝ(m, z, α) = Σ_s c_{m,s}(α) e^{is·arg z} g_{m,s}(|z|)`,
//!
//! where `Ĝ(m, ·, ·)` is the `m`-th torus coefficient (normalized Haar
//! measure) of the central Fourier transform `F̂³(θ, z, α)`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{disk_quadrature_polar, DEFAULT_ORDER, MAX_SUPPORT};

/// Radial factor `g(ρ)` of a component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `Σ_i coeffs[i] ρ^{2i} e^{-rate ρ²}` on `[0, cutoff]`, zero beyond.
    GaussianPoly {
        coeffs: Vec<f64>,
        rate: f64,
        cutoff: f64,
    },
    /// `height · exp(1 - 1/(1-t²))` with `t` the affine image of `ρ ∈ (inner, outer)` in `(-1, 1)`.
    SmoothBump { inner: f64, outer: f64, height: f64 },
}

impl RadialProfile {
    pub fn gaussian(coeffs: Vec<f64>, rate: f64) -> Self {
        Self::GaussianPoly {
            coeffs,
            rate,
            cutoff: 6.0,
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            Self::GaussianPoly {
                coeffs,
                rate,
                cutoff,
            } => {
                if rho > *cutoff || rho < 0.0 {
                    return 0.0;
                }
                let r2 = rho * rho;
                let poly = coeffs.iter().rev().fold(0.0, |acc, &c| acc * r2 + c);
                poly * (-rate * r2).exp()
            }
            Self::SmoothBump {
                inner,
                outer,
                height,
            } => {
                if rho <= *inner || rho >= *outer {
                    return 0.0;
                }
                let t = (2.0 * rho - inner - outer) / (outer - inner);
                height * (1.0 - 1.0 / (1.0 - t * t)).exp()
            }
        }
    }

    /// Closed interval outside of which the profile vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::GaussianPoly { cutoff, .. } => (0.0, *cutoff),
            Self::SmoothBump { inner, outer, .. } => (*inner, *outer),
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.support();
        if !(a >= 0.0 && b > a && b <= MAX_SUPPORT) {
            return Err(Error::InvalidInput(format!(
                "radial support [{a}, {b}] must lie in [0, {MAX_SUPPORT}]"
            )));
        }
        let finite = match self {
            Self::GaussianPoly { coeffs, rate, .. } => {
                coeffs.iter().all(|c| c.is_finite()) && rate.is_finite() && *rate >= 0.0
            }
            Self::SmoothBump { height, .. } => height.is_finite(),
        };
        if !finite {
            return Err(Error::InvalidInput("non-finite radial profile parameter".into()));
        }
        Ok(())
    }
}

/// Dependence `c(α)` of a component on the central parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaProfile {
    /// `c(α) = value`.
    Constant { value: Complex64 },
    /// `c(α) = value · e^{-(α/width)²}`.
    GaussianInAlpha { value: Complex64, width: f64 },
    /// `c(α) = value · (1 + slope·α)`, times `e^{-(α/width)²}` when a width is given.
    LinearRamp {
        value: Complex64,
        slope: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
    },
}

impl AlphaProfile {
    pub fn constant(value: Complex64) -> Self {
        Self::Constant { value }
    }

    pub fn eval(&self, alpha: f64) -> Complex64 {
        match self {
            Self::Constant { value } => *value,
            Self::GaussianInAlpha { value, width } => *value * (-(alpha / width).powi(2)).exp(),
            Self::LinearRamp { value, slope, width } => {
                let envelope = width.map_or(1.0, |w| (-(alpha / w).powi(2)).exp());
                *value * ((1.0 + slope * alpha) * envelope)
            }
        }
    }

    fn value(&self) -> Complex64 {
        match self {
            Self::Constant { value }
            | Self::GaussianInAlpha { value, .. }
            | Self::LinearRamp { value, .. } => *value,
        }
    }

    fn with_value(&self, value: Complex64) -> Self {
        match self {
            Self::Constant { .. } => Self::Constant { value },
            Self::GaussianInAlpha { width, .. } => Self::GaussianInAlpha {
                value,
                width: *width,
            },
            Self::LinearRamp { slope, width, .. } => Self::LinearRamp {
                value,
                slope: *slope,
                width: *width,
            },
        }
    }

    /// The profile `α ↦ c(-α)`.
    pub fn reflected(&self) -> Self {
        match self {
            Self::LinearRamp { value, slope, width } => Self::LinearRamp {
                value: *value,
                slope: -slope,
                width: *width,
            },
            other => other.clone(),
        }
    }

    /// Upper bound for `|c(α)|` over `|α| ≤ alpha_max`.
    pub fn sup_abs(&self, alpha_max: f64) -> f64 {
        match self {
            Self::Constant { value } | Self::GaussianInAlpha { value, .. } => value.norm(),
            // |slope·α| e^{-(α/w)²} ≤ |slope| w.
            Self::LinearRamp { value, slope, width } => {
                value.norm() * (1.0 + slope.abs() * width.map_or(alpha_max, |w| w.min(alpha_max)))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let v = self.value();
        let ok = v.re.is_finite()
            && v.im.is_finite()
            && match self {
                Self::Constant { .. } => true,
                Self::GaussianInAlpha { width, .. } => width.is_finite() && *width > 0.0,
                Self::LinearRamp { slope, width, .. } => {
                    slope.is_finite() && width.is_none_or(|w| w.is_finite() && w > 0.0)
                }
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("invalid alpha profile parameter".into()))
        }
    }
}

/// One term `c(α) e^{is·arg z} g(|z|)` of the torus mode `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub m: i64,
    pub s: i64,
    pub alpha_profile: AlphaProfile,
    pub radial_profile: RadialProfile,
}

impl Component {
    pub fn eval(&self, z: Complex64, alpha: f64) -> Complex64 {
        let rho = z.norm();
        let g = self.radial_profile.eval(rho);
        if g == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let phase = Complex64::from_polar(1.0, self.s as f64 * z.im.atan2(z.re));
        self.alpha_profile.eval(alpha) * phase * g
    }
}

/// A finite table of components; repeated `(m, s)` pairs add.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestFunction {
    pub components: Vec<Component>,
}

/// Largest angular mode accepted in a component table.
pub const MAX_ANGULAR_MODE: i64 = 64;

impl TestFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(components: Vec<Component>) -> Result<Self> {
        let f = Self { components };
        f.validate()?;
        Ok(f)
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            if c.s.abs() > MAX_ANGULAR_MODE {
                return Err(Error::InvalidInput(format!(
                    "angular mode s = {} exceeds {MAX_ANGULAR_MODE}",
                    c.s
                )));
            }
            c.alpha_profile.validate()?;
            c.radial_profile.validate()?;
        }
        Ok(())
    }

    /// Components contributing to torus mode `m`.
    pub fn mode(&self, m: i64) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(move |c| c.m == m)
    }

    /// Sorted set of torus modes present.
    pub fn modes(&self) -> BTreeSet<i64> {
        self.components.iter().map(|c| c.m).collect()
    }

    pub fn max_torus_mode(&self) -> i64 {
        self.components.iter().map(|c| c.m.abs()).max().unwrap_or(0)
    }

    pub fn max_angular_mode(&self) -> i64 {
        self.components.iter().map(|c| c.s.abs()).max().unwrap_or(0)
    }

    /// Radius of a disk containing every radial support.
    pub fn support_radius(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.radial_profile.support().1)
            .fold(0.0, f64::max)
    }

    /// `Ĝ(m, z, α)`.
    pub fn eval_g(&self, m: i64, z: Complex64, alpha: f64) -> Complex64 {
        self.mode(m).map(|c| c.eval(z, alpha)).sum()
    }

    /// `F̂³(θ, z, α) = Σ_m e^{-imθ} Ĝ(m, z, α)`.
    pub fn eval_f3(&self, theta: f64, z: Complex64, alpha: f64) -> Complex64 {
        self.components
            .iter()
            .map(|c| Complex64::from_polar(1.0, -(c.m as f64) * theta) * c.eval(z, alpha))
            .sum()
    }

    /// `∫_ℂ e^{-i Re(v z̄)} Ĝ(m, z, 0) dz`, by brute-force polar quadrature.
    pub fn eval_g_fourier_z(&self, m: i64, v: Complex64) -> Result<Complex64> {
        self.eval_g_fourier_z_with(m, v, DEFAULT_ORDER)
    }

    /// [`Self::eval_g_fourier_z`] with an explicit radial order.
    pub fn eval_g_fourier_z_with(&self, m: i64, v: Complex64, order: usize) -> Result<Complex64> {
        let comps: Vec<&Component> = self.mode(m).collect();
        if comps.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let radius = comps
            .iter()
            .map(|c| c.radial_profile.support().1)
            .fold(0.0, f64::max);
        let s_max = comps.iter().map(|c| c.s.abs()).max().unwrap_or(0) as f64;
        let angles = ((2.0 * (v.norm() * radius + s_max) + 48.0).ceil() as usize).max(4 * order);
        disk_quadrature_polar(
            |z| {
                let kernel = Complex64::from_polar(1.0, -(v * z.conj()).re);
                kernel * comps.iter().map(|c| c.eval(z, 0.0)).sum::<Complex64>()
            },
            radius,
            order,
            angles,
        )
    }

    /// Concatenation of component tables (pointwise sum of `Ĝ`).
    pub fn sum(&self, other: &TestFunction) -> TestFunction {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        TestFunction { components }
    }

    /// Multiply every amplitude by `k`.
    pub fn scaled(&self, k: Complex64) -> TestFunction {
        TestFunction {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    alpha_profile: c.alpha_profile.with_value(c.alpha_profile.value() * k),
                    ..c.clone()
                })
                .collect(),
        }
    }

    /// Component table of the group-algebra adjoint `F*`.
    ///
    /// The term `(m, s, c)` maps to `(m - s, -s, (-1)^s c̄)` with the same
    /// radial profile, so `π(F*) = π(F)^†` in every representation.
    pub fn adjoint(&self) -> TestFunction {
        TestFunction {
            components: self
                .components
                .iter()
                .map(|c| {
                    let sign = if c.s.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    Component {
                        m: c.m - c.s,
                        s: -c.s,
                        alpha_profile: c
                            .alpha_profile
                            .with_value(c.alpha_profile.value().conj() * sign),
                        radial_profile: c.radial_profile.clone(),
                    }
                })
                .collect(),
        }
    }

    /// Component table of `F∘τ` for the automorphism `τ(θ, z, t) = (-θ, z̄, -t)`,
    /// that is `Ĝ_τ(m, z, α) = Ĝ(-m, z̄, -α)`.
    pub fn reflect(&self) -> TestFunction {
        TestFunction {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    m: -c.m,
                    s: -c.s,
                    alpha_profile: c.alpha_profile.reflected(),
                    radial_profile: c.radial_profile.clone(),
                })
                .collect(),
        }
    }

    /// `∫_ℂ |c_{m,s}(α) g_{m,s}| dz` summed over components with the given modes.
    pub fn component_l1(&self, m: i64, s: i64, alpha: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.m == m && c.s == s)
            .map(|c| c.alpha_profile.eval(alpha).norm() * radial_abs_integral(&c.radial_profile))
            .sum()
    }

    /// Majorant of `sup ‖γ(F)‖` over all points `γ` with central parameter
    /// `|α| ≤ alpha_max` (boundary points and characters included):
    /// `Σ sup|c(α)| ∫|g(|z|)| dz` over the components.
    pub fn fourier_sup_bound(&self, alpha_max: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.alpha_profile.sup_abs(alpha_max) * radial_abs_integral(&c.radial_profile))
            .sum()
    }

    /// Decay constant `C_F = Σ_s sup_m (1+|m|) ∫|c_{m,s}(α) g_{m,s}| dz`.
    ///
    /// Each angular mode `s` fills one band of the matrix of `π_{λ,α}(F)`,
    /// with entries bounded by the L¹ norm of the component, so the columns
    /// beyond `|j| > M` have norm at most `C_F/(1+M)`.
    pub fn decay_constant(&self, alpha: f64) -> f64 {
        let pairs: BTreeSet<(i64, i64)> = self.components.iter().map(|c| (c.s, c.m)).collect();
        let mut by_s: std::collections::BTreeMap<i64, f64> = Default::default();
        for (s, m) in pairs {
            let v = (1.0 + m.abs() as f64) * self.component_l1(m, s, alpha);
            let e = by_s.entry(s).or_insert(0.0);
            *e = e.max(v);
        }
        by_s.values().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: TestFunction = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// `2π ∫ |g(ρ)| ρ dρ`.
pub fn radial_abs_integral(g: &RadialProfile) -> f64 {
    let rule = crate::quad::profile_rule(g, DEFAULT_ORDER).expect("validated support");
    2.0 * PI * rule.integrate(|r| g.eval(r).abs() * r)
}

fn push_pair(out: &mut Vec<Component>, m: i64, s: i64, alpha: AlphaProfile, g: RadialProfile) {
    let c = Component {
        m,
        s,
        alpha_profile: alpha,
        radial_profile: g,
    };
    let partner = TestFunction {
        components: vec![c.clone()],
    }
    .adjoint()
    .components
    .remove(0);
    out.push(c);
    out.push(partner);
}

/// Deterministic corpus of self-adjoint test functions with `|m| ≤ 3`,
/// `|s| ≤ 2` and Gaussian-polynomial profiles supported in `|z| ≤ 6`.
///
/// Seed 0 is the radial Gaussian `e^{-|z|²}` in mode `(0,0)`. Seed 1 adds
/// angular modes `s = ±1, ±2`. Seed 2 makes the amplitudes depend on `α`.
/// Larger seeds are random self-adjoint tables.
pub fn canonical_family(seed: u64) -> TestFunction {
    let base = Component {
        m: 0,
        s: 0,
        alpha_profile: AlphaProfile::constant(Complex64::new(1.0, 0.0)),
        radial_profile: RadialProfile::gaussian(vec![1.0], 1.0),
    };
    let mut comps = Vec::new();
    match seed {
        0 => comps.push(base),
        1 => {
            comps.push(base);
            push_pair(
                &mut comps,
                1,
                1,
                AlphaProfile::constant(Complex64::new(0.3, 0.2)),
                RadialProfile::gaussian(vec![0.0, 1.0], 1.0),
            );
            push_pair(
                &mut comps,
                -1,
                2,
                AlphaProfile::constant(Complex64::new(0.15, -0.1)),
                RadialProfile::gaussian(vec![0.5, 0.2], 1.2),
            );
        }
        2 => {
            comps.push(Component {
                alpha_profile: AlphaProfile::LinearRamp {
                    value: Complex64::new(1.0, 0.0),
                    slope: -3.0,
                    width: Some(4.0),
                },
                radial_profile: RadialProfile::gaussian(vec![1.0, 0.5], 1.0),
                ..base
            });
            push_pair(
                &mut comps,
                2,
                1,
                AlphaProfile::GaussianInAlpha {
                    value: Complex64::new(0.2, -0.1),
                    width: 0.05,
                },
                RadialProfile::gaussian(vec![0.0, 1.0], 0.9),
            );
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            comps.push(Component {
                alpha_profile: AlphaProfile::constant(Complex64::new(rng.random_range(0.5..1.5), 0.0)),
                radial_profile: random_profile(&mut rng),
                ..base
            });
            let pairs = rng.random_range(1..=3);
            for _ in 0..pairs {
                let s: i64 = rng.random_range(-2..=2);
                let lo = (-3i64).max(-3 + s);
                let hi = 3i64.min(3 + s);
                let m = rng.random_range(lo..=hi);
                let g = random_profile(&mut rng);
                if s == 0 {
                    comps.push(Component {
                        m,
                        s,
                        alpha_profile: AlphaProfile::constant(Complex64::new(
                            rng.random_range(-0.5..0.5),
                            0.0,
                        )),
                        radial_profile: g,
                    });
                } else {
                    let c = Complex64::new(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
                    push_pair(&mut comps, m, s, AlphaProfile::constant(c), g);
                }
            }
        }
    }
    TestFunction { components: comps }
}

fn random_profile(rng: &mut ChaCha8Rng) -> RadialProfile {
    let n = rng.random_range(1..=3);
    let coeffs = (0..n).map(|_| rng.random_range(-0.5..1.0)).collect();
    RadialProfile::gaussian(coeffs, rng.random_range(0.8..1.5))
}

/// Self-adjoint test function with infinitely many torus modes in spirit:
/// amplitudes decay like `1/(1+|m|)` for `|m| ≤ max_mode`, so the columns of
/// `π_{λ,α}(F)` beyond `|j| > √λ` carry mass of order `1/√λ`.
pub fn tail_family(max_mode: i64) -> TestFunction {
    let mut comps = Vec::new();
    for m in -max_mode..=max_mode {
        let w = 1.0 / (1.0 + m.abs() as f64);
        comps.push(Component {
            m,
            s: 0,
            alpha_profile: AlphaProfile::constant(Complex64::new(w, 0.0)),
            radial_profile: RadialProfile::gaussian(vec![1.0], 1.0),
        });
        push_pair(
            &mut comps,
            m,
            1,
            AlphaProfile::constant(Complex64::new(0.0, 0.3 * w)),
            RadialProfile::gaussian(vec![0.0, 1.0], 1.0),
        );
    }
    TestFunction { components: comps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::TorusRule;
    use crate::special::bessel_j_series;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(m: i64, s: i64) -> TestFunction {
        TestFunction {
            components: vec![Component {
                m,
                s,
                alpha_profile: AlphaProfile::constant(Complex64::new(1.0, 0.0)),
                radial_profile: RadialProfile::gaussian(vec![1.0], 1.0),
            }],
        }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(TestFunction::zero().eval_g(0, Complex64::new(0.3, 0.1), 0.2), Complex64::new(0.0, 0.0));
        let f = single(1, 0);
        let v = f.eval_g(1, Complex64::new(1.0, 0.0), 0.3);
        assert_abs_diff_eq!(v.re, (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(f.eval_g(0, Complex64::new(1.0, 0.0), 0.3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn torus_round_trip() {
        for seed in 0..6 {
            let f = canonical_family(seed);
            let rule = TorusRule::new(32);
            let z = Complex64::new(0.7, -0.4);
            for m in -4..=4 {
                let back = rule.integrate(|t| Complex64::from_polar(1.0, m as f64 * t) * f.eval_f3(t, z, 0.01));
                let direct = f.eval_g(m, z, 0.01);
                assert!((back - direct).norm() < 1e-14, "seed {seed} m {m}");
            }
        }
    }

    #[test]
    fn fourier_z_at_zero_frequency() {
        assert_eq!(
            TestFunction::zero().eval_g_fourier_z(0, Complex64::new(1.0, 2.0)).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let f = canonical_family(1);
        // Mode 0 carries s = 0 and s = -1; only s = 0 survives at v = 0.
        let v0 = f.eval_g_fourier_z(0, Complex64::new(0.0, 0.0)).unwrap();
        let want = crate::quad::radial_moment(0, 0, 0.0, &RadialProfile::gaussian(vec![1.0], 1.0)).unwrap();
        assert!((v0 - want).norm() < 1e-12);
    }

    #[test]
    fn fourier_z_angular_mode_one_is_hankel() {
        let f = single(2, 1);
        let g = RadialProfile::gaussian(vec![1.0], 1.0);
        let rule = crate::quad::RadialRule::on_interval(0.0, 6.0, 16);
        for k in 0..8 {
            let v = Complex64::from_polar(0.25 + 0.4 * k as f64, 0.7 * k as f64 - 1.0);
            let x = v.norm();
            let hankel = rule.integrate(|r| g.eval(r) * bessel_j_series(1, x * r).unwrap() * r);
            let want = Complex64::new(0.0, -2.0 * PI) * Complex64::from_polar(1.0, v.arg()) * hankel;
            let got = f.eval_g_fourier_z(2, v).unwrap();
            assert!((got - want).norm() < 1e-11, "{got} vs {want}");
        }
    }

    #[test]
    fn canonical_seeds_are_self_adjoint_tables() {
        for seed in 0..10 {
            let f = canonical_family(seed);
            assert!(f.max_torus_mode() <= 3 && f.max_angular_mode() <= 2);
            assert!(f.support_radius() <= 6.0);
            let fa = f.adjoint();
            let z = Complex64::new(0.4, 1.1);
            for m in -4..=4 {
                assert!((f.eval_g(m, z, 0.03) - fa.eval_g(m, z, 0.03)).norm() < 1e-14);
            }
        }
        assert_eq!(canonical_family(7), canonical_family(7));
    }

    #[test]
    fn reflect_and_adjoint_are_involutions() {
        let f = canonical_family(2);
        let z = Complex64::new(-0.3, 0.8);
        for m in -4..=4 {
            assert!((f.reflect().reflect().eval_g(m, z, 0.1) - f.eval_g(m, z, 0.1)).norm() < 1e-15);
            assert!((f.reflect().eval_g(m, z, 0.1) - f.eval_g(-m, z.conj(), -0.1)).norm() < 1e-14);
        }
        let g = canonical_family(5);
        assert_eq!(g.adjoint().adjoint(), g);
    }

    #[test]
    fn json_round_trip() {
        let f = canonical_family(2);
        let text = f.to_json().unwrap();
        assert_eq!(TestFunction::from_json(&text).unwrap(), f);
        assert!(text.contains("\"components\""));
        assert!(text.contains("gaussian_in_alpha"));
        let bad = r#"{"components":[{"m":0,"s":0,"alpha_profile":{"kind":"constant","value":[1,0]},
            "radial_profile":{"kind":"gaussian_poly","coeffs":[1],"rate":1,"cutoff":30}}]}"#;
        assert!(TestFunction::from_json(bad).is_err());
    }

    #[test]
    fn bump_profile_is_smooth_and_supported() {
        let b = RadialProfile::SmoothBump {
            inner: 1.0,
            outer: 3.0,
            height: 2.0,
        };
        assert_eq!(b.eval(0.5), 0.0);
        assert_eq!(b.eval(3.0), 0.0);
        assert_abs_diff_eq!(b.eval(2.0), 2.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn eval_g_is_linear(seed_a in 0u64..20, seed_b in 0u64..20, re in -2.0..2.0f64, im in -2.0..2.0f64,
                            x in -3.0..3.0f64, y in -3.0..3.0f64, m in -3i64..=3) {
            let a = canonical_family(seed_a);
            let b = canonical_family(seed_b);
            let k = Complex64::new(re, im);
            let z = Complex64::new(x, y);
            let lhs = a.scaled(k).sum(&b).eval_g(m, z, 0.02);
            let rhs = k * a.eval_g(m, z, 0.02) + b.eval_g(m, z, 0.02);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
