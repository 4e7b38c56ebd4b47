//! Bessel functions of integer order and the factorial-ratio coefficients
//! that appear in Fock-space matrix elements of the generic representations.
//!
//! Two independent evaluations of `J_n` are provided: the power series
//! (accumulated in double-double arithmetic, so cancellation at moderate
//! arguments does not eat the last digits) and the integral representation
//! `J_n(x) = i^{-n}/π ∫_0^π e^{ix cos θ} cos(nθ) dθ` evaluated with the
//! periodic trapezoid rule. Each is used as the oracle of the other.

use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Largest Bessel order accepted by [`bessel_j_series`] and [`bessel_j_integral`].
pub const BESSEL_ORDER_CAP: i64 = 512;

/// Largest |x| accepted by the Bessel routines.
pub const BESSEL_ARG_CAP: f64 = 50.0;

const SERIES_REL_TOL: f64 = 1e-17;
const SERIES_TERM_CAP: usize = 10_000;

/// Integer Bessel order, checked against [`BESSEL_ORDER_CAP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BesselOrder(i64);

impl BesselOrder {
    pub fn new(n: i64) -> Result<Self> {
        if n.abs() > BESSEL_ORDER_CAP {
            return Err(Error::OrderOverflow {
                order: n,
                cap: BESSEL_ORDER_CAP,
            });
        }
        Ok(Self(n))
    }

    pub fn get(self) -> i64 {
        self.0
    }
}

fn check_arg(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite Bessel argument {x}")));
    }
    if x.abs() > BESSEL_ARG_CAP {
        return Err(Error::DomainError(format!(
            "Bessel argument |{x}| exceeds {BESSEL_ARG_CAP}"
        )));
    }
    Ok(())
}

/// `J_n(x)` from the power series `(x/2)^n Σ_k (-1)^k (x²/4)^k / (k!(k+n)!)`.
///
/// Negative orders use `J_{-n}(x) = (-1)^n J_n(x)`, applied to the computed
/// value so the symmetry holds bit for bit.
pub fn bessel_j_series(n: i64, x: f64) -> Result<f64> {
    let order = BesselOrder::new(n)?;
    check_arg(x)?;
    let m = order.get().unsigned_abs();
    let value = series_nonneg(m, x)?;
    if order.get() < 0 && m % 2 == 1 {
        Ok(-value)
    } else {
        Ok(value)
    }
}

fn series_nonneg(n: u64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let half = TwoFloat::from(x) / 2.0;
    // (x/2)^n / n! built factor by factor; no intermediate overflow.
    let mut term = TwoFloat::from(1.0);
    for i in 1..=n {
        term = term * half / (i as f64);
    }
    if term.hi() == 0.0 {
        return Ok(0.0);
    }
    let step = -(half * half);
    let mut sum = term;
    let mut running_max = term.hi().abs();
    for k in 1..SERIES_TERM_CAP {
        let kf = k as f64;
        term = term * step / (kf * (kf + n as f64));
        sum += term;
        let mag = term.hi().abs();
        running_max = running_max.max(mag);
        // Terms only shrink once k² exceeds x²/4.
        if mag < SERIES_REL_TOL * running_max && kf * kf > half.hi() * half.hi() {
            return Ok(sum.hi() + sum.lo());
        }
    }
    Err(Error::InternalError(format!(
        "Bessel series J_{n}({x}) did not settle within {SERIES_TERM_CAP} terms"
    )))
}

/// `i^k` for integer `k`, exact.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `J_n(x)` from `i^{-n}/π ∫_0^π e^{ix cos θ} cos(nθ) dθ`.
///
/// The integrand extends to a smooth even 2π-periodic function, so the
/// trapezoid rule converges geometrically once the node count exceeds the
/// bandwidth `|x| + |n|`.
pub fn bessel_j_integral(n: i64, x: f64) -> Result<f64> {
    let order = BesselOrder::new(n)?;
    check_arg(x)?;
    let nf = order.get() as f64;
    let intervals = 2 * (x.abs().ceil() as usize + order.get().unsigned_abs() as usize) + 96;
    let h = std::f64::consts::PI / intervals as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=intervals {
        let theta = k as f64 * h;
        let w = if k == 0 || k == intervals { 0.5 } else { 1.0 };
        acc += Complex64::from_polar(w, x * theta.cos()) * (nf * theta).cos();
    }
    let value = i_pow(-order.get()) * acc * h / std::f64::consts::PI;
    if value.im.abs() >= 1e-12 {
        return Err(Error::QuadratureInconsistency {
            residual: value.im.abs(),
        });
    }
    Ok(value.re)
}

/// A complex number carried as `phase · exp(log_magnitude)` with `|phase| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProductAccumulator {
    pub log_magnitude: f64,
    pub phase: Complex64,
}

impl Default for LogProductAccumulator {
    fn default() -> Self {
        Self::one()
    }
}

impl LogProductAccumulator {
    pub fn one() -> Self {
        Self {
            log_magnitude: 0.0,
            phase: Complex64::new(1.0, 0.0),
        }
    }

    /// Multiply by a nonzero real factor.
    pub fn mul_real(&mut self, x: f64) {
        debug_assert!(x != 0.0 && x.is_finite());
        self.log_magnitude += x.abs().ln();
        if x < 0.0 {
            self.phase = -self.phase;
        }
    }

    /// Multiply by `1 + x` for `x > -1`, keeping precision when `x` is tiny.
    pub fn mul_one_plus(&mut self, x: f64) {
        debug_assert!(x > -1.0);
        self.log_magnitude += x.ln_1p();
    }

    /// Divide by `1 + x` for `x > -1`.
    pub fn div_one_plus(&mut self, x: f64) {
        debug_assert!(x > -1.0);
        self.log_magnitude -= x.ln_1p();
    }

    pub fn add_log(&mut self, log_factor: f64) {
        self.log_magnitude += log_factor;
    }

    pub fn mul_phase(&mut self, unit: Complex64) {
        self.phase *= unit;
    }

    pub fn value(&self) -> Complex64 {
        self.phase * self.log_magnitude.exp()
    }
}

/// Natural log of `n!`, summed directly (exact enough for `n ≤ 10⁴`).
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Coefficient of the `q`-th radial moment in the matrix element
/// `⟨π_{λ,α}(F) b_{j+λ}, b_{l+λ}⟩` of the generic representation, in the
/// ratio form
///
/// `(-1)^{q+d} i^d √(∏_{i=j+1}^{l}(1+i/λ)) ∏_{i=0}^{q-1}(1+(j-i)/λ)
///  (λα/2)^{q+d/2} / ((q!)² (q+1)⋯(q+d))`, with `d = l - j`.
///
/// For `d < 0` the products over empty-or-reversed ranges are read as the
/// reciprocal products, which is what the unreduced factorial form
/// `√((l+λ)!(j+λ)!)/(q!(j+λ-q)!(q+d)!) (α/2)^{q+d/2}` gives.
pub fn stable_coeff(lambda: i64, j: i64, l: i64, q: u64, alpha: f64) -> Result<Complex64> {
    Ok(stable_coeff_log(lambda, j, l, q, alpha)?.value())
}

/// Log-space form of [`stable_coeff`].
pub fn stable_coeff_log(
    lambda: i64,
    j: i64,
    l: i64,
    q: u64,
    alpha: f64,
) -> Result<LogProductAccumulator> {
    if lambda < 1 {
        return Err(Error::DomainError(format!("λ = {lambda} must be ≥ 1")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::DomainError(format!("α = {alpha} must be positive")));
    }
    let d = l - j;
    let qi = q as i64;
    if qi + d < 0 || qi > j + lambda || j + lambda < 0 || l + lambda < 0 {
        return Err(Error::DomainError(format!(
            "stable_coeff preconditions violated (λ={lambda}, j={j}, l={l}, q={q})"
        )));
    }
    let lf = lambda as f64;
    let mut acc = LogProductAccumulator::one();
    // √(∏_{i=j+1}^{l} (1 + i/λ)), reciprocal when l < j
    let mut sqrt_part = 0.0;
    if d >= 0 {
        for i in (j + 1)..=l {
            sqrt_part += (i as f64 / lf).ln_1p();
        }
    } else {
        for i in (l + 1)..=j {
            sqrt_part -= (i as f64 / lf).ln_1p();
        }
    }
    acc.add_log(0.5 * sqrt_part);
    for i in 0..qi {
        acc.mul_one_plus((j - i) as f64 / lf);
    }
    acc.add_log((qi as f64 + d as f64 / 2.0) * (lf * alpha / 2.0).ln());
    acc.add_log(-2.0 * ln_factorial(q));
    // (q+1)⋯(q+d) in the denominator; for d < 0 this is 1/((q+d+1)⋯q).
    if d >= 0 {
        for i in (qi + 1)..=(qi + d) {
            acc.add_log(-(i as f64).ln());
        }
    } else {
        for i in (qi + d + 1)..=qi {
            acc.add_log((i as f64).ln());
        }
    }
    if (qi + d).rem_euclid(2) == 1 {
        acc.mul_phase(Complex64::new(-1.0, 0.0));
    }
    acc.mul_phase(i_pow(d));
    if !acc.log_magnitude.is_finite() {
        return Err(Error::InternalError(
            "non-finite log magnitude in stable_coeff".into(),
        ));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn series_trivial_values() {
        assert_eq!(bessel_j_series(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j_series(3, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_series(-3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn series_matches_integral_at_one() {
        let s = bessel_j_series(1, 1.0).unwrap();
        let i = bessel_j_integral(1, 1.0).unwrap();
        assert_abs_diff_eq!(s, i, epsilon = 1e-12);
        // J_1(1) to 16 digits
        assert_abs_diff_eq!(s, 0.440_050_585_744_933_5, epsilon = 1e-15);
    }

    #[test]
    fn integral_trivial_values() {
        assert_abs_diff_eq!(bessel_j_integral(0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        let a = bessel_j_integral(2, 5.0).unwrap();
        let b = bessel_j_series(2, 5.0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        assert_eq!(
            bessel_j_integral(-4, 3.0).unwrap(),
            bessel_j_integral(4, 3.0).unwrap()
        );
    }

    #[test]
    fn negative_order_symmetry_is_exact() {
        for n in 0..20 {
            for &x in &[0.3, 2.5, 11.0, -7.0] {
                let pos = bessel_j_series(n, x).unwrap();
                let neg = bessel_j_series(-n, x).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(neg, sign * pos);
            }
        }
    }

    #[test]
    fn order_cap_and_bad_input() {
        assert!(matches!(
            bessel_j_series(513, 1.0),
            Err(Error::OrderOverflow { .. })
        ));
        assert!(matches!(
            bessel_j_integral(-600, 1.0),
            Err(Error::OrderOverflow { .. })
        ));
        assert!(matches!(
            bessel_j_series(1, f64::NAN),
            Err(Error::InvalidInput(_))
        ));
        assert!(bessel_j_series(512, 1.0).is_ok());
    }

    #[test]
    fn stable_coeff_examples() {
        let c = stable_coeff(100, 0, 0, 0, 0.37).unwrap();
        assert_abs_diff_eq!(c.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-15);

        // Unreduced factorial form: √(λ!λ!)/(1!(λ-1)!) (α/2) / 1! with sign (-1)^1.
        let lambda = 10u64;
        let alpha = 0.2;
        let unreduced = -(ln_factorial(lambda) - ln_factorial(lambda - 1)).exp() * alpha / 2.0;
        let c = stable_coeff(10, 0, 0, 1, alpha).unwrap();
        assert_abs_diff_eq!(c.re, unreduced, epsilon = 1e-13);
        assert_abs_diff_eq!(c.re, -1.0, epsilon = 1e-13);

        // λ = 10⁶, j=2, l=3, q=0, α=10⁻⁶: phase (-1)^1 i, magnitude √(1+3/λ)·√(1/2).
        let c = stable_coeff(1_000_000, 2, 3, 0, 1e-6).unwrap();
        let mag = (1.0f64 + 3e-6).sqrt() * 0.5f64.sqrt();
        assert_abs_diff_eq!(c.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.im, -mag, epsilon = 1e-14);
    }

    #[test]
    fn stable_coeff_matches_unreduced_form_for_negative_shift() {
        // d = l - j < 0: compare against √((l+λ)!(j+λ)!)/(q!(j+λ-q)!(q+d)!) (α/2)^{q+d/2}.
        let (lambda, j, l, q, alpha) = (7i64, 2i64, -1i64, 4u64, 0.3f64);
        let n = (j + lambda) as u64;
        let m = (l + lambda) as u64;
        let d = l - j;
        let log_mag = 0.5 * (ln_factorial(m) + ln_factorial(n))
            - ln_factorial(q)
            - ln_factorial(n - q)
            - ln_factorial((q as i64 + d) as u64)
            + (q as f64 + d as f64 / 2.0) * (alpha / 2.0).ln();
        let expected = i_pow(d) * (if (q as i64 + d) % 2 == 0 { 1.0 } else { -1.0 }) * log_mag.exp();
        let c = stable_coeff(lambda, j, l, q, alpha).unwrap();
        assert_abs_diff_eq!(c.re, expected.re, epsilon = 1e-13);
        assert_abs_diff_eq!(c.im, expected.im, epsilon = 1e-13);
    }

    #[test]
    fn stable_coeff_rejects_bad_domain() {
        assert!(stable_coeff(5, 0, -2, 1, 0.1).is_err()); // q + d < 0
        assert!(stable_coeff(5, 0, 0, 6, 0.1).is_err()); // q > j + λ
        assert!(stable_coeff(0, 0, 0, 0, 0.1).is_err());
        assert!(stable_coeff(5, 0, 0, 0, -0.1).is_err());
    }
}
