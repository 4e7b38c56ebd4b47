//! Matrices of `π_{λ,α}(F)` and `π_r(F)` over a mode window, characters
//! `χ_λ(F)`, and spectral norms.
//!
//! Conventions (normalized Haar measure on 𝕋, `dx dy` on ℂ):
//!
//! * `π_{λ,α}(θ,z,t) ξ(w) = e^{iλθ} e^{iαt} e^{-(α/4)|z|²} e^{-(α/2) w z̄} ξ(e^{-iθ}(w+z))`
//!   on the Fock space with measure `(α/2π) e^{-α|w|²/2} dw`, where
//!   `b_N = √((α/2)^N/N!) w^N` is orthonormal. Matrices are stored in the
//!   basis `V χ_j = i^j b_{j+λ}`.
//! * `π_r(θ,z) ξ(μ) = e^{i r Re(e^{iμ} z̄)} ξ(μ-θ)` on `ℓ²(𝕋)`.
//! * `π_{λ,α}` with `α < 0` is `π_{-λ,-α}(F∘τ)` for `τ(θ,z,t) = (-θ, z̄, -t)`.
//!
//! Every fast formula has an oracle evaluating the defining integral by
//! brute-force quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Basis, ModeWindow, OperatorMatrix};
use crate::quad::{profile_rule, RadialMomentSeq, RadialRule, TorusRule};
use crate::special::{bessel_j_series, i_pow, ln_factorial, stable_coeff_log, LogProductAccumulator};
use crate::testfn::{Component, TestFunction};

pub use crate::fock::OperatorMatrix as Matrix;

/// Absolute bound on the dropped tail of each `q`-series.
pub const Q_TAIL_TOL: f64 = 1e-16;

/// Largest window accepted by [`matrix_generic_oracle`].
pub const GENERIC_ORACLE_BUDGET: usize = 12;

/// Largest window accepted by [`matrix_limit_oracle`].
pub const LIMIT_ORACLE_BUDGET: usize = 25;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A point of the unitary dual of `G₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumPoint {
    Generic { lambda: i64, alpha: f64 },
    Boundary { r: f64 },
    Character { lambda: i64 },
}

impl SpectrumPoint {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Generic { alpha, .. } if !(alpha != 0.0 && alpha.is_finite()) => {
                Err(Error::InvalidInput(format!("generic point with α = {alpha}")))
            }
            Self::Boundary { r } if !(r > 0.0 && r.is_finite()) => {
                Err(Error::InvalidInput(format!("boundary point with r = {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Index of the stratum: 0 characters, 1 boundary, 2 generic.
    pub fn stratum(&self) -> usize {
        match self {
            Self::Character { .. } => 0,
            Self::Boundary { .. } => 1,
            Self::Generic { .. } => 2,
        }
    }
}

type ComponentIndex<'a> = BTreeMap<(i64, i64), Vec<&'a Component>>;

fn index_components(f: &TestFunction) -> ComponentIndex<'_> {
    let mut map: ComponentIndex<'_> = BTreeMap::new();
    for c in &f.components {
        map.entry((c.m, c.s)).or_default().push(c);
    }
    map
}

/// Fill an operator matrix entry by entry in parallel. The per-entry
/// computation is pure, so the result does not depend on the schedule.
fn fill_parallel<F>(window: ModeWindow, basis: Basis, entry: F) -> Result<OperatorMatrix>
where
    F: Fn(i64, i64) -> Result<Complex64> + Sync,
{
    let idx: Vec<i64> = window.indices().collect();
    let n = idx.len();
    let values: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|k| entry(idx[k % n], idx[k / n]))
        .collect::<Result<_>>()?;
    let m = OperatorMatrix {
        window,
        basis,
        entries: DMatrix::from_vec(n, n, values),
    };
    if !m.is_finite() {
        return Err(Error::InternalError("non-finite matrix entry".into()));
    }
    Ok(m)
}

fn check_generic_window(lambda: i64, window: &ModeWindow) -> Result<()> {
    if lambda + window.min_index() < 0 {
        return Err(Error::IndexError(format!(
            "window starts at j = {} below -λ = {}",
            window.min_index(),
            -lambda
        )));
    }
    Ok(())
}

/// Log-space coefficient of the `q`-th moment in entry `(l, j)`, including
/// the phase `(-1)^{q+d} i^d`. Uses the ratio form for `λ ≥ 1` and the
/// factorial form otherwise.
fn moment_coeff(lambda: i64, j: i64, l: i64, q: u64, alpha: f64) -> Result<LogProductAccumulator> {
    if lambda >= 1 {
        return stable_coeff_log(lambda, j, l, q, alpha);
    }
    let n = (j + lambda) as u64;
    let m = (l + lambda) as u64;
    let d = l - j;
    let qd = (q as i64 + d) as u64;
    let mut acc = LogProductAccumulator::one();
    acc.add_log(
        0.5 * (ln_factorial(n) + ln_factorial(m)) - ln_factorial(q) - ln_factorial(n - q) - ln_factorial(qd)
            + (q as f64 + d as f64 / 2.0) * (alpha / 2.0).ln(),
    );
    if (q as i64 + d).rem_euclid(2) == 1 {
        acc.mul_phase(Complex64::new(-1.0, 0.0));
    }
    acc.mul_phase(i_pow(d));
    Ok(acc)
}

/// Entry `(l, j)` of `π_{λ,α}(F)` for `α > 0` from the moment series.
fn generic_entry(
    comps: Option<&Vec<&Component>>,
    lambda: i64,
    alpha: f64,
    j: i64,
    l: i64,
) -> Result<Complex64> {
    let Some(comps) = comps else {
        return Ok(ZERO);
    };
    let d = l - j;
    let n = (j + lambda) as u64;
    let q0 = (-d).max(0) as u64;
    if q0 > n {
        return Ok(ZERO);
    }
    let sign_d = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let mut total = ZERO;
    for comp in comps {
        let c = comp.alpha_profile.eval(alpha);
        if c == ZERO {
            continue;
        }
        let mut seq = RadialMomentSeq::new(q0, d, alpha / 4.0, &comp.radial_profile)?;
        let r2 = seq.r_max * seq.r_max;
        let mut coeff = moment_coeff(lambda, j, l, q0, alpha)?;
        let mut sum = ZERO;
        let mut q = q0;
        loop {
            let (mom, abs_mom) = seq.next_pair();
            let value = coeff.value();
            sum += value * mom;
            if q == n {
                break;
            }
            // |coef_{q+1}| / |coef_q| = (N-q)(α/2) / ((q+1)(q+d+1)), and the
            // moment grows by at most R². Both ratios decrease in q.
            let step = (n - q) as f64 * (alpha / 2.0) / ((q + 1) as f64 * (q as i64 + d + 1) as f64);
            let ratio = step * r2;
            if ratio < 0.5 {
                let next_bound = value.norm() * abs_mom * ratio;
                if 2.0 * next_bound * c.norm() < Q_TAIL_TOL {
                    break;
                }
            }
            coeff.add_log(step.ln());
            coeff.mul_phase(Complex64::new(-1.0, 0.0));
            q += 1;
        }
        total += c * sum * sign_d;
    }
    Ok(total)
}

/// Majorant `Σ_q |c(α)| |coef_q| ∫ρ^{2q+d}|g|ρdρ` of the moment series of
/// entry `(l, j)` of `π_{λ,α}(F)` (`α > 0`), summed over the contributing
/// components. With `skip_first` the `q = q0` term is left out.
pub fn entry_series_majorant(
    f: &TestFunction,
    lambda: i64,
    alpha: f64,
    j: i64,
    l: i64,
    skip_first: bool,
) -> Result<f64> {
    let d = l - j;
    if lambda + j < 0 || lambda + l < 0 || !(alpha > 0.0) {
        return Err(Error::DomainError(format!("entry ({l}, {j}) outside the Fock model at λ = {lambda}")));
    }
    let n = (j + lambda) as u64;
    let q0 = (-d).max(0) as u64;
    let mut total = 0.0;
    for comp in f.components.iter().filter(|c| c.m == -j && c.s == d) {
        let c = comp.alpha_profile.eval(alpha).norm();
        let mut seq = RadialMomentSeq::new(q0, d, alpha / 4.0, &comp.radial_profile)?;
        let r2 = seq.r_max * seq.r_max;
        let mut log_coeff = moment_coeff(lambda, j, l, q0, alpha)?.log_magnitude;
        let mut q = q0;
        loop {
            let (_, abs_mom) = seq.next_pair();
            let term = log_coeff.exp() * abs_mom;
            if !(skip_first && q == q0) {
                total += c * term;
            }
            if q == n {
                break;
            }
            let step = (n - q) as f64 * (alpha / 2.0) / ((q + 1) as f64 * (q as i64 + d + 1) as f64);
            let ratio = step * r2;
            if ratio < 0.5 && 2.0 * term * ratio * c < Q_TAIL_TOL {
                break;
            }
            log_coeff += step.ln();
            q += 1;
        }
    }
    Ok(total)
}

/// Truncated matrix of `π_{λ,α}(F)` in the basis `V χ_j`, by the
/// closed-form moment series.
///
/// For `α < 0` the matrix is that of `π_{-λ,-α}(F∘τ)`, on the window with
/// the same half-width clipped at `j ≥ λ`.
pub fn matrix_generic(f: &TestFunction, lambda: i64, alpha: f64, window: &ModeWindow) -> Result<OperatorMatrix> {
    if !(alpha != 0.0 && alpha.is_finite()) {
        return Err(Error::DomainError(format!("α = {alpha} must be nonzero")));
    }
    if alpha < 0.0 {
        return matrix_generic(&f.reflect(), -lambda, -alpha, window);
    }
    check_generic_window(lambda, window)?;
    let index = index_components(f);
    fill_parallel(*window, Basis::Fock { lambda, alpha }, |l, j| {
        generic_entry(index.get(&(-j, l - j)), lambda, alpha, j, l)
    })
}

/// Quadrature resolution of [`matrix_generic_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericOracleGrid {
    pub theta: usize,
    pub z_order: usize,
    pub z_angles: usize,
    pub u_order: usize,
    pub u_angles: usize,
    pub u_pad: f64,
}

impl Default for GenericOracleGrid {
    fn default() -> Self {
        Self {
            theta: 64,
            z_order: 10,
            z_angles: 32,
            u_order: 16,
            u_angles: 128,
            u_pad: 7.5,
        }
    }
}

impl GenericOracleGrid {
    /// Twice the resolution in every direction.
    pub fn doubled(&self) -> Self {
        Self {
            theta: 2 * self.theta,
            z_order: 2 * self.z_order,
            z_angles: 2 * self.z_angles,
            u_order: 2 * self.u_order,
            u_angles: 2 * self.u_angles,
            u_pad: self.u_pad + 1.0,
        }
    }
}

/// Brute-force matrix of `π_{λ,α}(F)` with the default grid.
pub fn matrix_generic_oracle(f: &TestFunction, lambda: i64, alpha: f64, window: &ModeWindow) -> Result<OperatorMatrix> {
    matrix_generic_oracle_with(f, lambda, alpha, window, &GenericOracleGrid::default())
}

/// Brute-force matrix of `π_{λ,α}(F)`.
///
/// Evaluates `i^{j-l} ⟨π_{λ,α}(F) b_N, b_M⟩` from the defining integral:
/// `F̂³` is rebuilt from its modes and integrated against `e^{-i j θ}` on a
/// torus rule, and the Fock inner product is integrated on a polar grid in
/// `u = √(α/2) w`. The `z`-angle is integrated on a torus rule after using
/// the rotation covariance `K(e^{iν}ζ) = e^{i(N-M)ν} K(ζ)` of the kernel
/// `K_{N,M}(ζ) = ⟨π(0,z,0) b_N, b_M⟩ e^{|ζ|²/2}`, which is evaluated on
/// the real axis only.
pub fn matrix_generic_oracle_with(
    f: &TestFunction,
    lambda: i64,
    alpha: f64,
    window: &ModeWindow,
    grid: &GenericOracleGrid,
) -> Result<OperatorMatrix> {
    if !(alpha != 0.0 && alpha.is_finite()) {
        return Err(Error::DomainError(format!("α = {alpha} must be nonzero")));
    }
    if window.len() > GENERIC_ORACLE_BUDGET {
        return Err(Error::OracleBudgetExceeded(format!(
            "window of {} modes exceeds {GENERIC_ORACLE_BUDGET}",
            window.len()
        )));
    }
    if alpha < 0.0 {
        return matrix_generic_oracle_with(&f.reflect(), -lambda, -alpha, window, grid);
    }
    check_generic_window(lambda, window)?;
    let basis = Basis::Fock { lambda, alpha };
    if f.is_zero() {
        return Ok(OperatorMatrix::zeros(*window, basis));
    }
    let idx: Vec<i64> = window.indices().collect();
    let dim = idx.len();
    let scale = (alpha / 2.0).sqrt();

    // z grid: radial nodes × angles, with F̂³ sampled on a θ rule.
    let z_rule = RadialRule::on_interval(0.0, f.support_radius(), grid.z_order);
    let nu_rule = TorusRule::new(grid.z_angles);
    let th_rule = TorusRule::new(grid.theta);
    // ang[c][a][d_index]: 2π · mean over ν of H_j(ρ_a e^{iν}) e^{-i d ν}, d = l - j.
    let d_span = 2 * dim - 1;
    let d_min = -(dim as i64 - 1);
    let ang: Vec<Vec<Vec<Complex64>>> = {
        // F̂³(θ_k, ρ_a e^{iν_b}, α), shared by all columns.
        let f3: Vec<Vec<Vec<Complex64>>> = z_rule
            .nodes
            .par_iter()
            .map(|&rho| {
                nu_rule
                    .points
                    .iter()
                    .map(|&nu| {
                        let z = Complex64::from_polar(rho, nu);
                        th_rule.points.iter().map(|&t| f.eval_f3(t, z, alpha)).collect()
                    })
                    .collect()
            })
            .collect();
        idx.iter()
            .map(|&j| {
                let wj: Vec<Complex64> = th_rule
                    .points
                    .iter()
                    .map(|&t| Complex64::from_polar(th_rule.weight, -(j as f64) * t))
                    .collect();
                f3.iter()
                    .map(|ring| {
                        let h: Vec<Complex64> = ring
                            .iter()
                            .map(|samples| samples.iter().zip(&wj).map(|(a, b)| a * b).sum())
                            .collect();
                        (0..d_span)
                            .map(|k| {
                                let d = d_min + k as i64;
                                nu_rule
                                        .points
                                        .iter()
                                        .zip(&h)
                                        .map(|(&nu, &hv)| hv * Complex64::from_polar(nu_rule.weight, -(d as f64) * nu))
                                        .sum::<Complex64>()
                                        * (2.0 * PI)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    };

    // u grid in x = |u| around the Gaussian peaks √N of all levels involved.
    let n_lo = (idx[0] + lambda) as f64;
    let n_hi = (idx[dim - 1] + lambda) as f64;
    let x_lo = (n_lo.sqrt() - grid.u_pad).max(0.0);
    let x_hi = n_hi.sqrt() + grid.u_pad;
    let x_panels = (x_hi - x_lo).ceil().max(1.0) as usize;
    let x_rule = RadialRule::composite(x_lo, x_hi, x_panels, grid.u_order);
    let phi_rule = TorusRule::new(grid.u_angles);
    let mut u_nodes = Vec::with_capacity(x_rule.len() * phi_rule.len());
    for (&x, &w) in x_rule.nodes.iter().zip(&x_rule.weights) {
        for &phi in &phi_rule.points {
            // (1/π) e^{-|u|²} du in polar form, Gaussian split between the two factors.
            u_nodes.push((Complex64::from_polar(x, phi), w * x * 2.0 * phi_rule.weight));
        }
    }
    // Row factors ū^M e^{-|u|²/2} / √M!.
    let rows: Vec<Vec<Complex64>> = idx
        .iter()
        .map(|&l| {
            let m = (l + lambda) as u64;
            let lf = 0.5 * ln_factorial(m);
            u_nodes
                .iter()
                .map(|(u, _)| {
                    let log = if m == 0 { Complex64::new(0.0, 0.0) } else { u.conj().ln() * m as f64 };
                    (log - Complex64::new(lf + 0.5 * u.norm_sqr(), 0.0)).exp()
                })
                .collect()
        })
        .collect();

    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|c| {
            let j = idx[c];
            let n = (j + lambda) as u64;
            let lf = 0.5 * ln_factorial(n);
            let mut col = vec![ZERO; dim];
            for (a, (&rho, &wr)) in z_rule.nodes.iter().zip(&z_rule.weights).enumerate() {
                let zeta = scale * rho;
                let gauss = (-0.5 * zeta * zeta).exp();
                let ang_a = &ang[c][a];
                if ang_a.iter().all(|v| v.norm() == 0.0) {
                    continue;
                }
                // Column factor (u+ζ)^N e^{-uζ - |u|²/2} / √N!.
                let colf: Vec<Complex64> = u_nodes
                    .iter()
                    .map(|&(u, w)| {
                        let shifted = u + zeta;
                        let log = if n == 0 { ZERO } else { shifted.ln() * n as f64 };
                        (log - u * zeta - Complex64::new(lf + 0.5 * u.norm_sqr(), 0.0)).exp() * w
                    })
                    .collect();
                for (r, row) in rows.iter().enumerate() {
                    let l = idx[r];
                    let d = l - j;
                    let kernel: Complex64 = colf.iter().zip(row).map(|(a, b)| a * b).sum::<Complex64>();
                    col[r] += ang_a[(d - d_min) as usize] * kernel * (wr * rho * gauss);
                }
            }
            for (r, v) in col.iter_mut().enumerate() {
                *v *= i_pow(j - idx[r]);
            }
            col
        })
        .collect();
    let entries = DMatrix::from_fn(dim, dim, |r, c| columns[c][r]);
    Ok(OperatorMatrix {
        window: *window,
        basis,
        entries,
    })
}

fn check_limit_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::DomainError(format!("r = {r} must be positive")));
    }
    Ok(())
}

/// Truncated matrix of `π_r(F)` on `ℓ²(𝕋)` from the Bessel form
/// `⟨π_r(F) χ_j, χ_l⟩ = i^d 2π Σ c_{-j,d}(0) ∫ g_{-j,d}(ρ) J_d(rρ) ρ dρ`, `d = l - j`.
pub fn matrix_limit(f: &TestFunction, r: f64, window: &ModeWindow) -> Result<OperatorMatrix> {
    check_limit_r(r)?;
    let index = index_components(f);
    fill_parallel(*window, Basis::Torus, |l, j| {
        let d = l - j;
        let Some(comps) = index.get(&(-j, d)) else {
            return Ok(ZERO);
        };
        let mut acc = ZERO;
        for comp in comps {
            let rule = profile_rule(&comp.radial_profile, crate::quad::DEFAULT_ORDER)?;
            let mut integral = 0.0;
            for (&rho, &w) in rule.nodes.iter().zip(&rule.weights) {
                integral += w * comp.radial_profile.eval(rho) * bessel_j_series(d, r * rho)? * rho;
            }
            acc += comp.alpha_profile.eval(0.0) * integral;
        }
        Ok(acc * i_pow(d) * (2.0 * PI))
    })
}

/// Brute-force matrix of `π_r(F)` from the kernel form
/// `∫∫ F̂^{2,3}(θ, -r e^{iμ}) e^{ij(μ-θ)} e^{-ilμ} dθ dμ`, with
/// `F̂^{2,3}(θ, v) = Σ_m e^{-imθ} ∫ e^{-i Re(v z̄)} Ĝ(m, z, 0) dz`
/// evaluated by polar quadrature.
pub fn matrix_limit_oracle(f: &TestFunction, r: f64, window: &ModeWindow) -> Result<OperatorMatrix> {
    check_limit_r(r)?;
    if window.len() > LIMIT_ORACLE_BUDGET {
        return Err(Error::OracleBudgetExceeded(format!(
            "window of {} modes exceeds {LIMIT_ORACLE_BUDGET}",
            window.len()
        )));
    }
    let modes: Vec<i64> = f.modes().into_iter().collect();
    let jmax = window.min_index().abs().max(window.max_index());
    let mmax = f.max_torus_mode();
    let bandwidth = r * f.support_radius() + f.max_angular_mode() as f64 + 2.0 * jmax as f64;
    let mu_rule = TorusRule::new(((2.0 * bandwidth).ceil() as usize + 48).max(64));
    let th_rule = TorusRule::new((2 * (mmax + jmax) + 8) as usize);
    // fz[μ][mode]
    let fz: Vec<Vec<Complex64>> = mu_rule
        .points
        .par_iter()
        .map(|&mu| {
            let v = Complex64::from_polar(-r, mu);
            modes.iter().map(|&m| f.eval_g_fourier_z(m, v)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    // f23[μ][θ] = F̂^{2,3}(θ, -r e^{iμ})
    let f23: Vec<Vec<Complex64>> = fz
        .iter()
        .map(|row| {
            th_rule
                .points
                .iter()
                .map(|&t| {
                    modes
                        .iter()
                        .zip(row)
                        .map(|(&m, &g)| Complex64::from_polar(1.0, -(m as f64) * t) * g)
                        .sum()
                })
                .collect()
        })
        .collect();
    fill_parallel(*window, Basis::Torus, |l, j| {
        let mut acc = ZERO;
        for (&mu, row) in mu_rule.points.iter().zip(&f23) {
            let inner: Complex64 = th_rule
                .points
                .iter()
                .zip(row)
                .map(|(&t, &v)| v * Complex64::from_polar(1.0, -(j as f64) * t))
                .sum::<Complex64>()
                * th_rule.weight;
            acc += inner * Complex64::from_polar(1.0, (j - l) as f64 * mu);
        }
        Ok(acc * mu_rule.weight)
    })
}

/// `∫_ℂ Ĝ(-index, z, 0) dz`; only angular mode `s = 0` contributes.
///
/// The character `χ_λ` is `char_value(-λ, F)`; see [`character`].
pub fn char_value(index: i64, f: &TestFunction) -> Result<Complex64> {
    let mut acc = ZERO;
    for comp in f.mode(-index).filter(|c| c.s == 0) {
        acc += comp.alpha_profile.eval(0.0) * crate::quad::radial_moment(0, 0, 0.0, &comp.radial_profile)?;
    }
    Ok(acc)
}

/// `χ_λ(F) = ∫_ℂ Ĝ(λ, z, 0) dz`.
pub fn character(lambda: i64, f: &TestFunction) -> Result<Complex64> {
    char_value(-lambda, f)
}

/// Matrix of `F` at an arbitrary point of the dual. A character point
/// `λ` gives the `1×1` matrix holding [`char_value`]`(λ, F)`, tagged with a
/// unit window.
pub fn matrix_at(f: &TestFunction, point: &SpectrumPoint, window: &ModeWindow) -> Result<OperatorMatrix> {
    point.validate()?;
    match *point {
        SpectrumPoint::Generic { lambda, alpha } => matrix_generic(f, lambda, alpha, window),
        SpectrumPoint::Boundary { r } => matrix_limit(f, r, window),
        SpectrumPoint::Character { lambda } => {
            let v = char_value(lambda, f)?;
            let w = ModeWindow::unclipped(1)?;
            Ok(OperatorMatrix {
                window: w,
                basis: Basis::Torus,
                entries: DMatrix::from_element(1, 1, v),
            })
        }
    }
}

/// Relative tolerance of the power iteration.
pub const NORM_TOL: f64 = 1e-12;

/// Iteration cap of the power iteration.
pub const NORM_MAX_ITER: usize = 100_000;

const NORM_BLOCK: usize = 4;

/// Iterations between squarings of the iterated operator.
const NORM_ROUND: usize = 50;

/// Largest singular value of a dense complex matrix.
pub fn spectral_norm_dense(a: &DMatrix<Complex64>) -> Result<f64> {
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(0.0);
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if rows.max(cols) <= 3 {
        let sv = a.clone().svd(false, false).singular_values;
        return Ok(sv.iter().copied().fold(0.0, f64::max));
    }
    let scaled = a / Complex64::new(scale, 0.0);
    let b = scaled.adjoint() * &scaled;
    let n = b.nrows();
    // Block power iteration with a Rayleigh-Ritz step on `b`. The iterated
    // operator `c` starts as `b` and is squared after every stalled round, so
    // a gap `1 − λ₂/λ₁` needs only `O(log(1/gap))` squarings.
    let p = n.min(NORM_BLOCK);
    let start = DMatrix::from_fn(n, p, |i, j| {
        let t = 0.7 * (i * (j + 1)) as f64 + j as f64;
        Complex64::new(1.0 + t.cos(), 0.3 * (0.5 * (i + j) as f64).sin())
    });
    let mut q = start.qr().q();
    let mut c = b.clone();
    for it in 0..NORM_MAX_ITER {
        if it > 0 && it % NORM_ROUND == 0 {
            let sq = &c * &c;
            let sq = (&sq + sq.adjoint()) * Complex64::new(0.5, 0.0);
            let m = sq.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if m > 0.0 && m.is_finite() {
                c = sq / Complex64::new(m, 0.0);
            }
        }
        let bq = &b * &q;
        let h = q.adjoint() * &bq;
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(h);
        let (top, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if theta <= 0.0 {
            return Ok(0.0);
        }
        let s = eig.eigenvectors.column(top);
        let residual = (&bq * s - (&q * s) * Complex64::new(theta, 0.0)).norm();
        if residual <= NORM_TOL * theta {
            return Ok(theta.sqrt() * scale);
        }
        q = (&c * &q).qr().q();
    }
    Err(Error::IterationLimit(NORM_MAX_ITER))
}

/// Windowed operator norm `‖A‖`.
pub fn spectral_norm(a: &OperatorMatrix) -> Result<f64> {
    spectral_norm_dense(&a.entries)
}
