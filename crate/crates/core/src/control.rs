//! Norm controls along properly converging sequences of generic
//! representations, and the experiments measuring them.
//!
//! For a boundary sequence (`λ_k α_k → r²/2`) the control is
//! `σ_{r,k}(F) = V_k π_r(F) V_k*`; for a character sequence (`λ_k α_k → 0`)
//! it is `V_k (⊕ χ) V_k*`, diagonal with the character values. Sequences
//! with `α_k < 0` are handled through the reflection `F ↦ F∘τ`, which maps
//! `π_{λ,α}` to `π_{-λ,-α}`.

use std::f64::consts::E;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{conjugate_by_v, project_tail, Basis, Conjugation, Intertwiner, ModeWindow, OperatorMatrix};
use crate::quad::{disk_quadrature_2d, DEFAULT_ORDER};
use crate::reps::{char_value, entry_series_majorant, matrix_generic, matrix_limit, spectral_norm};
use crate::testfn::TestFunction;

/// Largest `|λ_k|` a sequence may generate.
pub const MAX_LAMBDA: i64 = 1_000_000;

/// Limit `λ∞` of a character sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaInf {
    Finite(i64),
    PlusInfinity,
    MinusInfinity,
}

impl LambdaInf {
    fn negated(self) -> Self {
        match self {
            Self::Finite(v) => Self::Finite(-v),
            Self::PlusInfinity => Self::MinusInfinity,
            Self::MinusInfinity => Self::PlusInfinity,
        }
    }
}

/// Closed-form generator `k ↦ (λ_k, α_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// `|λ_k| = round(lambda_step·k)`, `|α_k| = r²/(2|λ_k|) · (1 + perturbation·k^{-power})`.
    ToBoundary {
        r: f64,
        lambda_step: f64,
        #[serde(default)]
        perturbation: f64,
        #[serde(default = "one")]
        power: f64,
    },
    /// `|α_k| = alpha_scale · k^{-decay}`; `λ_k = λ∞` when finite, else
    /// `±round(k^{decay/2})`.
    ToCharacters {
        lambda_inf: LambdaInf,
        #[serde(default = "one")]
        alpha_scale: f64,
        decay: f64,
    },
    /// Constant `(λ, α)`.
    ToGeneric { lambda: i64, alpha: f64 },
}

fn one() -> f64 {
    1.0
}

/// A sequence generator with sign `ε = sign(α_k)` and range `k_start..=k_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    #[serde(flatten)]
    pub kind: SequenceKind,
    #[serde(default = "plus")]
    pub sign: i8,
    pub k_start: u64,
    pub k_end: u64,
}

fn plus() -> i8 {
    1
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::InvalidInput(format!("sign = {} must be ±1", self.sign)));
        }
        if self.k_start < 1 || self.k_end < self.k_start {
            return Err(Error::InvalidInput(format!(
                "k range {}..={} must be nonempty and start at ≥ 1",
                self.k_start, self.k_end
            )));
        }
        match self.kind {
            SequenceKind::ToBoundary {
                r,
                lambda_step,
                perturbation,
                power,
            } => {
                if !(r > 0.0 && r.is_finite() && lambda_step > 0.0 && perturbation.is_finite() && power > 0.0) {
                    return Err(Error::InvalidInput("to_boundary needs r > 0, lambda_step > 0, power > 0".into()));
                }
            }
            SequenceKind::ToCharacters { alpha_scale, decay, .. } => {
                if !(alpha_scale > 0.0 && decay > 0.0 && alpha_scale.is_finite() && decay.is_finite()) {
                    return Err(Error::InvalidInput("to_characters needs alpha_scale > 0 and decay > 0".into()));
                }
            }
            SequenceKind::ToGeneric { alpha, .. } => {
                if !(alpha != 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidInput("to_generic needs α ≠ 0".into()));
                }
            }
        }
        for k in [self.k_start, self.k_end] {
            let (l, a) = self.generate(k)?;
            if l.abs() > MAX_LAMBDA || !(a != 0.0 && a.is_finite()) {
                return Err(Error::InvalidInput(format!("k = {k} gives (λ, α) = ({l}, {a}) out of range")));
            }
        }
        Ok(())
    }

    pub fn ks(&self) -> impl Iterator<Item = u64> {
        self.k_start..=self.k_end
    }

    /// `(λ_k, α_k)`.
    pub fn generate(&self, k: u64) -> Result<(i64, f64)> {
        let eps = self.sign as f64;
        let kf = k as f64;
        Ok(match self.kind {
            SequenceKind::ToBoundary {
                r,
                lambda_step,
                perturbation,
                power,
            } => {
                let lam = (lambda_step * kf).round() as i64;
                if lam < 1 {
                    return Err(Error::InvalidInput(format!("λ_{k} = {lam} must be ≥ 1")));
                }
                let alpha = r * r / (2.0 * lam as f64) * (1.0 + perturbation * kf.powf(-power));
                (self.sign as i64 * lam, eps * alpha)
            }
            SequenceKind::ToCharacters {
                lambda_inf,
                alpha_scale,
                decay,
            } => {
                let alpha = eps * alpha_scale * kf.powf(-decay);
                let lam = match lambda_inf {
                    LambdaInf::Finite(v) => v,
                    LambdaInf::PlusInfinity => kf.powf(decay / 2.0).round() as i64,
                    LambdaInf::MinusInfinity => -(kf.powf(decay / 2.0).round() as i64),
                };
                (lam, alpha)
            }
            SequenceKind::ToGeneric { lambda, alpha } => (lambda, alpha),
        })
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            SequenceKind::ToBoundary { .. } => "to_boundary",
            SequenceKind::ToCharacters { .. } => "to_characters",
            SequenceKind::ToGeneric { .. } => "to_generic",
        }
    }
}

/// Truncation window along a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Fixed half-width `J`.
    Fixed(i64),
    /// Half-width `⌈√|λ_k|⌉`.
    Auto,
}

impl WindowPolicy {
    pub fn half_width(&self, lambda: i64) -> i64 {
        match *self {
            Self::Fixed(j) => j,
            Self::Auto => ((lambda.unsigned_abs().max(1) as f64).sqrt().ceil() as i64).max(1),
        }
    }
}

/// Data and parameters after moving an `α < 0` point to the `α > 0` model.
fn positive_model(f: &TestFunction, lambda: i64, alpha: f64) -> (TestFunction, i64, f64) {
    if alpha < 0.0 {
        (f.reflect(), -lambda, -alpha)
    } else {
        (f.clone(), lambda, alpha)
    }
}

/// `σ_{r,k}(F) = V_k π_r(F) V_k*` on the window of half-width `J` clipped at `j ≥ -λ_k`.
///
/// `α_k < 0` points use `π_r(F∘τ)` in the model of `π_{-λ_k,-α_k}`.
pub fn sigma_boundary(f: &TestFunction, r: f64, lambda_k: i64, alpha_k: f64, half_width: i64) -> Result<OperatorMatrix> {
    let (g, lam, alpha) = positive_model(f, lambda_k, alpha_k);
    if lam < 0 {
        return Err(Error::IndexError(format!("λ_k = {lambda_k} has the wrong sign for α_k = {alpha_k}")));
    }
    let full = matrix_limit(&g, r, &ModeWindow::unclipped(half_width)?)?;
    conjugate_limit(&full, lam, alpha)
}

/// `V_k A V_k*` for a matrix `A` of the limit representation on an
/// unclipped window, with `λ_k ≥ 0`, `α_k > 0`: rows and columns below
/// `-λ_k` are dropped.
pub fn conjugate_limit(a: &OperatorMatrix, lambda_k: i64, alpha_k: f64) -> Result<OperatorMatrix> {
    if a.window.lambda.is_some() || a.basis != Basis::Torus {
        return Err(Error::IndexError("limit matrix must live on an unclipped torus window".into()));
    }
    let window = ModeWindow::new(lambda_k, a.window.half_width)?;
    conjugate_by_v(&a.embed(window), &Intertwiner::new(lambda_k, alpha_k, window)?, Conjugation::VAVStar)
}

/// `σ_{λ∞,k}(F)`: diagonal with `char_value(j, F)` on the modes `j ≥ -λ∞`
/// (the characters `χ_μ`, `μ ≤ λ∞`) for `ε = +1`, on the window clipped
/// at `j ≥ -λ_k`. For `ε = -1` the construction runs on `F∘τ` with `λ∞`,
/// `λ_k` negated, which selects `χ_μ` with `μ ≥ λ∞`.
pub fn sigma_characters(
    f: &TestFunction,
    lambda_inf: LambdaInf,
    sign: i8,
    lambda_k: i64,
    half_width: i64,
) -> Result<OperatorMatrix> {
    if sign < 0 {
        return sigma_characters(&f.reflect(), lambda_inf.negated(), 1, -lambda_k, half_width);
    }
    if lambda_k < 0 {
        return Err(Error::IndexError(format!("λ_k = {lambda_k} < 0 with ε = +1")));
    }
    let window = ModeWindow::new(lambda_k, half_width)?;
    let keep = |j: i64| match lambda_inf {
        LambdaInf::Finite(v) => j >= -v,
        LambdaInf::PlusInfinity => true,
        LambdaInf::MinusInfinity => false,
    };
    let diag: Vec<Complex64> = window
        .indices()
        .map(|j| if keep(j) { char_value(j, f) } else { Ok(Complex64::new(0.0, 0.0)) })
        .collect::<Result<_>>()?;
    let mut m = OperatorMatrix::zeros(window, Basis::Fock { lambda: lambda_k, alpha: f64::NAN });
    for (i, v) in diag.into_iter().enumerate() {
        m.entries[(i, i)] = v;
    }
    Ok(m)
}

/// One step of a defect experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub k: u64,
    pub lambda: i64,
    pub alpha: f64,
    pub window: usize,
    /// Windowed `‖π_{λ_k,α_k}(F) − σ_k(F)‖`.
    pub defect: f64,
    /// Explicit majorant `δ_k`; entries obey `|Δ(l,j)| ≤ δ_k/((1+|l|)²(1+|j|)²)`.
    pub delta_bound: f64,
    /// Bound `C_F/√|λ_k|` for the columns outside `|j| ≤ √|λ_k|`.
    pub tail: f64,
    /// Entries exceeding their share of `δ_k` by more than [`ENTRY_TOL`].
    pub entry_violations: usize,
    /// Largest `|Δ(l,j)| / (δ_k/((1+|l|)²(1+|j|)²))`.
    pub max_entry_ratio: f64,
}

/// Slack on per-entry majorant checks (quadrature error).
pub const ENTRY_TOL: f64 = 1e-7;

/// Per-`k` record of a defect experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub sequence: SequenceSpec,
    pub rows: Vec<DefectRow>,
}

impl DefectReport {
    pub fn defects(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.defect).collect()
    }

    pub fn total_violations(&self) -> usize {
        self.rows.iter().map(|r| r.entry_violations).sum()
    }

    /// Number of `k` with `defect_{k+1} > defect_k`.
    pub fn inversions(&self) -> usize {
        self.rows.windows(2).filter(|w| w[1].defect > w[0].defect).count()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "lambda", "alpha", "defect", "delta_bound", "tail"])?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.lambda.to_string(),
                r.alpha.to_string(),
                r.defect.to_string(),
                r.delta_bound.to_string(),
                r.tail.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InternalError(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv()?)?;
        std::fs::write(json_path, self.to_json()?)?;
        Ok(())
    }
}

/// `∫_ℂ e^{κ|z|²} |h(z)| dz` over the support of `F`.
fn weighted_l1<H: Fn(Complex64) -> Complex64>(f: &TestFunction, kappa: f64, h: H) -> Result<f64> {
    let r = f.support_radius();
    if r == 0.0 {
        return Ok(0.0);
    }
    let v = disk_quadrature_2d(|z| Complex64::new((kappa * z.norm_sqr()).exp() * h(z).norm(), 0.0), r, DEFAULT_ORDER)?;
    Ok(v.re)
}

/// Column majorant for boundary sequences:
/// `(|λα/2 − r²/4| + 2/λ + 2eα) ∫e^{(r²/2+2)|z|²}|Ĝ(−m,z,α)|dz + ∫e^{(r²/2+2)|z|²}|Ĝ(−m,z,α) − Ĝ(−m,z,0)|dz`,
/// for `λ, α > 0`.
pub fn boundary_majorant(f: &TestFunction, r: f64, lambda: i64, alpha: f64, m: i64) -> Result<f64> {
    if f.mode(-m).next().is_none() {
        return Ok(0.0);
    }
    let kappa = r * r / 2.0 + 2.0;
    let lam = lambda as f64;
    let prefactor = (lam * alpha / 2.0 - r * r / 4.0).abs() + 2.0 / lam + 2.0 * E * alpha;
    let main = weighted_l1(f, kappa, |z| f.eval_g(-m, z, alpha))?;
    let drift = weighted_l1(f, kappa, |z| f.eval_g(-m, z, alpha) - f.eval_g(-m, z, 0.0))?;
    let b = prefactor * main + drift;
    if !b.is_finite() {
        return Err(Error::InternalError(format!("non-finite majorant for mode {m}")));
    }
    Ok(b)
}

/// Entry majorant for character sequences (`λ, α > 0`): the absolute
/// moment series, minus its leading term on the diagonal, plus the
/// `α`-drift of the leading term.
fn character_entry_majorant(f: &TestFunction, lambda: i64, alpha: f64, j: i64, l: i64, kept: bool) -> Result<f64> {
    if l != j || !kept {
        return entry_series_majorant(f, lambda, alpha, j, l, false);
    }
    let mut b = entry_series_majorant(f, lambda, alpha, j, l, true)?;
    for comp in f.components.iter().filter(|c| c.m == -j && c.s == 0) {
        let g = &comp.radial_profile;
        let m_alpha = crate::quad::radial_moment(0, 0, alpha / 4.0, g)?;
        let m_zero = crate::quad::radial_moment(0, 0, 0.0, g)?;
        let ca = comp.alpha_profile.eval(alpha);
        let c0 = comp.alpha_profile.eval(0.0);
        b += ca.norm() * (m_alpha - m_zero).abs() + (ca - c0).norm() * m_zero.abs();
    }
    Ok(b)
}

fn defect_row(f: &TestFunction, spec: &SequenceSpec, k: u64, policy: WindowPolicy) -> Result<DefectRow> {
    let (lambda_k, alpha_k) = spec.generate(k)?;
    let half = policy.half_width(lambda_k);
    let (g, lam, alpha) = positive_model(f, lambda_k, alpha_k);
    if lam < 0 {
        return Err(Error::IndexError(format!("λ_k = {lambda_k} has the wrong sign for α_k = {alpha_k}")));
    }
    let window = ModeWindow::new(lam, half)?;
    let a = matrix_generic(&g, lam, alpha, &window)?;
    let g_star = g.adjoint();
    let (sigma, entry_bound): (OperatorMatrix, Box<dyn Fn(i64, i64) -> Result<f64> + Sync>) = match spec.kind {
        SequenceKind::ToBoundary { r, .. } => {
            let s = sigma_boundary(f, r, lambda_k, alpha_k, half)?;
            let cols: Vec<f64> = window
                .indices()
                .map(|m| Ok(boundary_majorant(&g, r, lam, alpha, m)?.max(boundary_majorant(&g_star, r, lam, alpha, m)?)))
                .collect::<Result<_>>()?;
            let delta = window
                .indices()
                .zip(&cols)
                .map(|(m, b)| b * (1.0 + m.abs() as f64).powi(4))
                .fold(0.0, f64::max);
            (s, Box::new(move |_, _| Ok(delta)))
        }
        SequenceKind::ToCharacters { lambda_inf, .. } => {
            let s = sigma_characters(f, lambda_inf, spec.sign, lambda_k, half)?;
            let li = if spec.sign < 0 { lambda_inf.negated() } else { lambda_inf };
            let kept = move |j: i64| match li {
                LambdaInf::Finite(v) => j >= -v,
                LambdaInf::PlusInfinity => true,
                LambdaInf::MinusInfinity => false,
            };
            let mut delta: f64 = 0.0;
            for l in window.indices() {
                for j in window.indices() {
                    let b = character_entry_majorant(&g, lam, alpha, j, l, kept(j))?;
                    delta = delta.max(b * ((1.0 + l.abs() as f64) * (1.0 + j.abs() as f64)).powi(2));
                }
            }
            (s, Box::new(move |_, _| Ok(delta)))
        }
        SequenceKind::ToGeneric { .. } => (a.clone(), Box::new(|_, _| Ok(0.0))),
    };
    let diff = a.sub(&sigma.embed(window))?;
    let defect = spectral_norm(&diff)?;
    let delta_bound = entry_bound(0, 0)?;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for l in window.indices() {
        for j in window.indices() {
            let share = delta_bound / ((1.0 + l.abs() as f64) * (1.0 + j.abs() as f64)).powi(2);
            let v = diff.get(l, j).norm();
            if v > share + ENTRY_TOL {
                violations += 1;
            }
            if share > 0.0 {
                max_ratio = max_ratio.max(v / share);
            } else if v > 0.0 {
                max_ratio = f64::INFINITY;
            }
        }
    }
    let c_f = g.decay_constant(alpha).max(g_star.decay_constant(alpha));
    let tail = c_f / (lam.max(1) as f64).sqrt();
    let row = DefectRow {
        k,
        lambda: lambda_k,
        alpha: alpha_k,
        window: window.len(),
        defect,
        delta_bound,
        tail,
        entry_violations: violations,
        max_entry_ratio: max_ratio,
    };
    if !(row.defect.is_finite() && row.delta_bound.is_finite() && row.tail.is_finite()) {
        return Err(Error::InternalError(format!("non-finite defect row at k = {k}")));
    }
    Ok(row)
}

/// Build both matrices for every `k`, measure the windowed defect and
/// assemble the explicit majorants. Runs as a parallel map over `k`.
pub fn defect_experiment(f: &TestFunction, spec: &SequenceSpec, policy: WindowPolicy) -> Result<DefectReport> {
    spec.validate()?;
    let ks: Vec<u64> = spec.ks().collect();
    let rows = ks
        .par_iter()
        .map(|&k| defect_row(f, spec, k, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(DefectReport {
        sequence: spec.clone(),
        rows,
    })
}

/// Result of [`tail_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub lambda: i64,
    pub alpha: f64,
    pub half_width: i64,
    /// `‖π_{λ,α}(F)(Id − P_{λ,√λ})‖` on the window of half-width `2⌈√λ⌉`.
    pub value: f64,
    pub c_f: f64,
    /// `C_F/√λ`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Norm of `π_{λ,α}(F)` restricted to the columns `√λ < |j| ≤ 2⌈√λ⌉`,
/// compared with `C_F/√λ`.
pub fn tail_experiment(f: &TestFunction, lambda: i64, alpha: f64) -> Result<TailReport> {
    if lambda < 4 {
        return Err(Error::InvalidInput(format!("tail experiment needs λ ≥ 4, got {lambda}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("tail experiment needs α > 0, got {alpha}")));
    }
    let cut = (lambda as f64).sqrt();
    let half = 2 * cut.ceil() as i64;
    let window = ModeWindow::new(lambda, half)?;
    let a = matrix_generic(f, lambda, alpha, &window)?;
    let value = spectral_norm(&project_tail(&a, cut)?)?;
    let c_f = f.decay_constant(alpha).max(f.adjoint().decay_constant(alpha));
    let bound = c_f / cut;
    Ok(TailReport {
        lambda,
        alpha,
        half_width: half,
        value,
        c_f,
        bound,
        within_bound: value <= bound * (1.0 + 1e-9),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reps::matrix_limit;
    use crate::testfn::canonical_family;

    fn boundary(k_end: u64) -> SequenceSpec {
        SequenceSpec {
            kind: SequenceKind::ToBoundary {
                r: 1.0,
                lambda_step: 50.0,
                perturbation: 0.0,
                power: 1.0,
            },
            sign: 1,
            k_start: 1,
            k_end,
        }
    }

    #[test]
    fn sequences_have_declared_asymptotics() {
        let s = boundary(100);
        for k in [1, 10, 100] {
            let (l, a) = s.generate(k).unwrap();
            assert_eq!(l, 50 * k as i64);
            assert!((l as f64 * a - 0.5).abs() < 1e-12);
        }
        let c = SequenceSpec {
            kind: SequenceKind::ToCharacters {
                lambda_inf: LambdaInf::PlusInfinity,
                alpha_scale: 1.0,
                decay: 2.0,
            },
            sign: 1,
            k_start: 1,
            k_end: 1000,
        };
        c.validate().unwrap();
        let (l, a) = c.generate(1000).unwrap();
        assert!(l as f64 * a < 2e-3 && l == 1000);
        let bad = SequenceSpec { sign: 0, ..c.clone() };
        assert!(bad.validate().is_err());
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SequenceSpec>(&text).unwrap(), c);
    }

    #[test]
    fn sigma_boundary_clipping() {
        let f = canonical_family(1);
        let unclipped = matrix_limit(&f, 1.0, &ModeWindow::unclipped(4).unwrap()).unwrap();
        let s = sigma_boundary(&f, 1.0, 10, 0.05, 4).unwrap();
        assert_eq!(s.entries, unclipped.entries);
        let s = sigma_boundary(&f, 1.0, 2, 0.25, 4).unwrap();
        assert_eq!(s.window.min_index(), -2);
        let padded = s.embed(ModeWindow::unclipped(4).unwrap());
        for l in -4..=4 {
            for j in -4..=4 {
                if l < -2 || j < -2 {
                    assert_eq!(padded.get(l, j), Complex64::new(0.0, 0.0));
                } else {
                    assert_eq!(padded.get(l, j), unclipped.get(l, j));
                }
            }
        }
        assert!(sigma_boundary(&TestFunction::zero(), 1.0, 10, 0.05, 3)
            .unwrap()
            .entries
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn sigma_characters_cut() {
        let f = canonical_family(3).sum(&TestFunction {
            components: (-3..=3)
                .map(|m| crate::testfn::Component {
                    m,
                    s: 0,
                    alpha_profile: crate::testfn::AlphaProfile::constant(Complex64::new(1.0 + m as f64, 0.0)),
                    radial_profile: crate::testfn::RadialProfile::gaussian(vec![1.0], 1.0),
                })
                .collect(),
        });
        let s = sigma_characters(&f, LambdaInf::Finite(0), 1, 3, 3).unwrap();
        for j in -3..=3 {
            let v = s.get(j, j);
            if j >= 0 {
                assert_eq!(v, char_value(j, &f).unwrap());
            } else {
                assert_eq!(v, Complex64::new(0.0, 0.0));
            }
        }
        let all = sigma_characters(&f, LambdaInf::PlusInfinity, 1, 3, 3).unwrap();
        for j in -3..=3 {
            assert_eq!(all.get(j, j), char_value(j, &f).unwrap());
        }
        let zero = sigma_characters(&TestFunction::zero(), LambdaInf::PlusInfinity, 1, 3, 3).unwrap();
        assert!(zero.entries.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn zero_function_has_zero_defects() {
        let r = defect_experiment(&TestFunction::zero(), &boundary(3), WindowPolicy::Fixed(4)).unwrap();
        assert!(r.rows.iter().all(|row| row.defect == 0.0 && row.delta_bound == 0.0));
    }

    #[test]
    fn boundary_defect_shrinks_and_respects_majorant() {
        let spec = boundary(8);
        for seed in 0..3 {
            let rep = defect_experiment(&canonical_family(seed), &spec, WindowPolicy::Fixed(6)).unwrap();
            let d = rep.defects();
            assert!(d[7] < d[1], "seed {seed}: {d:?}");
            assert_eq!(rep.total_violations(), 0);
            assert!(rep.to_csv().unwrap().starts_with("k,lambda,alpha,defect,delta_bound,tail\n"));
        }
    }

    #[test]
    fn negative_sign_sequences_run() {
        let spec = SequenceSpec { sign: -1, ..boundary(4) };
        let rep = defect_experiment(&canonical_family(1), &spec, WindowPolicy::Fixed(4)).unwrap();
        assert!(rep.rows.iter().all(|r| r.alpha < 0.0 && r.lambda < 0));
        assert!(rep.defects()[3] < rep.defects()[0]);
        let chars = SequenceSpec {
            kind: SequenceKind::ToCharacters {
                lambda_inf: LambdaInf::Finite(-2),
                alpha_scale: 1.0,
                decay: 2.0,
            },
            sign: -1,
            k_start: 1,
            k_end: 6,
        };
        let rep = defect_experiment(&canonical_family(2), &chars, WindowPolicy::Fixed(3)).unwrap();
        assert!(rep.defects()[5] < rep.defects()[0]);
        assert_eq!(rep.total_violations(), 0);
    }

    #[test]
    fn tail_of_finite_support_is_zero() {
        let t = tail_experiment(&canonical_family(1), 400, 1.0 / 400.0).unwrap();
        assert_eq!(t.value, 0.0);
        assert!(t.within_bound);
        let z = tail_experiment(&TestFunction::zero(), 16, 0.1).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-0.5))).collect();
        assert!((log_log_slope(&pts) + 0.5).abs() < 1e-12);
    }
}
