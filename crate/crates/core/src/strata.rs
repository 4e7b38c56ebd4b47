//! Stratified spectra, their tensor products, Kronecker norm controls,
//! the equal-`α` restriction and a checker for the operator-field conditions
//! characterizing the Fourier image of `C*(G₁)`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{conjugate_limit, SequenceKind, SequenceSpec};
use crate::error::{Error, Result};
use crate::fock::{Basis, ModeWindow, OperatorMatrix};
use crate::reps::{matrix_at, matrix_generic, spectral_norm, spectral_norm_dense, SpectrumPoint};
use crate::testfn::TestFunction;

/// One stratum: a product of factor strata, indexed per factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    /// Stratum index in each factor.
    pub index: Vec<usize>,
    /// Sum of the factor indices.
    pub level: usize,
}

/// A finite chain `S₀ ⊂ … ⊂ S_d`, listed by its strata `Γ` in order; `S_i`
/// is the union of all strata of level `≤ i` and the level-0 strata hold
/// the characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifiedSpectrum {
    pub strata: Vec<Stratum>,
}

impl StratifiedSpectrum {
    /// A single factor with the given stratum labels, level `i` for the `i`-th.
    pub fn chain(labels: &[&str]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("a spectrum needs at least one stratum".into()));
        }
        Ok(Self {
            strata: labels
                .iter()
                .enumerate()
                .map(|(i, l)| Stratum {
                    label: l.to_string(),
                    index: vec![i],
                    level: i,
                })
                .collect(),
        })
    }

    /// `Ĝ₁ = Γ₀ ∪ Γ₁ ∪ Γ₂`: characters, boundary points `π_r`, generic `π_{λ,α}`.
    pub fn g1() -> Self {
        Self::chain(&["characters", "boundary", "generic"]).expect("nonempty")
    }

    pub fn step(&self) -> usize {
        self.strata.iter().map(|s| s.level).max().unwrap_or(0)
    }

    pub fn factors(&self) -> usize {
        self.strata.first().map_or(0, |s| s.index.len())
    }

    /// Strata grouped by level.
    pub fn level_sets(&self) -> Vec<Vec<Vec<usize>>> {
        let mut out = vec![Vec::new(); self.step() + 1];
        for s in &self.strata {
            out[s.level].push(s.index.clone());
        }
        out
    }

    /// Strata making up `S_i`.
    pub fn closed_set(&self, i: usize) -> Vec<&Stratum> {
        self.strata.iter().filter(|s| s.level <= i).collect()
    }

    /// Levels are contiguous from 0, never decrease along the list, and the
    /// level-0 stratum is the product of the factor character strata.
    pub fn verify(&self) -> Result<()> {
        let n = self.factors();
        if self.strata.is_empty() || self.strata.iter().any(|s| s.index.len() != n) {
            return Err(Error::InvalidInput("strata must share the number of factors".into()));
        }
        if self.strata[0].level != 0 || self.strata[0].index.iter().any(|&i| i != 0) {
            return Err(Error::InvalidInput("the first stratum must be the character stratum".into()));
        }
        for w in self.strata.windows(2) {
            if w[1].level < w[0].level || w[1].level > w[0].level + 1 {
                return Err(Error::InvalidInput(format!(
                    "levels {} → {} break the order",
                    w[0].level, w[1].level
                )));
            }
        }
        for s in &self.strata {
            if s.level != s.index.iter().sum::<usize>() {
                return Err(Error::InvalidInput(format!("stratum {} has the wrong level", s.label)));
            }
        }
        Ok(())
    }

    /// Stratum holding a tuple of `Ĝ₁` points, for products of [`Self::g1`].
    pub fn locate(&self, points: &[SpectrumPoint]) -> Option<usize> {
        let idx: Vec<usize> = points.iter().map(|p| p.stratum()).collect();
        self.strata.iter().position(|s| s.index == idx)
    }
}

/// `Γ^C_{i,j} = Γ^A_i × Γ^B_j`, ordered by `i + j`, then lexicographically.
pub fn tensor_stratification(a: &StratifiedSpectrum, b: &StratifiedSpectrum) -> StratifiedSpectrum {
    let mut strata: Vec<Stratum> = a
        .strata
        .iter()
        .flat_map(|x| {
            b.strata.iter().map(move |y| Stratum {
                label: format!("{}×{}", x.label, y.label),
                index: x.index.iter().chain(&y.index).copied().collect(),
                level: x.level + y.level,
            })
        })
        .collect();
    strata.sort_by(|x, y| x.level.cmp(&y.level).then_with(|| x.index.cmp(&y.index)));
    StratifiedSpectrum { strata }
}

/// Whether a tuple of `Ĝ₁` points lies in `Ĝ_n ⊂ Ĝ₁ⁿ`: all generic with one
/// common `α`, or none generic (the center acts trivially everywhere).
pub fn restrict_equal_alpha(points: &[SpectrumPoint]) -> bool {
    let alphas: Vec<f64> = points
        .iter()
        .filter_map(|p| match p {
            SpectrumPoint::Generic { alpha, .. } => Some(*alpha),
            _ => None,
        })
        .collect();
    if alphas.is_empty() {
        return true;
    }
    alphas.len() == points.len() && alphas.iter().all(|a| (a - alphas[0]).abs() <= 1e-12 * alphas[0].abs())
}

/// A norm control on one factor: the map `φ ↦ σ(φ)` with its constant `β`
/// and a majorant of `‖φ̂‖∞`.
pub struct FactorControl<'a, X> {
    pub sigma: Box<dyn Fn(&X) -> Result<OperatorMatrix> + Send + Sync + 'a>,
    pub beta: f64,
    pub sup_norm: Box<dyn Fn(&X) -> f64 + Send + Sync + 'a>,
}

/// Result of [`tensor_control`].
#[derive(Debug, Clone, PartialEq)]
pub struct TensorControl {
    /// `Σ_l σ_A(a_l) ⊗ σ_B(b_l)`, rows and columns ordered `(row_A, row_B)`.
    pub matrix: DMatrix<Complex64>,
    /// `β_A β_B Σ_l ‖â_l‖∞ ‖b̂_l‖∞`.
    pub bound: f64,
}

fn kron_sum<X: Sync, Y: Sync>(
    c: &[(X, Y)],
    fa: &(dyn Fn(&X) -> Result<OperatorMatrix> + Send + Sync),
    fb: &(dyn Fn(&Y) -> Result<OperatorMatrix> + Send + Sync),
) -> Result<DMatrix<Complex64>> {
    if c.is_empty() {
        return Err(Error::InvalidInput("tensor needs at least one summand".into()));
    }
    let parts: Vec<(OperatorMatrix, OperatorMatrix)> =
        c.par_iter().map(|(a, b)| Ok((fa(a)?, fb(b)?))).collect::<Result<_>>()?;
    let (wa, wb) = (parts[0].0.window, parts[0].1.window);
    let mut out: Option<DMatrix<Complex64>> = None;
    for (a, b) in &parts {
        if a.window != wa || b.window != wb {
            return Err(Error::IndexError(format!(
                "summand windows {:?} ⊗ {:?} differ from {wa:?} ⊗ {wb:?}",
                a.window, b.window
            )));
        }
        let k = a.entries.kronecker(&b.entries);
        out = Some(match out {
            None => k,
            Some(acc) => acc + k,
        });
    }
    Ok(out.expect("nonempty"))
}

/// Kronecker assembly `Σ_l σ_A(a_l) ⊗ σ_B(b_l)` of an elementary-tensor sum.
pub fn tensor_control<X: Sync, Y: Sync>(
    sigma_a: &FactorControl<'_, X>,
    sigma_b: &FactorControl<'_, Y>,
    c: &[(X, Y)],
) -> Result<TensorControl> {
    let matrix = kron_sum(c, sigma_a.sigma.as_ref(), sigma_b.sigma.as_ref())?;
    let bound = sigma_a.beta
        * sigma_b.beta
        * c.iter().map(|(a, b)| (sigma_a.sup_norm)(a) * (sigma_b.sup_norm)(b)).sum::<f64>();
    Ok(TensorControl { matrix, bound })
}

/// `(r, λ_k, α_k)` of a boundary sequence with `α_k > 0`.
fn boundary_step(spec: &SequenceSpec, k: u64) -> Result<(f64, i64, f64)> {
    let SequenceKind::ToBoundary { r, .. } = spec.kind else {
        return Err(Error::InvalidInput("paired defect needs boundary sequences".into()));
    };
    if spec.sign != 1 {
        return Err(Error::InvalidInput("paired defect needs α_k > 0".into()));
    }
    let (l, a) = spec.generate(k)?;
    Ok((r, l, a))
}

/// Boundary control `F ↦ V_k π_r(F) V_k*` at step `k` of `spec`.
pub fn boundary_control<'a>(spec: &'a SequenceSpec, k: u64, half_width: i64) -> Result<FactorControl<'a, TestFunction>> {
    let (r, lam, alpha) = boundary_step(spec, k)?;
    let alpha_max = alpha.max(1.0);
    Ok(FactorControl {
        sigma: Box::new(move |f: &TestFunction| {
            let a = crate::reps::matrix_limit(f, r, &ModeWindow::unclipped(half_width)?)?;
            conjugate_limit(&a, lam, alpha)
        }),
        beta: 1.0,
        sup_norm: Box::new(move |f: &TestFunction| f.fourier_sup_bound(alpha_max)),
    })
}

/// Windowed `‖(π_{λ_k,α_k} ⊗ π_{λ'_k,α'_k})(c) − Σ σ_{r,k}(a_l) ⊗ σ_{r',k}(b_l)‖`
/// along two boundary sequences.
pub fn paired_boundary_defect(
    c: &[(TestFunction, TestFunction)],
    seq_a: &SequenceSpec,
    seq_b: &SequenceSpec,
    k: u64,
    half_width: i64,
) -> Result<f64> {
    let (_, la, aa) = boundary_step(seq_a, k)?;
    let (_, lb, ab) = boundary_step(seq_b, k)?;
    let wa = ModeWindow::new(la, half_width)?;
    let wb = ModeWindow::new(lb, half_width)?;
    let pa = move |f: &TestFunction| matrix_generic(f, la, aa, &wa);
    let pb = move |f: &TestFunction| matrix_generic(f, lb, ab, &wb);
    let exact = kron_sum(c, &pa, &pb)?;
    let control = tensor_control(
        &boundary_control(seq_a, k, half_width)?,
        &boundary_control(seq_b, k, half_width)?,
        c,
    )?;
    spectral_norm_dense(&(exact - control.matrix))
}

/// Value of an operator field at one point of `Ĝ₁`. Characters carry a
/// `1×1` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub point: SpectrumPoint,
    pub matrix: OperatorMatrix,
}

/// Sampling plan for [`SampledField::from_test_function`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPlan {
    pub half_width: i64,
    /// `λ ≥ 0` rows of generic samples, each over `alphas` (`α > 0`).
    pub lambdas: Vec<i64>,
    pub alphas: Vec<f64>,
    /// Boundary radii; should accumulate at 0 and reach far out.
    pub radii: Vec<f64>,
    /// Characters `|λ| ≤ characters`.
    pub characters: i64,
    /// Sequences (with `α_k > 0`) whose points are sampled too.
    pub sequences: Vec<SequenceSpec>,
}

impl FieldPlan {
    pub fn standard() -> Self {
        // Geometric near the accumulation points, uniform further out.
        let mut radii: Vec<f64> = (0..14).map(|i| 0.005 * 1.25f64.powi(i)).collect();
        radii.extend((5..=400).map(|i| 0.02 * i as f64));
        let alphas: Vec<f64> = (0..=420).map(|i| 0.01 * 1.02f64.powi(i)).collect();
        Self {
            half_width: 6,
            lambdas: vec![0, 1, 2, 5],
            alphas,
            radii,
            characters: 12,
            sequences: vec![
                SequenceSpec {
                    kind: SequenceKind::ToBoundary {
                        r: 1.0,
                        lambda_step: 50.0,
                        perturbation: 0.0,
                        power: 1.0,
                    },
                    sign: 1,
                    k_start: 1,
                    k_end: 12,
                },
                SequenceSpec {
                    kind: SequenceKind::ToCharacters {
                        lambda_inf: crate::control::LambdaInf::Finite(2),
                        alpha_scale: 1.0,
                        decay: 2.0,
                    },
                    sign: 1,
                    k_start: 1,
                    k_end: 12,
                },
            ],
        }
    }

    fn points(&self) -> Result<Vec<SpectrumPoint>> {
        let mut pts = Vec::new();
        for &lambda in &self.lambdas {
            for &alpha in &self.alphas {
                pts.push(SpectrumPoint::Generic { lambda, alpha });
            }
        }
        pts.extend(self.radii.iter().map(|&r| SpectrumPoint::Boundary { r }));
        pts.extend((-self.characters..=self.characters).map(|lambda| SpectrumPoint::Character { lambda }));
        for s in &self.sequences {
            s.validate()?;
            if s.sign != 1 {
                return Err(Error::InvalidInput("field sequences need α_k > 0".into()));
            }
            for k in s.ks() {
                let (lambda, alpha) = s.generate(k)?;
                pts.push(SpectrumPoint::Generic { lambda, alpha });
            }
            if let SequenceKind::ToBoundary { r, .. } = s.kind {
                pts.push(SpectrumPoint::Boundary { r });
            }
        }
        let mut seen = Vec::with_capacity(pts.len());
        for p in pts {
            p.validate()?;
            if !seen.contains(&p) {
                seen.push(p);
            }
        }
        Ok(seen)
    }
}

/// Window used for a sample at `point` with half-width `j`.
pub fn sample_window(point: &SpectrumPoint, j: i64) -> Result<ModeWindow> {
    match *point {
        SpectrumPoint::Generic { lambda, alpha } => ModeWindow::new(if alpha > 0.0 { lambda } else { -lambda }, j),
        SpectrumPoint::Boundary { .. } => ModeWindow::unclipped(j),
        SpectrumPoint::Character { .. } => ModeWindow::unclipped(1),
    }
}

/// A finite set of samples of an operator field over `Ĝ₁`, with the
/// sequences along which it was sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub half_width: i64,
    pub samples: Vec<FieldSample>,
    pub sequences: Vec<SequenceSpec>,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    point: SpectrumPoint,
    window: ModeWindow,
    basis: Basis,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct FieldIndex {
    half_width: i64,
    sequences: Vec<SequenceSpec>,
    samples: Vec<IndexEntry>,
}

impl SampledField {
    /// The Fourier transform of `F` sampled according to `plan`.
    pub fn from_test_function(f: &TestFunction, plan: &FieldPlan) -> Result<Self> {
        let points = plan.points()?;
        let samples = points
            .par_iter()
            .map(|p| {
                let w = sample_window(p, plan.half_width)?;
                Ok(FieldSample {
                    point: *p,
                    matrix: matrix_at(f, p, &w)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            half_width: plan.half_width,
            samples,
            sequences: plan.sequences.clone(),
        })
    }

    pub fn get(&self, point: &SpectrumPoint) -> Option<&OperatorMatrix> {
        self.samples.iter().find(|s| s.point == *point).map(|s| &s.matrix)
    }

    /// Largest sample norm; 0 for an empty field.
    pub fn max_norm(&self) -> Result<f64> {
        let norms = self
            .samples
            .par_iter()
            .map(|s| spectral_norm(&s.matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(norms.into_iter().fold(0.0, f64::max))
    }

    /// Copy with `size · Id` added to every boundary sample with `r > r0`.
    pub fn with_planted_jump(&self, r0: f64, size: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            if matches!(s.point, SpectrumPoint::Boundary { r } if r > r0) {
                let n = s.matrix.dim();
                s.matrix.entries += DMatrix::identity(n, n) * Complex64::new(size, 0.0);
            }
        }
        out
    }

    /// Write `index.json` plus one binary file per sample: `u64` rows and
    /// columns (little endian), then the entries row-major as `(re, im)` pairs
    /// of little-endian `f64`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut entries = Vec::with_capacity(self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            let file = format!("sample_{i:05}.bin");
            let mut w = BufWriter::new(File::create(dir.join(&file))?);
            let m = &s.matrix.entries;
            w.write_all(&(m.nrows() as u64).to_le_bytes())?;
            w.write_all(&(m.ncols() as u64).to_le_bytes())?;
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    w.write_all(&m[(r, c)].re.to_le_bytes())?;
                    w.write_all(&m[(r, c)].im.to_le_bytes())?;
                }
            }
            w.flush()?;
            entries.push(IndexEntry {
                point: s.point,
                window: s.matrix.window,
                basis: s.matrix.basis,
                file,
            });
        }
        let index = FieldIndex {
            half_width: self.half_width,
            sequences: self.sequences.clone(),
            samples: entries,
        };
        std::fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index: FieldIndex = serde_json::from_str(&std::fs::read_to_string(dir.join("index.json"))?)?;
        let mut samples = Vec::with_capacity(index.samples.len());
        for e in index.samples {
            let mut bytes = Vec::new();
            BufReader::new(File::open(dir.join(&e.file))?).read_to_end(&mut bytes)?;
            let word = |i: usize| -> Result<[u8; 8]> {
                bytes
                    .get(8 * i..8 * i + 8)
                    .and_then(|b| b.try_into().ok())
                    .ok_or_else(|| Error::Parse(format!("{} is truncated", e.file)))
            };
            let rows = u64::from_le_bytes(word(0)?) as usize;
            let cols = u64::from_le_bytes(word(1)?) as usize;
            let expected = match e.point {
                SpectrumPoint::Character { .. } => 1,
                _ => e.window.len(),
            };
            if rows != expected || cols != expected || bytes.len() != 16 + 16 * rows * cols {
                return Err(Error::Parse(format!("{} does not match its window", e.file)));
            }
            let mut m = DMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    let i = 2 + 2 * (r * cols + c);
                    m[(r, c)] = Complex64::new(f64::from_le_bytes(word(i)?), f64::from_le_bytes(word(i + 1)?));
                }
            }
            samples.push(FieldSample {
                point: e.point,
                matrix: OperatorMatrix {
                    window: e.window,
                    basis: e.basis,
                    entries: m,
                },
            });
        }
        Ok(Self {
            half_width: index.half_width,
            samples,
            sequences: index.sequences,
        })
    }
}

/// Tolerances of [`check_d1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default)]
pub struct D1Tolerances {
    /// Largest allowed `‖A(p) − A(q)‖` between neighbouring samples of a run,
    /// relative to the largest `‖A‖` on the run.
    #[arg(long, default_value_t = 0.1)]
    pub continuity: f64,
    /// Largest allowed ratio of the outermost sample norm to the stratum maximum.
    #[arg(long, default_value_t = 0.05)]
    pub vanishing: f64,
    /// Largest allowed `‖A(r) − A(0)‖` at the smallest sampled `r`.
    #[arg(long, default_value_t = 0.05)]
    pub r_zero: f64,
    /// Largest allowed ratio of last to first defect along a sequence.
    #[arg(long, default_value_t = 0.25)]
    pub sequence_ratio: f64,
}

impl Default for D1Tolerances {
    fn default() -> Self {
        Self {
            continuity: 0.1,
            vanishing: 0.05,
            r_zero: 0.05,
            sequence_ratio: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not enough samples to decide.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: u8,
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D1Report {
    pub conditions: Vec<ConditionResult>,
}

impl D1Report {
    /// No condition failed.
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.status != Status::Fail)
    }

    pub fn status(&self, condition: u8) -> Option<Status> {
        self.conditions.iter().find(|c| c.condition == condition).map(|c| c.status)
    }
}

fn verdict(condition: u8, name: &str, measured: Option<f64>, tolerance: f64) -> ConditionResult {
    let (status, measured) = match measured {
        None => (Status::Inconclusive, f64::NAN),
        Some(m) if m <= tolerance => (Status::Pass, m),
        Some(m) => (Status::Fail, m),
    };
    ConditionResult {
        condition,
        name: name.into(),
        status,
        measured,
        tolerance,
    }
}

/// Ordered runs of samples along which continuity is checked: generic
/// samples by `λ` and sign of `α`, sorted by `α`; boundary samples by `r`.
fn continuity_runs(field: &SampledField) -> Vec<Vec<&FieldSample>> {
    let mut generic: BTreeMap<(i64, bool), Vec<&FieldSample>> = BTreeMap::new();
    let mut boundary = Vec::new();
    for s in &field.samples {
        match s.point {
            SpectrumPoint::Generic { lambda, alpha } => generic.entry((lambda, alpha > 0.0)).or_default().push(s),
            SpectrumPoint::Boundary { .. } => boundary.push(s),
            SpectrumPoint::Character { .. } => {}
        }
    }
    let key = |s: &&FieldSample| match s.point {
        SpectrumPoint::Generic { alpha, .. } => alpha,
        SpectrumPoint::Boundary { r } => r,
        SpectrumPoint::Character { lambda } => lambda as f64,
    };
    let mut runs: Vec<Vec<&FieldSample>> = generic.into_values().collect();
    runs.push(boundary);
    for run in &mut runs {
        run.sort_by(|a, b| key(a).total_cmp(&key(b)));
    }
    runs
}

/// Distance to infinity used for the vanishing condition.
fn escape(p: &SpectrumPoint) -> f64 {
    match *p {
        SpectrumPoint::Generic { lambda, alpha } => alpha.abs() + (lambda as f64 * alpha).abs(),
        SpectrumPoint::Boundary { r } => r,
        SpectrumPoint::Character { lambda } => lambda.unsigned_abs() as f64,
    }
}

/// `A(0) = ⊕ A(λ)` on the unclipped window, if every character is sampled.
fn character_sum(field: &SampledField, window: ModeWindow, keep: impl Fn(i64) -> bool) -> Option<OperatorMatrix> {
    let mut m = OperatorMatrix::zeros(window, Basis::Torus);
    for (i, j) in window.indices().enumerate() {
        if keep(j) {
            m.entries[(i, i)] = field.get(&SpectrumPoint::Character { lambda: j })?.entries[(0, 0)];
        }
    }
    Some(m)
}

fn sequence_defects(field: &SampledField, spec: &SequenceSpec) -> Result<Option<Vec<f64>>> {
    let half = field.half_width;
    let limit = match spec.kind {
        SequenceKind::ToBoundary { r, .. } => match field.get(&SpectrumPoint::Boundary { r }) {
            Some(a) => a.clone(),
            None => return Ok(None),
        },
        SequenceKind::ToCharacters { lambda_inf, .. } => {
            let keep = |j: i64| match lambda_inf {
                crate::control::LambdaInf::Finite(v) => j >= -v,
                crate::control::LambdaInf::PlusInfinity => true,
                crate::control::LambdaInf::MinusInfinity => false,
            };
            match character_sum(field, ModeWindow::unclipped(half)?, keep) {
                Some(a) => a,
                None => return Ok(None),
            }
        }
        SequenceKind::ToGeneric { .. } => return Ok(None),
    };
    let mut out = Vec::new();
    for k in spec.ks() {
        let (lambda, alpha) = spec.generate(k)?;
        let Some(a) = field.get(&SpectrumPoint::Generic { lambda, alpha }) else {
            return Ok(None);
        };
        let sigma = conjugate_limit(&limit, lambda, alpha)?;
        out.push(spectral_norm(&a.sub(&sigma)?)?);
    }
    Ok(Some(out))
}

/// Check the five field conditions on the samples:
///
/// 1. every `A(γ)` is a finite (hence compact) matrix;
/// 2. neighbouring samples within a stratum differ by at most `continuity`,
///    relative to the largest norm along the run;
/// 3. the outermost sample of each stratum is small relative to the stratum;
/// 4. `‖A(r) − ⊕_λ A(λ)‖` is small at the smallest sampled `r`;
/// 5. `‖A(λ_k, α_k) − V_k A_limit V_k*‖` decays along the declared sequences.
pub fn check_d1(field: &SampledField, tol: &D1Tolerances) -> Result<D1Report> {
    let mut out = Vec::new();

    let finite = field.samples.iter().all(|s| s.matrix.is_finite());
    out.push(ConditionResult {
        condition: 1,
        name: "compact values".into(),
        status: if field.samples.is_empty() {
            Status::Inconclusive
        } else if finite {
            Status::Pass
        } else {
            Status::Fail
        },
        measured: if finite { 0.0 } else { 1.0 },
        tolerance: 0.0,
    });

    let mut modulus: Option<f64> = None;
    for run in continuity_runs(field) {
        let norms: Vec<f64> = run.iter().map(|s| spectral_norm(&s.matrix)).collect::<Result<_>>()?;
        let scale = norms.iter().cloned().fold(0.0, f64::max);
        for w in run.windows(2) {
            if w[0].matrix.window != w[1].matrix.window {
                return Err(Error::IndexError("inconsistent windows within a stratum".into()));
            }
            let d = spectral_norm(&w[1].matrix.sub(&w[0].matrix)?)?;
            let rel = if scale == 0.0 { 0.0 } else { d / scale };
            modulus = Some(modulus.map_or(rel, |m: f64| m.max(rel)));
        }
    }
    out.push(verdict(2, "continuity on strata", modulus, tol.continuity));

    let mut ratio: Option<f64> = None;
    for stratum in 0..3 {
        let mut s: Vec<&FieldSample> = field.samples.iter().filter(|x| x.point.stratum() == stratum).collect();
        if s.len() < 3 {
            continue;
        }
        s.sort_by(|a, b| escape(&a.point).total_cmp(&escape(&b.point)));
        let norms: Vec<f64> = s.iter().map(|x| spectral_norm(&x.matrix)).collect::<Result<_>>()?;
        let top = norms.iter().cloned().fold(0.0, f64::max);
        let last = *norms.last().expect("nonempty");
        let q = if top == 0.0 { 0.0 } else { last / top };
        ratio = Some(ratio.map_or(q, |m: f64| m.max(q)));
    }
    out.push(verdict(3, "vanishing at infinity", ratio, tol.vanishing));

    let smallest = field
        .samples
        .iter()
        .filter_map(|s| match s.point {
            SpectrumPoint::Boundary { r } => Some((r, s)),
            _ => None,
        })
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let r_zero = match smallest {
        Some((_, s)) => match character_sum(field, s.matrix.window, |_| true) {
            Some(a0) => Some(spectral_norm(&s.matrix.sub(&a0)?)?),
            None => None,
        },
        None => None,
    };
    out.push(verdict(4, "uniform limit r → 0", r_zero, tol.r_zero));

    let mut worst: Option<f64> = None;
    for spec in &field.sequences {
        if let Some(d) = sequence_defects(field, spec)? {
            let (first, last) = (d[0], *d.last().expect("nonempty range"));
            let q = if first == 0.0 {
                if last == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                last / first
            };
            worst = Some(worst.map_or(q, |m: f64| m.max(q)));
        }
    }
    out.push(verdict(5, "sequence controls", worst, tol.sequence_ratio));

    Ok(D1Report { conditions: out })
}
