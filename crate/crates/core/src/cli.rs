//! Batch experiment runner behind the `ncdl` binary.
//!
//! Every experiment is a validated [`ExperimentConfig`]; [`run`] computes it,
//! writes `<out>/<command>.csv` and `<out>/<command>.json` and returns a
//! one-line verdict. Outputs carry no timings or thread counts, so repeated
//! runs give byte-identical files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::control::{defect_experiment, log_log_slope, tail_experiment, LambdaInf, SequenceKind, SequenceSpec, WindowPolicy};
use crate::error::{Error, Result};
use crate::fock::ModeWindow;
use crate::orbits::{candidate_orbits, classify_limit, orbit_limit_oracle_with, LimitSet, OracleConfig, OrbitSequenceSpec};
use crate::reps::{matrix_generic, matrix_generic_oracle, matrix_limit, matrix_limit_oracle, spectral_norm_dense};
use crate::special::{bessel_j_integral, bessel_j_series, BESSEL_ARG_CAP, BESSEL_ORDER_CAP};
use crate::strata::{boundary_control, check_d1, paired_boundary_defect, tensor_control, D1Tolerances, FieldPlan, SampledField, Status};
use crate::testfn::{canonical_family, tail_family, TestFunction};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "NCDL_THREADS";

/// Where the test function comes from: a corpus seed or a JSON file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct Source {
    /// Corpus seed.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Test function JSON; overrides `--seed`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<PathBuf>,
}

impl Source {
    pub fn load(&self) -> Result<TestFunction> {
        match &self.function {
            Some(p) => TestFunction::load(p),
            None => Ok(canonical_family(self.seed)),
        }
    }
}

fn parse_lambda_inf(s: &str) -> std::result::Result<LambdaInf, String> {
    match s {
        "+inf" | "plus-infinity" => Ok(LambdaInf::PlusInfinity),
        "-inf" | "minus-infinity" => Ok(LambdaInf::MinusInfinity),
        _ => s
            .parse()
            .map(LambdaInf::Finite)
            .map_err(|_| format!("expected an integer, +inf or -inf, got {s}")),
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{field}: {msg}"))
}

/// Series against integral form of `J_n(x)` on a grid.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct BesselCheck {
    #[arg(long, default_value_t = 30)]
    pub nmax: i64,
    #[arg(long, default_value_t = 20.0)]
    pub xmax: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

/// Fast matrix elements against their quadrature oracles.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleCheck {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// Generic points `λ`, paired with `--alphas`.
    #[arg(long, value_delimiter = ',', default_values_t = [50, 200, 500])]
    pub lambdas: Vec<i64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.01, 0.001])]
    pub alphas: Vec<f64>,
    /// Boundary points `r`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    pub radii: Vec<f64>,
    #[arg(long = "J", default_value_t = 5)]
    #[serde(rename = "J")]
    pub half_width: i64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

/// Defect along a sequence running to a boundary point `π_r`.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergeBoundary {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 50.0)]
    pub lambda_step: f64,
    /// `α_k = r²/(2λ_k)·(1 + perturbation·k^{-power})`.
    #[arg(long, default_value_t = 0.0)]
    pub perturbation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub sign: i8,
    #[arg(long, default_value_t = 1)]
    pub kstart: u64,
    #[arg(long, default_value_t = 20)]
    pub kmax: u64,
    /// Window half-width; `⌈√|λ_k|⌉` when absent.
    #[arg(long = "J")]
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub half_width: Option<i64>,
    /// Required `defect(kmax) / defect(kstart)`.
    #[arg(long, default_value_t = 0.05)]
    pub ratio: f64,
    #[arg(long, default_value_t = 1)]
    pub max_inversions: usize,
}

/// Defect along a sequence running to the characters, checked against
/// `defect_k² ≤ factor · E · |α_k| max(|λ_k|, 1)` with `E` fitted at `k = e_at`.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergeCharacters {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// Integer, `+inf` or `-inf`.
    #[arg(long, default_value = "2", value_parser = parse_lambda_inf, allow_hyphen_values = true)]
    pub lambda_inf: LambdaInf,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_scale: f64,
    #[arg(long, default_value_t = 2.0)]
    pub decay: f64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub sign: i8,
    #[arg(long, default_value_t = 1)]
    pub kstart: u64,
    #[arg(long, default_value_t = 30)]
    pub kmax: u64,
    #[arg(long = "J")]
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub half_width: Option<i64>,
    #[arg(long, default_value_t = 5)]
    pub e_at: u64,
    #[arg(long, default_value_t = 2.0)]
    pub factor: f64,
}

/// Tail norm `‖π_{λ,α}(F)(Id − P_{λ,√λ})‖` against `λ`, with the fitted
/// log-log slope compared to `-1/2`.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct TailCheck {
    #[arg(long, value_delimiter = ',', default_values_t = [400, 1600, 6400])]
    pub lambdas: Vec<i64>,
    /// Highest angular mode of the slowly decaying test function.
    #[arg(long, default_value_t = 200)]
    pub max_mode: i64,
    /// `λ·α`; each point uses `α = alpha_lambda/λ`.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_lambda: f64,
    /// Allowed relative deviation of the slope from `-1/2`.
    #[arg(long, default_value_t = 0.15)]
    pub rel_tol: f64,
}

/// Closed-form limit set of an orbit sequence, optionally checked against
/// the sampling oracle.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct OrbitClassify {
    /// Orbit sequence JSON.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = 1000)]
    pub k_max: u64,
    #[arg(long, default_value_t = 0.3)]
    pub grid: f64,
}

/// Random two-summand tensors `c = a₁⊗b₁ + a₂⊗b₂` under paired boundary
/// sequences: the control norm bound and the decay of the paired defect.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct TensorDemo {
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// `λ` steps of the two factor sequences.
    #[arg(long, value_delimiter = ',', default_values_t = [50.0, 80.0])]
    pub lambda_steps: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    pub k: u64,
    #[arg(long = "J", default_value_t = 4)]
    #[serde(rename = "J")]
    pub half_width: i64,
    /// Required `defect(k) / defect(1)`.
    #[arg(long, default_value_t = 0.1)]
    pub ratio: f64,
}

/// The operator-field conditions on a sampled Fourier transform.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default)]
pub struct D1Check {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// Load a saved field instead of sampling one.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    /// Save the sampled field to this directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub save_field: Option<PathBuf>,
    /// Add a jump to every boundary sample with `r` above this value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plant_jump: Option<f64>,
    /// Jump size; the largest sample norm when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_size: Option<f64>,
    #[command(flatten)]
    #[serde(default)]
    pub tolerances: D1Tolerances,
}

macro_rules! parsed_default {
    ($($t:ident => $name:literal),* $(,)?) => {
        $(impl Default for $t {
            fn default() -> Self {
                Self::parse_from([$name])
            }
        })*
    };
}

parsed_default!(
    BesselCheck => "bessel-check",
    OracleCheck => "oracle-check",
    ConvergeBoundary => "converge-boundary",
    ConvergeCharacters => "converge-characters",
    TailCheck => "tail-check",
    TensorDemo => "tensor-demo",
    D1Check => "d1-check",
);

impl Default for OrbitClassify {
    fn default() -> Self {
        Self {
            spec: PathBuf::new(),
            oracle: false,
            k_max: 1000,
            grid: 0.3,
        }
    }
}

/// One experiment with its parameters.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    BesselCheck(BesselCheck),
    /// Generic and limit matrix elements against their oracles.
    OracleCheck(OracleCheck),
    ConvergeBoundary(ConvergeBoundary),
    ConvergeCharacters(ConvergeCharacters),
    TailCheck(TailCheck),
    OrbitClassify(OrbitClassify),
    TensorDemo(TensorDemo),
    D1Check(D1Check),
}

fn default_out() -> PathBuf {
    PathBuf::from("ncdl-out")
}

/// A JSON-configurable experiment: the command, its parameters and the
/// output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

/// Result of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub verdict: String,
    pub csv: String,
    pub json: String,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BesselCheck(_) => "bessel-check",
            Self::OracleCheck(_) => "oracle-check",
            Self::ConvergeBoundary(_) => "converge-boundary",
            Self::ConvergeCharacters(_) => "converge-characters",
            Self::TailCheck(_) => "tail-check",
            Self::OrbitClassify(_) => "orbit-classify",
            Self::TensorDemo(_) => "tensor-demo",
            Self::D1Check(_) => "d1-check",
        }
    }

    /// Checks every field before any computation; errors name the field.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(field_err(name, format!("must be positive, got {v}")))
            }
        };
        match self {
            Self::BesselCheck(c) => {
                if !(0..=BESSEL_ORDER_CAP).contains(&c.nmax) {
                    return Err(field_err("nmax", format!("must lie in 0..={BESSEL_ORDER_CAP}")));
                }
                positive("step", c.step)?;
                positive("tol", c.tol)?;
                if !(0.0..=BESSEL_ARG_CAP).contains(&c.xmax) {
                    return Err(field_err("xmax", format!("must lie in [0, {BESSEL_ARG_CAP}]")));
                }
            }
            Self::OracleCheck(c) => {
                if c.lambdas.len() != c.alphas.len() {
                    return Err(field_err("alphas", "needs one entry per λ"));
                }
                for (&l, &a) in c.lambdas.iter().zip(&c.alphas) {
                    if l < 0 {
                        return Err(field_err("lambdas", format!("λ = {l} must be ≥ 0")));
                    }
                    positive("alphas", a)?;
                }
                for &r in &c.radii {
                    positive("radii", r)?;
                }
                ModeWindow::unclipped(c.half_width).map_err(|e| field_err("J", e))?;
                positive("tol", c.tol)?;
            }
            Self::ConvergeBoundary(c) => {
                c.sequence().validate().map_err(|e| field_err("sequence", e))?;
                if let Some(j) = c.half_width {
                    ModeWindow::unclipped(j).map_err(|e| field_err("J", e))?;
                }
                positive("ratio", c.ratio)?;
            }
            Self::ConvergeCharacters(c) => {
                c.sequence().validate().map_err(|e| field_err("sequence", e))?;
                if let Some(j) = c.half_width {
                    ModeWindow::unclipped(j).map_err(|e| field_err("J", e))?;
                }
                if !(c.kstart..c.kmax).contains(&c.e_at) {
                    return Err(field_err("e_at", format!("must lie in {}..{}", c.kstart, c.kmax)));
                }
                positive("factor", c.factor)?;
            }
            Self::TailCheck(c) => {
                if c.lambdas.len() < 2 {
                    return Err(field_err("lambdas", "a slope needs at least two points"));
                }
                if let Some(l) = c.lambdas.iter().find(|&&l| l < 4) {
                    return Err(field_err("lambdas", format!("λ = {l} must be ≥ 4")));
                }
                if c.max_mode < 1 {
                    return Err(field_err("max_mode", "must be ≥ 1"));
                }
                positive("alpha_lambda", c.alpha_lambda)?;
                positive("rel_tol", c.rel_tol)?;
            }
            Self::OrbitClassify(c) => {
                if c.spec.as_os_str().is_empty() {
                    return Err(field_err("spec", "missing path"));
                }
                if c.k_max < 4 {
                    return Err(field_err("k_max", "must be ≥ 4"));
                }
                positive("grid", c.grid)?;
            }
            Self::TensorDemo(c) => {
                if c.count == 0 {
                    return Err(field_err("count", "must be ≥ 1"));
                }
                if c.lambda_steps.len() != 2 {
                    return Err(field_err("lambda_steps", "needs exactly two steps"));
                }
                if c.k < 2 {
                    return Err(field_err("k", "must be ≥ 2"));
                }
                for seq in c.sequences() {
                    seq.validate().map_err(|e| field_err("sequence", e))?;
                }
                ModeWindow::unclipped(c.half_width).map_err(|e| field_err("J", e))?;
                positive("ratio", c.ratio)?;
            }
            Self::D1Check(c) => {
                if let Some(r0) = c.plant_jump {
                    positive("plant_jump", r0)?;
                }
                if let Some(s) = c.jump_size {
                    positive("jump_size", s)?;
                }
                let t = &c.tolerances;
                for (name, v) in [
                    ("continuity", t.continuity),
                    ("vanishing", t.vanishing),
                    ("r_zero", t.r_zero),
                    ("sequence_ratio", t.sequence_ratio),
                ] {
                    positive(name, v)?;
                }
            }
        }
        Ok(())
    }
}

impl ConvergeBoundary {
    pub fn sequence(&self) -> SequenceSpec {
        SequenceSpec {
            kind: SequenceKind::ToBoundary {
                r: self.r,
                lambda_step: self.lambda_step,
                perturbation: self.perturbation,
                power: self.power,
            },
            sign: self.sign,
            k_start: self.kstart,
            k_end: self.kmax,
        }
    }
}

impl ConvergeCharacters {
    pub fn sequence(&self) -> SequenceSpec {
        SequenceSpec {
            kind: SequenceKind::ToCharacters {
                lambda_inf: self.lambda_inf,
                alpha_scale: self.alpha_scale,
                decay: self.decay,
            },
            sign: self.sign,
            k_start: self.kstart,
            k_end: self.kmax,
        }
    }
}

impl TensorDemo {
    pub fn sequences(&self) -> Vec<SequenceSpec> {
        self.lambda_steps
            .iter()
            .map(|&step| SequenceSpec {
                kind: SequenceKind::ToBoundary {
                    r: self.r,
                    lambda_step: step,
                    perturbation: 0.0,
                    power: 1.0,
                },
                sign: 1,
                k_start: 1,
                k_end: self.k,
            })
            .collect()
    }
}

fn policy(half_width: Option<i64>) -> WindowPolicy {
    half_width.map_or(WindowPolicy::Auto, WindowPolicy::Fixed)
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InternalError(e.to_string()))
}

fn outcome(exp: &Experiment, passed: bool, summary: String, csv: String, data: serde_json::Value) -> Result<Outcome> {
    let verdict = format!("{} {}: {summary}", if passed { "PASS" } else { "FAIL" }, exp.name());
    let json = serde_json::to_string_pretty(&json!({
        "experiment": exp,
        "passed": passed,
        "verdict": verdict,
        "data": data,
    }))?;
    Ok(Outcome { passed, verdict, csv, json })
}

fn run_bessel(exp: &Experiment, c: &BesselCheck) -> Result<Outcome> {
    let steps = (c.xmax / c.step + 1e-9).floor() as usize;
    let xs: Vec<f64> = (0..=steps).map(|i| i as f64 * c.step).collect();
    let rows = (-c.nmax..=c.nmax)
        .into_par_iter()
        .map(|n| {
            xs.iter()
                .map(|&x| Ok((n, x, bessel_j_series(n, x)?, bessel_j_integral(n, x)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let (mut worst, mut at) = (0.0_f64, (0, 0.0));
    for &(n, x, s, i) in &rows {
        if (s - i).abs() > worst {
            worst = (s - i).abs();
            at = (n, x);
        }
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(n, x, s, i)| vec![n.to_string(), x.to_string(), s.to_string(), i.to_string(), (s - i).abs().to_string()])
        .collect();
    let csv = csv_table(&["n", "x", "series", "integral", "abs_diff"], &table)?;
    let passed = worst < c.tol;
    let summary = format!("max |series − integral| = {worst:.3e} at n = {}, x = {} (tol {:e})", at.0, at.1, c.tol);
    let data = json!({ "max_abs_diff": worst, "argmax": { "n": at.0, "x": at.1 }, "points": rows.len() });
    outcome(exp, passed, summary, csv, data)
}

fn run_oracle(exp: &Experiment, c: &OracleCheck) -> Result<Outcome> {
    let f = c.source.load()?;
    let generic = c
        .lambdas
        .par_iter()
        .zip(&c.alphas)
        .map(|(&l, &a)| {
            let w = ModeWindow::new(l, c.half_width)?;
            let d = matrix_generic(&f, l, a, &w)?.max_abs_diff(&matrix_generic_oracle(&f, l, a, &w)?)?;
            Ok(vec!["generic".into(), l.to_string(), a.to_string(), String::new(), d.to_string()])
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    let limit = c
        .radii
        .par_iter()
        .map(|&r| {
            let w = ModeWindow::unclipped(c.half_width)?;
            let d = matrix_limit(&f, r, &w)?.max_abs_diff(&matrix_limit_oracle(&f, r, &w)?)?;
            Ok(vec!["limit".into(), String::new(), String::new(), r.to_string(), d.to_string()])
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    let rows = [generic, limit].concat();
    let diffs: Vec<f64> = rows.iter().map(|r| r[4].parse().expect("written above")).collect();
    let worst = diffs.iter().cloned().fold(0.0, f64::max);
    let passed = worst <= c.tol;
    let csv = csv_table(&["kind", "lambda", "alpha", "r", "max_abs_diff"], &rows)?;
    let summary = format!("max entry difference {worst:.3e} over {} points (tol {:e})", rows.len(), c.tol);
    outcome(exp, passed, summary, csv, json!({ "max_abs_diff": worst, "diffs": diffs }))
}

fn run_boundary(exp: &Experiment, c: &ConvergeBoundary) -> Result<Outcome> {
    let f = c.source.load()?;
    let report = defect_experiment(&f, &c.sequence(), policy(c.half_width))?;
    let d = report.defects();
    let (first, last) = (d[0], d[d.len() - 1]);
    let ratio = if first > 0.0 { last / first } else { 0.0 };
    let inversions = report.inversions();
    let violations = report.total_violations();
    let passed = (first == 0.0 || ratio < c.ratio) && inversions <= c.max_inversions && violations == 0;
    let summary = format!(
        "defect {first:.3e} → {last:.3e} (ratio {ratio:.4}, need < {}), {inversions} inversions, {violations} entry violations",
        c.ratio
    );
    let data = json!({ "ratio": ratio, "inversions": inversions, "entry_violations": violations, "report": report });
    outcome(exp, passed, summary, report.to_csv()?, data)
}

/// `(k, defect², E·w_k)` per row of a character experiment, with `E` fitted
/// at `e_at`, and whether every later row obeys the bound up to `factor`.
pub fn character_rate(rows: &[(u64, i64, f64, f64)], e_at: u64, factor: f64) -> Result<(f64, Vec<(u64, f64, f64)>, bool)> {
    let weight = |l: i64, a: f64| a.abs() * (l.unsigned_abs().max(1) as f64);
    let &(_, l0, a0, d0) = rows
        .iter()
        .find(|r| r.0 == e_at)
        .ok_or_else(|| field_err("e_at", format!("k = {e_at} not in the run")))?;
    let e = d0 * d0 / weight(l0, a0);
    let out: Vec<(u64, f64, f64)> = rows.iter().map(|&(k, l, a, d)| (k, d * d, e * weight(l, a))).collect();
    let ok = out.iter().filter(|r| r.0 > e_at).all(|&(_, sq, b)| sq <= factor * b);
    Ok((e, out, ok))
}

fn run_characters(exp: &Experiment, c: &ConvergeCharacters) -> Result<Outcome> {
    let f = c.source.load()?;
    let report = defect_experiment(&f, &c.sequence(), policy(c.half_width))?;
    let rows: Vec<(u64, i64, f64, f64)> = report.rows.iter().map(|r| (r.k, r.lambda, r.alpha, r.defect)).collect();
    let (e, checks, rate_ok) = character_rate(&rows, c.e_at, c.factor)?;
    let worst = checks
        .iter()
        .filter(|r| r.0 > c.e_at && r.2 > 0.0)
        .map(|r| r.1 / r.2)
        .fold(0.0, f64::max);
    let violations = report.total_violations();
    let passed = rate_ok && violations == 0;
    let summary = format!(
        "E = {e:.4e} at k = {}, worst later defect²/(E·|α_k λ_k|) = {worst:.3} (need ≤ {}), {violations} entry violations",
        c.e_at, c.factor
    );
    let data = json!({ "E": e, "worst_ratio": worst, "entry_violations": violations, "report": report });
    outcome(exp, passed, summary, report.to_csv()?, data)
}

fn run_tail(exp: &Experiment, c: &TailCheck) -> Result<Outcome> {
    let f = tail_family(c.max_mode);
    let reports = c
        .lambdas
        .par_iter()
        .map(|&l| tail_experiment(&f, l, c.alpha_lambda / l as f64))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.lambda as f64, r.value)).collect();
    let slope = log_log_slope(&pts);
    let within = reports.iter().all(|r| r.within_bound);
    let passed = slope.is_finite() && (slope + 0.5).abs() <= 0.5 * c.rel_tol && within;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.lambda.to_string(),
                r.alpha.to_string(),
                r.half_width.to_string(),
                r.value.to_string(),
                r.c_f.to_string(),
                r.bound.to_string(),
                r.within_bound.to_string(),
            ]
        })
        .collect();
    let csv = csv_table(&["lambda", "alpha", "half_width", "value", "c_f", "bound", "within_bound"], &rows)?;
    let summary = format!(
        "log-log slope {slope:.4} (target −0.5 ± {:.3}), C_F/√λ bound {}",
        0.5 * c.rel_tol,
        if within { "holds" } else { "violated" }
    );
    outcome(exp, passed, summary, csv, json!({ "slope": slope, "points": reports }))
}

fn run_orbits(exp: &Experiment, c: &OrbitClassify) -> Result<Outcome> {
    let spec = OrbitSequenceSpec::from_json(&std::fs::read_to_string(&c.spec)?)?;
    let verdict = classify_limit(&spec)?;
    let mut rows = vec![vec!["classifier".to_string(), verdict.to_string()]];
    let mut passed = !matches!(verdict, LimitSet::Unclassified { .. });
    let mut summary = verdict.to_string();
    let mut oracle_hits = None;
    if c.oracle {
        let cfg = OracleConfig {
            k_max: c.k_max,
            grid: c.grid,
            ..OracleConfig::default()
        };
        let hits = orbit_limit_oracle_with(&spec, &cfg)?;
        let expected = verdict.restrict(&candidate_orbits(spec.rank(), &cfg));
        let agree = hits == expected;
        passed &= agree;
        summary = format!(
            "{summary} (oracle {} on {} candidate orbits)",
            if agree { "agrees" } else { "disagrees" },
            hits.len()
        );
        for h in &hits {
            rows.push(vec!["oracle".to_string(), serde_json::to_string(h)?]);
        }
        oracle_hits = Some(hits);
    }
    let csv = csv_table(&["source", "orbit"], &rows)?;
    outcome(exp, passed, summary, csv, json!({ "limit": verdict, "oracle": oracle_hits }))
}

/// The random tensors of a [`TensorDemo`]: two summands `a_l ⊗ b_l` built
/// from corpus functions with random complex weights.
pub fn random_tensors(count: usize, rng_seed: u64) -> Vec<Vec<(TestFunction, TestFunction)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| {
            (0..2)
                .map(|_| {
                    let w = num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let a = canonical_family(rng.random_range(0..8)).scaled(w);
                    let b = canonical_family(rng.random_range(0..8));
                    (a, b)
                })
                .collect()
        })
        .collect()
}

fn run_tensor(exp: &Experiment, c: &TensorDemo) -> Result<Outcome> {
    let seqs = c.sequences();
    let tensors = random_tensors(c.count, c.rng_seed);
    let rows = tensors
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let control = tensor_control(
                &boundary_control(&seqs[0], c.k, c.half_width)?,
                &boundary_control(&seqs[1], c.k, c.half_width)?,
                t,
            )?;
            let norm = spectral_norm_dense(&control.matrix)?;
            let d1 = paired_boundary_defect(t, &seqs[0], &seqs[1], 1, c.half_width)?;
            let dk = paired_boundary_defect(t, &seqs[0], &seqs[1], c.k, c.half_width)?;
            Ok((i, norm, control.bound, d1, dk))
        })
        .collect::<Result<Vec<_>>>()?;
    let bound_ok = rows.iter().all(|r| r.1 <= r.2);
    let worst_ratio = rows.iter().map(|r| if r.3 > 0.0 { r.4 / r.3 } else { 0.0 }).fold(0.0, f64::max);
    let passed = bound_ok && worst_ratio < c.ratio;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.0.to_string(), r.1.to_string(), r.2.to_string(), r.3.to_string(), r.4.to_string()])
        .collect();
    let csv = csv_table(&["tensor", "control_norm", "bound", "defect_k1", "defect_k"], &table)?;
    let summary = format!(
        "{} tensors, control norms {} their bounds, worst defect(k = {})/defect(1) = {worst_ratio:.4} (need < {})",
        rows.len(),
        if bound_ok { "within" } else { "exceed" },
        c.k,
        c.ratio
    );
    let data = json!({ "bound_ok": bound_ok, "worst_ratio": worst_ratio });
    outcome(exp, passed, summary, csv, data)
}

fn run_d1(exp: &Experiment, c: &D1Check) -> Result<Outcome> {
    let mut field = match &c.field {
        Some(dir) => SampledField::load(dir)?,
        None => SampledField::from_test_function(&c.source.load()?, &FieldPlan::standard())?,
    };
    if let Some(dir) = &c.save_field {
        field.save(dir)?;
    }
    if let Some(r0) = c.plant_jump {
        let size = match c.jump_size {
            Some(s) => s,
            None => field.max_norm()?,
        };
        field = field.with_planted_jump(r0, size);
    }
    let report = check_d1(&field, &c.tolerances)?;
    let passed = report.passed();
    let rows: Vec<Vec<String>> = report
        .conditions
        .iter()
        .map(|r| {
            vec![
                r.condition.to_string(),
                r.name.clone(),
                serde_json::to_value(r.status).expect("plain enum").as_str().unwrap_or("").to_string(),
                r.measured.to_string(),
                r.tolerance.to_string(),
            ]
        })
        .collect();
    let csv = csv_table(&["condition", "name", "status", "measured", "tolerance"], &rows)?;
    let failed: Vec<String> = report
        .conditions
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| r.condition.to_string())
        .collect();
    let summary = if failed.is_empty() {
        format!("all {} conditions met on {} samples", report.conditions.len(), field.samples.len())
    } else {
        format!("condition(s) {} failed on {} samples", failed.join(", "), field.samples.len())
    };
    outcome(exp, passed, summary, csv, json!({ "report": report }))
}

/// Validate and compute an experiment without touching the disk.
pub fn evaluate(exp: &Experiment) -> Result<Outcome> {
    exp.validate()?;
    match exp {
        Experiment::BesselCheck(c) => run_bessel(exp, c),
        Experiment::OracleCheck(c) => run_oracle(exp, c),
        Experiment::ConvergeBoundary(c) => run_boundary(exp, c),
        Experiment::ConvergeCharacters(c) => run_characters(exp, c),
        Experiment::TailCheck(c) => run_tail(exp, c),
        Experiment::OrbitClassify(c) => run_orbits(exp, c),
        Experiment::TensorDemo(c) => run_tensor(exp, c),
        Experiment::D1Check(c) => run_d1(exp, c),
    }
}

/// Output paths `(<out>/<command>.csv, <out>/<command>.json)`.
pub fn output_paths(config: &ExperimentConfig) -> (PathBuf, PathBuf) {
    let name = config.experiment.name();
    (config.out.join(format!("{name}.csv")), config.out.join(format!("{name}.json")))
}

/// Evaluate `config` and write its CSV and JSON reports.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let out = evaluate(&config.experiment)?;
    let (csv, json) = output_paths(config);
    std::fs::create_dir_all(&config.out)?;
    std::fs::write(csv, &out.csv)?;
    std::fs::write(json, &out.json)?;
    Ok(out)
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Experiment(Experiment),
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Numerical experiments on the Fourier transform of `C*(G_n)`.
#[derive(Debug, Parser)]
#[command(name = "ncdl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for the CSV and JSON reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Validate the config and print the plan without computing.
    #[arg(long, global = true)]
    dry_run: bool,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| field_err(THREADS_ENV, format!("expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InternalError(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<bool> {
    init_threads()?;
    let mut config = match cli.command {
        Command::Experiment(experiment) => ExperimentConfig {
            experiment,
            out: default_out(),
        },
        Command::Run { config } => load_config(&config)?,
    };
    if let Some(out) = cli.out {
        config.out = out;
    }
    if cli.dry_run {
        config.experiment.validate()?;
        let (csv, json) = output_paths(&config);
        println!("dry run: {}", serde_json::to_string(&config)?);
        println!("would write {} and {}", csv.display(), json.display());
        return Ok(true);
    }
    let out = run(&config)?;
    println!("{}", out.verdict);
    Ok(out.passed)
}

/// Entry point of the `ncdl` binary: exit 0 iff every tolerance is met,
/// 1 when a check fails and 2 on errors.
pub fn main_entry() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let diag = json!({ "error": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or(""), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig {
            experiment: Experiment::ConvergeBoundary(ConvergeBoundary {
                half_width: Some(8),
                ..Default::default()
            }),
            out: PathBuf::from("x"),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"command\":\"converge-boundary\""));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn sparse_config_takes_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"command": "tail-check", "lambdas": [16, 64]}"#).unwrap();
        let Experiment::TailCheck(t) = &cfg.experiment else { panic!("wrong command") };
        assert_eq!(t.lambdas, vec![16, 64]);
        assert_eq!(t.max_mode, 200);
        assert_eq!(cfg.out, PathBuf::from("ncdl-out"));
    }

    #[test]
    fn validation_names_the_field() {
        let bad = [
            (Experiment::BesselCheck(BesselCheck { step: 0.0, ..Default::default() }), "step"),
            (Experiment::OracleCheck(OracleCheck { alphas: vec![0.1], ..Default::default() }), "alphas"),
            (Experiment::ConvergeBoundary(ConvergeBoundary { kmax: 0, ..Default::default() }), "sequence"),
            (Experiment::ConvergeCharacters(ConvergeCharacters { e_at: 40, ..Default::default() }), "e_at"),
            (Experiment::TailCheck(TailCheck { lambdas: vec![2, 16], ..Default::default() }), "lambdas"),
            (Experiment::OrbitClassify(OrbitClassify::default()), "spec"),
            (Experiment::TensorDemo(TensorDemo { lambda_steps: vec![1.0], ..Default::default() }), "lambda_steps"),
        ];
        for (exp, field) in bad {
            let msg = exp.validate().unwrap_err().to_string();
            assert!(msg.contains(field), "{msg} should name {field}");
        }
    }

    #[test]
    fn lambda_inf_flags() {
        assert_eq!(parse_lambda_inf("-3"), Ok(LambdaInf::Finite(-3)));
        assert_eq!(parse_lambda_inf("+inf"), Ok(LambdaInf::PlusInfinity));
        assert_eq!(parse_lambda_inf("minus-infinity"), Ok(LambdaInf::MinusInfinity));
        assert!(parse_lambda_inf("x").is_err());
    }

    #[test]
    fn character_rate_fit() {
        let rows: Vec<(u64, i64, f64, f64)> = (1..=8).map(|k| (k, 2, 1.0 / (k * k) as f64, (2.0 / (k * k) as f64).sqrt())).collect();
        let (e, _, ok) = character_rate(&rows, 5, 2.0).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        assert!(ok);
        let mut worse = rows.clone();
        worse[7].3 *= 2.0;
        assert!(!character_rate(&worse, 5, 2.0).unwrap().2);
    }

    #[test]
    fn runs_write_identical_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            experiment: Experiment::BesselCheck(BesselCheck {
                nmax: 3,
                xmax: 2.0,
                ..Default::default()
            }),
            out: dir.path().to_path_buf(),
        };
        let a = run(&cfg).unwrap();
        assert!(a.passed);
        let (csv, json) = output_paths(&cfg);
        assert_eq!(std::fs::read_to_string(csv).unwrap(), a.csv);
        assert_eq!(std::fs::read_to_string(json).unwrap(), a.json);
        assert_eq!(run(&cfg).unwrap(), a);
        assert!(a.verdict.starts_with("PASS bessel-check"));
    }

    #[test]
    fn random_tensors_are_reproducible() {
        assert_eq!(random_tensors(3, 9), random_tensors(3, 9));
        assert_ne!(random_tensors(3, 9), random_tensors(3, 10));
    }
}
