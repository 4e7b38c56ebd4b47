//! Admissible coadjoint orbits of `G_n = 𝕋ⁿ ⋉ ℍ_n` and limits of orbit sequences.
//!
//! Orbits come in three families: generic `O_{(λ,α)}` (`λ ∈ ℤⁿ`, `α ≠ 0`),
//! intermediate `O_{λ,r}` (`0 ≠ r ∈ ℝ₊ⁿ`, `λ_j = 0` on the support `I_r`)
//! and one-point orbits `O_λ`. Sequences are closed-form generators, so the
//! limit conditions can be decided from the formulas instead of from a
//! finite prefix. [`classify_limit`] decides them symbolically and
//! [`orbit_limit_oracle`] checks the verdict by sampling the orbits.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest rank handled by the oracle.
pub const ORACLE_MAX_RANK: usize = 3;
/// Largest `k` sampled by the oracle.
pub const ORACLE_MAX_K: u64 = 1000;

const PARAM_TOL: f64 = 1e-9;

/// A point of the admissible orbit space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitPoint {
    Generic { lambda: Vec<i64>, alpha: f64 },
    Intermediate { r: Vec<f64>, lambda: Vec<i64> },
    Point { lambda: Vec<i64> },
}

impl OrbitPoint {
    pub fn rank(&self) -> usize {
        self.lambda().len()
    }

    pub fn lambda(&self) -> &[i64] {
        match self {
            Self::Generic { lambda, .. } | Self::Intermediate { lambda, .. } | Self::Point { lambda } => lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Generic { alpha, .. } => {
                if !(*alpha != 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidInput(format!("generic orbit needs α ≠ 0, got {alpha}")));
                }
            }
            Self::Intermediate { r, lambda } => {
                if r.len() != lambda.len() {
                    return Err(Error::InvalidInput("r and λ have different lengths".into()));
                }
                if r.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || r.iter().all(|x| *x == 0.0) {
                    return Err(Error::InvalidInput(format!("r = {r:?} must be ≥ 0 and nonzero")));
                }
                if support(r).into_iter().any(|j| lambda[j] != 0) {
                    return Err(Error::InvalidInput(format!("λ = {lambda:?} must vanish on the support of r = {r:?}")));
                }
            }
            Self::Point { .. } => {}
        }
        if self.rank() == 0 {
            return Err(Error::InvalidInput("rank must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// `I_r = {j : r_j ≠ 0}`.
pub fn support(r: &[f64]) -> Vec<usize> {
    (0..r.len()).filter(|&j| r[j] != 0.0).collect()
}

/// `α_k = limit + amplitude · k^{-power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaLaw {
    #[serde(default)]
    pub limit: f64,
    pub amplitude: f64,
    pub power: f64,
}

impl AlphaLaw {
    pub fn at(&self, k: u64) -> f64 {
        self.limit + self.amplitude * (k as f64).powf(-self.power)
    }

    /// `ε`: the eventual sign of `α_k`.
    pub fn sign(&self) -> f64 {
        if self.limit != 0.0 {
            self.limit.signum()
        } else {
            self.amplitude.signum()
        }
    }
}

/// `r_k = limit + amplitude · k^{-power}`.
pub type RadiusLaw = AlphaLaw;

/// Closed form for one coordinate `λ_jᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaLaw {
    Constant { value: i64 },
    /// `round(c/α_k) + d`; only for generic sequences.
    Scaled { c: f64, #[serde(default)] d: i64 },
    /// `round(c · k^q) + d`.
    Power { c: f64, q: f64, #[serde(default)] d: i64 },
}

impl LambdaLaw {
    fn at(&self, k: u64, alpha_k: Option<f64>) -> Result<i64> {
        let v = match *self {
            Self::Constant { value } => return Ok(value),
            Self::Scaled { c, d } => {
                let a = alpha_k.ok_or_else(|| Error::InvalidInput("scaled λ law needs a central parameter".into()))?;
                (c / a).round() + d as f64
            }
            Self::Power { c, q, d } => (c * (k as f64).powf(q)).round() + d as f64,
        };
        if v.abs() > i64::MAX as f64 / 2.0 {
            return Err(Error::DomainError(format!("λ law overflows at k = {k}")));
        }
        Ok(v as i64)
    }

    fn eventual_constant(&self) -> Option<i64> {
        match *self {
            Self::Constant { value } => Some(value),
            Self::Scaled { c, d } | Self::Power { c, d, .. } if c == 0.0 => Some(d),
            _ => None,
        }
    }
}

/// Generator grammar for orbit sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitSequenceKind {
    /// `O_{(λᵏ, α_k)}`.
    Generic { alpha: AlphaLaw, lambda: Vec<LambdaLaw> },
    /// `O_{λᵏ, rᵏ}` with a constant support `I = I_{rᵏ}`.
    Intermediate { r: Vec<RadiusLaw>, lambda: Vec<LambdaLaw> },
    /// `O_{λᵏ}`.
    Point { lambda: Vec<LambdaLaw> },
}

/// An orbit sequence `k ↦ O_k`, defined for `k ≥ k0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSequenceSpec {
    #[serde(flatten)]
    pub kind: OrbitSequenceKind,
    #[serde(default = "first_k")]
    pub k0: u64,
}

fn first_k() -> u64 {
    1
}

impl OrbitSequenceSpec {
    pub fn rank(&self) -> usize {
        match &self.kind {
            OrbitSequenceKind::Generic { lambda, .. }
            | OrbitSequenceKind::Intermediate { lambda, .. }
            | OrbitSequenceKind::Point { lambda } => lambda.len(),
        }
    }

    fn lambda_laws(&self) -> &[LambdaLaw] {
        match &self.kind {
            OrbitSequenceKind::Generic { lambda, .. }
            | OrbitSequenceKind::Intermediate { lambda, .. }
            | OrbitSequenceKind::Point { lambda } => lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank() == 0 || self.k0 == 0 {
            return Err(Error::InvalidInput("need rank ≥ 1 and k0 ≥ 1".into()));
        }
        for law in self.lambda_laws() {
            if let LambdaLaw::Power { q, .. } = law {
                if !(*q > 0.0 && q.is_finite()) {
                    return Err(Error::InvalidInput(format!("power law exponent q = {q} must be > 0")));
                }
            }
        }
        match &self.kind {
            OrbitSequenceKind::Generic { alpha, .. } => {
                check_law(alpha, "alpha")?;
                if alpha.amplitude == 0.0 && alpha.limit == 0.0 {
                    return Err(Error::InvalidInput("alpha: α_k ≡ 0".into()));
                }
                // α_k is monotone in k, so a sign match at k0 and at the limit is enough.
                let first = alpha.at(self.k0);
                if first == 0.0 || (alpha.limit != 0.0 && first.signum() != alpha.limit.signum()) {
                    return Err(Error::InvalidInput(format!("alpha: α_k changes sign after k0 = {}", self.k0)));
                }
            }
            OrbitSequenceKind::Intermediate { r, lambda } => {
                if r.len() != lambda.len() {
                    return Err(Error::InvalidInput("r and lambda have different lengths".into()));
                }
                for (j, law) in r.iter().enumerate() {
                    check_law(law, &format!("r[{j}]"))?;
                    let zero = law.limit == 0.0 && law.amplitude == 0.0;
                    if !zero && !(law.at(self.k0) > 0.0 && law.limit >= 0.0) {
                        return Err(Error::InvalidInput(format!("r[{j}]: r_k must stay > 0 or be identically 0")));
                    }
                    if !zero && lambda[j] != (LambdaLaw::Constant { value: 0 }) {
                        return Err(Error::InvalidInput(format!("lambda[{j}] must be constant 0 on the support of r")));
                    }
                }
                if r.iter().all(|l| l.limit == 0.0 && l.amplitude == 0.0) {
                    return Err(Error::InvalidInput("r: rᵏ ≡ 0".into()));
                }
            }
            OrbitSequenceKind::Point { .. } => {}
        }
        if !matches!(self.kind, OrbitSequenceKind::Generic { .. })
            && self.lambda_laws().iter().any(|l| matches!(l, LambdaLaw::Scaled { .. }))
        {
            return Err(Error::InvalidInput("scaled λ laws need a generic sequence".into()));
        }
        Ok(())
    }

    /// The `k`-th orbit.
    pub fn term(&self, k: u64) -> Result<OrbitPoint> {
        if k < self.k0 {
            return Err(Error::IndexError(format!("k = {k} < k0 = {}", self.k0)));
        }
        Ok(match &self.kind {
            OrbitSequenceKind::Generic { alpha, lambda } => {
                let a = alpha.at(k);
                OrbitPoint::Generic {
                    lambda: lambda.iter().map(|l| l.at(k, Some(a))).collect::<Result<_>>()?,
                    alpha: a,
                }
            }
            OrbitSequenceKind::Intermediate { r, lambda } => OrbitPoint::Intermediate {
                r: r.iter().map(|l| l.at(k)).collect(),
                lambda: lambda.iter().map(|l| l.at(k, None)).collect::<Result<_>>()?,
            },
            OrbitSequenceKind::Point { lambda } => OrbitPoint::Point {
                lambda: lambda.iter().map(|l| l.at(k, None)).collect::<Result<_>>()?,
            },
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

fn check_law(law: &AlphaLaw, name: &str) -> Result<()> {
    if !(law.limit.is_finite() && law.amplitude.is_finite() && law.power > 0.0 && law.power.is_finite()) {
        return Err(Error::InvalidInput(format!("{name}: need finite limit/amplitude and power > 0")));
    }
    Ok(())
}

/// Allowed values of one coordinate of `λ` in a limit family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordRange {
    Exactly(i64),
    AtMost(i64),
    AtLeast(i64),
    All,
}

impl CoordRange {
    pub fn contains(&self, v: i64) -> bool {
        match *self {
            Self::Exactly(x) => v == x,
            Self::AtMost(x) => v <= x,
            Self::AtLeast(x) => v >= x,
            Self::All => true,
        }
    }
}

impl fmt::Display for CoordRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exactly(x) => write!(f, "{x}"),
            Self::AtMost(x) => write!(f, "≤{x}"),
            Self::AtLeast(x) => write!(f, "≥{x}"),
            Self::All => write!(f, "ℤ"),
        }
    }
}

/// Which orbit type a limit family consists of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    Generic { alpha: f64 },
    Intermediate { r: Vec<f64> },
    Point,
}

/// Limit set of an orbit sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LimitSet {
    /// No limit points.
    Empty,
    /// All orbits of one type whose `λ` lies in a product of ranges.
    Family { kind: LimitKind, lambda: Vec<CoordRange> },
    /// A regime outside the implemented case analysis.
    Unclassified { reason: String },
}

impl LimitSet {
    pub fn contains(&self, p: &OrbitPoint) -> bool {
        let Self::Family { kind, lambda } = self else {
            return false;
        };
        if p.rank() != lambda.len() || !p.lambda().iter().zip(lambda).all(|(v, c)| c.contains(*v)) {
            return false;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= PARAM_TOL * (1.0 + b.abs());
        match (kind, p) {
            (LimitKind::Generic { alpha }, OrbitPoint::Generic { alpha: a, .. }) => close(*a, *alpha),
            (LimitKind::Intermediate { r }, OrbitPoint::Intermediate { r: s, .. }) => {
                r.iter().zip(s).all(|(x, y)| close(*y, *x))
            }
            (LimitKind::Point, OrbitPoint::Point { .. }) => true,
            _ => false,
        }
    }

    /// Members among `candidates`, in their order.
    pub fn restrict(&self, candidates: &[OrbitPoint]) -> Vec<OrbitPoint> {
        candidates.iter().filter(|p| self.contains(p)).cloned().collect()
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    if v.len() == 1 {
        v[0].to_string()
    } else {
        format!("({})", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
    }
}

impl fmt::Display for LimitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "Empty"),
            Self::Unclassified { reason } => write!(f, "Unclassified ({reason})"),
            Self::Family { kind, lambda } => match kind {
                LimitKind::Generic { alpha } => write!(f, "Generic λ={} α={alpha}", join(lambda)),
                LimitKind::Intermediate { r } => write!(f, "Intermediate r={} λ={}", join(r), join(lambda)),
                LimitKind::Point => write!(f, "Point λ={}", join(lambda)),
            },
        }
    }
}

/// Eventual behaviour of `λ_jᵏ` against `α_k → 0`.
enum Coord {
    Constant(i64),
    /// `λ_jᵏ → sign·∞` with `α_k λ_jᵏ → product` (possibly infinite).
    Diverges { sign: f64, product: f64 },
}

fn coord_behaviour(law: &LambdaLaw, alpha: &AlphaLaw) -> Coord {
    if let Some(v) = law.eventual_constant() {
        return Coord::Constant(v);
    }
    let (a, p) = (alpha.amplitude, alpha.power);
    match *law {
        LambdaLaw::Scaled { c, .. } => Coord::Diverges {
            sign: c.signum() * a.signum(),
            product: c,
        },
        LambdaLaw::Power { c, q, .. } => {
            let product = if q < p {
                0.0
            } else if q == p {
                a * c
            } else {
                f64::INFINITY * (a * c).signum()
            };
            Coord::Diverges { sign: c.signum(), product }
        }
        LambdaLaw::Constant { .. } => unreachable!(),
    }
}

/// Eventual value of `round(c/α_k) + d` when `α_k → α∞ ≠ 0`.
fn scaled_limit(c: f64, d: i64, alpha: &AlphaLaw) -> i64 {
    let x = c / alpha.limit;
    let frac = x - x.floor();
    let v = if (frac - 0.5).abs() < 1e-12 {
        // c/α_k − c/α∞ ≈ −c·amplitude·k^{-p}/α∞² picks the side of the half-integer.
        let drift = -c * alpha.amplitude;
        if drift > 0.0 {
            x.ceil()
        } else if drift < 0.0 {
            x.floor()
        } else {
            x.round()
        }
    } else {
        x.round()
    };
    v as i64 + d
}

/// Limit set of an orbit sequence by the closed-form case analysis:
///
/// * generic, `α_k → α ≠ 0`: `{O_{(λ,α)}}` when `λᵏ` is eventually `λ`, else empty;
/// * generic, `α_k → 0`: coordinates with `α_kλ_jᵏ → r_j²/2 > 0` form `I_r`
///   (where `λ_j = 0`); off `I_r` we need `α_kλ_jᵏ → 0` and `α_k(λ_jᵏ − λ_j) ≥ 0`
///   eventually, which gives a half-line of `λ_j` for constant coordinates
///   and all of `ℤ` for coordinates running off to `ε·∞`;
/// * intermediate with `rᵏ → r`, `I_r = I`: `{O_{λ,r}}` with `λ` the eventual `λᵏ`;
/// * intermediate with `rᵏ → 0`: the characters `O_μ` with `μ_j = λ_j` off `I`
///   and `μ_j` free on `I`;
/// * intermediate with only part of `rᵏ` collapsing: [`LimitSet::Unclassified`];
/// * one-point orbits: `{O_λ}` when `λᵏ` is eventually constant.
pub fn classify_limit(spec: &OrbitSequenceSpec) -> Result<LimitSet> {
    spec.validate()?;
    match &spec.kind {
        OrbitSequenceKind::Generic { alpha, lambda } if alpha.limit != 0.0 => {
            let mut out = Vec::with_capacity(lambda.len());
            for law in lambda {
                match (law.eventual_constant(), law) {
                    (Some(v), _) => out.push(v),
                    (None, LambdaLaw::Scaled { c, d }) => out.push(scaled_limit(*c, *d, alpha)),
                    _ => return Ok(LimitSet::Empty),
                }
            }
            Ok(LimitSet::Family {
                kind: LimitKind::Generic { alpha: alpha.limit },
                lambda: out.into_iter().map(CoordRange::Exactly).collect(),
            })
        }
        OrbitSequenceKind::Generic { alpha, lambda } => {
            let eps = alpha.sign();
            let mut r = vec![0.0; lambda.len()];
            let mut ranges = Vec::with_capacity(lambda.len());
            for (j, law) in lambda.iter().enumerate() {
                match coord_behaviour(law, alpha) {
                    Coord::Constant(v) => ranges.push(if eps > 0.0 { CoordRange::AtMost(v) } else { CoordRange::AtLeast(v) }),
                    Coord::Diverges { sign, product } => {
                        if !product.is_finite() || product < 0.0 {
                            return Ok(LimitSet::Empty);
                        }
                        if product > 0.0 {
                            r[j] = (2.0 * product).sqrt();
                            ranges.push(CoordRange::Exactly(0));
                        } else if sign == eps {
                            ranges.push(CoordRange::All);
                        } else {
                            return Ok(LimitSet::Empty);
                        }
                    }
                }
            }
            let kind = if r.iter().any(|x| *x > 0.0) {
                LimitKind::Intermediate { r }
            } else {
                LimitKind::Point
            };
            Ok(LimitSet::Family { kind, lambda: ranges })
        }
        OrbitSequenceKind::Intermediate { r, lambda } => {
            let on: Vec<bool> = r.iter().map(|l| l.limit != 0.0 || l.amplitude != 0.0).collect();
            let mut off = Vec::with_capacity(lambda.len());
            for (j, law) in lambda.iter().enumerate() {
                if on[j] {
                    off.push(None);
                } else {
                    match law.eventual_constant() {
                        Some(v) => off.push(Some(v)),
                        None => return Ok(LimitSet::Empty),
                    }
                }
            }
            let collapsing = (0..r.len()).filter(|&j| on[j] && r[j].limit == 0.0).count();
            let active = on.iter().filter(|x| **x).count();
            if collapsing == 0 {
                Ok(LimitSet::Family {
                    kind: LimitKind::Intermediate {
                        r: r.iter().map(|l| l.limit).collect(),
                    },
                    lambda: off.iter().map(|v| CoordRange::Exactly(v.unwrap_or(0))).collect(),
                })
            } else if collapsing == active {
                Ok(LimitSet::Family {
                    kind: LimitKind::Point,
                    lambda: off.iter().map(|v| v.map_or(CoordRange::All, CoordRange::Exactly)).collect(),
                })
            } else {
                Ok(LimitSet::Unclassified {
                    reason: "rᵏ collapses on part of its support only".into(),
                })
            }
        }
        OrbitSequenceKind::Point { lambda } => {
            let v: Option<Vec<i64>> = lambda.iter().map(|l| l.eventual_constant()).collect();
            Ok(match v {
                Some(v) => LimitSet::Family {
                    kind: LimitKind::Point,
                    lambda: v.into_iter().map(CoordRange::Exactly).collect(),
                },
                None => LimitSet::Empty,
            })
        }
    }
}

/// Candidate limit orbits and acceptance threshold of the geometric oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub k_max: u64,
    /// Distance below which an orbit sample counts as close.
    pub grid: f64,
    /// Candidates have `|λ_j| ≤ lambda_box`.
    pub lambda_box: i64,
    pub alphas: Vec<f64>,
    /// Per-coordinate radii; `0` marks coordinates outside `I_r`.
    pub radii: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            k_max: ORACLE_MAX_K,
            grid: 0.3,
            lambda_box: 5,
            alphas: vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0],
            radii: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
        }
    }
}

fn lattice(n: usize, b: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-b..=b).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// All candidate orbits of rank `n`: generic, then intermediate, then one-point.
pub fn candidate_orbits(n: usize, cfg: &OracleConfig) -> Vec<OrbitPoint> {
    let lams = lattice(n, cfg.lambda_box);
    let mut out = Vec::new();
    for &alpha in &cfg.alphas {
        out.extend(lams.iter().map(|l| OrbitPoint::Generic { lambda: l.clone(), alpha }));
    }
    let mut rs: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..n {
        rs = rs
            .into_iter()
            .flat_map(|v| {
                cfg.radii.iter().map(move |&x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    for r in rs.into_iter().filter(|r| r.iter().any(|x| *x != 0.0)) {
        let on = support(&r);
        for l in lams.iter().filter(|l| on.iter().all(|&j| l[j] == 0)) {
            out.push(OrbitPoint::Intermediate { r: r.clone(), lambda: l.clone() });
        }
    }
    out.extend(lams.into_iter().map(|lambda| OrbitPoint::Point { lambda }));
    out
}

/// Real roots of `t³ + pt + q`.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    if p == 0.0 {
        return vec![(-q).cbrt()];
    }
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let phi = ((3.0 * q / (p * m)).clamp(-1.0, 1.0)).acos() / 3.0;
        (0..3)
            .map(|i| m * (phi - 2.0 * std::f64::consts::PI * i as f64 / 3.0).cos())
            .collect()
    }
}

/// `min_{ρ ≥ 0} (D − ρ²/(2α))² + (ρ − ρ*)²`: one coordinate of the squared
/// distance from `(U*, ρ*)` to a generic orbit, with `D = λ − U*`.
fn generic_coord_distance_sq(d: f64, alpha: f64, rho_star: f64) -> f64 {
    let f = |rho: f64| (d - rho * rho / (2.0 * alpha)).powi(2) + (rho - rho_star).powi(2);
    let p = 2.0 * alpha * alpha - 2.0 * alpha * d;
    let q = -2.0 * alpha * alpha * rho_star;
    let mut best = f(0.0).min(f(rho_star));
    if alpha * d > 0.0 {
        best = best.min(f((2.0 * alpha * d).sqrt()));
    }
    for rho in depressed_cubic_roots(p, q) {
        if rho >= 0.0 {
            best = best.min(f(rho));
        }
    }
    best
}

/// Distance from the representative `(λ, r, α)` of `candidate` to the orbit
/// `term`, in the torus-invariant coordinates `(U_j, |u_j|, x)` of `𝔤ₙ*`.
///
/// The orbits read `{(λ_j − ρ_j²/(2α), ρ, α)}` (generic), `{(U, r, 0)}` with
/// `U_j` free on `I_r` and `U_j = λ_j` off it (intermediate) and `{(λ, 0, 0)}`.
pub fn orbit_distance(candidate: &OrbitPoint, term: &OrbitPoint) -> f64 {
    let n = candidate.rank();
    let u_star = candidate.lambda();
    let zeros = vec![0.0; n];
    let (rho_star, x_star) = match candidate {
        OrbitPoint::Generic { alpha, .. } => (&zeros, *alpha),
        OrbitPoint::Intermediate { r, .. } => (r, 0.0),
        OrbitPoint::Point { .. } => (&zeros, 0.0),
    };
    let mut sq = 0.0;
    match term {
        OrbitPoint::Generic { lambda, alpha } => {
            sq += (x_star - alpha).powi(2);
            for j in 0..n {
                sq += generic_coord_distance_sq((lambda[j] - u_star[j]) as f64, *alpha, rho_star[j]);
            }
        }
        OrbitPoint::Intermediate { r, lambda } => {
            sq += x_star * x_star;
            for j in 0..n {
                sq += (r[j] - rho_star[j]).powi(2);
                if r[j] == 0.0 {
                    sq += ((lambda[j] - u_star[j]) as f64).powi(2);
                }
            }
        }
        OrbitPoint::Point { lambda } => {
            sq += x_star * x_star;
            for j in 0..n {
                sq += rho_star[j].powi(2) + ((lambda[j] - u_star[j]) as f64).powi(2);
            }
        }
    }
    sq.sqrt()
}

/// Geometric limit set: candidates whose representative is within `grid` of
/// the sampled orbits at `k = k_max/2, 3k_max/4, k_max`. Advisory.
pub fn orbit_limit_oracle(spec: &OrbitSequenceSpec, k_max: u64, grid: f64) -> Result<Vec<OrbitPoint>> {
    orbit_limit_oracle_with(
        spec,
        &OracleConfig {
            k_max,
            grid,
            ..OracleConfig::default()
        },
    )
}

pub fn orbit_limit_oracle_with(spec: &OrbitSequenceSpec, cfg: &OracleConfig) -> Result<Vec<OrbitPoint>> {
    spec.validate()?;
    let n = spec.rank();
    if n > ORACLE_MAX_RANK || cfg.k_max > ORACLE_MAX_K || cfg.k_max < 4 * spec.k0 {
        return Err(Error::InvalidInput(format!(
            "oracle needs n ≤ {ORACLE_MAX_RANK} and 4·k0 ≤ k_max ≤ {ORACLE_MAX_K}"
        )));
    }
    let ks: BTreeSet<u64> = [cfg.k_max / 2, 3 * cfg.k_max / 4, cfg.k_max].into_iter().collect();
    let terms: Vec<OrbitPoint> = ks.iter().map(|&k| spec.term(k)).collect::<Result<_>>()?;
    Ok(candidate_orbits(n, cfg)
        .into_iter()
        .filter(|c| terms.iter().all(|t| orbit_distance(c, t) <= cfg.grid))
        .collect())
}

/// A random sequence from the generator grammar whose asymptotics the
/// default oracle resolves at `k ≤ 1000`: decay rates `k^{-1}` or faster,
/// radii on the oracle grid, `|λ| ≤ 3` where `λ` settles.
pub fn random_orbit_spec<R: Rng>(rng: &mut R, n: usize) -> OrbitSequenceSpec {
    let radii = [0.5, 1.0, 1.5, 2.0];
    let signs = [-1.0, 1.0];
    let kind = match rng.random_range(0..4) {
        0 => {
            let limit = *[0.5, 1.0, 2.0].choose(rng).unwrap() * *signs.choose(rng).unwrap();
            let alpha = AlphaLaw {
                limit,
                amplitude: limit * rng.random_range(0.1..0.9),
                power: 1.0,
            };
            let lambda = (0..n)
                .map(|_| match rng.random_range(0..6) {
                    0 => LambdaLaw::Power { c: 1.0, q: 1.0, d: 0 },
                    1 | 2 => LambdaLaw::Scaled {
                        c: limit * rng.random_range(-2..=2) as f64,
                        d: rng.random_range(-1..=1),
                    },
                    _ => LambdaLaw::Constant { value: rng.random_range(-3..=3) },
                })
                .collect();
            OrbitSequenceKind::Generic { alpha, lambda }
        }
        1 => {
            let power = *[1.0, 2.0].choose(rng).unwrap();
            let scales: &[f64] = if power == 1.0 { &[0.5, 1.0] } else { &[0.5, 1.0, 2.0] };
            let a = *scales.choose(rng).unwrap() * *signs.choose(rng).unwrap();
            let lambda = (0..n)
                .map(|_| match rng.random_range(0..7) {
                    0 | 1 => {
                        let r: f64 = *radii.choose(rng).unwrap();
                        LambdaLaw::Scaled {
                            c: r * r / 2.0 * if rng.random_range(0..6) == 0 { -1.0 } else { 1.0 },
                            d: rng.random_range(-1..=1),
                        }
                    }
                    2 if power == 2.0 => LambdaLaw::Power {
                        c: *[0.5, 1.0].choose(rng).unwrap() * *signs.choose(rng).unwrap(),
                        q: 1.0,
                        d: 0,
                    },
                    3 if power == 2.0 => {
                        let r: f64 = *radii.choose(rng).unwrap();
                        LambdaLaw::Power {
                            c: r * r / (2.0 * a),
                            q: 2.0,
                            d: 0,
                        }
                    }
                    4 if power == 1.0 => LambdaLaw::Power { c: 1.0, q: 2.0, d: 0 },
                    _ => LambdaLaw::Constant { value: rng.random_range(-3..=3) },
                })
                .collect();
            OrbitSequenceKind::Generic {
                alpha: AlphaLaw { limit: 0.0, amplitude: a, power },
                lambda,
            }
        }
        2 => {
            let collapse = rng.random_bool(0.5);
            let mut on: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            let j = rng.random_range(0..n);
            on[j] = true;
            let r = on
                .iter()
                .map(|&o| match (o, collapse) {
                    (false, _) => AlphaLaw { limit: 0.0, amplitude: 0.0, power: 1.0 },
                    (true, true) => AlphaLaw {
                        limit: 0.0,
                        amplitude: *[0.5, 1.0].choose(rng).unwrap(),
                        power: *[1.0, 2.0].choose(rng).unwrap(),
                    },
                    (true, false) => AlphaLaw {
                        limit: *radii.choose(rng).unwrap(),
                        amplitude: *[0.0, 0.25].choose(rng).unwrap(),
                        power: 1.0,
                    },
                })
                .collect();
            let lambda = on
                .iter()
                .map(|&o| match (o, rng.random_range(0..6)) {
                    (true, _) => LambdaLaw::Constant { value: 0 },
                    (false, 0) => LambdaLaw::Power { c: -1.0, q: 1.0, d: 0 },
                    (false, _) => LambdaLaw::Constant { value: rng.random_range(-3..=3) },
                })
                .collect();
            OrbitSequenceKind::Intermediate { r, lambda }
        }
        _ => OrbitSequenceKind::Point {
            lambda: (0..n)
                .map(|_| match rng.random_range(0..5) {
                    0 => LambdaLaw::Power { c: 1.0, q: 0.5, d: 0 },
                    _ => LambdaLaw::Constant { value: rng.random_range(-3..=3) },
                })
                .collect(),
        },
    };
    OrbitSequenceSpec { kind, k0: 1 }
}

/// The three worked cases: a generic limit, a boundary limit and a fan of characters.
pub fn worked_examples() -> Vec<(OrbitSequenceSpec, LimitSet)> {
    let scalar = |lambda: LambdaLaw, alpha: AlphaLaw| OrbitSequenceSpec {
        kind: OrbitSequenceKind::Generic { alpha, lambda: vec![lambda] },
        k0: 1,
    };
    vec![
        (
            scalar(
                LambdaLaw::Constant { value: 5 },
                AlphaLaw { limit: 1.0, amplitude: 1.0, power: 1.0 },
            ),
            LimitSet::Family {
                kind: LimitKind::Generic { alpha: 1.0 },
                lambda: vec![CoordRange::Exactly(5)],
            },
        ),
        (
            scalar(
                LambdaLaw::Power { c: 0.5, q: 1.0, d: 0 },
                AlphaLaw { limit: 0.0, amplitude: 1.0, power: 1.0 },
            ),
            LimitSet::Family {
                kind: LimitKind::Intermediate { r: vec![1.0] },
                lambda: vec![CoordRange::Exactly(0)],
            },
        ),
        (
            scalar(
                LambdaLaw::Constant { value: 3 },
                AlphaLaw { limit: 0.0, amplitude: 1.0, power: 2.0 },
            ),
            LimitSet::Family {
                kind: LimitKind::Point,
                lambda: vec![CoordRange::AtMost(3)],
            },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_examples_classify() {
        for (spec, expected) in worked_examples() {
            assert_eq!(classify_limit(&spec).unwrap(), expected);
        }
        let text = worked_examples()[1].1.to_string();
        assert_eq!(text, "Intermediate r=1 λ=0");
        assert_eq!(worked_examples()[2].1.to_string(), "Point λ=≤3");
    }

    #[test]
    fn worked_examples_match_oracle() {
        let cfg = OracleConfig::default();
        for (spec, expected) in worked_examples() {
            let got = orbit_limit_oracle(&spec, 1000, 0.3).unwrap();
            assert_eq!(got, expected.restrict(&candidate_orbits(1, &cfg)), "{expected}");
            assert!(!got.is_empty());
        }
    }

    #[test]
    fn constant_and_diverging() {
        let constant = OrbitSequenceSpec {
            kind: OrbitSequenceKind::Generic {
                alpha: AlphaLaw { limit: 0.5, amplitude: 0.0, power: 1.0 },
                lambda: vec![LambdaLaw::Constant { value: 2 }, LambdaLaw::Constant { value: -1 }],
            },
            k0: 1,
        };
        let got = orbit_limit_oracle(&constant, 200, 0.1).unwrap();
        assert_eq!(got, vec![constant.term(1).unwrap()]);
        let diverging = OrbitSequenceSpec {
            kind: OrbitSequenceKind::Generic {
                alpha: AlphaLaw { limit: 0.0, amplitude: 1.0, power: -1.0 },
                lambda: vec![LambdaLaw::Constant { value: 0 }],
            },
            k0: 1,
        };
        assert!(diverging.validate().is_err());
        let running = OrbitSequenceSpec {
            kind: OrbitSequenceKind::Point {
                lambda: vec![LambdaLaw::Power { c: 1.0, q: 1.0, d: 0 }],
            },
            k0: 1,
        };
        assert_eq!(classify_limit(&running).unwrap(), LimitSet::Empty);
        assert!(orbit_limit_oracle(&running, 1000, 0.3).unwrap().is_empty());
    }

    #[test]
    fn negative_alpha_fans_upward() {
        let spec = OrbitSequenceSpec {
            kind: OrbitSequenceKind::Generic {
                alpha: AlphaLaw { limit: 0.0, amplitude: -1.0, power: 2.0 },
                lambda: vec![LambdaLaw::Constant { value: -1 }],
            },
            k0: 1,
        };
        let l = classify_limit(&spec).unwrap();
        assert_eq!(
            l,
            LimitSet::Family {
                kind: LimitKind::Point,
                lambda: vec![CoordRange::AtLeast(-1)]
            }
        );
    }

    #[test]
    fn collapsing_radius_gives_free_coordinates() {
        let spec = OrbitSequenceSpec {
            kind: OrbitSequenceKind::Intermediate {
                r: vec![
                    AlphaLaw { limit: 0.0, amplitude: 1.0, power: 1.0 },
                    AlphaLaw { limit: 0.0, amplitude: 0.0, power: 1.0 },
                ],
                lambda: vec![LambdaLaw::Constant { value: 0 }, LambdaLaw::Constant { value: 2 }],
            },
            k0: 1,
        };
        let l = classify_limit(&spec).unwrap();
        assert_eq!(l.to_string(), "Point λ=(ℤ, 2)");
        let partial = OrbitSequenceSpec {
            kind: OrbitSequenceKind::Intermediate {
                r: vec![
                    AlphaLaw { limit: 0.0, amplitude: 1.0, power: 1.0 },
                    AlphaLaw { limit: 1.0, amplitude: 0.0, power: 1.0 },
                ],
                lambda: vec![LambdaLaw::Constant { value: 0 }, LambdaLaw::Constant { value: 0 }],
            },
            k0: 1,
        };
        assert!(matches!(classify_limit(&partial).unwrap(), LimitSet::Unclassified { .. }));
    }

    #[test]
    fn grammar_round_trips_through_json() {
        let text = r#"{"kind":"generic","alpha":{"amplitude":1.0,"power":1.0},"lambda":[{"kind":"power","c":0.5,"q":1.0}]}"#;
        let spec = OrbitSequenceSpec::from_json(text).unwrap();
        assert_eq!(spec, worked_examples()[1].0);
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(OrbitSequenceSpec::from_json(&back).unwrap(), spec);
        let bad = r#"{"kind":"intermediate","r":[{"limit":1.0,"amplitude":0.0,"power":1.0}],"lambda":[{"kind":"constant","value":2}]}"#;
        assert!(OrbitSequenceSpec::from_json(bad).is_err());
    }

    #[test]
    fn cubic_roots_are_roots() {
        for (p, q) in [(-3.0, 1.0), (1.0, 1.0), (-1e-6, -1e-12), (0.0, -8.0)] {
            for t in depressed_cubic_roots(p, q) {
                assert!((t * t * t + p * t + q).abs() < 1e-9 * (1.0 + q.abs()), "{p} {q} {t}");
            }
        }
    }

    #[test]
    fn random_specs_agree_with_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = OracleConfig::default();
        for _ in 0..20 {
            let n = rng.random_range(1..=2);
            let spec = random_orbit_spec(&mut rng, n);
            let verdict = classify_limit(&spec).unwrap();
            let oracle = orbit_limit_oracle_with(&spec, &cfg).unwrap();
            assert_eq!(oracle, verdict.restrict(&candidate_orbits(n, &cfg)), "{spec:?} → {verdict}");
        }
    }

    proptest! {
        #[test]
        fn intermediate_outputs_vanish_on_support(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random_orbit_spec(&mut rng, 2);
            if let LimitSet::Family { kind: LimitKind::Intermediate { r }, lambda } = classify_limit(&spec).unwrap() {
                for j in support(&r) {
                    prop_assert_eq!(lambda[j], CoordRange::Exactly(0));
                }
                prop_assert!(r.iter().all(|x| *x >= 0.0) && r.iter().any(|x| *x > 0.0));
            }
        }
    }
}
