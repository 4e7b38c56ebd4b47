//! Truncated torus and Fock bases, the intertwiner `V: χ_j ↦ i^j b_{j+λ}`,
//! and the finite operator matrices shared by every representation.
//!
//! Matrices of `π_{λ,α}(F)` are stored in the pulled-back basis, i.e. the
//! entry at `(l, j)` is `⟨π(F) V χ_j, V χ_l⟩`. Conjugation by `V` is then
//! the identity on entries and only changes the basis tag.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::i_pow;

/// Index window `{j : |j| ≤ J, j ≥ -λ}`; `lambda = None` drops the lower cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeWindow {
    pub lambda: Option<i64>,
    pub half_width: i64,
}

impl ModeWindow {
    pub fn new(lambda: i64, half_width: i64) -> Result<Self> {
        if half_width < 1 {
            return Err(Error::InvalidInput(format!("window half-width {half_width} < 1")));
        }
        if lambda < 0 {
            return Err(Error::InvalidInput(format!("window λ = {lambda} < 0")));
        }
        Ok(Self {
            lambda: Some(lambda),
            half_width,
        })
    }

    /// Window for the `λ`-free limit representation.
    pub fn unclipped(half_width: i64) -> Result<Self> {
        if half_width < 1 {
            return Err(Error::InvalidInput(format!("window half-width {half_width} < 1")));
        }
        Ok(Self {
            lambda: None,
            half_width,
        })
    }

    /// Default half-width `⌈√λ⌉` (at least 1).
    pub fn auto(lambda: i64) -> Result<Self> {
        Self::new(lambda, ((lambda.max(1) as f64).sqrt().ceil() as i64).max(1))
    }

    pub fn min_index(&self) -> i64 {
        match self.lambda {
            Some(l) => (-self.half_width).max(-l),
            None => -self.half_width,
        }
    }

    pub fn max_index(&self) -> i64 {
        self.half_width
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + Clone {
        self.min_index()..=self.max_index()
    }

    pub fn len(&self) -> usize {
        (self.max_index() - self.min_index() + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: i64) -> bool {
        j >= self.min_index() && j <= self.max_index()
    }

    /// Position of mode `j` in the ascending index list.
    pub fn position(&self, j: i64) -> Option<usize> {
        self.contains(j).then(|| (j - self.min_index()) as usize)
    }

    /// The same half-width clipped at `j ≥ -λ`.
    pub fn clipped(&self, lambda: i64) -> Result<Self> {
        Self::new(lambda, self.half_width)
    }
}

/// Which Hilbert space a matrix acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basis {
    /// `ℓ²(𝕋)` with basis `χ_j`.
    Torus,
    /// Fock space, in the basis `V χ_j = i^j b_{j+λ,α}`.
    Fock { lambda: i64, alpha: f64 },
}

/// Dense matrix over a window; entry `(row, col)` is `⟨A χ_col, χ_row⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub window: ModeWindow,
    pub basis: Basis,
    pub entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn zeros(window: ModeWindow, basis: Basis) -> Self {
        let n = window.len();
        Self {
            window,
            basis,
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(window: ModeWindow, basis: Basis) -> Self {
        let n = window.len();
        Self {
            window,
            basis,
            entries: DMatrix::identity(n, n),
        }
    }

    /// Build from a per-entry function of the mode pair `(l, j)`.
    pub fn from_fn<F>(window: ModeWindow, basis: Basis, mut f: F) -> Self
    where
        F: FnMut(i64, i64) -> Complex64,
    {
        let lo = window.min_index();
        let n = window.len();
        Self {
            window,
            basis,
            entries: DMatrix::from_fn(n, n, |r, c| f(lo + r as i64, lo + c as i64)),
        }
    }

    /// Entry `⟨A χ_j, χ_l⟩`, zero outside the window.
    pub fn get(&self, l: i64, j: i64) -> Complex64 {
        match (self.window.position(l), self.window.position(j)) {
            (Some(r), Some(c)) => self.entries[(r, c)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        self.check_same_window(other)?;
        Ok((&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            window: self.window,
            basis: self.basis,
            entries: self.entries.adjoint(),
        }
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_same_window(other)?;
        Ok(OperatorMatrix {
            window: self.window,
            basis: self.basis,
            entries: &self.entries - &other.entries,
        })
    }

    /// Copy onto another window, dropping entries outside it and padding with zeros.
    pub fn embed(&self, window: ModeWindow) -> OperatorMatrix {
        OperatorMatrix::from_fn(window, self.basis, |l, j| self.get(l, j))
    }

    fn check_same_window(&self, other: &OperatorMatrix) -> Result<()> {
        if self.window.indices().eq(other.window.indices()) {
            Ok(())
        } else {
            Err(Error::IndexError(format!(
                "window mismatch: {:?} vs {:?}",
                self.window, other.window
            )))
        }
    }
}

/// The intertwiner `V χ_j = i^j b_{j+λ,α}` on a window, kept implicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intertwiner {
    pub lambda: i64,
    pub alpha: f64,
    pub window: ModeWindow,
}

/// Direction of a conjugation by `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conjugation {
    /// `A ↦ V A V*`, torus side to Fock side.
    VAVStar,
    /// `A ↦ V* A V`, Fock side to torus side.
    VStarAV,
}

impl Intertwiner {
    pub fn new(lambda: i64, alpha: f64, window: ModeWindow) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::DomainError(format!("α = {alpha} must be positive")));
        }
        if window.min_index() + lambda < 0 {
            return Err(Error::IndexError(format!(
                "window reaches j = {} < -λ = {}",
                window.min_index(),
                -lambda
            )));
        }
        Ok(Self {
            lambda,
            alpha,
            window,
        })
    }

    /// Fock level `N = j + λ` of the torus mode `j`.
    pub fn level(&self, j: i64) -> u64 {
        (j + self.lambda) as u64
    }

    /// Torus coefficients `(c_j)` over the window to Fock coefficients `(N, i^j c_j)`.
    pub fn apply(&self, torus: &[Complex64]) -> Result<Vec<(u64, Complex64)>> {
        self.check_len(torus.len())?;
        Ok(self
            .window
            .indices()
            .zip(torus)
            .map(|(j, &c)| (self.level(j), i_pow(j) * c))
            .collect())
    }

    /// Fock coefficients `(N, a_N)` to torus coefficients `c_j = i^{-j} a_{j+λ}`.
    /// Levels outside the window are dropped.
    pub fn apply_adjoint(&self, fock: &[(u64, Complex64)]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.window.len()];
        for &(n, a) in fock {
            let j = n as i64 - self.lambda;
            if let Some(p) = self.window.position(j) {
                out[p] += i_pow(-j) * a;
            }
        }
        out
    }

    /// Fock levels covered by the window, ascending.
    pub fn levels(&self) -> Vec<u64> {
        self.window.indices().map(|j| self.level(j)).collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n == self.window.len() {
            Ok(())
        } else {
            Err(Error::IndexError(format!(
                "vector of length {n} on a window of size {}",
                self.window.len()
            )))
        }
    }
}

/// Conjugate a matrix by the intertwiner.
///
/// In the pulled-back basis both directions leave entries unchanged; the
/// window must match and the basis tag must be on the expected side.
pub fn conjugate_by_v(
    a: &OperatorMatrix,
    v: &Intertwiner,
    direction: Conjugation,
) -> Result<OperatorMatrix> {
    if !a.window.indices().eq(v.window.indices()) {
        return Err(Error::IndexError(format!(
            "matrix window {:?} does not match intertwiner window {:?}",
            a.window, v.window
        )));
    }
    let basis = match (direction, a.basis) {
        (Conjugation::VAVStar, Basis::Torus) => Basis::Fock {
            lambda: v.lambda,
            alpha: v.alpha,
        },
        (Conjugation::VStarAV, Basis::Fock { .. }) => Basis::Torus,
        (d, b) => {
            return Err(Error::IndexError(format!(
                "cannot apply {d:?} to a matrix on the {b:?} side"
            )))
        }
    };
    Ok(OperatorMatrix {
        window: a.window,
        basis,
        entries: a.entries.clone(),
    })
}

/// Matrix entries of `V A V*` in the plain Fock basis `b_N` (rows and
/// columns ordered by level), for checking the pulled-back convention.
pub fn to_plain_fock(a: &OperatorMatrix) -> DMatrix<Complex64> {
    let lo = a.window.min_index();
    DMatrix::from_fn(a.dim(), a.dim(), |r, c| {
        let l = lo + r as i64;
        let j = lo + c as i64;
        i_pow(l - j) * a.entries[(r, c)]
    })
}

/// `A ∘ (Id − P_{λ,M})`: zero the columns with `|j| ≤ M`.
pub fn project_tail(a: &OperatorMatrix, m: f64) -> Result<OperatorMatrix> {
    if !(m >= 0.0) {
        return Err(Error::InvalidInput(format!("tail cut M = {m} must be ≥ 0")));
    }
    let mut out = a.clone();
    for (c, j) in a.window.indices().enumerate() {
        if (j.abs() as f64) <= m {
            out.entries.column_mut(c).fill(Complex64::new(0.0, 0.0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn window_sizes() {
        let w = ModeWindow::new(3, 5).unwrap();
        assert_eq!(w.indices().collect::<Vec<_>>(), (-3..=5).collect::<Vec<_>>());
        assert_eq!(w.len(), 3 + 5 + 1);
        let w = ModeWindow::new(100, 4).unwrap();
        assert_eq!(w.len(), 9);
        assert_eq!(ModeWindow::auto(400).unwrap().half_width, 20);
        assert!(ModeWindow::new(3, 0).is_err());
    }

    #[test]
    fn conjugation_examples() {
        let w = ModeWindow::new(10, 3).unwrap();
        let v = Intertwiner::new(10, 0.1, w).unwrap();
        let id = OperatorMatrix::identity(w, Basis::Torus);
        let out = conjugate_by_v(&id, &v, Conjugation::VAVStar).unwrap();
        assert_eq!(out.entries, id.entries);
        assert_eq!(to_plain_fock(&out), id.entries);
        let d = OperatorMatrix::from_fn(w, Basis::Torus, |l, j| {
            if l == j {
                Complex64::new(l as f64, 1.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let out = conjugate_by_v(&d, &v, Conjugation::VAVStar).unwrap();
        assert_eq!(out.entries, d.entries);
        assert!(conjugate_by_v(&d, &v, Conjugation::VStarAV).is_err());
        let other = Intertwiner::new(10, 0.1, ModeWindow::new(10, 4).unwrap()).unwrap();
        assert!(matches!(
            conjugate_by_v(&d, &other, Conjugation::VAVStar),
            Err(Error::IndexError(_))
        ));
    }

    #[test]
    fn tail_projection_examples() {
        let w = ModeWindow::new(10, 3).unwrap();
        let a = OperatorMatrix::from_fn(w, Basis::Torus, |l, j| Complex64::new(l as f64, j as f64 + 0.5));
        let full = project_tail(&a, 3.0).unwrap();
        assert!(full.entries.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        let one = project_tail(&a, 0.0).unwrap();
        for l in w.indices() {
            for j in w.indices() {
                let want = if j == 0 { Complex64::new(0.0, 0.0) } else { a.get(l, j) };
                assert_eq!(one.get(l, j), want);
            }
        }
    }

    #[test]
    fn intertwiner_rejects_window_below_minus_lambda() {
        let w = ModeWindow::unclipped(5).unwrap();
        assert!(Intertwiner::new(3, 0.2, w).is_err());
        assert!(Intertwiner::new(3, -0.2, ModeWindow::new(3, 5).unwrap()).is_err());
    }

    fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64).prop_map(|(a, b)| Complex64::new(a, b)), n)
    }

    proptest! {
        #[test]
        fn v_star_v_is_identity(lambda in 0i64..100, half in 1i64..32, pool in cvec(65)) {
            let w = ModeWindow::new(lambda, half).unwrap();
            let v = Intertwiner::new(lambda, 0.3, w).unwrap();
            let n = w.len();
            prop_assert!(n <= 65);
            let x = pool[..n].to_vec();
            let back = v.apply_adjoint(&v.apply(&x).unwrap());
            prop_assert_eq!(back, x.clone());
            // V V* on the covered Fock levels.
            let fock: Vec<(u64, Complex64)> = v.levels().into_iter().zip(x.iter().copied()).collect();
            let again = v.apply(&v.apply_adjoint(&fock)).unwrap();
            prop_assert_eq!(again, fock);
        }

        #[test]
        fn tail_projection_complement(lambda in 0i64..40, half in 1i64..10, m in 0.0..12.0f64) {
            let w = ModeWindow::new(lambda, half).unwrap();
            let a = OperatorMatrix::from_fn(w, Basis::Torus, |l, j| Complex64::new((l * 7 + j) as f64, (l - 3 * j) as f64));
            let tail = project_tail(&a, m).unwrap();
            let head = a.sub(&tail).unwrap();
            for (c, j) in w.indices().enumerate() {
                let keep = (j.abs() as f64) <= m;
                for r in 0..w.len() {
                    prop_assert_eq!(head.entries[(r, c)] + tail.entries[(r, c)], a.entries[(r, c)]);
                    if keep { prop_assert_eq!(tail.entries[(r, c)], Complex64::new(0.0, 0.0)); }
                    else { prop_assert_eq!(head.entries[(r, c)], Complex64::new(0.0, 0.0)); }
                }
            }
        }
    }
}
