//! Subset least squares and the projection utilities shared by every
//! selector.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many terms sums of squares use compensated summation.
const COMPENSATED_SUM_THRESHOLD: usize = 10_000;

/// Relative pivot floor below which the Cholesky route for a subset is
/// abandoned in favour of the SVD route.
const CHOLESKY_PIVOT_TOL: f64 = 1e-10;

/// Relative tolerance for treating an off-diagonal Gram entry as zero.
const ORTHOGONAL_TOL: f64 = 1e-12;

/// The `n x p` predictor matrix together with its numerical rank.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
    gram: DMatrix<f64>,
    rank_tol: f64,
    rank: usize,
}

impl DesignMatrix {
    /// Wraps `entries` using the default relative rank tolerance
    /// `max(n, p) * f64::EPSILON`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let tol = entries.nrows().max(entries.ncols()) as f64 * f64::EPSILON;
        Self::with_rank_tol(entries, tol)
    }

    pub fn with_rank_tol(entries: DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::EmptyDesign);
        }
        if !(rank_tol >= 0.0) || !rank_tol.is_finite() {
            return Err(Error::InvalidArgument(format!("rank tolerance {rank_tol}")));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("design has non-finite entries".into()));
        }
        let rank = compute_rank(&entries, rank_tol);
        let gram = entries.tr_mul(&entries);
        Ok(Self {
            entries,
            gram,
            rank_tol,
            rank,
        })
    }

    /// Builds a design from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("ragged design rows".into()));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn p(&self) -> usize {
        self.entries.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `X'X`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// The `n x k` matrix of the given columns.
    pub fn columns(&self, cols: &[usize]) -> DMatrix<f64> {
        self.entries.select_columns(cols)
    }

    /// Gram submatrix of the given columns.
    pub fn gram_sub(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(cols.len(), cols.len(), |a, b| self.gram[(cols[a], cols[b])])
    }

    /// True when all columns are nonzero and mutually orthogonal.
    pub fn is_orthogonal(&self) -> bool {
        let p = self.p();
        let diag: Vec<f64> = (0..p).map(|j| self.gram[(j, j)]).collect();
        if diag.iter().any(|&d| d <= 0.0) {
            return false;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                if self.gram[(i, j)].abs() > ORTHOGONAL_TOL * (diag[i] * diag[j]).sqrt() {
                    return false;
                }
            }
        }
        true
    }

    /// `X v` for a coefficient vector of length `p`.
    pub fn mul(&self, coef: &[f64]) -> Result<DVector<f64>> {
        if coef.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient length {} vs p = {}",
                coef.len(),
                self.p()
            )));
        }
        Ok(&self.entries * DVector::from_column_slice(coef))
    }

    /// The lexicographically first set of `rank()` linearly independent
    /// columns, found by greedy Gram-Schmidt.
    pub fn first_independent_columns(&self) -> Vec<usize> {
        let smax = largest_singular_value(&self.entries);
        let cutoff = self.rank_tol * smax;
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(self.rank);
        let mut chosen = Vec::with_capacity(self.rank);
        for j in 0..self.p() {
            if chosen.len() == self.rank {
                break;
            }
            let mut v = self.entries.column(j).into_owned();
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&v);
                    v.axpy(-c, q, 1.0);
                }
            }
            let norm = v.norm();
            if norm > cutoff && norm > 0.0 {
                basis.push(v / norm);
                chosen.push(j);
            }
        }
        chosen
    }
}

/// Numerical rank: the number of singular values above
/// `rank_tol * sigma_max`.
pub fn compute_rank(x: &DMatrix<f64>, rank_tol: f64) -> usize {
    let sv = x.singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}

fn largest_singular_value(x: &DMatrix<f64>) -> f64 {
    x.singular_values().iter().cloned().fold(0.0_f64, f64::max)
}

/// Response vector `y` of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseVector(DVector<f64>);

impl ResponseVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(DVector::from_vec(values))
    }

    pub fn from_vector(values: DVector<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn norm_sq(&self) -> f64 {
        sum_sq(self.0.iter().copied())
    }

    fn check(&self, x: &DesignMatrix) -> Result<()> {
        if self.len() != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "response length {} vs n = {}",
                self.len(),
                x.n()
            )));
        }
        Ok(())
    }
}

/// A subset of predictor columns, stored as strictly increasing zero-based
/// indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModelIndicator {
    indices: Vec<usize>,
}

impl ModelIndicator {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates that `indices` is strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidModel(format!(
                "indices must be strictly increasing: {indices:?}"
            )));
        }
        Ok(Self { indices })
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            indices: mask
                .iter()
                .enumerate()
                .filter_map(|(j, &d)| d.then_some(j))
                .collect(),
        }
    }

    /// The diagonal of the indicator matrix `D_M`.
    pub fn to_mask(&self, p: usize) -> Vec<bool> {
        let mut mask = vec![false; p];
        for &j in &self.indices {
            if j < p {
                mask[j] = true;
            }
        }
        mask
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn with(&self, j: usize) -> Self {
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&j) {
            indices.insert(pos, j);
        }
        Self { indices }
    }

    pub fn without(&self, j: usize) -> Self {
        let mut indices = self.indices.clone();
        if let Ok(pos) = indices.binary_search(&j) {
            indices.remove(pos);
        }
        Self { indices }
    }

    pub fn is_subset_of(&self, other: &ModelIndicator) -> bool {
        self.indices.iter().all(|&j| other.contains(j))
    }

    pub fn check(&self, p: usize) -> Result<()> {
        match self.indices.last() {
            Some(&j) if j >= p => Err(Error::IndexOutOfRange { index: j, p }),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for ModelIndicator {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ModelIndicator> for Vec<usize> {
    fn from(m: ModelIndicator) -> Self {
        m.indices
    }
}

impl fmt::Display for ModelIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Least squares fit of `y` on the columns of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Length `p`, zero off the model.
    pub beta_hat: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
}

/// Sum of squares; compensated (Neumaier) for long inputs.
pub fn sum_sq(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    if values.len() <= COMPENSATED_SUM_THRESHOLD {
        return values.map(|v| v * v).sum();
    }
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let term = v * v;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Minimum-norm least squares coefficients of `y` on `cols`.
fn min_norm_coefficients(x: &DesignMatrix, y: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    let xm = x.columns(cols);
    let svd = SVD::new(xm, true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = x.rank_tol() * smax;
    let mut coef = DVector::zeros(cols.len());
    if smax == 0.0 {
        return coef;
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let w = u.column(i).dot(y) / s;
            coef.axpy(w, &v_t.row(i).transpose(), 1.0);
        }
    }
    coef
}

fn fit_vector(x: &DesignMatrix, y: &DVector<f64>, model: &ModelIndicator) -> FitResult {
    let p = x.p();
    let cols = model.indices();
    let mut beta_hat = vec![0.0; p];
    let fitted = if cols.is_empty() {
        DVector::zeros(x.n())
    } else {
        let coef = min_norm_coefficients(x, y, cols);
        for (&j, &b) in cols.iter().zip(coef.iter()) {
            beta_hat[j] = b;
        }
        x.columns(cols) * coef
    };
    let rss = sum_sq(y.iter().zip(fitted.iter()).map(|(a, b)| a - b));
    FitResult {
        beta_hat,
        fitted: fitted.as_slice().to_vec(),
        rss,
    }
}

/// Least squares fit through the Moore-Penrose pseudo-inverse of the model's
/// columns; the minimum-norm solution when they are linearly dependent.
pub fn least_squares_fit(
    x: &DesignMatrix,
    y: &ResponseVector,
    model: &ModelIndicator,
) -> Result<FitResult> {
    y.check(x)?;
    model.check(x.p())?;
    Ok(fit_vector(x, y.as_vector(), model))
}

/// `RSS(M \ {j}) - RSS(M)`, clamped at zero.
pub fn rss_delta_drop(
    x: &DesignMatrix,
    y: &ResponseVector,
    model: &ModelIndicator,
    j: usize,
) -> Result<f64> {
    if !model.contains(j) {
        return Err(Error::NotInModel(j));
    }
    let full = least_squares_fit(x, y, model)?;
    let reduced = least_squares_fit(x, y, &model.without(j))?;
    Ok((reduced.rss - full.rss).max(0.0))
}

/// Projection of a mean vector on the span of the model and the squared
/// approximation error `||mu - P_M mu||^2`.
pub fn mean_projection(
    x: &DesignMatrix,
    mu: &[f64],
    model: &ModelIndicator,
) -> Result<(Vec<f64>, f64)> {
    let mu = ResponseVector::new(mu.to_vec());
    let fit = least_squares_fit(x, &mu, model)?;
    Ok((fit.fitted, fit.rss))
}

/// Residual sums of squares of many subsets of one design against one
/// response, from the precomputed Gram matrix.
///
/// Uses a Cholesky solve of the Gram submatrix; subsets whose Gram
/// submatrix is numerically singular fall back to the SVD fit.
#[derive(Clone, Debug)]
pub struct SubsetSolver<'a> {
    x: &'a DesignMatrix,
    y: DVector<f64>,
    xty: DVector<f64>,
    yty: f64,
}

impl<'a> SubsetSolver<'a> {
    pub fn new(x: &'a DesignMatrix, y: &ResponseVector) -> Result<Self> {
        y.check(x)?;
        let yv = y.as_vector().clone();
        Ok(Self {
            x,
            xty: x.entries().tr_mul(&yv),
            yty: sum_sq(yv.iter().copied()),
            y: yv,
        })
    }

    pub fn design(&self) -> &DesignMatrix {
        self.x
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }

    /// `X'y`.
    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    /// RSS of the least squares fit on `cols` (sorted, in range).
    pub fn rss(&self, cols: &[usize]) -> f64 {
        if cols.is_empty() {
            return self.yty;
        }
        let g = self.x.gram_sub(cols);
        let max_diag = (0..cols.len()).map(|i| g[(i, i)]).fold(0.0_f64, f64::max);
        if let Some(chol) = Cholesky::new(g) {
            let l = chol.l_dirty();
            let min_pivot = (0..cols.len()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot > CHOLESKY_PIVOT_TOL * max_diag {
                let b = DVector::from_fn(cols.len(), |i, _| self.xty[cols[i]]);
                let w = chol
                    .l()
                    .solve_lower_triangular(&b)
                    .expect("nonzero pivots");
                return (self.yty - w.norm_squared()).max(0.0);
            }
        }
        fit_vector(self.x, &self.y, &ModelIndicator { indices: cols.to_vec() }).rss
    }
}
