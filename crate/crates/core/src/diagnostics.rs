//! Design diagnostics: sparse eigenvalues, the condition curve `tau[k]`, the
//! multicollinearity functionals and the minimax rate formulas.
//!
//! For `1 <= k <= p`, `phi_min[k]` and `phi_max[k]` are the extreme
//! eigenvalues over all `k x k` principal submatrices of `X'X` and
//! `tau[k] = phi_min[k] / phi_max[k]`. Exact values come from enumerating
//! every column subset. Past the enumeration budget a randomized local search
//! is used instead; it can only find subsets that exist, so its `phi_min` is
//! an upper bound on the truth and its `phi_max` a lower bound.

use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DesignMatrix, ModelIndicator};
use crate::select::{binomial, usable_rank};
use crate::seed::{derive, stream_rng};

/// Eigenvalues below this fraction of the largest are reported as zero.
pub const EIGEN_REL_TOL: f64 = 1e-10;
pub const DEFAULT_DIAG_BUDGET: u64 = 1_000_000;

const RESTARTS: u64 = 8;
const INNER_SAMPLE: u64 = 256;
const PARALLEL_MIN: u128 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Most subsets evaluated before switching to the randomized search.
    pub max_subsets: u64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_subsets: DEFAULT_DIAG_BUDGET,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSpectrum {
    pub k: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub tau: f64,
    pub exact: bool,
    pub subsets_evaluated: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticollinearityProfile {
    pub k: usize,
    pub k_prime: usize,
    pub tilde_phi: f64,
    pub exact: bool,
}

fn extreme_eigs(g: &DMatrix<f64>) -> (f64, f64) {
    let (lo, hi) = match g.nrows() {
        0 => return (0.0, 0.0),
        1 => (g[(0, 0)], g[(0, 0)]),
        2 => {
            let (a, b, d) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let hi = mid + rad;
            // product form avoids cancellation in the small root
            let det = a * d - b * b;
            (if hi > 0.0 { det / hi } else { mid - rad }, hi)
        }
        _ => {
            let ev = g.clone().symmetric_eigenvalues();
            (ev.min(), ev.max())
        }
    };
    (clean_min(lo, hi), hi)
}

fn clean_min(lo: f64, hi: f64) -> f64 {
    if lo <= EIGEN_REL_TOL * hi.abs() {
        0.0
    } else {
        lo
    }
}

fn min_eig(g: &DMatrix<f64>) -> f64 {
    extreme_eigs(g).0
}

fn saturating_u64(v: u128) -> u64 {
    u64::try_from(v).unwrap_or(u64::MAX)
}

fn check_nonzero(x: &DesignMatrix) -> Result<()> {
    if (0..x.p()).all(|j| x.gram()[(j, j)] <= 0.0) {
        return Err(Error::DegenerateDesign);
    }
    Ok(())
}

/// Extreme `k`-sparse eigenvalues of `X'X`.
pub fn sparse_eigs(x: &DesignMatrix, k: usize, budget: &SearchBudget) -> Result<SparseSpectrum> {
    let p = x.p();
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={p}")));
    }
    check_nonzero(x)?;
    let total = binomial(p, k);
    let gram = x.gram();

    let (phi_min, phi_max, exact, evaluated) = if x.is_orthogonal() {
        let mut d: Vec<f64> = (0..p).map(|j| gram[(j, j)]).collect();
        d.sort_by(f64::total_cmp);
        (d[0], d[p - 1], true, saturating_u64(total))
    } else if total <= budget.max_subsets as u128 {
        let eval = |c: Vec<usize>| extreme_eigs(&x.gram_sub(&c));
        let merge = |a: (f64, f64), b: (f64, f64)| (a.0.min(b.0), a.1.max(b.1));
        let init = (f64::INFINITY, f64::NEG_INFINITY);
        let (lo, hi) = if total >= PARALLEL_MIN {
            (0..p).combinations(k).par_bridge().map(eval).reduce(|| init, merge)
        } else {
            (0..p).combinations(k).map(eval).fold(init, merge)
        };
        (lo, hi, true, total as u64)
    } else {
        let lo = search(x, k, budget, Extreme::Min);
        let hi = search(x, k, budget, Extreme::Max);
        (lo.0, hi.0, false, lo.1 + hi.1)
    };
    Ok(SparseSpectrum {
        k,
        phi_min,
        phi_max,
        tau: if phi_max > 0.0 { phi_min / phi_max } else { 0.0 },
        exact,
        subsets_evaluated: evaluated,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Extreme {
    Min,
    Max,
}

impl Extreme {
    /// Objective to be minimized.
    fn score(self, x: &DesignMatrix, cols: &[usize]) -> f64 {
        let mut sorted = cols.to_vec();
        sorted.sort_unstable();
        let (lo, hi) = extreme_eigs(&x.gram_sub(&sorted));
        match self {
            Extreme::Min => lo,
            Extreme::Max => -hi,
        }
    }

    fn value(self, score: f64) -> f64 {
        match self {
            Extreme::Min => score,
            Extreme::Max => -score,
        }
    }
}

/// Greedy construction followed by randomized restarts with first-improvement
/// swap moves. Returns the best value found and the evaluation count.
fn search(x: &DesignMatrix, k: usize, budget: &SearchBudget, which: Extreme) -> (f64, u64) {
    let p = x.p();
    let share = (budget.max_subsets / (RESTARTS + 1)).max(1);
    let tag = derive(budget.seed, k as u64 * 2 + u64::from(which == Extreme::Max));

    let mut greedy: Vec<usize> = Vec::with_capacity(k);
    let mut evals = 0u64;
    let mut best_greedy = f64::INFINITY;
    for _ in 0..k {
        let mut pick = (f64::INFINITY, usize::MAX);
        let candidates: Vec<usize> = (0..p).filter(|c| !greedy.contains(c)).collect();
        for c in candidates {
            greedy.push(c);
            let s = which.score(x, &greedy);
            greedy.pop();
            evals += 1;
            if s < pick.0 {
                pick = (s, c);
            }
        }
        greedy.push(pick.1);
        best_greedy = pick.0;
    }
    let (g_score, g_evals) = local_search(x, greedy, best_greedy, share, which);

    let restarts: Vec<(f64, u64)> = (0..RESTARTS)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(tag, i, 0, 0);
            let start: Vec<usize> = sample(&mut rng, p, k).into_vec();
            let s = which.score(x, &start);
            let (v, e) = local_search(x, start, s, share, which);
            (v, e + 1)
        })
        .collect();
    let best = restarts.iter().fold(g_score, |acc, r| acc.min(r.0));
    let total = evals + g_evals + restarts.iter().map(|r| r.1).sum::<u64>();
    (which.value(best), total)
}

fn local_search(
    x: &DesignMatrix,
    mut current: Vec<usize>,
    mut score: f64,
    limit: u64,
    which: Extreme,
) -> (f64, u64) {
    let p = x.p();
    let mut evals = 0u64;
    'outer: loop {
        for i in 0..current.len() {
            for c in 0..p {
                if current.contains(&c) {
                    continue;
                }
                if evals >= limit {
                    break 'outer;
                }
                let old = current[i];
                current[i] = c;
                let s = which.score(x, &current);
                evals += 1;
                if s < score - 1e-14 * score.abs() {
                    score = s;
                    continue 'outer;
                }
                current[i] = old;
            }
        }
        break;
    }
    (score, evals)
}

/// `tau[1..=k_max]`. Sizes above the rank repeat the rank-`r` spectrum, and
/// extremes are carried forward so `phi_min` never increases and `phi_max`
/// never decreases along the curve.
pub fn tau_curve(x: &DesignMatrix, k_max: usize, budget: &SearchBudget) -> Result<Vec<SparseSpectrum>> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let r = usable_rank(x)?;
    let mut curve: Vec<SparseSpectrum> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let s = if k <= r {
            let mut s = sparse_eigs(x, k, budget)?;
            if let Some(prev) = curve.last() {
                s.phi_min = s.phi_min.min(prev.phi_min);
                s.phi_max = s.phi_max.max(prev.phi_max);
                s.tau = if s.phi_max > 0.0 { s.phi_min / s.phi_max } else { 0.0 };
            }
            s
        } else {
            SparseSpectrum {
                k,
                subsets_evaluated: 0,
                ..curve[r - 1].clone()
            }
        };
        curve.push(s);
    }
    Ok(curve)
}

/// `ceil(tau * k)`, at least 1.
pub fn k_prime_from_tau(tau: f64, k: usize) -> usize {
    let t = tau * k as f64;
    // absorb rounding so that e.g. 0.3 * 10 gives 3 rather than 4
    let c = (t - 1e-9 * t.max(1.0)).ceil();
    (c.max(1.0) as usize).min(k.max(1))
}

/// `k' = ceil(tau[2k] * k)`, with the `exact` flag of the `tau[2k]` it used.
pub fn k_prime(x: &DesignMatrix, k: usize, budget: &SearchBudget) -> Result<(usize, f64, bool)> {
    if k == 0 || 2 * k > x.p() {
        return Err(Error::InvalidArgument(format!(
            "k' needs 1 <= k and 2k <= p, got k = {k}, p = {}",
            x.p()
        )));
    }
    let curve = tau_curve(x, 2 * k, budget)?;
    let s = &curve[2 * k - 1];
    Ok((k_prime_from_tau(s.tau, k), s.tau, s.exact))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaMatrix {
    /// Rows and columns of `(X_M'X_M)^{-1}` belonging to `M \ M'`.
    pub matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
    /// Positions of `M \ M'` within the sorted `M`.
    pub positions: Vec<usize>,
}

fn inverse_gram(x: &DesignMatrix, cols: &[usize]) -> Option<DMatrix<f64>> {
    let g = x.gram_sub(cols);
    let eig = SymmetricEigen::new(g);
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if hi <= 0.0 || lo <= EIGEN_REL_TOL * hi {
        return None;
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    let q = &eig.eigenvectors;
    Some(q * DMatrix::from_diagonal(&inv_vals) * q.transpose())
}

fn principal(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// The covariance block (in units of `s2`) of the least-squares coefficients
/// of `M \ M'` within the fit on `M`.
pub fn lambda_matrix(x: &DesignMatrix, m: &ModelIndicator, m_sub: &ModelIndicator) -> Result<LambdaMatrix> {
    m.check(x.p())?;
    if !m_sub.is_subset_of(m) {
        return Err(Error::InvalidModel(format!("{m_sub} is not a subset of {m}")));
    }
    let positions: Vec<usize> = m
        .indices()
        .iter()
        .enumerate()
        .filter(|(_, j)| !m_sub.contains(**j))
        .map(|(i, _)| i)
        .collect();
    if positions.is_empty() {
        return Err(Error::Undefined("M \\ M' is empty".into()));
    }
    let inv = inverse_gram(x, m.indices()).ok_or(Error::SingularGram)?;
    let matrix = principal(&inv, &positions);
    let min_eigenvalue = min_eig(&matrix);
    Ok(LambdaMatrix {
        matrix,
        min_eigenvalue,
        positions,
    })
}

/// Inner max over the complements `S` (|S| = k - k_sub) for one model.
fn inner_max<R: Rng>(inv: &DMatrix<f64>, k: usize, k_sub: usize, rng: Option<&mut R>) -> (f64, u64) {
    let drop = k - k_sub;
    match rng {
        None => {
            let mut best = f64::NEG_INFINITY;
            let mut n = 0;
            for s in (0..k).combinations(drop) {
                best = best.max(min_eig(&principal(inv, &s)));
                n += 1;
            }
            (best, n)
        }
        Some(rng) => {
            let mut best = f64::NEG_INFINITY;
            for _ in 0..INNER_SAMPLE {
                let mut s = sample(rng, k, drop).into_vec();
                s.sort_unstable();
                best = best.max(min_eig(&principal(inv, &s)));
            }
            (best, INNER_SAMPLE)
        }
    }
}

/// `min over |M| = k of max over M' subset of M with |M'| = k_sub` of the
/// smallest eigenvalue of `Lambda(M, M')`. Models with a singular Gram matrix
/// are skipped. `k_sub = 0` is allowed and uses the full inverse Gram.
pub fn tilde_phi_at(x: &DesignMatrix, k: usize, k_sub: usize, budget: &SearchBudget) -> Result<(f64, bool)> {
    let p = x.p();
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={p}")));
    }
    if k_sub >= k {
        return Err(Error::Undefined(format!(
            "k' = {k_sub} >= k = {k}: no proper submodel of the required size"
        )));
    }
    let outer = binomial(p, k);
    let inner = binomial(k, k_sub);

    let (value, exact) = if outer.saturating_mul(inner) <= budget.max_subsets as u128 {
        let eval = |c: Vec<usize>| match inverse_gram(x, &c) {
            Some(inv) => inner_max::<rand_chacha::ChaCha8Rng>(&inv, k, k_sub, None).0,
            None => f64::INFINITY,
        };
        let v = if outer >= PARALLEL_MIN {
            (0..p)
                .combinations(k)
                .par_bridge()
                .map(eval)
                .reduce(|| f64::INFINITY, f64::min)
        } else {
            (0..p).combinations(k).map(eval).fold(f64::INFINITY, f64::min)
        };
        (v, true)
    } else {
        let inner_cost = inner.min(INNER_SAMPLE as u128) as u64;
        let models = (budget.max_subsets / inner_cost).max(1);
        let tag = derive(budget.seed, 0x7f00 + k as u64);
        let v = (0..models)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(tag, i, 0, 0);
                let mut c = sample(&mut rng, p, k).into_vec();
                c.sort_unstable();
                match inverse_gram(x, &c) {
                    Some(inv) if inner <= INNER_SAMPLE as u128 => inner_max::<rand_chacha::ChaCha8Rng>(&inv, k, k_sub, None).0,
                    Some(inv) => inner_max(&inv, k, k_sub, Some(&mut rng)).0,
                    None => f64::INFINITY,
                }
            })
            .reduce(|| f64::INFINITY, f64::min);
        (v, false)
    };
    if !value.is_finite() {
        return Err(Error::Undefined(format!(
            "every examined model of size {k} has a singular Gram matrix"
        )));
    }
    Ok((value, exact))
}

/// The multicollinearity functional at size `k` with `k' = ceil(tau[2k] k)`.
pub fn tilde_phi(x: &DesignMatrix, k: usize, budget: &SearchBudget) -> Result<MulticollinearityProfile> {
    let (kp, _, tau_exact) = k_prime(x, k, budget)?;
    let (value, exact) = tilde_phi_at(x, k, kp, budget)?;
    Ok(MulticollinearityProfile {
        k,
        k_prime: kp,
        tilde_phi: value,
        exact: exact && tau_exact,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionDRow {
    pub k: usize,
    pub tau_2k: f64,
    /// `tau[2k] * k`, which must lie in `[c1, k - 1]`.
    pub tau_2k_times_k: f64,
    pub d1_holds: bool,
    pub phi_min_2k: f64,
    pub k_prime: usize,
    pub tilde_phi: Option<f64>,
    pub product: Option<f64>,
    pub d3_holds: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionDReport {
    pub kappa1: usize,
    pub kappa2: usize,
    pub rows: Vec<AssumptionDRow>,
    pub tau_2kappa2: f64,
    /// `(kappa2 / (p e))^c2`.
    pub d2_bound: f64,
    pub d2_holds: bool,
    pub holds: bool,
    pub exact: bool,
}

/// Checks, for every `k` in `kappa1..=kappa2`,
/// `c1 <= tau[2k] k <= k - 1` and `phi_min[2k] * tilde_phi[k] >= c3`, and
/// `tau[2 kappa2] >= (kappa2 / (p e))^c2`.
#[allow(clippy::too_many_arguments)]
pub fn check_assumption_d(
    x: &DesignMatrix,
    kappa1: usize,
    kappa2: usize,
    c1: f64,
    c2: f64,
    c3: f64,
    budget: &SearchBudget,
) -> Result<AssumptionDReport> {
    let r = usable_rank(x)?;
    if kappa1 == 0 || kappa1 > kappa2 || 2 * kappa2 > r {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= kappa1 <= kappa2 <= r/2, got {kappa1}, {kappa2} with r = {r}"
        )));
    }
    if !(c3 > 0.0 && c3 <= 1.0) {
        return Err(Error::InvalidArgument(format!("c3 must lie in (0, 1], got {c3}")));
    }
    if !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(Error::InvalidArgument("c1 and c2 must be positive".into()));
    }
    let p = x.p();
    let curve = tau_curve(x, 2 * kappa2, budget)?;
    let mut exact = curve.iter().all(|s| s.exact);
    let mut rows = Vec::new();
    for k in kappa1..=kappa2 {
        let s = &curve[2 * k - 1];
        let tk = s.tau * k as f64;
        let kp = k_prime_from_tau(s.tau, k);
        let (tilde, note) = match tilde_phi_at(x, k, kp, budget) {
            Ok((v, ex)) => {
                exact &= ex;
                (Some(v), None)
            }
            Err(Error::Undefined(msg)) => (None, Some(msg)),
            Err(e) => return Err(e),
        };
        let product = tilde.map(|t| s.phi_min * t);
        rows.push(AssumptionDRow {
            k,
            tau_2k: s.tau,
            tau_2k_times_k: tk,
            d1_holds: c1 <= tk && tk <= (k - 1) as f64,
            phi_min_2k: s.phi_min,
            k_prime: kp,
            tilde_phi: tilde,
            product,
            d3_holds: product.is_some_and(|v| v >= c3),
            note,
        });
    }
    let tau_2kappa2 = curve[2 * kappa2 - 1].tau;
    let d2_bound = (kappa2 as f64 / (p as f64 * std::f64::consts::E)).powf(c2);
    let d2_holds = tau_2kappa2 >= d2_bound;
    let holds = d2_holds && rows.iter().all(|r| r.d1_holds && r.d3_holds);
    Ok(AssumptionDReport {
        kappa1,
        kappa2,
        rows,
        tau_2kappa2,
        d2_bound,
        d2_holds,
        holds,
        exact,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionBReport {
    pub p0: usize,
    /// `max_j beta_j^2`.
    pub lhs: f64,
    pub tau_2p0: f64,
    pub k_prime: usize,
    pub tilde_phi: f64,
    /// `c4 tau[2 p0] tilde_phi[p0] (ln(p/p0) + 1)`.
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub exact: bool,
}

/// Checks `max beta_j^2 <= c4 tau[2 p0] tilde_phi[p0] (ln(p/p0) + 1)`.
/// The submodel size is capped at `p0 - 1` so the functional is always defined.
pub fn check_assumption_b(
    x: &DesignMatrix,
    beta: &[f64],
    c4: f64,
    budget: &SearchBudget,
) -> Result<AssumptionBReport> {
    let p = x.p();
    if beta.len() != p {
        return Err(Error::DimensionMismatch(format!("beta has {} entries, p = {p}", beta.len())));
    }
    let p0 = beta.iter().filter(|b| **b != 0.0).count();
    if p0 == 0 {
        return Err(Error::InvalidArgument("beta is identically zero".into()));
    }
    if 2 * p0 > p {
        return Err(Error::InvalidArgument(format!("need 2 p0 <= p, got p0 = {p0}, p = {p}")));
    }
    if !(c4 > 0.0) {
        return Err(Error::InvalidArgument(format!("c4 must be positive, got {c4}")));
    }
    let lhs = beta.iter().map(|b| b * b).fold(0.0, f64::max);
    let curve = tau_curve(x, 2 * p0, budget)?;
    let s = &curve[2 * p0 - 1];
    let kp = k_prime_from_tau(s.tau, p0).min(p0 - 1);
    let (tilde, ex) = tilde_phi_at(x, p0, kp, budget)?;
    let rhs = c4 * s.tau * tilde * ((p as f64 / p0 as f64).ln() + 1.0);
    Ok(AssumptionBReport {
        p0,
        lhs,
        tau_2p0: s.tau,
        k_prime: kp,
        tilde_phi: tilde,
        rhs,
        slack: rhs - lhs,
        holds: lhs <= rhs,
        exact: ex && s.exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub upper: f64,
    pub lower: f64,
}

/// Minimax rate over `p0`-sparse vectors, up to the constants `c1`, `c2`:
/// upper `c1 s2 min(p0 (ln(p/p0) + 1), r)`; lower `c2 s2 tau[2p0] p0 (ln(p/p0) + 1)`
/// when `2 p0 <= r`, else `c2 s2 tau[p0] r`.
#[allow(clippy::too_many_arguments)]
pub fn rate_bounds(
    p: usize,
    p0: usize,
    r: usize,
    tau_2p0: f64,
    tau_p0: f64,
    sigma_sq: f64,
    c1: f64,
    c2: f64,
) -> Result<RateBounds> {
    if p0 == 0 || p0 > r || r > p {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= p0 <= r <= p, got p0 = {p0}, r = {r}, p = {p}"
        )));
    }
    for (name, t) in [("tau[2p0]", tau_2p0), ("tau[p0]", tau_p0)] {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("{name} = {t} outside [0, 1]")));
        }
    }
    if !(sigma_sq > 0.0 && c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidArgument("sigma_sq, c1 and c2 must be positive".into()));
    }
    let sparse = p0 as f64 * ((p as f64 / p0 as f64).ln() + 1.0);
    let upper = c1 * sigma_sq * sparse.min(r as f64);
    let lower = if 2 * p0 <= r {
        c2 * sigma_sq * tau_2p0 * sparse
    } else {
        c2 * sigma_sq * tau_p0 * r as f64
    };
    Ok(RateBounds { upper, lower })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignLabel {
    NearlyOrthogonal,
    Multicollinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignClass {
    pub tau_r: f64,
    pub threshold: f64,
    pub label: DesignLabel,
    pub exact: bool,
    pub note: String,
}

/// Labels the design by comparing `tau[r]` with `threshold`.
pub fn classify_design(x: &DesignMatrix, threshold: f64, budget: &SearchBudget) -> Result<DesignClass> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1], got {threshold}")));
    }
    let r = usable_rank(x)?;
    let s = tau_curve(x, r, budget)?.pop().expect("r >= 1");
    let label = if s.tau >= threshold {
        DesignLabel::NearlyOrthogonal
    } else {
        DesignLabel::Multicollinear
    };
    Ok(DesignClass {
        tau_r: s.tau,
        threshold,
        label,
        exact: s.exact,
        note: "near-orthogonality is a property of a sequence of designs as p grows; \
               the label for a single matrix is advisory"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{equicorrelated, orthonormal};
    use approx::assert_relative_eq;

    fn exact() -> SearchBudget {
        SearchBudget {
            max_subsets: u64::MAX,
            seed: 0,
        }
    }

    fn duplicated_pair() -> DesignMatrix {
        DesignMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![2.0, 2.0, 1.0],
            vec![0.0, 0.0, 3.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn orthonormal_spectrum() {
        let x = orthonormal(6, 6).unwrap();
        for s in tau_curve(&x, 6, &exact()).unwrap() {
            assert_eq!((s.phi_min, s.phi_max, s.tau), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn equicorrelated_closed_form() {
        let rho = 0.5;
        let x = equicorrelated(9, 8, rho).unwrap();
        // skip the diagonal shortcut by checking it is not taken
        assert!(!x.is_orthogonal());
        let curve = tau_curve(&x, 8, &exact()).unwrap();
        for s in &curve {
            let k = s.k as f64;
            let lo = if s.k == 1 { 1.0 } else { 1.0 - rho };
            assert_relative_eq!(s.phi_min, lo, max_relative = 1e-10);
            assert_relative_eq!(s.phi_max, 1.0 + (k - 1.0) * rho, max_relative = 1e-10);
            assert!(s.exact);
        }
        assert_relative_eq!(curve[3].tau, 0.2, max_relative = 1e-10);
    }

    #[test]
    fn duplicated_columns() {
        let x = duplicated_pair();
        let s = sparse_eigs(&x, 2, &exact()).unwrap();
        assert_eq!((s.phi_min, s.tau), (0.0, 0.0));
        let c = classify_design(&x, 0.5, &exact()).unwrap();
        assert_eq!(c.label, DesignLabel::Multicollinear);
        assert_eq!(c.tau_r, 0.0);
    }

    #[test]
    fn sparse_eigs_rejects_large_k() {
        let x = orthonormal(3, 3).unwrap();
        assert!(sparse_eigs(&x, 4, &exact()).is_err());
        assert!(sparse_eigs(&x, 0, &exact()).is_err());
    }

    #[test]
    fn curve_extends_past_rank() {
        let x = duplicated_pair();
        assert_eq!(x.rank(), 2);
        let c = tau_curve(&x, 3, &exact()).unwrap();
        assert_eq!(c[2].tau, c[1].tau);
        assert_eq!(c[2].k, 3);
    }

    #[test]
    fn k_prime_arithmetic() {
        assert_eq!(k_prime_from_tau(1.0, 7), 7);
        assert_eq!(k_prime_from_tau(0.3, 10), 3);
        assert_eq!(k_prime_from_tau(0.01, 10), 1);
        assert_eq!(k_prime_from_tau(0.0, 10), 1);
        assert_eq!(k_prime_from_tau(0.31, 10), 4);
    }

    #[test]
    fn lambda_two_columns() {
        let rho: f64 = 0.6;
        let x = equicorrelated(3, 2, rho).unwrap();
        let m = ModelIndicator::new(vec![0, 1]).unwrap();
        let l = lambda_matrix(&x, &m, &ModelIndicator::new(vec![0]).unwrap()).unwrap();
        assert_eq!(l.positions, vec![1]);
        assert_relative_eq!(l.min_eigenvalue, 1.0 / (1.0 - rho * rho), max_relative = 1e-12);
    }

    #[test]
    fn lambda_orthonormal_identity() {
        let x = orthonormal(5, 5).unwrap();
        let m = ModelIndicator::new(vec![0, 2, 4]).unwrap();
        let l = lambda_matrix(&x, &m, &ModelIndicator::new(vec![2]).unwrap()).unwrap();
        assert_eq!(l.positions, vec![0, 2]);
        assert_relative_eq!(l.matrix, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(l.min_eigenvalue, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_errors() {
        let x = duplicated_pair();
        let m = ModelIndicator::new(vec![0, 1]).unwrap();
        let sub = ModelIndicator::new(vec![0]).unwrap();
        assert!(matches!(lambda_matrix(&x, &m, &sub), Err(Error::SingularGram)));
        let not_sub = ModelIndicator::new(vec![2]).unwrap();
        assert!(lambda_matrix(&x, &m, &not_sub).is_err());
    }

    #[test]
    fn tilde_phi_orthonormal_is_undefined() {
        let x = orthonormal(6, 6).unwrap();
        assert!(matches!(tilde_phi(&x, 2, &exact()), Err(Error::Undefined(_))));
        let (v, ex) = tilde_phi_at(&x, 3, 1, &exact()).unwrap();
        assert!(ex);
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tilde_phi_two_pairs_by_hand() {
        // x1 ~ x2 and x3 ~ x4, orthogonal across pairs, within-pair product 0.999
        let rho: f64 = 0.999;
        let (a, b) = (((1.0 + rho) / 2.0).sqrt(), ((1.0 - rho) / 2.0).sqrt());
        let x = DesignMatrix::from_rows(&[
            vec![a, a, 0.0, 0.0],
            vec![b, -b, 0.0, 0.0],
            vec![0.0, 0.0, a, a],
            vec![0.0, 0.0, b, -b],
        ])
        .unwrap();
        assert_relative_eq!(x.gram()[(0, 1)], rho, epsilon = 1e-12);
        // tau[4] = (1-rho)/(1+rho), so k' = ceil(2 tau) = 1 at k = 2
        let prof = tilde_phi(&x, 2, &exact()).unwrap();
        assert_eq!(prof.k_prime, 1);
        assert!(prof.exact);
        // M across pairs is orthonormal, giving 1; within a pair 1/(1-rho^2)
        assert_relative_eq!(prof.tilde_phi, 1.0, epsilon = 1e-9);
        let phi_min_4 = tau_curve(&x, 4, &exact()).unwrap()[3].phi_min;
        assert!(phi_min_4 * prof.tilde_phi <= 1.0 + 1e-9);
    }

    #[test]
    fn budgeted_search_bounds_exact() {
        let x = crate::designs::iid_gaussian(14, 10, 3).unwrap();
        let tight = SearchBudget {
            max_subsets: 60,
            seed: 5,
        };
        for k in [3, 5, 7] {
            let e = sparse_eigs(&x, k, &exact()).unwrap();
            let b = sparse_eigs(&x, k, &tight).unwrap();
            assert!(!b.exact);
            assert!(b.phi_min >= e.phi_min - 1e-12);
            assert!(b.phi_max <= e.phi_max + 1e-12);
            assert_eq!(b, sparse_eigs(&x, k, &tight).unwrap());
        }
    }

    #[test]
    fn assumption_d_examples() {
        let x = orthonormal(8, 8).unwrap();
        let rep = check_assumption_d(&x, 1, 4, 0.01, 1.0, 0.5, &exact()).unwrap();
        assert!(rep.rows.iter().all(|r| !r.d1_holds));
        assert!(!rep.holds);
        assert!(check_assumption_d(&x, 1, 4, 0.01, 1.0, 1.5, &exact()).is_err());
        assert!(check_assumption_d(&x, 3, 2, 0.01, 1.0, 0.5, &exact()).is_err());
        assert!(check_assumption_d(&x, 1, 5, 0.01, 1.0, 0.5, &exact()).is_err());

        let x = equicorrelated(41, 40, 0.9).unwrap();
        let b = SearchBudget {
            max_subsets: 20_000,
            seed: 1,
        };
        let rep = check_assumption_d(&x, 5, 5, 0.05, 1.0, 0.01, &b).unwrap();
        let row = &rep.rows[0];
        assert_relative_eq!(row.tau_2k_times_k, 5.0 * 0.1 / 9.1, max_relative = 1e-9);
        assert!(row.d1_holds);
        let again = check_assumption_d(&x, 5, 5, 0.05, 1.0, 0.01, &b).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn assumption_b_examples() {
        let x = orthonormal(10, 10).unwrap();
        let mut beta = vec![0.0; 10];
        beta[3] = 1e-9;
        let rep = check_assumption_b(&x, &beta, 1e-6, &exact()).unwrap();
        assert!(rep.holds);

        beta[3] = 2.0;
        beta[5] = -1.0;
        let rep = check_assumption_b(&x, &beta, 1.0, &exact()).unwrap();
        assert_relative_eq!(rep.rhs, (10.0_f64 / 2.0).ln() + 1.0, max_relative = 1e-12);
        assert_eq!(rep.lhs, 4.0);

        assert!(check_assumption_b(&x, &[0.0; 10], 1.0, &exact()).is_err());

        let x = equicorrelated(21, 20, 0.99).unwrap();
        let mut beta = vec![0.0; 20];
        beta[0] = 1e3;
        beta[1] = -1e3;
        let rep = check_assumption_b(&x, &beta, 1.0, &exact()).unwrap();
        assert!(!rep.holds);
    }

    #[test]
    fn rate_examples() {
        let b = rate_bounds(8, 8, 8, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.upper, 16.0, max_relative = 1e-12);
        let b = rate_bounds(1000, 10, 100, 0.5, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.lower, 5.0 * (100.0_f64.ln() + 1.0), max_relative = 1e-12);
        assert!((b.lower - 28.03).abs() < 0.01);
        assert!(rate_bounds(10, 0, 5, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(rate_bounds(10, 6, 5, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rate_ratio_on_nearly_orthogonal() {
        let (p, r, tau, c1, c2) = (200, 40, 0.4, 2.0, 0.5);
        for p0 in 1..=r / 2 {
            let b = rate_bounds(p, p0, r, tau, tau, 1.0, c1, c2).unwrap();
            assert!(b.lower / b.upper >= tau * c2 / c1 - 1e-12);
        }
    }

    #[test]
    fn classify_examples() {
        let x = orthonormal(5, 5).unwrap();
        assert_eq!(
            classify_design(&x, 0.5, &exact()).unwrap().label,
            DesignLabel::NearlyOrthogonal
        );
        let x = equicorrelated(9, 8, 0.5).unwrap();
        let c = classify_design(&x, 0.25, &exact()).unwrap();
        assert_relative_eq!(c.tau_r, 0.5 / 4.5, max_relative = 1e-10);
        assert_eq!(c.label, DesignLabel::Multicollinear);
        assert!(classify_design(&x, 0.0, &exact()).is_err());
    }
}
