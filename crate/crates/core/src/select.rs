//! Exact MAP model selection by enumeration.
//!
//! Models of sizes `0..r-1` are enumerated in full; the saturated size is
//! represented by a single model, the lexicographically first set of `r`
//! linearly independent columns. Sizes are visited in ascending order and a
//! size is skipped outright once its penalty alone reaches the best criterion.
//! Ties go to the smaller model, then to the lexicographically smaller one.

use std::cmp::Ordering;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    least_squares_fit, sum_sq, DesignMatrix, FitResult, ModelIndicator, ResponseVector,
    SubsetSolver,
};
use crate::prior::{penalty_schedule, HyperParams, PenaltySchedule, PriorSpec};

pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// Below this many subsets a size is scored on the calling thread.
const PARALLEL_MIN_SUBSETS: u128 = 2_048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub model: ModelIndicator,
    pub fit: FitResult,
    /// `fit.rss + penalty`.
    pub criterion: f64,
    pub penalty: f64,
    /// Log posterior up to a model-independent constant.
    pub log_posterior_unnorm: f64,
    pub models_evaluated: u64,
    pub saturated: bool,
}

/// Scores models of one `(X, y)` pair under one prior.
#[derive(Clone, Debug)]
pub struct ModelScorer<'a> {
    solver: SubsetSolver<'a>,
    schedule: PenaltySchedule,
}

impl<'a> ModelScorer<'a> {
    pub fn new(
        x: &'a DesignMatrix,
        y: &ResponseVector,
        prior: &PriorSpec,
        hp: &HyperParams,
    ) -> Result<Self> {
        let r = usable_rank(x)?;
        let schedule = penalty_schedule(x.p(), r, prior, hp)?;
        Ok(Self {
            solver: SubsetSolver::new(x, y)?,
            schedule,
        })
    }

    pub fn design(&self) -> &DesignMatrix {
        self.solver.design()
    }

    pub fn schedule(&self) -> &PenaltySchedule {
        &self.schedule
    }

    pub fn rank(&self) -> usize {
        self.schedule.r
    }

    pub fn rss(&self, cols: &[usize]) -> f64 {
        self.solver.rss(cols)
    }

    /// `rss + Pen(k)`; `cols.len()` must not exceed the rank.
    pub fn criterion(&self, cols: &[usize]) -> f64 {
        self.solver.rss(cols) + self.schedule.pen[cols.len()]
    }

    /// Log posterior of a size-`k` model with residual sum of squares `rss`.
    pub fn log_posterior_from_rss(&self, k: usize, rss: f64) -> f64 {
        let explained = self.solver.yty() - rss;
        log_posterior_terms(&self.schedule, k, explained)
    }

    pub fn log_posterior(&self, cols: &[usize]) -> f64 {
        self.log_posterior_from_rss(cols.len(), self.solver.rss(cols))
    }
}

fn log_posterior_terms(schedule: &PenaltySchedule, k: usize, explained: f64) -> f64 {
    let hp = &schedule.hyper;
    schedule.log_prior[k] - schedule.ln_model_count(k) - 0.5 * k as f64 * hp.gamma.ln_1p()
        + hp.shrinkage() * explained / (2.0 * hp.sigma_sq)
}

pub(crate) fn usable_rank(x: &DesignMatrix) -> Result<usize> {
    match x.rank() {
        0 => Err(Error::DegenerateDesign),
        r => Ok(r),
    }
}

/// Log posterior probability of `model`, up to a model-independent constant:
///
/// ```text
/// ln pi(k) - ln C(p,k) - (k/2) ln(1+g) + g/(g+1) * y'P_M y / (2 s2)
/// ```
///
/// with the binomial coefficient dropped at the saturated size `k = r`.
pub fn log_posterior(
    x: &DesignMatrix,
    y: &ResponseVector,
    model: &ModelIndicator,
    prior: &PriorSpec,
    hp: &HyperParams,
) -> Result<f64> {
    let r = usable_rank(x)?;
    if model.len() > r {
        return Err(Error::ExceedsRank {
            size: model.len(),
            rank: r,
        });
    }
    let schedule = penalty_schedule(x.p(), r, prior, hp)?;
    let fit = least_squares_fit(x, y, model)?;
    let explained = sum_sq(fit.fitted.iter().copied());
    Ok(log_posterior_terms(&schedule, model.len(), explained))
}

/// Number of models the enumeration visits: all subsets of sizes below `r`
/// plus the saturated representative.
pub fn count_models(p: usize, r: usize) -> u128 {
    let mut total: u128 = 1;
    let mut c: u128 = 1;
    for k in 0..r.min(p) {
        total = total.saturating_add(c);
        c = c.saturating_mul((p - k) as u128) / (k as u128 + 1);
    }
    total
}

pub(crate) fn binomial(p: usize, k: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((p - i) as u128) / (i as u128 + 1);
    }
    c
}

#[derive(Clone, Debug)]
struct Candidate {
    criterion: f64,
    cols: Vec<usize>,
}

fn compare(a: &Candidate, b: &Candidate) -> Ordering {
    a.criterion
        .total_cmp(&b.criterion)
        .then(a.cols.len().cmp(&b.cols.len()))
        .then_with(|| a.cols.cmp(&b.cols))
}

fn pick(a: Candidate, b: Candidate) -> Candidate {
    if compare(&b, &a) == Ordering::Less {
        b
    } else {
        a
    }
}

/// Minimizes `RSS(M) + pen[|M|]` over all models with `|M| <= r`, where
/// `pen` has length `r + 1`. Returns the minimizer and the number of models
/// scored.
pub fn select_with_penalty(
    x: &DesignMatrix,
    y: &ResponseVector,
    pen: &[f64],
    budget: u64,
) -> Result<(ModelIndicator, u64)> {
    let p = x.p();
    let r = usable_rank(x)?;
    if pen.len() != r + 1 {
        return Err(Error::DimensionMismatch(format!(
            "penalty has {} entries, expected r + 1 = {}",
            pen.len(),
            r + 1
        )));
    }
    let solver = SubsetSolver::new(x, y)?;
    if x.is_orthogonal() {
        return Ok(orthogonal_select(x, &solver, pen));
    }
    let needed = count_models(p, r);
    if needed > u128::from(budget) {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let mut best = Candidate {
        criterion: solver.yty() + pen[0],
        cols: Vec::new(),
    };
    let mut evaluated: u64 = 1;
    for k in 1..r {
        if pen[k] >= best.criterion {
            continue;
        }
        let n_sub = binomial(p, k);
        let score = |cols: Vec<usize>| Candidate {
            criterion: solver.rss(&cols) + pen[k],
            cols,
        };
        let level = if n_sub < PARALLEL_MIN_SUBSETS {
            (0..p).combinations(k).map(score).reduce(pick)
        } else {
            (0..p).combinations(k).par_bridge().map(score).reduce_with(pick)
        };
        evaluated += n_sub as u64;
        if let Some(c) = level {
            best = pick(best, c);
        }
    }
    if pen[r] < best.criterion {
        let cols = x.first_independent_columns();
        let sat = Candidate {
            criterion: solver.rss(&cols) + pen[r],
            cols,
        };
        evaluated += 1;
        best = pick(best, sat);
    }
    Ok((ModelIndicator::new(best.cols)?, evaluated))
}

/// With mutually orthogonal columns `RSS(M) = y'y - sum_{j in M} z_j^2` where
/// `z_j = x_j'y / ||x_j||`, so the best model of each size keeps the largest
/// `z_j^2`.
fn orthogonal_select(x: &DesignMatrix, solver: &SubsetSolver<'_>, pen: &[f64]) -> (ModelIndicator, u64) {
    let p = x.p();
    let r = pen.len() - 1;
    let gram = x.gram();
    let xty = solver.xty();
    let mut order: Vec<(f64, usize)> = (0..p)
        .map(|j| (xty[j] * xty[j] / gram[(j, j)], j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best = Candidate {
        criterion: solver.yty() + pen[0],
        cols: Vec::new(),
    };
    let mut explained = 0.0;
    for k in 1..=r {
        explained += order[k - 1].0;
        let rss = (solver.yty() - explained).max(0.0);
        let mut cols: Vec<usize> = order[..k].iter().map(|&(_, j)| j).collect();
        cols.sort_unstable();
        best = pick(
            best,
            Candidate {
                criterion: rss + pen[k],
                cols,
            },
        );
    }
    (
        ModelIndicator::new(best.cols).expect("sorted distinct"),
        r as u64 + 1,
    )
}

pub(crate) fn finalize(
    x: &DesignMatrix,
    y: &ResponseVector,
    model: ModelIndicator,
    schedule: &PenaltySchedule,
    models_evaluated: u64,
) -> Result<SelectionResult> {
    let fit = least_squares_fit(x, y, &model)?;
    let k = model.len();
    let penalty = schedule.pen[k];
    let explained = sum_sq(fit.fitted.iter().copied());
    Ok(SelectionResult {
        criterion: fit.rss + penalty,
        penalty,
        log_posterior_unnorm: log_posterior_terms(schedule, k, explained),
        saturated: k == schedule.r,
        models_evaluated,
        fit,
        model,
    })
}

/// The MAP model: minimizes `||y - X b_M||^2 + Pen(|M|)`.
pub fn map_select(
    x: &DesignMatrix,
    y: &ResponseVector,
    prior: &PriorSpec,
    hp: &HyperParams,
    budget: u64,
) -> Result<SelectionResult> {
    let r = usable_rank(x)?;
    let schedule = penalty_schedule(x.p(), r, prior, hp)?;
    let (model, evaluated) = select_with_penalty(x, y, &schedule.pen, budget)?;
    finalize(x, y, model, &schedule, evaluated)
}
