//! Monte Carlo risk of model selectors.
//!
//! The loss of an estimate is `||X b_hat - X beta||^2`. For a fixed model `M`
//! its expectation is `||X beta - P_M X beta||^2 + s2 rank(X_M)`, and the
//! oracle risk is the smallest such value over all models.
//!
//! Replications share their noise draws across estimators, and replication
//! `i` always draws from the same random stream, so a report depends only on
//! the scenario and never on scheduling.

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs;
use crate::diagnostics::{rate_bounds, tau_curve, RateBounds, SearchBudget};
use crate::error::{Error, Result};
use crate::linalg::{least_squares_fit, DesignMatrix, ModelIndicator, ResponseVector, SubsetSolver};
use crate::prior::{binomial_xi_for_criterion, penalty_schedule, Criterion, HyperParams, PriorSpec};
use crate::seed::{derive, stream_rng};
use crate::select::{select_with_penalty, usable_rank, DEFAULT_BUDGET};

const DESIGN_TAG: u64 = 0xd5;
const NOISE_TAG: u64 = 0x0e;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignKind {
    Orthonormal,
    IidGaussian,
    Equicorrelated { rho: f64 },
    Custom { rows: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EstimatorRule {
    /// MAP selection under a model-size prior.
    Map {
        prior: PriorSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    /// MAP under the binomial prior whose penalty matches a linear criterion.
    MapCalibrated {
        criterion: Criterion,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    /// `RSS + 2 s2 lambda k`.
    Linear { lambda: f64 },
    /// Least squares on a model chosen in advance.
    Fixed { model: ModelIndicator },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub name: String,
    #[serde(flatten)]
    pub rule: EstimatorRule,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

fn default_diag_budget() -> u64 {
    20_000
}

fn default_one() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub design: DesignKind,
    /// Number of nonzero coefficients of the default `beta`.
    pub p0: usize,
    /// Nonzeros of the default `beta` are `+-magnitude * sigma`, alternating.
    pub beta_magnitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    pub sigma_sq: f64,
    pub replications: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorSpec>,
    /// Enumeration budget of each selection and of the oracle.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Subset budget for the sparse eigenvalues behind the rate bounds.
    #[serde(default = "default_diag_budget")]
    pub diag_budget: u64,
    /// Whether the oracle may fall back to a restricted search.
    #[serde(default = "default_true")]
    pub oracle_fallback: bool,
    #[serde(default = "default_one")]
    pub rate_c1: f64,
    #[serde(default = "default_one")]
    pub rate_c2: f64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::EmptyDesign);
        }
        if self.p0 > self.p {
            return Err(Error::InvalidArgument(format!("p0 = {} exceeds p = {}", self.p0, self.p)));
        }
        if self.replications < 2 {
            return Err(Error::InvalidArgument("replications must be at least 2".into()));
        }
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return Err(Error::InvalidHyperParams(format!("sigma_sq = {}", self.sigma_sq)));
        }
        if let Some(b) = &self.beta {
            if b.len() != self.p {
                return Err(Error::DimensionMismatch(format!(
                    "beta has {} entries, p = {}",
                    b.len(),
                    self.p
                )));
            }
        }
        Ok(())
    }

    pub fn build_design(&self) -> Result<DesignMatrix> {
        match &self.design {
            DesignKind::Orthonormal => designs::orthonormal(self.n, self.p),
            DesignKind::IidGaussian => designs::iid_gaussian(self.n, self.p, derive(self.seed, DESIGN_TAG)),
            DesignKind::Equicorrelated { rho } => designs::equicorrelated(self.n, self.p, *rho),
            DesignKind::Custom { rows } => {
                if rows.len() != self.n || rows.iter().any(|r| r.len() != self.p) {
                    return Err(Error::DimensionMismatch(format!(
                        "custom design must be {} x {}",
                        self.n, self.p
                    )));
                }
                DesignMatrix::from_rows(rows)
            }
        }
    }

    pub fn beta(&self) -> Vec<f64> {
        if let Some(b) = &self.beta {
            return b.clone();
        }
        let m = self.beta_magnitude * self.sigma_sq.sqrt();
        (0..self.p)
            .map(|j| match j {
                j if j >= self.p0 => 0.0,
                j if j % 2 == 0 => m,
                _ => -m,
            })
            .collect()
    }
}

enum Resolved {
    Penalty(Vec<f64>),
    Fixed(ModelIndicator),
}

fn resolve(rule: &EstimatorRule, x: &DesignMatrix, sigma_sq: f64) -> Result<Resolved> {
    let (p, n) = (x.p(), x.n());
    let r = usable_rank(x)?;
    let default_gamma = p as f64;
    let schedule = |prior: &PriorSpec, gamma: Option<f64>| -> Result<Resolved> {
        let hp = HyperParams::new(gamma.unwrap_or(default_gamma), sigma_sq)?;
        Ok(Resolved::Penalty(penalty_schedule(p, r, prior, &hp)?.pen))
    };
    match rule {
        EstimatorRule::Map { prior, gamma } => schedule(prior, *gamma),
        EstimatorRule::MapCalibrated { criterion, gamma } => {
            let g = gamma.unwrap_or(default_gamma);
            let cal = binomial_xi_for_criterion(*criterion, p, n, g)?;
            schedule(&PriorSpec::Binomial { xi: cal.xi }, Some(g))
        }
        EstimatorRule::Linear { lambda } => {
            if !(*lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
            }
            Ok(Resolved::Penalty(
                (0..=r).map(|k| 2.0 * sigma_sq * lambda * k as f64).collect(),
            ))
        }
        EstimatorRule::Fixed { model } => {
            model.check(p)?;
            Ok(Resolved::Fixed(model.clone()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRisk {
    pub risk: f64,
    pub model: ModelIndicator,
    /// False when the search was restricted and `risk` is only an upper bound.
    pub exact: bool,
}

/// `min over M of ||X beta - P_M X beta||^2 + s2 |M|`.
pub fn oracle_risk(
    x: &DesignMatrix,
    beta: &[f64],
    sigma_sq: f64,
    budget: u64,
    allow_fallback: bool,
) -> Result<OracleRisk> {
    let mu = ResponseVector::from_vector(x.mul(beta)?);
    let r = usable_rank(x)?;
    let pen: Vec<f64> = (0..=r).map(|k| sigma_sq * k as f64).collect();
    let (model, exact) = match select_with_penalty(x, &mu, &pen, budget) {
        Ok((m, _)) => (m, true),
        Err(Error::BudgetExceeded { .. }) if allow_fallback => (restricted_oracle(x, &mu, beta, &pen), false),
        Err(e) => return Err(e),
    };
    let bias = least_squares_fit(x, &mu, &model)?.rss;
    Ok(OracleRisk {
        risk: bias + sigma_sq * model.len() as f64,
        model,
        exact,
    })
}

/// Best of: every subset of the true support (when it has at most 20
/// columns) and a greedy forward path over all columns.
fn restricted_oracle(x: &DesignMatrix, mu: &ResponseVector, beta: &[f64], pen: &[f64]) -> ModelIndicator {
    let solver = SubsetSolver::new(x, mu).expect("dimensions checked");
    let r = pen.len() - 1;
    let score = |cols: &[usize]| solver.rss(cols) + pen[cols.len()];
    let mut best = (score(&[]), Vec::new());
    let consider = |cols: Vec<usize>, best: &mut (f64, Vec<usize>)| {
        let s = score(&cols);
        if s < best.0 {
            *best = (s, cols);
        }
    };

    let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    if support.len() <= 20 {
        for mask in 1u32..(1 << support.len()) {
            let cols: Vec<usize> = support
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &j)| j)
                .collect();
            if cols.len() <= r {
                consider(cols, &mut best);
            }
        }
    }

    let mut path: Vec<usize> = Vec::new();
    while path.len() < r {
        let step = (0..x.p())
            .filter(|j| !path.contains(j))
            .map(|j| {
                let mut c = path.clone();
                c.push(j);
                c.sort_unstable();
                (solver.rss(&c), c)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match step {
            Some((_, c)) => {
                path = c;
                consider(path.clone(), &mut best);
            }
            None => break,
        }
    }
    ModelIndicator::new(best.1).expect("sorted distinct")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRisk {
    pub mean: f64,
    pub std_error: f64,
    /// `mean -+ 1.96 std_error`.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Count of replications selecting each model size `0..=p`.
    pub size_histogram: Vec<u64>,
    /// Fraction of replications selecting exactly the true support.
    pub support_recovery: f64,
}

struct Outcome {
    loss: f64,
    size: usize,
    exact_support: bool,
}

/// Losses of every estimator on every replication, `[replication][estimator]`.
fn simulate(scenario: &ScenarioSpec, estimators: &[EstimatorSpec]) -> Result<(DesignMatrix, Vec<Vec<Outcome>>)> {
    scenario.validate()?;
    let x = scenario.build_design()?;
    let beta = scenario.beta();
    let mu = x.mul(&beta)?;
    let support = ModelIndicator::new((0..scenario.p).filter(|&j| beta[j] != 0.0).collect())?;
    let resolved: Vec<Resolved> = estimators
        .iter()
        .map(|e| resolve(&e.rule, &x, scenario.sigma_sq))
        .collect::<Result<_>>()?;
    let sigma = scenario.sigma_sq.sqrt();
    let noise_seed = derive(scenario.seed, NOISE_TAG);
    let n = scenario.n;

    let rows: Vec<Result<Vec<Outcome>>> = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(noise_seed, rep as u64, 0, 0);
            let y: Vec<f64> = (0..n)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu[i] + sigma * z
                })
                .collect();
            let y = ResponseVector::new(y);
            resolved
                .iter()
                .map(|est| {
                    let model = match est {
                        Resolved::Penalty(pen) => select_with_penalty(&x, &y, pen, scenario.budget)?.0,
                        Resolved::Fixed(m) => m.clone(),
                    };
                    let fit = least_squares_fit(&x, &y, &model)?;
                    let loss = fit.fitted.iter().zip(mu.iter()).map(|(f, m)| (f - m) * (f - m)).sum();
                    Ok(Outcome {
                        loss,
                        size: model.len(),
                        exact_support: model == support,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Estimator {
                    replication: rep,
                    source: Box::new(e),
                })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((x, rows))
}

fn summarize(rows: &[Vec<Outcome>], e: usize, p: usize) -> EmpiricalRisk {
    let reps = rows.len() as f64;
    let mean = rows.iter().map(|r| r[e].loss).sum::<f64>() / reps;
    let var = rows.iter().map(|r| (r[e].loss - mean).powi(2)).sum::<f64>() / (reps - 1.0);
    let std_error = (var / reps).sqrt();
    let mut size_histogram = vec![0u64; p + 1];
    for r in rows {
        size_histogram[r[e].size] += 1;
    }
    let hits = rows.iter().filter(|r| r[e].exact_support).count();
    EmpiricalRisk {
        mean,
        std_error,
        ci_low: mean - 1.96 * std_error,
        ci_high: mean + 1.96 * std_error,
        size_histogram,
        support_recovery: hits as f64 / reps,
    }
}

/// Risk of one estimator over the scenario's replications.
pub fn empirical_risk(scenario: &ScenarioSpec, estimator: &EstimatorSpec) -> Result<EmpiricalRisk> {
    let (_, rows) = simulate(scenario, std::slice::from_ref(estimator))?;
    Ok(summarize(&rows, 0, scenario.p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub name: String,
    #[serde(flatten)]
    pub risk: EmpiricalRisk,
    /// `mean / (ln p (oracle + s2))`.
    pub oracle_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub scenario: ScenarioSpec,
    pub oracle: OracleRisk,
    pub estimators: Vec<EstimatorReport>,
    /// Absent when `beta = 0` or `p0 > rank`.
    pub rate: Option<RateBounds>,
    pub tau_2p0: Option<f64>,
    pub tau_p0: Option<f64>,
}

impl RiskReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scenario,estimator,mean_risk,std_error,ci_low,ci_high,support_recovery,\
             oracle_risk,oracle_exact,oracle_ratio,rate_upper,rate_lower\n",
        );
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for e in &self.estimators {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.scenario.name,
                e.name,
                e.risk.mean,
                e.risk.std_error,
                e.risk.ci_low,
                e.risk.ci_high,
                e.risk.support_recovery,
                self.oracle.risk,
                self.oracle.exact,
                e.oracle_ratio,
                opt(self.rate.map(|r| r.upper)),
                opt(self.rate.map(|r| r.lower)),
            );
        }
        out
    }
}

/// Runs every estimator of the scenario on common noise draws and compares
/// them with the oracle and the minimax rate.
pub fn compare_estimators(scenario: &ScenarioSpec) -> Result<RiskReport> {
    if scenario.estimators.len() < 2 {
        return Err(Error::InvalidArgument("compare_estimators needs at least two estimators".into()));
    }
    let (x, rows) = simulate(scenario, &scenario.estimators)?;
    let beta = scenario.beta();
    let oracle = oracle_risk(&x, &beta, scenario.sigma_sq, scenario.budget, scenario.oracle_fallback)?;
    let denom = (scenario.p as f64).ln() * (oracle.risk + scenario.sigma_sq);
    let estimators = scenario
        .estimators
        .iter()
        .enumerate()
        .map(|(e, spec)| {
            let risk = summarize(&rows, e, scenario.p);
            EstimatorReport {
                name: spec.name.clone(),
                oracle_ratio: risk.mean / denom,
                risk,
            }
        })
        .collect();

    let p0 = beta.iter().filter(|b| **b != 0.0).count();
    let r = usable_rank(&x)?;
    let (rate, tau_2p0, tau_p0) = if p0 >= 1 && p0 <= r {
        let budget = SearchBudget {
            max_subsets: scenario.diag_budget,
            seed: scenario.seed,
        };
        let k_max = if 2 * p0 <= r { 2 * p0 } else { p0 };
        let curve = tau_curve(&x, k_max, &budget)?;
        let t_p0 = curve[p0 - 1].tau;
        let t_2p0 = if 2 * p0 <= r { curve[2 * p0 - 1].tau } else { t_p0 };
        let rate = rate_bounds(
            scenario.p,
            p0,
            r,
            t_2p0,
            t_p0,
            scenario.sigma_sq,
            scenario.rate_c1,
            scenario.rate_c2,
        )?;
        (Some(rate), (2 * p0 <= r).then_some(t_2p0), Some(t_p0))
    } else {
        (None, None, None)
    };

    Ok(RiskReport {
        scenario: scenario.clone(),
        oracle,
        estimators,
        rate,
        tau_2p0,
        tau_p0,
    })
}

/// The support of the default `beta` with its last column swapped for the
/// last predictor, so that the fixed fit carries both bias and variance.
pub fn partial_support_model(p: usize, p0: usize) -> ModelIndicator {
    let mut cols: Vec<usize> = (0..p0.saturating_sub(1)).collect();
    if p0 < p {
        cols.push(p - 1);
    }
    ModelIndicator::from_unsorted(cols)
}

/// The geometric, RIC- and AIC-calibrated MAP selectors and a fixed model.
pub fn standard_estimators(p: usize, p0: usize) -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec {
            name: "geometric_map".into(),
            rule: EstimatorRule::Map {
                prior: PriorSpec::Geometric { q: 0.5 },
                gamma: None,
            },
        },
        EstimatorSpec {
            name: "ric_map".into(),
            rule: EstimatorRule::MapCalibrated {
                criterion: Criterion::Ric,
                gamma: None,
            },
        },
        EstimatorSpec {
            name: "aic_map".into(),
            rule: EstimatorRule::MapCalibrated {
                criterion: Criterion::Aic,
                gamma: None,
            },
        },
        EstimatorSpec {
            name: "fixed_partial".into(),
            rule: EstimatorRule::Fixed {
                model: partial_support_model(p, p0),
            },
        },
    ]
}

/// Twelve scenarios: four designs by three sparsity levels.
pub fn standard_suite(replications: usize, seed: u64) -> Vec<ScenarioSpec> {
    let designs = [
        ("orthonormal", 20, 20, DesignKind::Orthonormal),
        ("gaussian", 30, 10, DesignKind::IidGaussian),
        ("equicorr_0.3", 11, 10, DesignKind::Equicorrelated { rho: 0.3 }),
        ("equicorr_0.8", 11, 10, DesignKind::Equicorrelated { rho: 0.8 }),
    ];
    let sparsity = [(1, 4.0), (3, 2.0), (6, 1.0)];
    let mut out = Vec::new();
    for (d, (label, n, p, kind)) in designs.into_iter().enumerate() {
        for (s, &(p0, magnitude)) in sparsity.iter().enumerate() {
            out.push(ScenarioSpec {
                name: format!("{label}_p0_{p0}"),
                n,
                p,
                design: kind.clone(),
                p0,
                beta_magnitude: magnitude,
                beta: None,
                sigma_sq: 1.0,
                replications,
                seed: derive(seed, (d * 3 + s) as u64),
                estimators: standard_estimators(p, p0),
                budget: DEFAULT_BUDGET,
                diag_budget: default_diag_budget(),
                oracle_fallback: true,
                rate_c1: 1.0,
                rate_c2: 1.0,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scenario(p0: usize, magnitude: f64, estimators: Vec<EstimatorSpec>) -> ScenarioSpec {
        ScenarioSpec {
            name: "t".into(),
            n: 12,
            p: 12,
            design: DesignKind::Orthonormal,
            p0,
            beta_magnitude: magnitude,
            beta: None,
            sigma_sq: 1.0,
            replications: 200,
            seed: 17,
            estimators,
            budget: DEFAULT_BUDGET,
            diag_budget: 10_000,
            oracle_fallback: true,
            rate_c1: 1.0,
            rate_c2: 1.0,
        }
    }

    fn fixed(model: Vec<usize>) -> EstimatorSpec {
        EstimatorSpec {
            name: "fixed".into(),
            rule: EstimatorRule::Fixed {
                model: ModelIndicator::new(model).unwrap(),
            },
        }
    }

    #[test]
    fn oracle_examples() {
        let x = designs::orthonormal(5, 5).unwrap();
        assert_eq!(oracle_risk(&x, &[0.0; 5], 1.0, 100, false).unwrap().risk, 0.0);
        let beta = [0.5, 3.0, -0.2, 0.0, 1.5];
        let o = oracle_risk(&x, &beta, 1.0, 100, false).unwrap();
        let want: f64 = beta.iter().map(|b: &f64| (b * b).min(1.0)).sum();
        assert_relative_eq!(o.risk, want, epsilon = 1e-12);
        assert_eq!(o.model.indices(), &[1, 4]);
        let o = oracle_risk(&x, &[0.5, 0.0, 0.0, 0.0, 0.0], 1.0, 100, false).unwrap();
        assert_relative_eq!(o.risk, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn oracle_budget_and_fallback() {
        let x = designs::iid_gaussian(20, 12, 2).unwrap();
        let mut beta = vec![0.0; 12];
        beta[2] = 3.0;
        beta[7] = -2.0;
        assert!(matches!(
            oracle_risk(&x, &beta, 1.0, 100, false),
            Err(Error::BudgetExceeded { .. })
        ));
        let exact = oracle_risk(&x, &beta, 1.0, DEFAULT_BUDGET, false).unwrap();
        let approx = oracle_risk(&x, &beta, 1.0, 100, true).unwrap();
        assert!(exact.exact && !approx.exact);
        assert!(approx.risk >= exact.risk - 1e-12);
    }

    #[test]
    fn null_model_on_null_signal() {
        let s = scenario(0, 0.0, vec![fixed(vec![])]);
        let r = empirical_risk(&s, &s.estimators[0]).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.size_histogram[0], 200);
    }

    #[test]
    fn fixed_model_matches_risk_identity() {
        let mut s = scenario(3, 1.5, vec![fixed(vec![0, 5])]);
        s.replications = 2000;
        let x = s.build_design().unwrap();
        let beta = s.beta();
        let mu = x.mul(&beta).unwrap();
        let m = ModelIndicator::new(vec![0, 5]).unwrap();
        let bias = least_squares_fit(&x, &ResponseVector::from_vector(mu), &m).unwrap().rss;
        let r = empirical_risk(&s, &s.estimators[0]).unwrap();
        assert!((r.mean - (bias + 2.0)).abs() <= 3.0 * r.std_error, "{r:?} vs {}", bias + 2.0);
    }

    #[test]
    fn default_beta_alternates() {
        let mut s = scenario(3, 2.0, vec![]);
        s.sigma_sq = 4.0;
        assert_eq!(&s.beta()[..4], &[4.0, -4.0, 4.0, 0.0]);
    }

    #[test]
    fn reports_are_reproducible() {
        let s = scenario(2, 6.0, standard_estimators(12, 2));
        let a = compare_estimators(&s).unwrap();
        let b = compare_estimators(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let json = serde_json::to_string(&a).unwrap();
        let back: RiskReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!(a.rate.is_some());
        assert!(a.estimators.iter().all(|e| e.risk.mean >= 0.0 && e.oracle_ratio >= 0.0));
    }

    #[test]
    fn compare_needs_two() {
        let s = scenario(2, 6.0, vec![fixed(vec![])]);
        assert!(compare_estimators(&s).is_err());
    }

    #[test]
    fn scenario_json() {
        let s = &standard_suite(10, 1)[4];
        let json = serde_json::to_string(s).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, s);
        let minimal = r#"{"name":"m","n":4,"p":3,"design":{"kind":"equicorrelated","rho":0.2},
            "p0":1,"beta_magnitude":2,"sigma_sq":1,"replications":5,"seed":3,
            "estimators":[{"name":"a","rule":"linear","lambda":1.0},
                          {"name":"b","rule":"map","prior":{"kind":"uniform"}}]}"#;
        let s: ScenarioSpec = serde_json::from_str(minimal).unwrap();
        assert_eq!(s.budget, DEFAULT_BUDGET);
        assert!(compare_estimators(&s).is_ok());
    }
}
