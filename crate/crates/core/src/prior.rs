//! Model-size priors and the complexity penalties they induce.
//!
//! For a prior `pi` on the model size `k = 0..r` the penalty is
//!
//! ```text
//! Pen(k) = 2 s2 (1 + 1/g) ln{ C(p,k) pi(k)^-1 (1+g)^(k/2) },  k < r
//! Pen(r) = 2 s2 (1 + 1/g) ln{ pi(r)^-1 (1+g)^(r/2) }
//! ```
//!
//! The saturated size carries no binomial coefficient: every size-`r`
//! subset yields the same fit, so they are collapsed into one model.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// g-prior variance ratio and the (known) noise variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub gamma: f64,
    pub sigma_sq: f64,
}

impl HyperParams {
    pub fn new(gamma: f64, sigma_sq: f64) -> Result<Self> {
        let hp = Self { gamma, sigma_sq };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidHyperParams(format!("gamma = {}", self.gamma)));
        }
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return Err(Error::InvalidHyperParams(format!("sigma_sq = {}", self.sigma_sq)));
        }
        Ok(())
    }

    /// `2 s2 (1 + 1/g)`, the factor converting log prior odds into RSS units.
    pub fn penalty_scale(&self) -> f64 {
        2.0 * self.sigma_sq * (1.0 + 1.0 / self.gamma)
    }

    /// `g / (g + 1)`, the shrinkage applied to the explained sum of squares.
    pub fn shrinkage(&self) -> f64 {
        self.gamma / (self.gamma + 1.0)
    }
}

/// Prior on the model size.
///
/// The parametric kinds are truncated to `0..=r` and renormalized there.
/// `Table` weights are used as given (they may be unnormalized); their length
/// must be `r + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Independent inclusions with probability `xi`: `pi(k) ~ C(p,k) xi^k (1-xi)^(p-k)`.
    Binomial { xi: f64 },
    /// `pi(k) ~ q^k`.
    Geometric { q: f64 },
    Uniform,
    Table { weights: Vec<f64> },
}

impl PriorSpec {
    /// `ln pi(k)` for `k = 0..=r`.
    pub fn log_weights(&self, p: usize, r: usize) -> Result<Vec<f64>> {
        if r > p {
            return Err(Error::InvalidArgument(format!("rank {r} exceeds p = {p}")));
        }
        let raw: Vec<f64> = match self {
            PriorSpec::Binomial { xi } => {
                if !(*xi > 0.0 && *xi < 1.0) {
                    return Err(Error::InvalidPrior(format!("binomial xi = {xi} not in (0,1)")));
                }
                (0..=r)
                    .map(|k| {
                        ln_choose(p, k) + k as f64 * xi.ln() + (p - k) as f64 * (-xi).ln_1p()
                    })
                    .collect()
            }
            PriorSpec::Geometric { q } => {
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(Error::InvalidPrior(format!("geometric q = {q} not in (0,1)")));
                }
                (0..=r).map(|k| k as f64 * q.ln()).collect()
            }
            PriorSpec::Uniform => vec![0.0; r + 1],
            PriorSpec::Table { weights } => {
                if weights.len() != r + 1 {
                    return Err(Error::InvalidPrior(format!(
                        "table has {} weights, expected r + 1 = {}",
                        weights.len(),
                        r + 1
                    )));
                }
                if let Some(k) = weights.iter().position(|&w| w <= 0.0 || !w.is_finite()) {
                    return Err(Error::ZeroPriorMass(k));
                }
                return Ok(weights.iter().map(|w| w.ln()).collect());
            }
        };
        let norm = log_sum_exp(&raw);
        Ok(raw.into_iter().map(|v| v - norm).collect())
    }
}

/// `ln C(p, k)` without overflow.
pub fn ln_choose(p: usize, k: usize) -> f64 {
    if k == 0 || k >= p {
        return 0.0;
    }
    ln_binomial(p as u64, k as u64)
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `Pen(0..=r)` together with the prior and the `L_k` it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    pub p: usize,
    pub r: usize,
    pub hyper: HyperParams,
    pub pen: Vec<f64>,
    pub log_prior: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
}

impl PenaltySchedule {
    /// `ln C(p,k)` as it enters the posterior: zero at the saturated size.
    pub fn ln_model_count(&self, k: usize) -> f64 {
        if k >= self.r {
            0.0
        } else {
            ln_choose(self.p, k)
        }
    }

    pub fn prior_prob(&self, k: usize) -> f64 {
        self.log_prior[k].exp()
    }
}

/// Builds `Pen(k)` for `k = 0..=r`.
pub fn penalty_schedule(
    p: usize,
    r: usize,
    prior: &PriorSpec,
    hp: &HyperParams,
) -> Result<PenaltySchedule> {
    hp.validate()?;
    if r == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let log_prior = prior.log_weights(p, r)?;
    let scale = hp.penalty_scale();
    let half_log = 0.5 * hp.gamma.ln_1p();
    let pen = (0..=r)
        .map(|k| {
            let count = if k < r { ln_choose(p, k) } else { 0.0 };
            scale * (count - log_prior[k] + k as f64 * half_log)
        })
        .collect();
    let l = l_from_log_prior(p, r, &log_prior);
    Ok(PenaltySchedule {
        p,
        r,
        hyper: *hp,
        pen,
        log_prior,
        l,
    })
}

fn l_from_log_prior(p: usize, r: usize, log_prior: &[f64]) -> Vec<f64> {
    (0..=r)
        .map(|k| match k {
            0 => -2.0 * log_prior[0],
            k if k < r => (ln_choose(p, k) - log_prior[k]) / k as f64,
            _ => -log_prior[r] / r as f64,
        })
        .collect()
}

/// `L_k = (1/k) ln(C(p,k) / pi(k))` for `0 < k < r`, `L_r = (1/r) ln(1/pi(r))`
/// and `L_0 = 2 ln(1/pi(0))`.
///
/// In these terms `Pen(k) = s2 (1 + 1/g) k (2 L_k + ln(1+g))` for `k >= 1`.
/// The `L_0` convention is only meaningful for the oracle-inequality bound.
pub fn compute_l(p: usize, r: usize, prior: &PriorSpec) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let log_prior = prior.log_weights(p, r)?;
    Ok(l_from_log_prior(p, r, &log_prior))
}

/// `c(g) = 8 (g + 3/4)^2`.
pub fn c_gamma(gamma: f64) -> f64 {
    8.0 * (gamma + 0.75).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionPReport {
    pub holds: bool,
    pub c_gamma: f64,
    /// Sizes `k` at which the bound is violated.
    pub violations: Vec<usize>,
}

/// Checks `pi(k) <= C(p,k) e^{-c(g) k}` for `k < r` and `pi(r) <= e^{-c(g) r}`
/// in log space.
pub fn check_assumption_p(
    p: usize,
    r: usize,
    prior: &PriorSpec,
    gamma: f64,
) -> Result<AssumptionPReport> {
    let log_prior = prior.log_weights(p, r)?;
    let c = c_gamma(gamma);
    let violations: Vec<usize> = (0..=r)
        .filter(|&k| {
            let count = if k < r { ln_choose(p, k) } else { 0.0 };
            log_prior[k] > count - c * k as f64
        })
        .collect();
    Ok(AssumptionPReport {
        holds: violations.is_empty(),
        c_gamma: c,
        violations,
    })
}

/// Classical linear-penalty criteria, `Pen(k) = 2 s2 lambda k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Criterion {
    /// `lambda = 1`.
    Aic,
    /// `lambda = ln(n) / 2`.
    Bic,
    /// `lambda = ln(p)`.
    Ric,
    Lambda { lambda: f64 },
}

impl Criterion {
    pub fn lambda(&self, p: usize, n: usize) -> f64 {
        match *self {
            Criterion::Aic => 1.0,
            Criterion::Bic => 0.5 * (n as f64).ln(),
            Criterion::Ric => (p as f64).ln(),
            Criterion::Lambda { lambda } => lambda,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiCalibration {
    pub lambda: f64,
    /// Exact inversion of `lambda = (1 + 1/g) ln(sqrt(1+g) (1-xi)/xi)`.
    pub xi: f64,
    /// Large-`g` approximation `sqrt(g) / (e^lambda + sqrt(g))`.
    pub xi_approx: f64,
}

/// The binomial inclusion probability whose MAP penalty is the linear
/// penalty of `criterion`.
pub fn binomial_xi_for_criterion(
    criterion: Criterion,
    p: usize,
    n: usize,
    gamma: f64,
) -> Result<XiCalibration> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidHyperParams(format!("gamma = {gamma}")));
    }
    let lambda = criterion.lambda(p, n);
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let root = gamma.ln_1p() * 0.5;
    let a = lambda * gamma / (gamma + 1.0);
    // xi = sqrt(1+g) / (sqrt(1+g) + e^a), evaluated as a logistic in log space
    let xi = 1.0 / (1.0 + (a - root).exp());
    let xi_approx = 1.0 / (1.0 + (lambda - 0.5 * gamma.ln()).exp());
    Ok(XiCalibration {
        lambda,
        xi,
        xi_approx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hp(g: f64, s2: f64) -> HyperParams {
        HyperParams::new(g, s2).unwrap()
    }

    #[test]
    fn point_mass_table_has_zero_null_penalty() {
        let prior = PriorSpec::Table {
            weights: vec![1.0, 0.5, 0.25, 0.125],
        };
        let s = penalty_schedule(5, 3, &prior, &hp(2.0, 1.0)).unwrap();
        assert_eq!(s.pen[0], 0.0);
    }

    #[test]
    fn geometric_pen2_value() {
        let s = penalty_schedule(4, 4, &PriorSpec::Geometric { q: 0.5 }, &hp(3.0, 1.0)).unwrap();
        assert_relative_eq!(s.prior_prob(2), 4.0 / 31.0, max_relative = 1e-14);
        // (8/3) ln(186), evaluated at high precision
        assert_relative_eq!(s.pen[2], 13.935_324_463_235_203, max_relative = 1e-12);
        assert_eq!(s.pen.len(), 5);
    }

    #[test]
    fn binomial_first_differences_are_constant() {
        let (g, s2, xi) = (3.0_f64, 1.5, 0.2);
        let s = penalty_schedule(12, 9, &PriorSpec::Binomial { xi }, &hp(g, s2)).unwrap();
        let step = 2.0 * s2 * (1.0 + 1.0 / g) * ((1.0 + g).sqrt() * (1.0 - xi) / xi).ln();
        for k in 1..9 {
            assert_relative_eq!(s.pen[k] - s.pen[k - 1], step, max_relative = 1e-10);
        }
    }

    #[test]
    fn l_values() {
        let l = compute_l(6, 5, &PriorSpec::Uniform).unwrap();
        assert_relative_eq!(l[5], 6.0_f64.ln() / 5.0, max_relative = 1e-14);
        let l = compute_l(4, 4, &PriorSpec::Geometric { q: 0.5 }).unwrap();
        assert_relative_eq!(l[1], 15.5_f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(l[0], -2.0 * (16.0_f64 / 31.0).ln(), max_relative = 1e-14);
    }

    #[test]
    fn l_identity_reproduces_penalty() {
        let h = hp(2.5, 0.7);
        for prior in [
            PriorSpec::Uniform,
            PriorSpec::Geometric { q: 0.3 },
            PriorSpec::Binomial { xi: 0.1 },
        ] {
            let s = penalty_schedule(15, 10, &prior, &h).unwrap();
            let l = compute_l(15, 10, &prior).unwrap();
            for k in 1..=10 {
                let via_l = h.sigma_sq
                    * (1.0 + 1.0 / h.gamma)
                    * k as f64
                    * (2.0 * l[k] + h.gamma.ln_1p());
                assert_relative_eq!(via_l, s.pen[k], max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn c_gamma_value() {
        assert_eq!(c_gamma(1.0), 24.5);
    }

    #[test]
    fn uniform_prior_violates_assumption_p() {
        let rep = check_assumption_p(10, 10, &PriorSpec::Uniform, 1.0).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.violations, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn small_prior_satisfies_assumption_p() {
        let (p, r, g) = (30, 10, 1.0);
        let c = c_gamma(g);
        // pi(k) = (k/p)^k e^{-c k} for k >= 1; pi(0) = 1/2
        let mut weights = vec![0.5];
        weights.extend((1..=r).map(|k| {
            let k = k as f64;
            ((k / p as f64).ln() * k - c * k).exp()
        }));
        let rep = check_assumption_p(p, r, &PriorSpec::Table { weights }, g).unwrap();
        assert!(rep.violations.iter().all(|&k| k == r), "{:?}", rep.violations);
    }

    #[test]
    fn xi_calibration() {
        let g = 3.0_f64;
        let lam = (1.0 + 1.0 / g) * (1.0 + g).sqrt().ln();
        let cal = binomial_xi_for_criterion(Criterion::Lambda { lambda: lam }, 10, 10, g).unwrap();
        assert_relative_eq!(cal.xi, 0.5, max_relative = 1e-14);

        let cal = binomial_xi_for_criterion(Criterion::Ric, 100, 50, 3.0).unwrap();
        assert_relative_eq!(cal.xi, 2.0 / (2.0 + 100f64.powf(0.75)), max_relative = 1e-13);
        assert_relative_eq!(cal.xi, 0.0595, epsilon = 5e-5);

        let g = 1e6;
        let cal = binomial_xi_for_criterion(Criterion::Ric, 100, 50, g).unwrap();
        let printed_form = g.sqrt() / (100.0 + g.sqrt());
        assert!((cal.xi / printed_form - 1.0).abs() < 0.01);
        assert_relative_eq!(cal.xi_approx, printed_form, max_relative = 1e-12);

        assert!(binomial_xi_for_criterion(Criterion::Lambda { lambda: 0.0 }, 5, 5, 1.0).is_err());
        // BIC with n = 1 has lambda = 0
        assert!(binomial_xi_for_criterion(Criterion::Bic, 5, 1, 1.0).is_err());
    }

    #[test]
    fn calibrated_binomial_reproduces_lambda() {
        let (p, n, g) = (40, 60, 7.0);
        let cal = binomial_xi_for_criterion(Criterion::Bic, p, n, g).unwrap();
        let s = penalty_schedule(p, 30, &PriorSpec::Binomial { xi: cal.xi }, &hp(g, 1.0)).unwrap();
        assert_relative_eq!(s.pen[5] - s.pen[4], 2.0 * cal.lambda, max_relative = 1e-10);
    }

    #[test]
    fn prior_errors() {
        let h = hp(1.0, 1.0);
        assert!(matches!(
            penalty_schedule(4, 2, &PriorSpec::Table { weights: vec![1.0, 0.0, 1.0] }, &h),
            Err(Error::ZeroPriorMass(1))
        ));
        assert!(penalty_schedule(3, 4, &PriorSpec::Uniform, &h).is_err());
        assert!(penalty_schedule(4, 2, &PriorSpec::Table { weights: vec![1.0] }, &h).is_err());
        assert!(penalty_schedule(4, 2, &PriorSpec::Geometric { q: 1.5 }, &h).is_err());
        assert!(HyperParams::new(0.0, 1.0).is_err());
        assert!(HyperParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn prior_json() {
        let p: PriorSpec = serde_json::from_str(r#"{"kind":"geometric","q":0.5}"#).unwrap();
        assert_eq!(p, PriorSpec::Geometric { q: 0.5 });
        let u: PriorSpec = serde_json::from_str(r#"{"kind":"uniform"}"#).unwrap();
        assert_eq!(u, PriorSpec::Uniform);
        let t = PriorSpec::Table { weights: vec![1.0, 2.0] };
        let back: PriorSpec = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
