//! Stochastic search variable selection.
//!
//! A systematic-scan Gibbs sampler over the inclusion indicators `d_j`. Each
//! coordinate is redrawn from its full conditional, whose odds are
//!
//! ```text
//! pi(k+1)/pi(k) * (k+1)/(p-k) * (1+g)^(-1/2) * exp{ g/(g+1) * dRSS_j / (2 s2) }
//! ```
//!
//! with `k = |d_(-j)|` and `dRSS_j` the increase in RSS from dropping `j`.
//! When `k + 1` is the saturated size the binomial factor changes, so the
//! odds are taken as the exact ratio of the two log posteriors there. Moves
//! beyond the rank are never proposed.
//!
//! Randomness is addressed by `(seed, chain, sweep)`, so chains may run in
//! any order or in parallel without changing the output.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DesignMatrix, ModelIndicator, ResponseVector};
use crate::prior::{HyperParams, PriorSpec};
use crate::seed::stream_rng;
use crate::select::{finalize, ModelScorer, SelectionResult};

/// RSS cache entries kept per chain before it is flushed.
const CACHE_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub chains: usize,
    pub top_k: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            sweeps: 10_000,
            burn_in: 1_000,
            seed: 0,
            chains: 4,
            top_k: 10,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.chains == 0 || self.top_k == 0 {
            return Err(Error::InvalidArgument(
                "sweeps, chains and top_k must be at least 1".into(),
            ));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidArgument(format!(
                "burn_in {} must be below sweeps {}",
                self.burn_in, self.sweeps
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopModel {
    pub model: ModelIndicator,
    pub count: u64,
    pub frequency: f64,
    pub criterion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    /// Post-burn-in visits keyed by the model's index set, e.g. `{0,3}`.
    pub visit_counts: BTreeMap<String, u64>,
    pub top_models: Vec<TopModel>,
    pub inclusion_freq: Vec<f64>,
    /// Inclusion frequencies of each chain separately, for comparing chains.
    pub chain_inclusion_freq: Vec<Vec<f64>>,
    pub accepted_sweeps: u64,
}

impl ChainSummary {
    /// The top-models table as CSV.
    pub fn top_models_csv(&self) -> String {
        let mut out = String::from("rank,model,size,count,frequency,criterion\n");
        for (i, t) in self.top_models.iter().enumerate() {
            let cols: Vec<String> = t.model.indices().iter().map(|j| j.to_string()).collect();
            let _ = writeln!(
                out,
                "{},\"{}\",{},{},{},{}",
                i + 1,
                cols.join(" "),
                t.model.len(),
                t.count,
                t.frequency,
                t.criterion
            );
        }
        out
    }
}

/// Log odds of `d_j = 1` against `d_j = 0` given the other `k` indicators.
fn log_odds_from(scorer: &ModelScorer<'_>, k: usize, rss_without: f64, rss_with: f64) -> f64 {
    let r = scorer.rank();
    if k + 1 > r {
        return f64::NEG_INFINITY;
    }
    let delta = (rss_without - rss_with).max(0.0);
    if k + 1 < r {
        let s = scorer.schedule();
        let hp = &s.hyper;
        let p = s.p as f64;
        s.log_prior[k + 1] - s.log_prior[k] + ((k + 1) as f64).ln() - (p - k as f64).ln()
            - 0.5 * hp.gamma.ln_1p()
            + hp.shrinkage() * delta / (2.0 * hp.sigma_sq)
    } else {
        scorer.log_posterior_from_rss(k + 1, rss_with) - scorer.log_posterior_from_rss(k, rss_without)
    }
}

/// `P(d_j = 1 | d_(-j), y) / P(d_j = 0 | d_(-j), y)`.
pub fn odds_ratio(
    x: &DesignMatrix,
    y: &ResponseVector,
    d_minus_j: &ModelIndicator,
    j: usize,
    prior: &PriorSpec,
    hp: &HyperParams,
) -> Result<f64> {
    let p = x.p();
    if j >= p {
        return Err(Error::IndexOutOfRange { index: j, p });
    }
    d_minus_j.check(p)?;
    if d_minus_j.contains(j) {
        return Err(Error::InvalidModel(format!("conditioning set contains {j}")));
    }
    let scorer = ModelScorer::new(x, y, prior, hp)?;
    let k = d_minus_j.len();
    if k + 1 > scorer.rank() {
        return Err(Error::ExceedsRank {
            size: k + 1,
            rank: scorer.rank(),
        });
    }
    let rss_without = scorer.rss(d_minus_j.indices());
    let rss_with = scorer.rss(d_minus_j.with(j).indices());
    Ok(log_odds_from(&scorer, k, rss_without, rss_with).exp())
}

fn inclusion_prob(log_odds: f64) -> f64 {
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

type Key = Vec<u64>;

fn key_of(mask: &[bool]) -> Key {
    let mut key = vec![0u64; mask.len().div_ceil(64).max(1)];
    for (j, _) in mask.iter().enumerate().filter(|(_, &d)| d) {
        key[j / 64] |= 1 << (j % 64);
    }
    key
}

fn cols_of(key: &[u64]) -> Vec<usize> {
    let mut cols = Vec::new();
    for (w, &word) in key.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            cols.push(w * 64 + b);
            bits &= bits - 1;
        }
    }
    cols
}

struct Sampler<'s, 'a> {
    scorer: &'s ModelScorer<'a>,
    cache: HashMap<Key, f64>,
}

impl<'s, 'a> Sampler<'s, 'a> {
    fn new(scorer: &'s ModelScorer<'a>) -> Self {
        Self {
            scorer,
            cache: HashMap::new(),
        }
    }

    fn rss(&mut self, key: &Key) -> f64 {
        if let Some(&v) = self.cache.get(key) {
            return v;
        }
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        let v = self.scorer.rss(&cols_of(key));
        self.cache.insert(key.clone(), v);
        v
    }

    /// One systematic scan over `j = 0..p`.
    fn sweep<R: Rng>(&mut self, state: &mut [bool], rng: &mut R) {
        let mut key = key_of(state);
        let mut size = state.iter().filter(|&&d| d).count();
        for j in 0..state.len() {
            let (w, bit) = (j / 64, 1u64 << (j % 64));
            let k = size - usize::from(state[j]);
            key[w] &= !bit;
            let rss_without = self.rss(&key);
            key[w] |= bit;
            let log_odds = if k + 1 > self.scorer.rank() {
                f64::NEG_INFINITY
            } else {
                let rss_with = self.rss(&key);
                log_odds_from(self.scorer, k, rss_without, rss_with)
            };
            let u: f64 = rng.random();
            let on = u < inclusion_prob(log_odds);
            if !on {
                key[w] &= !bit;
            }
            state[j] = on;
            size = k + usize::from(on);
        }
    }
}

/// One systematic-scan sweep starting from `state`.
pub fn gibbs_sweep<R: Rng>(
    state: &[bool],
    x: &DesignMatrix,
    y: &ResponseVector,
    prior: &PriorSpec,
    hp: &HyperParams,
    rng: &mut R,
) -> Result<Vec<bool>> {
    if state.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "state length {} vs p = {}",
            state.len(),
            x.p()
        )));
    }
    let scorer = ModelScorer::new(x, y, prior, hp)?;
    let size = state.iter().filter(|&&d| d).count();
    if size > scorer.rank() {
        return Err(Error::ExceedsRank {
            size,
            rank: scorer.rank(),
        });
    }
    let mut next = state.to_vec();
    Sampler::new(&scorer).sweep(&mut next, rng);
    Ok(next)
}

struct ChainOutput {
    visits: HashMap<Key, u64>,
    inclusion: Vec<u64>,
}

fn chain_rng(cfg: &GibbsConfig, chain: usize, slot: u64, p: usize) -> ChaCha8Rng {
    // each uniform draw consumes two 32-bit words
    stream_rng(cfg.seed, chain as u64, slot, 2 * p as u64)
}

fn run_chain(scorer: &ModelScorer<'_>, cfg: &GibbsConfig, chain: usize) -> ChainOutput {
    let p = scorer.design().p();
    let r = scorer.rank();
    let init_prob = (0.5_f64).min(r as f64 / (2.0 * p as f64));
    let mut rng = chain_rng(cfg, chain, 0, p);
    let mut state: Vec<bool> = (0..p).map(|_| rng.random::<f64>() < init_prob).collect();
    let mut size = state.iter().filter(|&&d| d).count();
    for j in (0..p).rev() {
        if size <= r {
            break;
        }
        if state[j] {
            state[j] = false;
            size -= 1;
        }
    }

    let mut sampler = Sampler::new(scorer);
    let mut visits: HashMap<Key, u64> = HashMap::new();
    let mut inclusion = vec![0u64; p];
    for s in 0..cfg.sweeps {
        let mut rng = chain_rng(cfg, chain, s + 1, p);
        sampler.sweep(&mut state, &mut rng);
        if s >= cfg.burn_in {
            *visits.entry(key_of(&state)).or_insert(0) += 1;
            for (c, &d) in inclusion.iter_mut().zip(&state) {
                *c += u64::from(d);
            }
        }
    }
    ChainOutput { visits, inclusion }
}

/// Runs `cfg.chains` independent chains and returns the visit summary together
/// with the visited model of lowest criterion.
pub fn run_ssvs(
    x: &DesignMatrix,
    y: &ResponseVector,
    prior: &PriorSpec,
    hp: &HyperParams,
    cfg: &GibbsConfig,
) -> Result<(ChainSummary, SelectionResult)> {
    cfg.validate()?;
    let scorer = ModelScorer::new(x, y, prior, hp)?;
    let p = x.p();
    let outputs: Vec<ChainOutput> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(&scorer, cfg, c))
        .collect();

    let kept = cfg.sweeps - cfg.burn_in;
    let total = kept * cfg.chains as u64;
    let mut merged: BTreeMap<ModelIndicator, u64> = BTreeMap::new();
    let mut inclusion = vec![0u64; p];
    let mut chain_inclusion_freq = Vec::with_capacity(cfg.chains);
    for out in &outputs {
        for (key, &count) in &out.visits {
            let model = ModelIndicator::new(cols_of(key))?;
            *merged.entry(model).or_insert(0) += count;
        }
        for (acc, &c) in inclusion.iter_mut().zip(&out.inclusion) {
            *acc += c;
        }
        chain_inclusion_freq.push(out.inclusion.iter().map(|&c| c as f64 / kept as f64).collect());
    }

    let scored: Vec<(ModelIndicator, u64, f64)> = merged
        .iter()
        .map(|(m, &c)| (m.clone(), c, scorer.criterion(m.indices())))
        .collect();
    let best = scored
        .iter()
        .min_by(|a, b| {
            a.2.total_cmp(&b.2)
                .then(a.0.len().cmp(&b.0.len()))
                .then_with(|| a.0.cmp(&b.0))
        })
        .map(|t| t.0.clone())
        .expect("at least one visit");

    let mut by_freq: Vec<&(ModelIndicator, u64, f64)> = scored.iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let top_models = by_freq
        .iter()
        .take(cfg.top_k)
        .map(|(m, c, crit)| TopModel {
            model: m.clone(),
            count: *c,
            frequency: *c as f64 / total as f64,
            criterion: *crit,
        })
        .collect();

    let summary = ChainSummary {
        visit_counts: merged.iter().map(|(m, &c)| (m.to_string(), c)).collect(),
        top_models,
        inclusion_freq: inclusion.iter().map(|&c| c as f64 / total as f64).collect(),
        chain_inclusion_freq,
        accepted_sweeps: total,
    };
    let selection = finalize(x, y, best, scorer.schedule(), merged.len() as u64)?;
    Ok((summary, selection))
}
