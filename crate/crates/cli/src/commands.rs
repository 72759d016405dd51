use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mapsel_core::diagnostics::{
    check_assumption_d, classify_design, tau_curve, tilde_phi, AssumptionDReport, DesignClass,
    MulticollinearityProfile, SearchBudget, SparseSpectrum,
};
use mapsel_core::prior::penalty_schedule;
use mapsel_core::risk::{compare_estimators, RiskReport, ScenarioSpec};
use mapsel_core::select::map_select;
use mapsel_core::ssvs::{run_ssvs, ChainSummary, GibbsConfig};
use mapsel_core::{Error, HyperParams, PriorSpec, SelectionResult};
use serde::{Deserialize, Serialize};

use crate::data::{prepare, read_csv, Prepared};
use crate::{CliError, DiagnoseArgs, ModelArgs, OutputArgs, PenaltyArgs, SelectArgs, SimulateArgs, SsvsArgs};

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Input(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn parse_prior(arg: &str) -> Result<PriorSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read_text(Path::new(arg))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid prior: {e}")))
}

#[derive(Serialize)]
struct Meta {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    generated_unix: u64,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    meta: Meta,
    result: &'a T,
}

fn emit<T: Serialize>(value: &T, command: &'static str, out: &OutputArgs) -> Result<(), CliError> {
    let json = if out.no_meta {
        serde_json::to_string_pretty(value)
    } else {
        let generated_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        serde_json::to_string_pretty(&Envelope {
            meta: Meta {
                tool: "mapsel",
                version: env!("CARGO_PKG_VERSION"),
                command,
                generated_unix,
            },
            result: value,
        })
    }
    .expect("serializable");
    match &out.output {
        Some(path) => write_text(path, &(json + "\n")),
        None => write_stdout(&(json + "\n")),
    }
}

#[derive(Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
pub struct SelectOutput {
    pub selected: Vec<String>,
    pub coefficients: Vec<Coefficient>,
    pub intercept: Option<f64>,
    pub rss: f64,
    pub criterion: f64,
    pub penalty: f64,
    pub models_evaluated: u64,
    pub sigma_sq: f64,
    /// True when `sigma_sq` was estimated rather than supplied.
    pub sigma_sq_estimated: bool,
    pub gamma: f64,
    pub prior: PriorSpec,
    /// Absent when the data have no predictors.
    pub selection: Option<SelectionResult>,
}

struct ModelSetup {
    names: Vec<String>,
    prepared: Prepared,
    prior: PriorSpec,
    hp: HyperParams,
    estimated: bool,
}

fn setup(args: &ModelArgs) -> Result<ModelSetup, CliError> {
    let data = read_csv(&args.input, true)?;
    let prior = parse_prior(&args.prior)?;
    let prepared = prepare(&data, !args.no_intercept)?;
    let (sigma_sq, estimated) = match (args.sigma_sq, args.estimate_sigma) {
        (Some(s), _) => (s, false),
        (None, true) => {
            eprintln!(
                "warning: sigma^2 is estimated from the saturated fit; \
                 the selection criterion assumes a known noise variance"
            );
            (prepared.estimate_sigma_sq()?, true)
        }
        (None, false) => {
            return Err(CliError::Input(
                "the noise variance is required: pass --sigma-sq or opt in to --estimate-sigma".into(),
            ))
        }
    };
    let gamma = args.gamma.unwrap_or(data.p().max(1) as f64);
    let hp = HyperParams::new(gamma, sigma_sq)?;
    Ok(ModelSetup {
        names: data.names,
        prepared,
        prior,
        hp,
        estimated,
    })
}

fn select_output(s: &ModelSetup, selection: Option<SelectionResult>) -> SelectOutput {
    match selection {
        Some(sel) => {
            let idx = sel.model.indices();
            SelectOutput {
                selected: idx.iter().map(|&j| s.names[j].clone()).collect(),
                coefficients: idx
                    .iter()
                    .map(|&j| Coefficient {
                        name: s.names[j].clone(),
                        value: sel.fit.beta_hat[j],
                    })
                    .collect(),
                intercept: s.prepared.intercept_for(&sel.fit.beta_hat),
                rss: sel.fit.rss,
                criterion: sel.criterion,
                penalty: sel.penalty,
                models_evaluated: sel.models_evaluated,
                sigma_sq: s.hp.sigma_sq,
                sigma_sq_estimated: s.estimated,
                gamma: s.hp.gamma,
                prior: s.prior.clone(),
                selection: Some(sel),
            }
        }
        None => {
            let rss = s.prepared.y.norm_sq();
            SelectOutput {
                selected: Vec::new(),
                coefficients: Vec::new(),
                intercept: s.prepared.intercept.then_some(s.prepared.y_mean),
                rss,
                criterion: rss,
                penalty: 0.0,
                models_evaluated: 1,
                sigma_sq: s.hp.sigma_sq,
                sigma_sq_estimated: s.estimated,
                gamma: s.hp.gamma,
                prior: s.prior.clone(),
                selection: None,
            }
        }
    }
}

pub fn select(args: &SelectArgs) -> Result<(), CliError> {
    let s = setup(&args.model)?;
    let selection = match &s.prepared.design {
        Some(x) => Some(map_select(x, &s.prepared.y, &s.prior, &s.hp, args.budget)?),
        None => None,
    };
    emit(&select_output(&s, selection), "select", &args.out)
}

#[derive(Serialize, Deserialize)]
pub struct SsvsOutput {
    pub config: GibbsConfig,
    pub summary: Option<ChainSummary>,
    /// The visited model with the smallest criterion.
    pub best: SelectOutput,
}

pub fn ssvs(args: &SsvsArgs) -> Result<(), CliError> {
    let s = setup(&args.model)?;
    let config = GibbsConfig {
        sweeps: args.sweeps,
        burn_in: args.burn_in,
        seed: args.seed,
        chains: args.chains,
        top_k: args.top_k,
    };
    config.validate()?;
    let (summary, best) = match &s.prepared.design {
        Some(x) => {
            let (summary, sel) = run_ssvs(x, &s.prepared.y, &s.prior, &s.hp, &config)?;
            let mut summary = summary;
            for (k, v) in std::mem::take(&mut summary.visit_counts) {
                summary.visit_counts.insert(rename_model(&k, &s.names), v);
            }
            (Some(summary), select_output(&s, Some(sel)))
        }
        None => (None, select_output(&s, None)),
    };
    if let (Some(path), Some(sum)) = (&args.csv, &summary) {
        write_text(path, &sum.top_models_csv())?;
    }
    emit(
        &SsvsOutput {
            config,
            summary,
            best,
        },
        "ssvs",
        &args.out,
    )
}

/// `{0,2}` becomes `{x1,x3}` for columns named `x1, x2, x3`.
fn rename_model(key: &str, names: &[String]) -> String {
    let inner = key.trim_start_matches('{').trim_end_matches('}');
    let parts: Vec<&str> = inner
        .split(',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().ok().and_then(|j| names.get(j)).map_or(t, |s| s.as_str()))
        .collect();
    format!("{{{}}}", parts.join(","))
}

#[derive(Serialize, Deserialize)]
pub struct ProfileEntry {
    pub k: usize,
    pub profile: Option<MulticollinearityProfile>,
    pub note: Option<String>,
}

#[derive(Serialize, Deserialize)]
pub struct DiagnoseOutput {
    pub columns: Vec<String>,
    pub n: usize,
    pub p: usize,
    pub rank: usize,
    pub centered: bool,
    pub tau_curve: Vec<SparseSpectrum>,
    pub classification: DesignClass,
    pub profiles: Vec<ProfileEntry>,
    pub assumption_d: Option<AssumptionDReport>,
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<(), CliError> {
    let data = read_csv(&args.input, false)?;
    let prepared = prepare(&data, !args.no_intercept)?;
    let x = prepared
        .design
        .as_ref()
        .ok_or_else(|| CliError::Input("no predictor columns".into()))?;
    let budget = SearchBudget {
        max_subsets: args.budget,
        seed: args.seed,
    };
    let rank = x.rank();
    let k_max = args.k_max.unwrap_or(rank.min(10));
    let curve = tau_curve(x, k_max, &budget)?;
    let classification = classify_design(x, args.threshold, &budget)?;
    let mut profiles = Vec::new();
    for k in 1..=(k_max / 2).min(x.p() / 2) {
        let entry = match tilde_phi(x, k, &budget) {
            Ok(p) => ProfileEntry {
                k,
                profile: Some(p),
                note: None,
            },
            Err(Error::Undefined(msg)) => ProfileEntry {
                k,
                profile: None,
                note: Some(msg),
            },
            Err(e) => return Err(e.into()),
        };
        profiles.push(entry);
    }
    let assumption_d = match (args.kappa1, args.kappa2) {
        (Some(k1), Some(k2)) => Some(check_assumption_d(x, k1, k2, args.c1, args.c2, args.c3, &budget)?),
        _ => None,
    };
    emit(
        &DiagnoseOutput {
            columns: data.names.clone(),
            n: data.n(),
            p: data.p(),
            rank,
            centered: prepared.intercept,
            tau_curve: curve,
            classification,
            profiles,
            assumption_d,
        },
        "diagnose",
        &args.out,
    )
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Scenarios {
    One(Box<ScenarioSpec>),
    Many(Vec<ScenarioSpec>),
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let text = read_text(&args.config)?;
    let parsed: Scenarios = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: invalid scenario: {e}", args.config.display())))?;
    let (mut scenarios, single) = match parsed {
        Scenarios::One(s) => (vec![*s], true),
        Scenarios::Many(v) => (v, false),
    };
    if scenarios.is_empty() {
        return Err(CliError::Input("no scenarios given".into()));
    }
    if let Some(seed) = args.seed {
        for s in &mut scenarios {
            s.seed = seed;
        }
    }
    let reports: Vec<RiskReport> = scenarios
        .iter()
        .map(compare_estimators)
        .collect::<Result<_, _>>()?;
    if let Some(path) = &args.csv {
        let mut csv = String::new();
        for (i, r) in reports.iter().enumerate() {
            let body = r.to_csv();
            csv.push_str(if i == 0 { &body } else { body.split_once('\n').map_or("", |b| b.1) });
        }
        write_text(path, &csv)?;
    }
    if single {
        emit(&reports[0], "simulate", &args.out)
    } else {
        emit(&reports, "simulate", &args.out)
    }
}

pub fn penalty(args: &PenaltyArgs) -> Result<(), CliError> {
    let prior = parse_prior(&args.prior)?;
    let (p, r) = match &args.input {
        Some(path) => {
            let data = read_csv(path, false)?;
            let prepared = prepare(&data, !args.no_intercept)?;
            let r = prepared.design.as_ref().map_or(0, |x| x.rank());
            (data.p(), r)
        }
        None => {
            let p = args.p.expect("required by clap");
            (p, args.rank.unwrap_or(p))
        }
    };
    if r > p {
        return Err(CliError::Input(format!("rank {r} exceeds p = {p}")));
    }
    let gamma = args.gamma.unwrap_or(p.max(1) as f64);
    let hp = HyperParams::new(gamma, args.sigma_sq)?;
    let schedule = penalty_schedule(p, r, &prior, &hp)?;
    let mut out = String::from("k,prior,L,pen\n");
    for k in 0..=r {
        out.push_str(&format!(
            "{},{},{},{}\n",
            k,
            schedule.prior_prob(k),
            schedule.l[k],
            schedule.pen[k]
        ));
    }
    match &args.output {
        Some(path) => write_text(path, &out),
        None => write_stdout(&out),
    }
}
