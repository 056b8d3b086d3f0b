//! Sectioned `key = value` experiment description.
//!
//! ```text
//! # comments start with '#'
//! [experiment]
//! environment = drift
//! algorithm = pass
//! policy = pc
//! episodes = 1000
//! paths = 100
//!
//! [policy]
//! eta = 0.1
//! w = 5
//!
//! [drift]
//! f = 1, -1, 2
//! sigma = 0.5
//! ```
//!
//! Every problem is reported with its line number; unknown keys come with
//! the closest valid key of their section.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::algorithms::Algorithm;
use crate::env::{ExecModel, PlacementModel, PolicyMode};
use crate::error::{Error, Result};
use crate::stepsize::{HlScheme, PcMode, ProxyMode};

/// One problem found while reading a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Closed set of string-named options.
trait Choice: Sized + Copy + PartialEq + 'static {
    const OPTIONS: &'static [(&'static str, Self)];

    fn choice_name(self) -> &'static str {
        Self::OPTIONS
            .iter()
            .find(|(_, v)| *v == self)
            .map(|(n, _)| *n)
            .expect("listed option")
    }

    fn parse_choice(s: &str) -> std::result::Result<Self, String> {
        Self::OPTIONS
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::OPTIONS.iter().map(|(n, _)| *n).collect();
                format!("expected one of {}, got `{s}`", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Environment {
    #[default]
    Drift,
    Placement,
    Execution,
}

/// Base schedule family as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum PolicyKind {
    Constant,
    Inv,
    #[default]
    Pc,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateKind {
    #[default]
    Inv,
    Constant,
}

impl Choice for Environment {
    const OPTIONS: &'static [(&'static str, Self)] = &[
        ("drift", Environment::Drift),
        ("placement", Environment::Placement),
        ("execution", Environment::Execution),
    ];
}
impl Choice for PolicyKind {
    const OPTIONS: &'static [(&'static str, Self)] = &[
        ("constant", PolicyKind::Constant),
        ("inv", PolicyKind::Inv),
        ("pc", PolicyKind::Pc),
        ("optimal", PolicyKind::Optimal),
    ];
}
impl Choice for RateKind {
    const OPTIONS: &'static [(&'static str, Self)] = &[("inv", RateKind::Inv), ("constant", RateKind::Constant)];
}
impl Choice for Algorithm {
    const OPTIONS: &'static [(&'static str, Self)] = &[
        ("rl", Algorithm::Rl),
        ("saga", Algorithm::Saga),
        ("pass", Algorithm::Pass),
        ("pass_vec", Algorithm::PassVectorial),
    ];
}
impl Choice for PcMode {
    const OPTIONS: &'static [(&'static str, Self)] = &[("halve", PcMode::Halve), ("subtract", PcMode::Subtract)];
}
impl Choice for HlScheme {
    const OPTIONS: &'static [(&'static str, Self)] =
        &[("additive", HlScheme::Additive), ("two_thirds", HlScheme::TwoThirds)];
}
impl Choice for ProxyMode {
    const OPTIONS: &'static [(&'static str, Self)] = &[
        ("squared_mean", ProxyMode::SquaredMean),
        ("mean_of_squares", ProxyMode::MeanOfSquares),
    ];
}
impl Choice for PolicyMode {
    const OPTIONS: &'static [(&'static str, Self)] = &[
        ("explore_softmax", PolicyMode::ExploreSoftmax),
        ("boltzmann", PolicyMode::Boltzmann),
        ("epsilon_uniform", PolicyMode::EpsilonUniform),
    ];
}

macro_rules! display_and_parse {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.choice_name())
            }
        }
    )*};
}
display_and_parse!(Environment, PolicyKind, RateKind);

impl FromStr for Environment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_choice(s).map_err(Error::Config)
    }
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_choice(s).map_err(Error::Config)
    }
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        self.choice_name()
    }
}

impl Environment {
    pub fn name(self) -> &'static str {
        self.choice_name()
    }
}

/// One `(algorithm, policy)` run, optionally with its own `eta`
/// (written `algorithm:policy@eta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub policy: PolicyKind,
    pub eta: Option<f64>,
}

impl RunSpec {
    pub fn new(algorithm: Algorithm, policy: PolicyKind) -> Self {
        Self {
            algorithm,
            policy,
            eta: None,
        }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta: Some(eta), ..self }
    }

    /// Policy column label: `inv`, or `inv@1` when `eta` is overridden.
    pub fn policy_label(&self) -> String {
        match self.eta {
            Some(eta) => format!("{}@{eta}", self.policy.choice_name()),
            None => self.policy.choice_name().to_string(),
        }
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.algorithm.choice_name(), self.policy_label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub environment: Environment,
    pub algorithm: Algorithm,
    pub policy: PolicyKind,
    /// Runs to compare; when non-empty it replaces the pair above.
    pub compare: Vec<RunSpec>,
    pub episodes: u64,
    /// Execution step budget; 0 means `episodes · k_T`.
    pub iterations: u64,
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
    /// Metric cadence (episodes, or steps for execution); 0 picks the default.
    pub cadence: u64,
    /// Give every path the same random stream (determinism checks).
    pub identical_streams: bool,
    pub per_path_rows: bool,
    pub output: String,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            environment: Environment::Drift,
            algorithm: Algorithm::Pass,
            policy: PolicyKind::Pc,
            compare: Vec::new(),
            episodes: 1000,
            iterations: 0,
            paths: 100,
            seed: 0,
            workers: 1,
            cadence: 0,
            identical_streams: false,
            per_path_rows: true,
            output: "out".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub eta: f64,
    pub alpha: f64,
    pub w: usize,
    pub p: f64,
    pub floor: f64,
    pub mode: PcMode,
    pub decrement: f64,
    pub kappa_up: f64,
    pub hl: HlScheme,
    pub saga_m: usize,
    pub proxy_window: usize,
    pub proxy: ProxyMode,
    pub l_init: f64,
    pub b_init: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            alpha: 1.0,
            w: 5,
            p: 0.01,
            floor: 0.01,
            mode: PcMode::Halve,
            decrement: 0.01,
            kappa_up: 2.0,
            hl: HlScheme::Additive,
            saga_m: 5,
            proxy_window: 5,
            proxy: ProxyMode::SquaredMean,
            l_init: 1.0,
            b_init: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub f: Vec<f64>,
    pub sigma: f64,
    pub q_init: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            f: vec![1.0, -1.0, 2.0],
            sigma: 0.5,
            q_init: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlacementConfig {
    pub model: PlacementModel,
    /// Initial `q`; defaults to the spread ψ.
    pub q_init: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionConfig {
    pub model: ExecModel,
    pub action_policy: PolicyMode,
    pub beta_bar: f64,
    pub b_unvisited: f64,
    pub epsilon: f64,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            model: ExecModel::default(),
            action_policy: PolicyMode::ExploreSoftmax,
            beta_bar: 5.0,
            b_unvisited: 1.0,
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsConfig {
    pub switch_prob: f64,
    pub sigma: f64,
    pub q_star: f64,
    pub rate: RateKind,
    pub eta: f64,
    pub gamma: f64,
    pub horizon: usize,
    pub replications: usize,
    pub calibration: usize,
    pub lemma5_instances: usize,
    pub lemma5_n: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            switch_prob: 0.3,
            sigma: 1.0,
            q_star: 1.0,
            rate: RateKind::Inv,
            eta: 1.0,
            gamma: 0.5,
            horizon: 200,
            replications: 20_000,
            calibration: 3,
            lemma5_instances: 100,
            lemma5_n: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub policy: PolicyConfig,
    pub drift: Option<DriftConfig>,
    pub placement: Option<PlacementConfig>,
    pub execution: Option<ExecutionConfig>,
    pub bounds: Option<BoundsConfig>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "experiment",
        &[
            "environment",
            "algorithm",
            "policy",
            "compare",
            "episodes",
            "iterations",
            "paths",
            "seed",
            "workers",
            "cadence",
            "identical_streams",
            "per_path_rows",
            "output",
        ],
    ),
    (
        "policy",
        &[
            "eta",
            "alpha",
            "w",
            "p",
            "floor",
            "mode",
            "decrement",
            "kappa_up",
            "hl",
            "saga_m",
            "proxy_window",
            "proxy",
            "l_init",
            "b_init",
        ],
    ),
    ("drift", &["f", "sigma", "q_init"]),
    (
        "placement",
        &[
            "q_max",
            "opp_max",
            "opp_init",
            "horizon",
            "p_market",
            "p_cancel",
            "p_arrival",
            "p_opp_arrival",
            "p_opp_depletion",
            "spread",
            "wait_cost",
            "move_penalty",
            "q_init",
        ],
    ),
    (
        "execution",
        &[
            "alpha",
            "sigma",
            "kappa",
            "phi",
            "terminal_penalty",
            "horizon",
            "k_t",
            "k_q",
            "q_bar",
            "action_policy",
            "beta_bar",
            "b_unvisited",
            "epsilon",
        ],
    ),
    (
        "bounds",
        &[
            "switch_prob",
            "sigma",
            "q_star",
            "rate",
            "eta",
            "gamma",
            "horizon",
            "replications",
            "calibration",
            "lemma5_instances",
            "lemma5_n",
        ],
    ),
];

type Parsed<T> = std::result::Result<T, String>;

fn num<T: FromStr>(v: &str) -> Parsed<T> {
    v.parse::<T>()
        .map_err(|_| format!("expected a {}, got `{v}`", std::any::type_name::<T>()))
}

fn boolean(v: &str) -> Parsed<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn floats(v: &str) -> Parsed<Vec<f64>> {
    v.split(',').map(|x| num::<f64>(x.trim())).collect()
}

fn run_specs(v: &str) -> Parsed<Vec<RunSpec>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            let item = item.trim();
            let (a, rest) = item
                .split_once(':')
                .ok_or_else(|| format!("expected algorithm:policy[@eta], got `{item}`"))?;
            let (p, eta) = match rest.split_once('@') {
                Some((p, eta)) => (p, Some(num::<f64>(eta.trim())?)),
                None => (rest, None),
            };
            let spec = RunSpec::new(Algorithm::parse_choice(a.trim())?, PolicyKind::parse_choice(p.trim())?);
            Ok(match eta {
                Some(eta) => spec.with_eta(eta),
                None => spec,
            })
        })
        .collect()
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Apply `key = value` to its section; `None` if the key is unknown.
fn assign(cfg: &mut ExperimentConfig, section: &str, key: &str, v: &str) -> Option<Parsed<()>> {
    macro_rules! set {
        ($place:expr, $parse:expr) => {
            Some($parse(v).map(|x| $place = x))
        };
    }
    let e = &mut cfg.experiment;
    let p = &mut cfg.policy;
    match section {
        "experiment" => match key {
            "environment" => set!(e.environment, Environment::parse_choice),
            "algorithm" => set!(e.algorithm, Algorithm::parse_choice),
            "policy" => set!(e.policy, PolicyKind::parse_choice),
            "compare" => set!(e.compare, run_specs),
            "episodes" => set!(e.episodes, num),
            "iterations" => set!(e.iterations, num),
            "paths" => set!(e.paths, num),
            "seed" => set!(e.seed, num),
            "workers" => set!(e.workers, num),
            "cadence" => set!(e.cadence, num),
            "identical_streams" => set!(e.identical_streams, boolean),
            "per_path_rows" => set!(e.per_path_rows, boolean),
            "output" => set!(e.output, |s: &str| Ok::<_, String>(s.to_string())),
            _ => None,
        },
        "policy" => match key {
            "eta" => set!(p.eta, num),
            "alpha" => set!(p.alpha, num),
            "w" => set!(p.w, num),
            "p" => set!(p.p, num),
            "floor" => set!(p.floor, num),
            "mode" => set!(p.mode, PcMode::parse_choice),
            "decrement" => set!(p.decrement, num),
            "kappa_up" => set!(p.kappa_up, num),
            "hl" => set!(p.hl, HlScheme::parse_choice),
            "saga_m" => set!(p.saga_m, num),
            "proxy_window" => set!(p.proxy_window, num),
            "proxy" => set!(p.proxy, ProxyMode::parse_choice),
            "l_init" => set!(p.l_init, num),
            "b_init" => set!(p.b_init, num),
            _ => None,
        },
        "drift" => {
            let d = cfg.drift.get_or_insert_with(DriftConfig::default);
            match key {
                "f" => set!(d.f, floats),
                "sigma" => set!(d.sigma, num),
                "q_init" => set!(d.q_init, num),
                _ => None,
            }
        }
        "placement" => {
            let pc = cfg.placement.get_or_insert_with(PlacementConfig::default);
            let m = &mut pc.model;
            match key {
                "q_max" => set!(m.q_max, num),
                "opp_max" => set!(m.opp_max, num),
                "opp_init" => set!(m.opp_init, num),
                "horizon" => set!(m.horizon, num),
                "p_market" => set!(m.p_market, num),
                "p_cancel" => set!(m.p_cancel, num),
                "p_arrival" => set!(m.p_arrival, num),
                "p_opp_arrival" => set!(m.p_opp_arrival, num),
                "p_opp_depletion" => set!(m.p_opp_depletion, num),
                "spread" => set!(m.spread_psi, num),
                "wait_cost" => set!(m.wait_cost_c, num),
                "move_penalty" => set!(m.move_penalty, num),
                "q_init" => set!(pc.q_init, |s: &str| num::<f64>(s).map(Some)),
                _ => None,
            }
        }
        "execution" => {
            let x = cfg.execution.get_or_insert_with(ExecutionConfig::default);
            let m = &mut x.model;
            match key {
                "alpha" => set!(m.alpha, num),
                "sigma" => set!(m.sigma, num),
                "kappa" => set!(m.kappa, num),
                "phi" => set!(m.phi, num),
                "terminal_penalty" => set!(m.a_terminal, num),
                "horizon" => set!(m.horizon, num),
                "k_t" => set!(m.k_t, num),
                "k_q" => set!(m.k_q, num),
                "q_bar" => set!(m.q_bar, num),
                "action_policy" => set!(x.action_policy, PolicyMode::parse_choice),
                "beta_bar" => set!(x.beta_bar, num),
                "b_unvisited" => set!(x.b_unvisited, num),
                "epsilon" => set!(x.epsilon, num),
                _ => None,
            }
        }
        "bounds" => {
            let b = cfg.bounds.get_or_insert_with(BoundsConfig::default);
            match key {
                "switch_prob" => set!(b.switch_prob, num),
                "sigma" => set!(b.sigma, num),
                "q_star" => set!(b.q_star, num),
                "rate" => set!(b.rate, RateKind::parse_choice),
                "eta" => set!(b.eta, num),
                "gamma" => set!(b.gamma, num),
                "horizon" => set!(b.horizon, num),
                "replications" => set!(b.replications, num),
                "calibration" => set!(b.calibration, num),
                "lemma5_instances" => set!(b.lemma5_instances, num),
                "lemma5_n" => set!(b.lemma5_n, num),
                _ => None,
            }
        }
        _ => None,
    }
}

fn nearest<'a>(key: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(key, c), *c))
        .min()
        .filter(|(d, c)| *d <= c.len().max(key.len()) / 2 + 1)
        .map(|(_, c)| c)
}

/// Parse and validate; on failure returns every issue found.
pub fn parse_config_detailed(text: &str) -> std::result::Result<ExperimentConfig, Vec<ConfigIssue>> {
    let mut cfg = ExperimentConfig::default();
    let mut issues = Vec::new();
    let mut lines: HashMap<(String, String), usize> = HashMap::new();
    let mut seen_sections: HashMap<String, usize> = HashMap::new();
    let mut section: Option<String> = None;
    let issue = |line: usize, message: String| ConfigIssue {
        line: Some(line),
        message,
    };

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']').map(str::trim) else {
                issues.push(issue(n, format!("malformed section header `{line}`")));
                continue;
            };
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                let names: Vec<&str> = SECTIONS.iter().map(|(s, _)| *s).collect();
                let hint = nearest(name, &names)
                    .map(|s| format!(" (did you mean [{s}]?)"))
                    .unwrap_or_default();
                issues.push(issue(n, format!("unknown section [{name}]{hint}")));
                section = None;
                continue;
            }
            if seen_sections.insert(name.to_string(), n).is_some() {
                issues.push(issue(n, format!("duplicate section [{name}]")));
            }
            // an empty block still counts as present
            assign(&mut cfg, name, "", "");
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(issue(n, format!("expected `key = value`, got `{line}`")));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.as_deref() else {
            issues.push(issue(n, format!("key `{key}` outside of any section")));
            continue;
        };
        if lines.insert((sec.to_string(), key.to_string()), n).is_some() {
            issues.push(issue(n, format!("duplicate key `{key}` in [{sec}]")));
            continue;
        }
        match assign(&mut cfg, sec, key, value) {
            Some(Ok(())) => {}
            Some(Err(msg)) => issues.push(issue(n, format!("[{sec}] {key}: {msg}"))),
            None => {
                let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
                let hint = nearest(key, keys)
                    .map(|k| format!("; did you mean `{k}`?"))
                    .unwrap_or_default();
                issues.push(issue(n, format!("unknown key `{key}` in [{sec}]{hint}")));
            }
        }
    }

    if !seen_sections.contains_key("experiment") {
        issues.push(ConfigIssue {
            line: None,
            message: "missing block [experiment]".to_string(),
        });
    } else if !lines.contains_key(&("experiment".to_string(), "environment".to_string())) {
        issues.push(ConfigIssue {
            line: seen_sections.get("experiment").copied(),
            message: "[experiment] needs `environment`".to_string(),
        });
    }
    if issues.is_empty() {
        let env_block = cfg.experiment.environment.name();
        if !seen_sections.contains_key(env_block) {
            issues.push(ConfigIssue {
                line: None,
                message: format!("missing block [{env_block}] for environment `{env_block}`"),
            });
        }
    }
    if issues.is_empty() {
        let at = |sec: &str, key: &str| lines.get(&(sec.to_string(), key.to_string())).copied();
        if let Err(e) = finalize(&mut cfg) {
            let (sec, key) = e.0;
            issues.push(ConfigIssue {
                line: at(sec, key).or_else(|| seen_sections.get(sec).copied()),
                message: e.1,
            });
        }
    }
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(issues)
    }
}

type Invalid = ((&'static str, &'static str), String);

/// Resolve defaults that depend on the environment, then validate.
fn finalize(cfg: &mut ExperimentConfig) -> std::result::Result<(), Invalid> {
    let bad = |sec, key, msg: String| Err(((sec, key), msg));
    let e = &mut cfg.experiment;
    if e.paths == 0 {
        return bad("experiment", "paths", "paths must be >= 1".into());
    }
    if e.workers == 0 {
        return bad("experiment", "workers", "workers must be >= 1".into());
    }
    if e.episodes == 0 {
        return bad("experiment", "episodes", "episodes must be >= 1".into());
    }
    let total = match e.environment {
        Environment::Execution => {
            let k_t = cfg.execution.as_ref().map_or(10, |x| x.model.k_t) as u64;
            if e.iterations == 0 {
                e.iterations = e.episodes * k_t;
            }
            if e.cadence == 0 {
                e.cadence = 100.min(e.iterations);
            }
            e.iterations
        }
        _ => {
            if e.cadence == 0 {
                e.cadence = 1;
            }
            e.episodes
        }
    };
    if total % e.cadence != 0 {
        return bad(
            "experiment",
            "cadence",
            format!("cadence {} does not divide the run length {total}", e.cadence),
        );
    }
    let runs = if e.compare.is_empty() {
        vec![RunSpec::new(e.algorithm, e.policy)]
    } else {
        e.compare.clone()
    };
    if runs.iter().any(|r| r.eta.is_some_and(|eta| !(eta > 0.0))) {
        return bad("experiment", "compare", "per-run eta must be > 0".into());
    }
    if e.environment != Environment::Drift && runs.iter().any(|r| r.algorithm == Algorithm::PassVectorial) {
        return bad(
            "experiment",
            "algorithm",
            "pass_vec needs full residual vectors, available only for the drift environment".into(),
        );
    }
    let p = &cfg.policy;
    if !(p.eta > 0.0) {
        return bad("policy", "eta", "eta must be > 0".into());
    }
    if !(p.alpha > 0.0 && p.alpha <= 1.0) {
        return bad("policy", "alpha", "alpha must lie in (0, 1]".into());
    }
    if p.w == 0 {
        return bad("policy", "w", "w must be >= 1".into());
    }
    if !(p.p > 0.0 && p.p < 1.0) {
        return bad("policy", "p", "p must lie in (0, 1)".into());
    }
    if !(p.floor > 0.0) {
        return bad("policy", "floor", "floor must be > 0".into());
    }
    if !(p.decrement > 0.0) {
        return bad("policy", "decrement", "decrement must be > 0".into());
    }
    if !(p.kappa_up >= 1.0) {
        return bad("policy", "kappa_up", "kappa_up must be >= 1".into());
    }
    if p.saga_m == 0 {
        return bad("policy", "saga_m", "saga_m must be >= 1".into());
    }
    if p.proxy_window == 0 {
        return bad("policy", "proxy_window", "proxy_window must be >= 1".into());
    }
    if !(p.l_init > 0.0 && p.l_init <= p.b_init) {
        return bad("policy", "l_init", "need 0 < l_init <= b_init".into());
    }
    if let Some(d) = &cfg.drift {
        if d.f.is_empty() {
            return bad("drift", "f", "f needs at least one value".into());
        }
        if !(d.sigma >= 0.0) {
            return bad("drift", "sigma", "sigma must be >= 0".into());
        }
    }
    if let Some(pl) = &cfg.placement {
        if let Err(err) = pl.model.validate() {
            return bad("placement", "q_max", err.to_string());
        }
    }
    if let Some(x) = &cfg.execution {
        if let Err(err) = x.model.validate() {
            return bad("execution", "alpha", err.to_string());
        }
        if !(x.b_unvisited > 0.0) {
            return bad("execution", "b_unvisited", "b_unvisited must be > 0".into());
        }
        if !(0.0..=1.0).contains(&x.epsilon) {
            return bad("execution", "epsilon", "epsilon must lie in [0, 1]".into());
        }
    }
    if let Some(b) = &cfg.bounds {
        if !(b.switch_prob > 0.0 && b.switch_prob <= 1.0) {
            return bad("bounds", "switch_prob", "switch_prob must lie in (0, 1]".into());
        }
        if b.calibration < 3 || b.calibration > b.horizon {
            return bad("bounds", "calibration", "calibration must lie in 3..=horizon".into());
        }
        if b.replications == 0 || b.lemma5_n == 0 {
            return bad("bounds", "replications", "counts must be >= 1".into());
        }
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_detailed(text)
        .map_err(|issues| Error::Config(issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")))
}

impl FromStr for ExperimentConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_config(s)
    }
}

impl ExperimentConfig {
    /// Defaults for `env` with its parameter block present.
    pub fn default_for(env: Environment) -> Self {
        let mut cfg = Self::default();
        cfg.experiment.environment = env;
        match env {
            Environment::Drift => cfg.drift = Some(DriftConfig::default()),
            Environment::Placement => cfg.placement = Some(PlacementConfig::default()),
            Environment::Execution => cfg.execution = Some(ExecutionConfig::default()),
        }
        finalize(&mut cfg).expect("defaults are valid");
        cfg
    }

    /// The `(algorithm, policy)` pairs this config runs.
    pub fn runs(&self) -> Vec<RunSpec> {
        if self.experiment.compare.is_empty() {
            vec![RunSpec::new(self.experiment.algorithm, self.experiment.policy)]
        } else {
            self.experiment.compare.clone()
        }
    }

    /// Re-run validation after programmatic edits (e.g. CLI overrides).
    pub fn revalidate(&mut self) -> Result<()> {
        finalize(self).map_err(|((sec, key), msg)| Error::Config(format!("[{sec}] {key}: {msg}")))
    }

    /// Canonical text form; `parse_config(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let e = &self.experiment;
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "environment = {}", e.environment.choice_name());
        let _ = writeln!(s, "algorithm = {}", e.algorithm.choice_name());
        let _ = writeln!(s, "policy = {}", e.policy.choice_name());
        let compare: Vec<String> = e.compare.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "compare = {}", compare.join(", "));
        let _ = writeln!(s, "episodes = {}", e.episodes);
        let _ = writeln!(s, "iterations = {}", e.iterations);
        let _ = writeln!(s, "paths = {}", e.paths);
        let _ = writeln!(s, "seed = {}", e.seed);
        let _ = writeln!(s, "workers = {}", e.workers);
        let _ = writeln!(s, "cadence = {}", e.cadence);
        let _ = writeln!(s, "identical_streams = {}", e.identical_streams);
        let _ = writeln!(s, "per_path_rows = {}", e.per_path_rows);
        let _ = writeln!(s, "output = {}", e.output);
        let p = &self.policy;
        let _ = writeln!(s, "\n[policy]");
        let _ = writeln!(s, "eta = {}", p.eta);
        let _ = writeln!(s, "alpha = {}", p.alpha);
        let _ = writeln!(s, "w = {}", p.w);
        let _ = writeln!(s, "p = {}", p.p);
        let _ = writeln!(s, "floor = {}", p.floor);
        let _ = writeln!(s, "mode = {}", p.mode.choice_name());
        let _ = writeln!(s, "decrement = {}", p.decrement);
        let _ = writeln!(s, "kappa_up = {}", p.kappa_up);
        let _ = writeln!(s, "hl = {}", p.hl.choice_name());
        let _ = writeln!(s, "saga_m = {}", p.saga_m);
        let _ = writeln!(s, "proxy_window = {}", p.proxy_window);
        let _ = writeln!(s, "proxy = {}", p.proxy.choice_name());
        let _ = writeln!(s, "l_init = {}", p.l_init);
        let _ = writeln!(s, "b_init = {}", p.b_init);
        if let Some(d) = &self.drift {
            let _ = writeln!(s, "\n[drift]");
            let _ = writeln!(s, "f = {}", join_floats(&d.f));
            let _ = writeln!(s, "sigma = {}", d.sigma);
            let _ = writeln!(s, "q_init = {}", d.q_init);
        }
        if let Some(pl) = &self.placement {
            let m = &pl.model;
            let _ = writeln!(s, "\n[placement]");
            let _ = writeln!(s, "q_max = {}", m.q_max);
            let _ = writeln!(s, "opp_max = {}", m.opp_max);
            let _ = writeln!(s, "opp_init = {}", m.opp_init);
            let _ = writeln!(s, "horizon = {}", m.horizon);
            let _ = writeln!(s, "p_market = {}", m.p_market);
            let _ = writeln!(s, "p_cancel = {}", m.p_cancel);
            let _ = writeln!(s, "p_arrival = {}", m.p_arrival);
            let _ = writeln!(s, "p_opp_arrival = {}", m.p_opp_arrival);
            let _ = writeln!(s, "p_opp_depletion = {}", m.p_opp_depletion);
            let _ = writeln!(s, "spread = {}", m.spread_psi);
            let _ = writeln!(s, "wait_cost = {}", m.wait_cost_c);
            let _ = writeln!(s, "move_penalty = {}", m.move_penalty);
            if let Some(q) = pl.q_init {
                let _ = writeln!(s, "q_init = {q}");
            }
        }
        if let Some(x) = &self.execution {
            let m = &x.model;
            let _ = writeln!(s, "\n[execution]");
            let _ = writeln!(s, "alpha = {}", m.alpha);
            let _ = writeln!(s, "sigma = {}", m.sigma);
            let _ = writeln!(s, "kappa = {}", m.kappa);
            let _ = writeln!(s, "phi = {}", m.phi);
            let _ = writeln!(s, "terminal_penalty = {}", m.a_terminal);
            let _ = writeln!(s, "horizon = {}", m.horizon);
            let _ = writeln!(s, "k_t = {}", m.k_t);
            let _ = writeln!(s, "k_q = {}", m.k_q);
            let _ = writeln!(s, "q_bar = {}", m.q_bar);
            let _ = writeln!(s, "action_policy = {}", x.action_policy.choice_name());
            let _ = writeln!(s, "beta_bar = {}", x.beta_bar);
            let _ = writeln!(s, "b_unvisited = {}", x.b_unvisited);
            let _ = writeln!(s, "epsilon = {}", x.epsilon);
        }
        if let Some(b) = &self.bounds {
            let _ = writeln!(s, "\n[bounds]");
            let _ = writeln!(s, "switch_prob = {}", b.switch_prob);
            let _ = writeln!(s, "sigma = {}", b.sigma);
            let _ = writeln!(s, "q_star = {}", b.q_star);
            let _ = writeln!(s, "rate = {}", b.rate.choice_name());
            let _ = writeln!(s, "eta = {}", b.eta);
            let _ = writeln!(s, "gamma = {}", b.gamma);
            let _ = writeln!(s, "horizon = {}", b.horizon);
            let _ = writeln!(s, "replications = {}", b.replications);
            let _ = writeln!(s, "calibration = {}", b.calibration);
            let _ = writeln!(s, "lemma5_instances = {}", b.lemma5_instances);
            let _ = writeln!(s, "lemma5_n = {}", b.lemma5_n);
        }
        s
    }
}
