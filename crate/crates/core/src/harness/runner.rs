//! Monte-Carlo runner: independent paths in parallel, metrics at a fixed
//! cadence, aggregated into a long-format frame.
//!
//! Path `k` draws from `ChaCha8(seed)` on stream `k`, so results do not
//! depend on the worker count or scheduling order.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Environment, ExecutionConfig, ExperimentConfig, PolicyKind, RunSpec};
use crate::algorithms::{Algorithm, Learner};
use crate::engine::IterateTable;
use crate::env::{drift_episode, placement_episode, ActionPolicyState, DriftModel, ExecSession, PlacementModel};
use crate::error::{Error, Result};
use crate::reference::{
    l2_gap, placement_control_agreement, solve_drift_reference, solve_execution_reference, solve_placement_reference,
    ReferenceTable,
};
use crate::stepsize::{BaseSchedule, LbEstimate, PcPolicyState};

/// Which path a row belongs to; aggregates are tagged `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeedTag {
    Path(u64),
    All,
}

impl fmt::Display for SeedTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedTag::Path(k) => write!(f, "{k}"),
            SeedTag::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub step: u64,
    pub metric: String,
    pub value: f64,
    pub algo: String,
    pub policy: String,
    pub seed: SeedTag,
}

/// Long-format results plus any path-level diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultFrame {
    pub rows: Vec<ResultRow>,
    pub diagnostics: Vec<String>,
}

impl ResultFrame {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    /// Canonical order: `(algo, policy, seed, step, metric)`.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.algo, &a.policy, a.seed, a.step, &a.metric).cmp(&(&b.algo, &b.policy, b.seed, b.step, &b.metric))
        });
    }

    /// `(step, value)` points of one series, in step order.
    pub fn series(&self, algo: &str, policy: &str, metric: &str, seed: SeedTag) -> Vec<(u64, f64)> {
        let mut pts: Vec<(u64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.algo == algo && r.policy == policy && r.metric == metric && r.seed == seed)
            .map(|r| (r.step, r.value))
            .collect();
        pts.sort_by_key(|p| p.0);
        pts
    }

    /// Distinct `(algo, policy)` groups in canonical order.
    pub fn groups(&self) -> Vec<(String, String)> {
        let mut g: Vec<(String, String)> = self.rows.iter().map(|r| (r.algo.clone(), r.policy.clone())).collect();
        g.sort();
        g.dedup();
        g
    }
}

/// Final iterate of path 0 for one `(algorithm, policy)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalTable {
    pub algo: String,
    pub policy: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub frame: ResultFrame,
    pub reference: ReferenceTable,
    pub final_tables: Vec<FinalTable>,
}

/// `ChaCha8(seed)` positioned on stream `path`.
pub fn path_stream(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Learner for one path of `run`.
pub fn build_learner(cfg: &ExperimentConfig, run: RunSpec, table: IterateTable) -> Result<Learner> {
    let mut p = cfg.policy.clone();
    if let Some(eta) = run.eta {
        p.eta = eta;
    }
    let n = table.len();
    let schedule = match run.policy {
        PolicyKind::Constant => BaseSchedule::constant(n, p.eta)?,
        PolicyKind::Inv => BaseSchedule::inverse_power(n, p.eta, p.alpha)?,
        PolicyKind::Pc => {
            let mut pc = PcPolicyState::new(p.w, p.p, p.floor, p.mode)?;
            pc.decrement = p.decrement;
            BaseSchedule::piecewise_constant(n, p.eta, pc)?
        }
        PolicyKind::Optimal => {
            let mut lb = LbEstimate::new(n, p.l_init, p.b_init, p.kappa_up, p.proxy_window)?;
            lb.proxy = p.proxy;
            BaseSchedule::optimal(n, p.eta, lb, p.w, p.floor)?
        }
    };
    Learner::new(run.algorithm, table, schedule, p.hl, p.saga_m)
}

enum Problem {
    Drift(DriftModel, f64),
    Placement(PlacementModel, f64),
    Execution(ExecutionConfig),
}

impl Problem {
    fn from_config(cfg: &ExperimentConfig) -> Result<(Self, ReferenceTable)> {
        let missing = |b: &str| Error::Config(format!("missing block [{b}]"));
        Ok(match cfg.experiment.environment {
            Environment::Drift => {
                let d = cfg.drift.as_ref().ok_or_else(|| missing("drift"))?;
                let model = DriftModel::new(d.f.clone(), d.sigma)?;
                let reference = solve_drift_reference(&model);
                (Problem::Drift(model, d.q_init), reference)
            }
            Environment::Placement => {
                let p = cfg.placement.as_ref().ok_or_else(|| missing("placement"))?;
                let reference = solve_placement_reference(&p.model)?;
                let init = p.q_init.unwrap_or(p.model.spread_psi);
                (Problem::Placement(p.model.clone(), init), reference)
            }
            Environment::Execution => {
                let x = cfg.execution.as_ref().ok_or_else(|| missing("execution"))?;
                let reference = solve_execution_reference(&x.model)?;
                (Problem::Execution(x.clone()), reference)
            }
        })
    }

    fn initial_table(&self) -> IterateTable {
        match self {
            Problem::Drift(m, init) => IterateTable::new(m.n_max(), *init),
            Problem::Placement(m, init) => IterateTable::new(m.n_q(), *init),
            Problem::Execution(x) => x.model.initial_table(),
        }
    }
}

struct PathResult {
    /// `(step, [(metric, value)])` at every cadence point reached.
    points: Vec<(u64, Vec<(&'static str, f64)>)>,
    abort: Option<(u64, String)>,
    final_values: Vec<f64>,
}

fn metrics(problem: &Problem, table: &IterateTable, reference: &ReferenceTable) -> Result<Vec<(&'static str, f64)>> {
    let gap = l2_gap(table, reference)?;
    let mut out = vec![("l2_error", gap.sqrt()), ("l2_gap", gap)];
    if let Problem::Placement(m, _) = problem {
        out.insert(
            0,
            (
                "control_agreement",
                placement_control_agreement(m, table.values(), reference)?,
            ),
        );
    }
    if let Some((name, v)) = out.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: name,
            step: 0,
            value: *v,
        });
    }
    Ok(out)
}

fn run_path(
    cfg: &ExperimentConfig,
    problem: &Problem,
    reference: &ReferenceTable,
    run: RunSpec,
    path: u64,
) -> PathResult {
    let e = &cfg.experiment;
    let stream = if e.identical_streams { 0 } else { path };
    let mut rng = path_stream(e.seed, stream);
    let mut result = PathResult {
        points: Vec::new(),
        abort: None,
        final_values: Vec::new(),
    };
    let mut learner = match build_learner(cfg, run, problem.initial_table()) {
        Ok(l) => l,
        Err(err) => {
            result.abort = Some((0, err.to_string()));
            return result;
        }
    };
    let mut drift = match problem {
        Problem::Drift(m, _) => Some(m.clone()),
        _ => None,
    };
    let mut session = match problem {
        Problem::Execution(x) => {
            match ActionPolicyState::new(
                x.model.n_states(),
                x.action_policy,
                x.beta_bar,
                x.b_unvisited,
                x.epsilon,
            ) {
                Ok(p) => Some(ExecSession::new(&x.model, p)),
                Err(err) => {
                    result.abort = Some((0, err.to_string()));
                    return result;
                }
            }
        }
        _ => None,
    };
    let total = match problem {
        Problem::Execution(_) => e.iterations,
        _ => e.episodes,
    };
    for step in 1..=total {
        let outcome = match problem {
            Problem::Drift(..) => {
                drift_episode(drift.as_mut().expect("drift model"), &mut learner, &mut rng).map(|_| ())
            }
            Problem::Placement(m, _) => placement_episode(m, &mut learner, &mut rng).map(|_| ()),
            Problem::Execution(x) => session
                .as_mut()
                .expect("execution session")
                .step(&x.model, &mut learner, &mut rng)
                .map(|_| ()),
        };
        let outcome = outcome.and_then(|()| {
            if step % e.cadence == 0 {
                let m = metrics(problem, learner.table(), reference)?;
                result.points.push((step, m));
            }
            Ok(())
        });
        if let Err(err) = outcome {
            result.abort = Some((step, err.to_string()));
            break;
        }
    }
    result.final_values = learner.table().values().to_vec();
    result
}

fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run every configured `(algorithm, policy)` over all paths.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let e = &cfg.experiment;
    if e.paths == 0 || e.workers == 0 || e.cadence == 0 {
        return Err(Error::Config("paths, workers and cadence must be positive".into()));
    }
    let (problem, reference) = Problem::from_config(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(e.workers)
        .build()
        .map_err(|err| Error::param("workers", err.to_string()))?;

    let mut frame = ResultFrame::default();
    let mut final_tables = Vec::new();
    for run in cfg.runs() {
        if run.algorithm == Algorithm::PassVectorial && !matches!(problem, Problem::Drift(..)) {
            return Err(Error::param(
                "algorithm",
                "pass_vec is only available for the drift environment",
            ));
        }
        let paths: Vec<PathResult> = pool.install(|| {
            (0..e.paths as u64)
                .into_par_iter()
                .map(|k| run_path(cfg, &problem, &reference, run, k))
                .collect()
        });
        let (algo, pol) = (run.algorithm.name().to_string(), run.policy_label());
        let row = |step, metric: &str, value, seed| ResultRow {
            step,
            metric: metric.to_string(),
            value,
            algo: algo.clone(),
            policy: pol.clone(),
            seed,
        };

        // aggregate over the paths that reached each point
        let mut by_point: BTreeMap<(u64, &'static str), Vec<f64>> = BTreeMap::new();
        for (k, p) in paths.iter().enumerate() {
            for (step, values) in &p.points {
                for (metric, v) in values {
                    if e.per_path_rows {
                        frame.push(row(*step, metric, *v, SeedTag::Path(k as u64)));
                    }
                    by_point.entry((*step, metric)).or_default().push(*v);
                }
            }
            if let Some((step, msg)) = &p.abort {
                frame.push(row(*step, "aborted", *step as f64, SeedTag::Path(k as u64)));
                frame
                    .diagnostics
                    .push(format!("{algo}/{pol} path {k} aborted at step {step}: {msg}"));
            }
        }
        for ((step, metric), xs) in &by_point {
            let (mean, se) = mean_stderr(xs);
            frame.push(row(*step, &format!("{metric}_mean"), mean, SeedTag::All));
            frame.push(row(*step, &format!("{metric}_stderr"), se, SeedTag::All));
        }
        if let Some(p0) = paths.first() {
            final_tables.push(FinalTable {
                algo: algo.clone(),
                policy: pol.clone(),
                values: p0.final_values.clone(),
            });
        }
    }
    frame.sort();
    Ok(ExperimentOutput {
        frame,
        reference,
        final_tables,
    })
}
