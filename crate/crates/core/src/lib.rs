//! Tabular stochastic approximation with sign-adaptive learning rates.
//!
//! The crate is organised bottom-up:
//!
//! - [`engine`]: the iterate table `q`, visit bookkeeping and the single
//!   coordinate update `q(z) ← q(z) − γ·m` shared by every algorithm.
//! - [`stepsize`]: base schedules (constant, `η/n^α`, piecewise-constant,
//!   optimal), the PASS `h`/`l` adaptors and the `(L, B)` estimates.
//! - [`algorithms`]: RL, SAGA, PASS and vectorial PASS step rules plus the
//!   [`Learner`](algorithms::Learner) that owns all per-path state.
//! - [`env`]: drift estimation, limit-order placement and optimal execution.
//! - [`reference`]: exact solutions for the three environments.
//! - [`analysis`]: rate fitting, the renewal-type bound sequences and the
//!   one-step contraction and dominance checks.
//! - [`harness`]: config parsing, the Monte-Carlo runner and output writers.
//!
//! Residual convention: `m(q, x, z) = q(z) − H(q, x, z)`, so a step
//! `q ← q − γ·m` moves `q` towards the sampled target `H`.

// `!(x >= 0.0)` is how parameter checks reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod analysis;
pub mod engine;
pub mod env;
pub mod error;
pub mod harness;
pub mod reference;
pub mod stepsize;

pub use algorithms::{Algorithm, Branch, Learner, SagaMemory, StepReport};
pub use engine::{IterateTable, ResidualOracle, StateIndex, Transition};
pub use error::{Error, Result};
pub use harness::config::ExperimentConfig;
pub use harness::runner::{run_experiment, ResultFrame, ResultRow, SeedTag};
pub use reference::ReferenceTable;
pub use stepsize::{BaseSchedule, HlScheme, LbEstimate, PassState, PcMode, PcPolicyState, ScheduleKind};
