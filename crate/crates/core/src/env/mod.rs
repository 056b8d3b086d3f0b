//! Benchmark problems: residual oracles plus episode drivers.

pub mod drift;
pub mod execution;
pub mod placement;
pub mod policy;

pub use drift::{drift_episode, DriftModel};
pub use execution::{exec_episode, exec_residual, ExecModel, ExecSession};
pub use placement::{lob_transition, placement_episode, placement_residual, LobAction, LobState, PlacementModel};
pub use policy::{sample_action, softmax, ActionPolicyState, PolicyMode};

/// Summary of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeTrace {
    /// Learner updates performed during the episode.
    pub steps: u64,
    /// Norm of the stored residuals handed to the outer policy.
    pub error_norm: f64,
}
