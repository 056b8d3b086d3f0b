//! Error-curve analytics and the bound machinery.
//!
//! - [`curves`]: error curves and log-log rate fitting.
//! - [`sequences`]: the `v_n = ε_n + μ_n Σ a_{n−j} b_j v_j` recursion, its
//!   closed representation, convolution powers and the triple-sum bound.
//! - [`testbed`]: a two-state Markov chain whose simulated error the bound is
//!   checked against.
//! - [`contraction`]: one-step `E[e'] ≤ α e + M` checks per algorithm.
//! - [`dominance`]: the greedy step size against arbitrary adapted ones
//!   under the scalar error model.
//! - [`jensen`]: the `E[sup M] − sup E[M]` gap of the execution problem.

pub mod contraction;
pub mod curves;
pub mod dominance;
pub mod jensen;
pub mod sequences;
pub mod testbed;

pub use curves::{fit_rate, ErrorCurve, RateFit};
pub use sequences::{convolution_powers, lemma5_recursion, renewal_series, theorem1_bound, BoundSequences};
