//! Drift estimation: `S_{t+1} − S_t = f_{t+1} + σW`, learn `q(t) = f_{t+1}`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::EpisodeTrace;
use crate::algorithms::{Algorithm, Learner};
use crate::engine::{IterateTable, ResidualOracle, StateIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DriftModel {
    /// True drifts `f_1..f_{n_max}`; state `t` estimates `f[t]`.
    pub f: Vec<f64>,
    pub noise_sigma: f64,
}

impl DriftModel {
    pub fn new(f: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::param("f", "need at least one drift value"));
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("f", "drifts must be finite"));
        }
        if !(noise_sigma >= 0.0) {
            return Err(Error::param("sigma", format!("must be >= 0, got {noise_sigma}")));
        }
        Ok(Self { f, noise_sigma })
    }

    pub fn n_max(&self) -> usize {
        self.f.len()
    }

    pub fn sample_increment<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> f64 {
        let w: f64 = rng.sample(StandardNormal);
        self.f[t] + self.noise_sigma * w
    }
}

impl ResidualOracle for DriftModel {
    fn residual<R: Rng + ?Sized>(&mut self, table: &IterateTable, z: StateIndex, rng: &mut R) -> f64 {
        table.value(z) - self.sample_increment(z.0, rng)
    }
}

/// One pass over `t = 0..n_max−1`. Vectorial PASS sees the whole episode as
/// a single full-vector observation.
pub fn drift_episode<R: Rng + ?Sized>(
    model: &mut DriftModel,
    learner: &mut Learner,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    let n = model.n_max();
    if learner.table().len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: learner.table().len(),
        });
    }
    let steps = if learner.algorithm() == Algorithm::PassVectorial {
        let residuals: Vec<f64> = (0..n)
            .map(|t| model.residual(learner.table(), StateIndex(t), rng))
            .collect();
        learner.observe_vector(&residuals)?;
        1
    } else {
        for t in 0..n {
            let z = StateIndex(t);
            let m = model.residual(learner.table(), z, rng);
            learner.observe(z, m, rng)?;
        }
        n as u64
    };
    Ok(EpisodeTrace {
        steps,
        error_norm: learner.end_episode(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepsize::{BaseSchedule, HlScheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_unit_rate_identifies_in_one_episode() {
        let mut model = DriftModel::new(vec![1.0, -1.0, 2.0], 0.0).unwrap();
        let schedule = BaseSchedule::constant(3, 1.0).unwrap();
        let mut learner = Learner::new(
            Algorithm::Rl,
            IterateTable::new(3, 0.0),
            schedule,
            HlScheme::Additive,
            5,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = drift_episode(&mut model, &mut learner, &mut rng).unwrap();
        assert_eq!(trace.steps, 3);
        assert_eq!(learner.table().values(), &[1.0, -1.0, 2.0]);
    }
}
