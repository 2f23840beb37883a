//! Monte Carlo rollouts of a Markov strategy.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64(seed)`; rollout
//! `k` runs on stream `k` of that key, so every rollout is reproducible on its
//! own and the result does not depend on scheduling. A uniform draw is
//! `(next_u64 >> 11) * 2^-53`, and categorical draws invert the CDF in label
//! index order. Within a rollout the draw order is: `X_1`, then per round `Y_i`
//! followed by `X_{i+1}`.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::MarkovStrategy;
use crate::model::{Distribution, Problem};

/// Default cap on retained trajectories.
pub const DEFAULT_TRAJECTORY_CAP: usize = 10_000;

/// The random stream used by rollout `index` of a run seeded with `seed`.
pub fn rollout_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `[0, 1)` with 53 bits of precision.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF categorical draw.
pub fn sample_categorical(dist: &Distribution, rng: &mut impl RngCore) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in dist.probs().iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding left the cumulative sum just below one.
    last_positive
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Rollout index; together with the seed it identifies the random stream.
    pub id: u64,
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub yhats: Vec<usize>,
    /// Realized accumulated loss.
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub rollouts: usize,
    pub seed: u64,
    /// Retain at most this many trajectories (the lowest rollout indices).
    pub keep_trajectories: Option<usize>,
}

impl SimOptions {
    pub fn new(rollouts: usize, seed: u64) -> Self {
        SimOptions {
            rollouts,
            seed,
            keep_trajectories: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub mean: f64,
    /// Unbiased sample variance of the per-rollout loss; zero for a single rollout.
    pub var: f64,
    pub rollouts: usize,
    pub seed: u64,
    pub trajectories: Vec<Trajectory>,
}

impl SimOutput {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.var / self.rollouts as f64).sqrt()
    }
}

fn rollout(problem: &Problem, strategy: &MarkovStrategy, seed: u64, id: u64) -> Trajectory {
    let n = problem.n();
    let mut rng = rollout_rng(seed, id);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut yhats = Vec::with_capacity(n);
    let mut loss = 0.0;
    let mut x = sample_categorical(problem.init(), &mut rng);
    for round in 1..=n {
        let y = sample_categorical(problem.quantity(round).row(x), &mut rng);
        let yhat = strategy.action(round, x);
        loss += problem.loss().get(x, y, yhat);
        xs.push(x);
        ys.push(y);
        yhats.push(yhat);
        if round < n {
            x = sample_categorical(problem.transition(round + 1).row(x, yhat), &mut rng);
        }
    }
    Trajectory {
        id,
        xs,
        ys,
        yhats,
        loss,
    }
}

pub fn simulate(
    problem: &Problem,
    strategy: &MarkovStrategy,
    options: SimOptions,
) -> Result<SimOutput> {
    strategy.check_shape(problem)?;
    if options.rollouts == 0 {
        return Err(Error::InvalidParams("rollouts must be at least 1".into()));
    }
    let keep = options.keep_trajectories.unwrap_or(0).min(options.rollouts);
    let run = |id: usize| rollout(problem, strategy, options.seed, id as u64);

    #[cfg(feature = "parallel")]
    let trajectories: Vec<Trajectory> = {
        use rayon::prelude::*;
        (0..options.rollouts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trajectories: Vec<Trajectory> = (0..options.rollouts).map(run).collect();

    let count = options.rollouts as f64;
    let mean = trajectories.iter().map(|t| t.loss).sum::<f64>() / count;
    let var = if options.rollouts > 1 {
        trajectories
            .iter()
            .map(|t| (t.loss - mean).powi(2))
            .sum::<f64>()
            / (count - 1.0)
    } else {
        0.0
    };
    let mut trajectories = trajectories;
    trajectories.truncate(keep);
    Ok(SimOutput {
        mean,
        var,
        rollouts: options.rollouts,
        seed: options.seed,
        trajectories,
    })
}
