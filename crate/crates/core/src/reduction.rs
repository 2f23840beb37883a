//! Reduction of a dynamic inference problem to a finite-horizon MDP.
//!
//! Marginalizing the hidden quantity out of the contextual loss gives the
//! observation-estimate loss `lbar_i(x, yhat) = sum_y P_i(y | x) l(x, y, yhat)`.
//! It depends only on the loss and the round-`i` quantity kernel, never on the
//! estimation strategy, so it serves as the per-step cost of an MDP whose
//! states are observations and whose actions are estimates.

use crate::error::Result;
use crate::model::{Alphabet, Distribution, Problem, TransitionKernel};

/// `lbar_i(x, yhat)` for every round, observation and estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BarLossTable {
    n: usize,
    n_x: usize,
    n_yhat: usize,
    values: Vec<f64>,
}

impl BarLossTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `round` is 1-indexed.
    pub fn get(&self, round: usize, x: usize, yhat: usize) -> f64 {
        self.values[((round - 1) * self.n_x + x) * self.n_yhat + yhat]
    }

    /// The `lbar` row of observation `x` in `round`.
    pub fn row(&self, round: usize, x: usize) -> &[f64] {
        let start = ((round - 1) * self.n_x + x) * self.n_yhat;
        &self.values[start..start + self.n_yhat]
    }

    /// The `|X| x |Yhat|` slice of one round, row-major.
    pub fn slice(&self, round: usize) -> &[f64] {
        let len = self.n_x * self.n_yhat;
        &self.values[(round - 1) * len..round * len]
    }
}

fn expected_loss(problem: &Problem, round: usize, x: usize, yhat: usize) -> f64 {
    let q = problem.quantity(round).row(x);
    (0..problem.y_space().len())
        .map(|y| q.get(y) * problem.loss().get(x, y, yhat))
        .sum()
}

/// Observation-estimate loss of a single entry, addressed by labels.
pub fn observation_estimate_loss(
    problem: &Problem,
    round: usize,
    x: &str,
    yhat: &str,
) -> Result<f64> {
    let round = problem.check_round(round)?;
    let x = problem.x_space().index_of(x)?;
    let yhat = problem.yhat_space().index_of(yhat)?;
    Ok(expected_loss(problem, round, x, yhat))
}

pub fn bar_loss_table(problem: &Problem) -> BarLossTable {
    let (n, n_x, n_yhat) = (problem.n(), problem.x_space().len(), problem.yhat_space().len());
    let mut values = Vec::with_capacity(n * n_x * n_yhat);
    for round in 1..=n {
        for x in 0..n_x {
            for yhat in 0..n_yhat {
                values.push(expected_loss(problem, round, x, yhat));
            }
        }
    }
    BarLossTable {
        n,
        n_x,
        n_yhat,
        values,
    }
}

/// Index of the smallest entry; ties go to the smallest index.
pub(crate) fn argmin_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v < row[best] {
            best = i;
        }
    }
    best
}

/// Single-round Bayes estimate at observation index `x`: `argmin_yhat lbar_i(x, yhat)`,
/// ties broken by smallest estimate index.
pub fn myopic_index(table: &BarLossTable, round: usize, x: usize) -> usize {
    argmin_first(table.row(round, x))
}

/// Single-round Bayes estimate, addressed by labels.
pub fn myopic_bayes_estimate<'p>(problem: &'p Problem, round: usize, x: &str) -> Result<&'p str> {
    let round = problem.check_round(round)?;
    let x = problem.x_space().index_of(x)?;
    let row: Vec<f64> = (0..problem.yhat_space().len())
        .map(|a| expected_loss(problem, round, x, a))
        .collect();
    Ok(problem.yhat_space().label(argmin_first(&row)))
}

/// MDP view of a problem: observations are states, estimates are actions,
/// the observation-estimate loss is the stage cost.
#[derive(Debug, Clone)]
pub struct MdpView<'p> {
    problem: &'p Problem,
    cost: BarLossTable,
}

pub fn to_mdp(problem: &Problem) -> MdpView<'_> {
    MdpView {
        problem,
        cost: bar_loss_table(problem),
    }
}

impl<'p> MdpView<'p> {
    pub fn problem(&self) -> &'p Problem {
        self.problem
    }

    pub fn states(&self) -> &'p Alphabet {
        self.problem.x_space()
    }

    pub fn actions(&self) -> &'p Alphabet {
        self.problem.yhat_space()
    }

    pub fn horizon(&self) -> usize {
        self.problem.n()
    }

    pub fn cost(&self) -> &BarLossTable {
        &self.cost
    }

    /// State dynamics into rounds 2..=n; empty for a one-round problem.
    pub fn dynamics(&self) -> &'p [TransitionKernel] {
        self.problem.transitions()
    }

    pub fn init(&self) -> &'p Distribution {
        self.problem.init()
    }
}
