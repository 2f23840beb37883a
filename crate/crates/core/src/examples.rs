//! Built-in models: the alternating binary machine, stock trend prediction
//! and a parameterized yield-prediction scenario.
//!
//! None of the source models fixes the initial observation law. The binary
//! models default to a point mass at `x = 0`; the yield model starts at the
//! grid point nearest the critical distance.

use crate::error::{Error, Result};
use crate::model::{make_stationary_problem, Problem, StationaryModel};

fn binary() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

fn zero_one_loss(n_x: usize, n_y: usize) -> Vec<Vec<Vec<f64>>> {
    vec![
        (0..n_y)
            .map(|y| (0..n_y).map(|a| if y == a { 0.0 } else { 1.0 }).collect())
            .collect();
        n_x
    ]
}

fn point(len: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

/// Alternating machine: estimating 0 flips the observation, estimating 1 keeps it.
/// `P(Y=1|X=0) = 0.1`, `P(Y=1|X=1) = 0.6`, 0-1 loss.
pub fn section33_model() -> StationaryModel {
    StationaryModel {
        x_space: binary(),
        y_space: binary(),
        yhat_space: binary(),
        init: point(2, 0),
        transition: (0..2)
            .map(|x| vec![point(2, 1 - x), point(2, x)])
            .collect(),
        quantity: vec![vec![0.9, 0.1], vec![0.4, 0.6]],
        loss: zero_one_loss(2, 2),
    }
}

/// Stock trend prediction with the deterministic market response `X_i = Yhat_{i-1}`.
/// `P(Y=1|X=0) = 0.4`, `P(Y=1|X=1) = 0.7`, 0-1 loss.
pub fn stock_model() -> StationaryModel {
    StationaryModel {
        x_space: binary(),
        y_space: binary(),
        yhat_space: binary(),
        init: point(2, 0),
        transition: vec![vec![point(2, 0), point(2, 1)]; 2],
        quantity: vec![vec![0.6, 0.4], vec![0.3, 0.7]],
        loss: zero_one_loss(2, 2),
    }
}

/// # Panics
/// Panics if `n == 0`.
pub fn example_section33(n: usize) -> Problem {
    make_stationary_problem(n, &section33_model()).expect("built-in model is valid")
}

/// # Panics
/// Panics if `n == 0`.
pub fn example_stock(n: usize) -> Problem {
    make_stationary_problem(n, &stock_model()).expect("built-in model is valid")
}

/// How the ego planner reacts to a prediction in the yield scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Planner {
    /// Keep negotiating the same gap: predicting `yield` tends to shrink it,
    /// predicting `not_yield` tends to widen it.
    Persist,
    /// Predicting `not_yield` abandons the gap and moves to the widest one.
    FallBack,
}

/// Parameters of the yield-prediction model. Distances are in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldParams {
    /// Logistic slope of `P(yield | x)`, per meter.
    pub beta: f64,
    /// Critical distance where yielding is as likely as not.
    pub d_c: f64,
    /// Discretized bumper-to-bumper distances; the observation space.
    pub grid: Vec<f64>,
    /// Per-meter cost of predicting `not_yield` when the vehicle would yield.
    pub c_missed: f64,
    /// Scale of the cost of predicting `yield` when the vehicle would not.
    pub c_danger: f64,
    pub planner: Planner,
    /// Probability that the gap moves one grid step after a prediction.
    pub shift_prob: f64,
}

impl Default for YieldParams {
    fn default() -> Self {
        YieldParams {
            beta: 1.0,
            d_c: 10.0,
            grid: (0..=10).map(|k| 2.0 * k as f64).collect(),
            c_missed: 0.05,
            c_danger: 1.0,
            planner: Planner::Persist,
            shift_prob: 0.7,
        }
    }
}

impl YieldParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad("beta must be positive and finite");
        }
        if self.grid.len() < 2 {
            return bad("grid needs at least two points");
        }
        if self.grid.iter().any(|g| !g.is_finite()) {
            return bad("grid values must be finite");
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("grid must be strictly increasing");
        }
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(lo..=hi).contains(&self.d_c) {
            return bad("critical distance must lie within the grid range");
        }
        if !(self.c_missed >= 0.0 && self.c_missed.is_finite())
            || !(self.c_danger >= 0.0 && self.c_danger.is_finite())
        {
            return bad("costs must be non-negative and finite");
        }
        if !(0.0..=1.0).contains(&self.shift_prob) {
            return bad("shift_prob must lie in [0, 1]");
        }
        Ok(())
    }

    /// `sigma(beta (x - d_c))`.
    pub fn yield_prob(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-self.beta * (x - self.d_c)).exp())
    }

    fn nearest_to_critical(&self) -> usize {
        let mut best = 0;
        for (i, g) in self.grid.iter().enumerate() {
            if (g - self.d_c).abs() < (self.grid[best] - self.d_c).abs() {
                best = i;
            }
        }
        best
    }
}

pub const YIELD: usize = 0;
pub const NOT_YIELD: usize = 1;

pub fn yield_model(params: &YieldParams) -> Result<StationaryModel> {
    params.validate()?;
    let grid = &params.grid;
    let m = grid.len();
    let span = grid[m - 1] - grid[0];
    let labels = vec!["yield".to_string(), "not_yield".to_string()];

    let quantity = grid
        .iter()
        .map(|&x| {
            let p = params.yield_prob(x);
            vec![p, 1.0 - p]
        })
        .collect();

    let loss = grid
        .iter()
        .map(|&x| {
            let missed = params.c_missed * x;
            let danger = params.c_danger * (1.0 + (params.d_c - x) / span).max(0.0);
            // loss[x][y][yhat]
            vec![vec![0.0, missed], vec![danger, 0.0]]
        })
        .collect();

    let shift = |from: usize, to: usize| {
        let mut row = vec![0.0; m];
        row[from] += 1.0 - params.shift_prob;
        row[to] += params.shift_prob;
        row
    };
    let transition = (0..m)
        .map(|k| {
            let down = k.saturating_sub(1);
            let up = (k + 1).min(m - 1);
            let after_yield = shift(k, down);
            let after_not_yield = match params.planner {
                Planner::Persist => shift(k, up),
                Planner::FallBack => point(m, m - 1),
            };
            vec![after_yield, after_not_yield]
        })
        .collect();

    Ok(StationaryModel {
        x_space: grid.iter().map(|g| format!("{g}")).collect(),
        y_space: labels.clone(),
        yhat_space: labels,
        init: point(m, params.nearest_to_critical()),
        transition,
        quantity,
        loss,
    })
}

pub fn example_yield(n: usize, params: &YieldParams) -> Result<Problem> {
    make_stationary_problem(n, &yield_model(params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_problem;
    use crate::solver::{solve, TieBreakRule};

    #[test]
    fn binary_examples_validate_and_keep_exact_decimals() {
        for p in [example_section33(6), example_stock(6)] {
            assert_eq!(validate_problem(p.to_data()).unwrap(), p);
            for k in p.transitions() {
                for x in 0..2 {
                    for a in 0..2 {
                        assert!(k.row(x, a).point_mass_index().is_some());
                    }
                }
            }
        }
        assert_eq!(example_section33(6).quantity(3).probs_row(0), [0.9, 0.1]);
        assert_eq!(example_stock(6).quantity(3).probs_row(1), [0.3, 0.7]);
    }

    trait RowExt {
        fn probs_row(&self, x: usize) -> [f64; 2];
    }
    impl RowExt for crate::model::QuantityKernel {
        fn probs_row(&self, x: usize) -> [f64; 2] {
            [self.prob(x, 0), self.prob(x, 1)]
        }
    }

    #[test]
    fn section33_transitions() {
        let p = example_section33(3);
        let k = p.transition(2);
        assert_eq!(k.row(0, 0).point_mass_index(), Some(1));
        assert_eq!(k.row(1, 0).point_mass_index(), Some(0));
        assert_eq!(k.row(0, 1).point_mass_index(), Some(0));
        assert_eq!(k.row(1, 1).point_mass_index(), Some(1));
    }

    #[test]
    fn yield_kernel_is_monotone_and_centered() {
        let params = YieldParams::default();
        let p = example_yield(4, &params).unwrap();
        let q = p.quantity(1);
        for k in 1..params.grid.len() {
            assert!(q.prob(k, YIELD) > q.prob(k - 1, YIELD));
        }
        let center = p.x_space().index_of("10").unwrap();
        assert_eq!(q.prob(center, YIELD), 0.5);
        assert_eq!(p.init().point_mass_index(), Some(center));
    }

    #[test]
    fn yield_logistic_saturates() {
        let params = YieldParams {
            beta: 1e3,
            ..YieldParams::default()
        };
        assert!(params.yield_prob(8.0) < 1e-12);
        assert!(params.yield_prob(12.0) > 1.0 - 1e-12);
    }

    #[test]
    fn yield_default_predicts_not_yield_at_smallest_gap() {
        let p = example_yield(4, &YieldParams::default()).unwrap();
        let result = solve(&p, TieBreakRule::MyopicPreferred);
        assert_eq!(result.action(1, 0), NOT_YIELD);
    }

    #[test]
    fn fall_back_resets_to_widest_gap() {
        let params = YieldParams {
            planner: Planner::FallBack,
            ..YieldParams::default()
        };
        let p = example_yield(2, &params).unwrap();
        let k = p.transition(2);
        for x in 0..params.grid.len() {
            assert_eq!(k.row(x, NOT_YIELD).point_mass_index(), Some(10));
        }
        // Persist saturates at the boundaries.
        let p = example_yield(2, &YieldParams::default()).unwrap();
        assert_eq!(p.transition(2).row(0, YIELD).point_mass_index(), Some(0));
        assert_eq!(p.transition(2).row(10, NOT_YIELD).point_mass_index(), Some(10));
    }

    #[test]
    fn invalid_yield_params() {
        let cases = [
            YieldParams { beta: 0.0, ..YieldParams::default() },
            YieldParams { grid: vec![1.0], ..YieldParams::default() },
            YieldParams { grid: vec![0.0, 2.0, 2.0], d_c: 1.0, ..YieldParams::default() },
            YieldParams { d_c: 30.0, ..YieldParams::default() },
            YieldParams { c_danger: -1.0, ..YieldParams::default() },
            YieldParams { shift_prob: 1.5, ..YieldParams::default() },
        ];
        for params in cases {
            assert_eq!(example_yield(3, &params).unwrap_err().kind(), "InvalidParams");
        }
    }
}
