//! Exact evaluation of Markov estimation strategies.

use crate::error::{Error, Result};
use crate::model::Problem;
use crate::reduction::{bar_loss_table, myopic_index};
use crate::solver::SolveResult;

/// A deterministic Markov strategy: one estimate index per `(round, x)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarkovStrategy {
    table: Vec<Vec<usize>>,
}

impl MarkovStrategy {
    /// `table[round - 1][x]` is the estimate index used at observation `x` in `round`.
    pub fn new(table: Vec<Vec<usize>>) -> Self {
        MarkovStrategy { table }
    }

    pub fn optimal(result: &SolveResult) -> Self {
        MarkovStrategy::new(result.policy_table().to_vec())
    }

    /// Round-by-round single-round Bayes estimates.
    pub fn myopic(problem: &Problem) -> Self {
        let bar = bar_loss_table(problem);
        MarkovStrategy::new(
            (1..=problem.n())
                .map(|round| {
                    (0..problem.x_space().len())
                        .map(|x| myopic_index(&bar, round, x))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn constant(problem: &Problem, yhat: usize) -> Self {
        MarkovStrategy::new(vec![vec![yhat; problem.x_space().len()]; problem.n()])
    }

    pub fn n(&self) -> usize {
        self.table.len()
    }

    pub fn action(&self, round: usize, x: usize) -> usize {
        self.table[round - 1][x]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn check_shape(&self, problem: &Problem) -> Result<()> {
        if self.table.len() != problem.n() {
            return Err(Error::ShapeMismatch(format!(
                "strategy covers {} rounds, problem has {}",
                self.table.len(),
                problem.n()
            )));
        }
        let (n_x, n_yhat) = (problem.x_space().len(), problem.yhat_space().len());
        for (k, row) in self.table.iter().enumerate() {
            if row.len() != n_x {
                return Err(Error::ShapeMismatch(format!(
                    "round {} has {} entries, |X| = {n_x}",
                    k + 1,
                    row.len()
                )));
            }
            if let Some(a) = row.iter().find(|&&a| a >= n_yhat) {
                return Err(Error::ShapeMismatch(format!(
                    "round {} uses estimate index {a}, |Yhat| = {n_yhat}",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

/// Inference loss `j` and loss-to-go `V_i(x; psi)` of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub j: f64,
    v: Vec<Vec<f64>>,
}

impl EvalResult {
    pub fn v_table(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// Expected loss accumulated from `round` onward given observation index `x`.
    pub fn loss_to_go(&self, round: usize, x: usize) -> Result<f64> {
        let n = self.v.len();
        if !(1..=n).contains(&round) {
            return Err(Error::RoundOutOfRange { round, n });
        }
        self.v[round - 1]
            .get(x)
            .copied()
            .ok_or_else(|| Error::UnknownLabel {
                alphabet: "x_space".into(),
                label: format!("#{x}"),
            })
    }
}

/// Label-addressed loss-to-go.
pub fn loss_to_go(problem: &Problem, result: &EvalResult, round: usize, x: &str) -> Result<f64> {
    let x = problem.x_space().index_of(x)?;
    result.loss_to_go(round, x)
}

pub fn evaluate_markov(problem: &Problem, strategy: &MarkovStrategy) -> Result<EvalResult> {
    strategy.check_shape(problem)?;
    let bar = bar_loss_table(problem);
    let (n, n_x) = (problem.n(), problem.x_space().len());
    let mut v = vec![Vec::new(); n];
    for round in (1..=n).rev() {
        v[round - 1] = (0..n_x)
            .map(|x| {
                let a = strategy.action(round, x);
                let stage = bar.get(round, x, a);
                if round == n {
                    stage
                } else {
                    let row = problem.transition(round + 1).row(x, a);
                    let future: f64 = (0..n_x).map(|xn| row.get(xn) * v[round][xn]).sum();
                    stage + future
                }
            })
            .collect();
    }
    let init = problem.init();
    let j = (0..n_x).map(|x| init.get(x) * v[0][x]).sum();
    Ok(EvalResult { j, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{example_section33, example_stock};
    use crate::solver::{solve, TieBreakRule};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn optimal_strategy_reproduces_v_star() {
        let p = example_section33(6);
        let r = solve(&p, TieBreakRule::MyopicPreferred);
        let e = evaluate_markov(&p, &MarkovStrategy::optimal(&r)).unwrap();
        for round in 1..=6 {
            for x in 0..2 {
                assert!(close(e.loss_to_go(round, x).unwrap(), r.v(round, x)));
            }
        }
        assert!(close(loss_to_go(&p, &e, 1, "1").unwrap(), 2.1));
    }

    #[test]
    fn stock_myopic_vs_optimal() {
        let p = example_stock(6);
        let myopic = evaluate_markov(&p, &MarkovStrategy::myopic(&p)).unwrap();
        assert!(close(myopic.j, 2.4));
        let r = solve(&p, TieBreakRule::MyopicPreferred);
        let best = evaluate_markov(&p, &MarkovStrategy::optimal(&r)).unwrap();
        assert!(close(best.j, 2.1));
    }

    #[test]
    fn constant_strategy_loss_to_go() {
        let p = example_section33(6);
        let e = evaluate_markov(&p, &MarkovStrategy::constant(&p, 1)).unwrap();
        assert!(close(e.loss_to_go(5, 1).unwrap(), 0.8));
        assert!(close(e.loss_to_go(6, 0).unwrap(), 0.9));
    }

    #[test]
    fn shape_errors() {
        let p = example_section33(3);
        let short = MarkovStrategy::new(vec![vec![0, 0]; 2]);
        assert_eq!(evaluate_markov(&p, &short).unwrap_err().kind(), "ShapeMismatch");
        let wide = MarkovStrategy::new(vec![vec![0, 2]; 3]);
        assert_eq!(evaluate_markov(&p, &wide).unwrap_err().kind(), "ShapeMismatch");
        let e = evaluate_markov(&p, &MarkovStrategy::constant(&p, 0)).unwrap();
        assert_eq!(e.loss_to_go(4, 0).unwrap_err().kind(), "RoundOutOfRange");
        assert_eq!(e.loss_to_go(1, 5).unwrap_err().kind(), "UnknownLabel");
    }
}
