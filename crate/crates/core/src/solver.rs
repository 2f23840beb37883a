//! Backward-induction dynamic programming for the optimal Markov estimation strategy.
//!
//! ```text
//! Q*_n(x, a) = lbar_n(x, a)
//! Q*_i(x, a) = lbar_i(x, a) + sum_x' P_{i+1}(x' | x, a) V*_{i+1}(x')
//! V*_i(x)    = min_a Q*_i(x, a)
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Distribution, Problem};
use crate::reduction::{argmin_first, bar_loss_table, myopic_index, BarLossTable};

/// Two `Q*` entries closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// How an optimal estimate is picked when several achieve the row minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreakRule {
    /// Prefer the single-round Bayes estimate if it is tied for optimal.
    #[default]
    MyopicPreferred,
    /// Smallest estimate index among the tied set.
    FirstIndex,
}

impl std::str::FromStr for TieBreakRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "myopic" => Ok(TieBreakRule::MyopicPreferred),
            "first" => Ok(TieBreakRule::FirstIndex),
            other => Err(Error::Parse(format!(
                "unknown tie-break rule {other:?} (expected myopic|first)"
            ))),
        }
    }
}

/// Optimal values, Q-factors and policy for every round. All indices into the
/// tables are 0-based; accessor methods take 1-based rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    n: usize,
    n_x: usize,
    n_yhat: usize,
    rule: TieBreakRule,
    v_star: Vec<Vec<f64>>,
    q_star: Vec<Vec<Vec<f64>>>,
    policy: Vec<Vec<usize>>,
    tie_sets: Vec<Vec<Vec<usize>>>,
    myopic: Vec<Vec<usize>>,
}

pub fn solve(problem: &Problem, rule: TieBreakRule) -> SolveResult {
    let bar = bar_loss_table(problem);
    solve_with_table(problem, &bar, rule)
}

fn solve_with_table(problem: &Problem, bar: &BarLossTable, rule: TieBreakRule) -> SolveResult {
    let (n, n_x, n_yhat) = (problem.n(), problem.x_space().len(), problem.yhat_space().len());
    let mut v_star = vec![Vec::new(); n];
    let mut q_star = vec![Vec::new(); n];
    let mut policy = vec![Vec::new(); n];
    let mut tie_sets = vec![Vec::new(); n];
    let myopic: Vec<Vec<usize>> = (1..=n)
        .map(|round| (0..n_x).map(|x| myopic_index(bar, round, x)).collect())
        .collect();

    for round in (1..=n).rev() {
        let next = (round < n).then(|| (problem.transition(round + 1), &v_star[round]));
        let q_rows: Vec<Vec<f64>> = (0..n_x)
            .map(|x| {
                (0..n_yhat)
                    .map(|a| {
                        let stage = bar.get(round, x, a);
                        match next {
                            None => stage,
                            Some((kernel, v_next)) => {
                                let row = kernel.row(x, a);
                                let future: f64 =
                                    (0..n_x).map(|xn| row.get(xn) * v_next[xn]).sum();
                                stage + future
                            }
                        }
                    })
                    .collect()
            })
            .collect();

        let mut v_row = Vec::with_capacity(n_x);
        let mut p_row = Vec::with_capacity(n_x);
        let mut t_row = Vec::with_capacity(n_x);
        for (x, q) in q_rows.iter().enumerate() {
            let best = q[argmin_first(q)];
            let ties: Vec<usize> = (0..n_yhat)
                .filter(|&a| q[a] <= best + TIE_TOLERANCE)
                .collect();
            let mine = myopic[round - 1][x];
            let chosen = match rule {
                TieBreakRule::MyopicPreferred if ties.contains(&mine) => mine,
                _ => ties[0],
            };
            v_row.push(best);
            p_row.push(chosen);
            t_row.push(ties);
        }
        v_star[round - 1] = v_row;
        q_star[round - 1] = q_rows;
        policy[round - 1] = p_row;
        tie_sets[round - 1] = t_row;
    }

    SolveResult {
        n,
        n_x,
        n_yhat,
        rule,
        v_star,
        q_star,
        policy,
        tie_sets,
        myopic,
    }
}

impl SolveResult {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> TieBreakRule {
        self.rule
    }

    pub fn v(&self, round: usize, x: usize) -> f64 {
        self.v_star[round - 1][x]
    }

    pub fn q(&self, round: usize, x: usize, yhat: usize) -> f64 {
        self.q_star[round - 1][x][yhat]
    }

    pub fn q_row(&self, round: usize, x: usize) -> &[f64] {
        &self.q_star[round - 1][x]
    }

    /// Optimal estimate index at `(round, x)`.
    pub fn action(&self, round: usize, x: usize) -> usize {
        self.policy[round - 1][x]
    }

    pub fn ties(&self, round: usize, x: usize) -> &[usize] {
        &self.tie_sets[round - 1][x]
    }

    pub fn myopic(&self, round: usize, x: usize) -> usize {
        self.myopic[round - 1][x]
    }

    /// `V*` rows, one per round.
    pub fn v_table(&self) -> &[Vec<f64>] {
        &self.v_star
    }

    /// Policy rows, one per round, as estimate indices.
    pub fn policy_table(&self) -> &[Vec<usize>] {
        &self.policy
    }

    pub(crate) fn check_matches(&self, problem: &Problem) -> Result<()> {
        let shape = (problem.n(), problem.x_space().len(), problem.yhat_space().len());
        if shape != (self.n, self.n_x, self.n_yhat) {
            return Err(Error::MismatchedResult(format!(
                "result has (n, |X|, |Yhat|) = {:?}, problem has {:?}",
                (self.n, self.n_x, self.n_yhat),
                shape
            )));
        }
        Ok(())
    }
}

/// `sum_x P_{X_1}(x) V*_1(x)` under the problem's initial law.
pub fn minimum_inference_loss(problem: &Problem, result: &SolveResult) -> Result<f64> {
    minimum_inference_loss_from(problem.init(), problem, result)
}

/// Minimum inference loss under an alternative initial law.
pub fn minimum_inference_loss_from(
    init: &Distribution,
    problem: &Problem,
    result: &SolveResult,
) -> Result<f64> {
    result.check_matches(problem)?;
    if init.len() != result.n_x {
        return Err(Error::MismatchedResult(format!(
            "initial law has {} entries, |X| = {}",
            init.len(),
            result.n_x
        )));
    }
    Ok((0..result.n_x).map(|x| init.get(x) * result.v(1, x)).sum())
}

/// One observation node of the solution report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub x: String,
    pub v_star: f64,
    pub q_row: Vec<f64>,
    pub chosen: String,
    pub tie: bool,
    pub myopic: String,
    pub differs_from_myopic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub nodes: Vec<NodeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub rounds: Vec<RoundReport>,
}

impl SolutionReport {
    /// `(round, x label)` of every node whose optimal estimate differs from the myopic one.
    pub fn deviations(&self) -> Vec<(usize, String)> {
        self.rounds
            .iter()
            .flat_map(|r| {
                r.nodes
                    .iter()
                    .filter(|n| n.differs_from_myopic)
                    .map(move |n| (r.round, n.x.clone()))
            })
            .collect()
    }
}

pub fn solution_report(problem: &Problem, result: &SolveResult) -> Result<SolutionReport> {
    result.check_matches(problem)?;
    let xs = problem.x_space();
    let ys = problem.yhat_space();
    let rounds = (1..=result.n)
        .map(|round| RoundReport {
            round,
            nodes: (0..result.n_x)
                .map(|x| {
                    let chosen = result.action(round, x);
                    let myopic = result.myopic(round, x);
                    NodeReport {
                        x: xs.label(x).to_string(),
                        v_star: result.v(round, x),
                        q_row: result.q_row(round, x).to_vec(),
                        chosen: ys.label(chosen).to_string(),
                        tie: result.ties(round, x).len() > 1,
                        myopic: ys.label(myopic).to_string(),
                        differs_from_myopic: chosen != myopic,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(SolutionReport { rounds })
}
