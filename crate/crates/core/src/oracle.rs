//! Brute-force ground truth on small instances.
//!
//! A history strategy may use the whole past: at round `i` it sees
//! `(x_1..x_i, y_1..y_{i-1})` in [`HistoryMode::Revealed`] mode, or only
//! `(x_1..x_i)` in [`HistoryMode::Unrevealed`] mode. Its decision tables are
//! total over every syntactically possible history, reachable or not.
//!
//! History encoding: the tuple `(x_1, .., x_i, y_1, .., y_{i-1})` read as a
//! mixed-radix number, most significant digit first. Tables are therefore in
//! lexicographic history order.
//!
//! Strategy enumeration order: concatenate all tables (round 1 first) into one
//! vector of estimate indices; strategies are produced in lexicographic order
//! of that vector, the last history of round `n` varying fastest.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::MarkovStrategy;
use crate::model::{Problem, ProblemData};
use crate::reduction::{argmin_first, bar_loss_table};
use crate::solver::{minimum_inference_loss, solve, TieBreakRule};

/// Whether past quantities are revealed to the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HistoryMode {
    Revealed,
    Unrevealed,
}

impl std::str::FromStr for HistoryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "revealed" => Ok(HistoryMode::Revealed),
            "unrevealed" => Ok(HistoryMode::Unrevealed),
            other => Err(Error::Parse(format!(
                "unknown history mode {other:?} (expected revealed|unrevealed)"
            ))),
        }
    }
}

impl fmt::Display for HistoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HistoryMode::Revealed => "revealed",
            HistoryMode::Unrevealed => "unrevealed",
        })
    }
}

/// Feasibility limits for exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Maximum number of strategies to enumerate.
    pub strategies: u128,
    /// Maximum number of (strategy, trajectory) pairs to sum over.
    pub pairs: u128,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            strategies: 1_000_000,
            pairs: 10_000_000,
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    (base as u128).checked_pow(u32::try_from(exp).ok()?)
}

/// Number of distinct histories seen at `round`.
pub fn history_count(problem: &Problem, mode: HistoryMode, round: usize) -> Option<u128> {
    let xs = checked_pow(problem.x_space().len(), round)?;
    match mode {
        HistoryMode::Revealed => xs.checked_mul(checked_pow(problem.y_space().len(), round - 1)?),
        HistoryMode::Unrevealed => Some(xs),
    }
}

/// Number of full `(x^n, y^n)` trajectories.
pub fn trajectory_count(problem: &Problem) -> Option<u128> {
    checked_pow(problem.x_space().len(), problem.n())?
        .checked_mul(checked_pow(problem.y_space().len(), problem.n())?)
}

/// Size of a deterministic history-strategy space: `base ^ exponent`, where
/// `base = |Yhat|` and `exponent` is the total number of histories over all rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSpace {
    pub base: usize,
    pub exponent: Option<u128>,
}

impl SearchSpace {
    pub fn of(problem: &Problem, mode: HistoryMode) -> Self {
        let exponent = (1..=problem.n()).try_fold(0u128, |acc, round| {
            acc.checked_add(history_count(problem, mode, round)?)
        });
        SearchSpace {
            base: problem.yhat_space().len(),
            exponent,
        }
    }

    /// The exact count, when it fits in 128 bits.
    pub fn count(&self) -> Option<u128> {
        let exp = u32::try_from(self.exponent?).ok()?;
        (self.base as u128).checked_pow(exp)
    }

    fn exceeds(&self, limit: u128) -> bool {
        self.count().is_none_or(|c| c > limit)
    }
}

impl fmt::Display for SearchSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.count(), self.exponent) {
            (Some(c), _) if c <= 1_000_000_000_000 => write!(f, "{c}"),
            (_, Some(e)) => write!(f, "{}^{}", self.base, e),
            (_, None) => write!(f, "{}^(more than 2^128)", self.base),
        }
    }
}

/// A deterministic estimation strategy with access to the full history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryStrategy {
    mode: HistoryMode,
    n_x: usize,
    n_y: usize,
    tables: Vec<Vec<usize>>,
}

impl HistoryStrategy {
    /// `tables[round - 1][h]` is the estimate for history index `h` (see module docs).
    pub fn from_tables(
        problem: &Problem,
        mode: HistoryMode,
        tables: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let s = HistoryStrategy {
            mode,
            n_x: problem.x_space().len(),
            n_y: problem.y_space().len(),
            tables,
        };
        s.check(problem)?;
        Ok(s)
    }

    /// Builds the tables by calling `decide(round, xs, ys)` on every history,
    /// where `ys` is empty in unrevealed mode.
    pub fn from_fn<F>(problem: &Problem, mode: HistoryMode, mut decide: F) -> Result<Self>
    where
        F: FnMut(usize, &[usize], &[usize]) -> usize,
    {
        let (n_x, n_y) = (problem.x_space().len(), problem.y_space().len());
        let mut tables = Vec::with_capacity(problem.n());
        for round in 1..=problem.n() {
            let count = history_count(problem, mode, round)
                .filter(|&c| c <= u32::MAX as u128)
                .ok_or_else(|| Error::SearchSpaceTooLarge {
                    count: format!("more than {} histories at round {round}", u32::MAX),
                    limit: u32::MAX.to_string(),
                })?;
            let y_len = match mode {
                HistoryMode::Revealed => round - 1,
                HistoryMode::Unrevealed => 0,
            };
            let table = (0..count as usize)
                .map(|h| {
                    let (xs, ys) = decode_history(h, round, y_len, n_x, n_y);
                    decide(round, &xs, &ys)
                })
                .collect();
            tables.push(table);
        }
        HistoryStrategy::from_tables(problem, mode, tables)
    }

    /// Lifts a Markov strategy; the decision depends only on the current observation.
    pub fn from_markov(
        problem: &Problem,
        strategy: &MarkovStrategy,
        mode: HistoryMode,
    ) -> Result<Self> {
        strategy.check_shape(problem)?;
        HistoryStrategy::from_fn(problem, mode, |round, xs, _| {
            strategy.action(round, xs[round - 1])
        })
    }

    pub fn mode(&self) -> HistoryMode {
        self.mode
    }

    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    /// Estimate at `round` given `xs = x_1..x_round` and `ys = y_1..y_{round-1}`.
    pub fn decide(&self, round: usize, xs: &[usize], ys: &[usize]) -> usize {
        let mut h = 0usize;
        for &x in &xs[..round] {
            h = h * self.n_x + x;
        }
        if self.mode == HistoryMode::Revealed {
            for &y in &ys[..round - 1] {
                h = h * self.n_y + y;
            }
        }
        self.tables[round - 1][h]
    }

    fn check(&self, problem: &Problem) -> Result<()> {
        if self.n_x != problem.x_space().len() || self.n_y != problem.y_space().len() {
            return Err(Error::HistoryIncomplete(
                "strategy was built for different alphabets".into(),
            ));
        }
        if self.tables.len() != problem.n() {
            return Err(Error::HistoryIncomplete(format!(
                "strategy covers {} rounds, horizon is {}",
                self.tables.len(),
                problem.n()
            )));
        }
        let n_yhat = problem.yhat_space().len();
        for (k, table) in self.tables.iter().enumerate() {
            let round = k + 1;
            let expected = history_count(problem, self.mode, round);
            if expected != Some(table.len() as u128) {
                return Err(Error::HistoryIncomplete(format!(
                    "round {round} table has {} entries, expected {}",
                    table.len(),
                    expected.map_or_else(|| "too many".to_string(), |c| c.to_string())
                )));
            }
            if let Some(a) = table.iter().find(|&&a| a >= n_yhat) {
                return Err(Error::HistoryIncomplete(format!(
                    "round {round} uses estimate index {a}, |Yhat| = {n_yhat}"
                )));
            }
        }
        Ok(())
    }
}

fn decode_history(
    mut h: usize,
    round: usize,
    y_len: usize,
    n_x: usize,
    n_y: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut ys = vec![0; y_len];
    for slot in ys.iter_mut().rev() {
        *slot = h % n_y;
        h /= n_y;
    }
    let mut xs = vec![0; round];
    for slot in xs.iter_mut().rev() {
        *slot = h % n_x;
        h /= n_x;
    }
    (xs, ys)
}

struct Walk<'a> {
    problem: &'a Problem,
    strategy: &'a HistoryStrategy,
    xs: Vec<usize>,
    ys: Vec<usize>,
}

impl Walk<'_> {
    fn new<'a>(problem: &'a Problem, strategy: &'a HistoryStrategy) -> Walk<'a> {
        Walk {
            problem,
            strategy,
            xs: Vec::with_capacity(problem.n()),
            ys: Vec::with_capacity(problem.n()),
        }
    }

    /// Sums `P(x^n, y^n) * sum_i l(x_i, y_i, yhat_i)` over full trajectories.
    fn full(&mut self, prob: f64, loss_so_far: f64, total: &mut f64) {
        let round = self.xs.len();
        let n = self.problem.n();
        let x = self.xs[round - 1];
        let yhat = self.strategy.decide(round, &self.xs, &self.ys);
        let q = self.problem.quantity(round).row(x);
        for y in 0..q.len() {
            let py = q.get(y);
            if py == 0.0 {
                continue;
            }
            let loss = loss_so_far + self.problem.loss().get(x, y, yhat);
            if round == n {
                *total += prob * py * loss;
                continue;
            }
            self.ys.push(y);
            let t = self.problem.transition(round + 1).row(x, yhat);
            for xn in 0..t.len() {
                let px = t.get(xn);
                if px == 0.0 {
                    continue;
                }
                self.xs.push(xn);
                self.full(prob * py * px, loss, total);
                self.xs.pop();
            }
            self.ys.pop();
        }
    }

    /// Sums `P(prefix) * lbar_i(x_i, yhat_i)` node by node. Quantities are only
    /// branched on when a later decision can see them.
    fn marginal(&mut self, bar: &crate::reduction::BarLossTable, prob: f64, total: &mut f64) {
        let round = self.xs.len();
        let n = self.problem.n();
        let x = self.xs[round - 1];
        let yhat = self.strategy.decide(round, &self.xs, &self.ys);
        *total += prob * bar.get(round, x, yhat);
        if round == n {
            return;
        }
        let t = self.problem.transition(round + 1).row(x, yhat);
        let descend = |walk: &mut Self, p: f64, total: &mut f64| {
            for xn in 0..t.len() {
                let px = t.get(xn);
                if px == 0.0 {
                    continue;
                }
                walk.xs.push(xn);
                walk.marginal(bar, p * px, total);
                walk.xs.pop();
            }
        };
        match self.strategy.mode {
            HistoryMode::Revealed => {
                let q = self.problem.quantity(round).row(x);
                for y in 0..q.len() {
                    let py = q.get(y);
                    if py == 0.0 {
                        continue;
                    }
                    self.ys.push(y);
                    descend(self, prob * py, total);
                    self.ys.pop();
                }
            }
            HistoryMode::Unrevealed => descend(self, prob, total),
        }
    }
}

/// Exact expected accumulated loss of a history strategy, summed over all
/// `(x^n, y^n)` trajectories in lexicographic order.
pub fn exact_loss_history(problem: &Problem, strategy: &HistoryStrategy) -> Result<f64> {
    strategy.check(problem)?;
    let init = problem.init();
    let mut total = 0.0;
    let mut walk = Walk::new(problem, strategy);
    for x in 0..init.len() {
        let p = init.get(x);
        if p == 0.0 {
            continue;
        }
        walk.xs.push(x);
        walk.full(p, 0.0, &mut total);
        walk.xs.pop();
    }
    Ok(total)
}

/// Both sides of the loss-marginalization identity for one strategy:
/// `lhs = E sum_i l(X_i, Y_i, Yhat_i)` over full trajectories and
/// `rhs = E sum_i lbar(X_i, Yhat_i)` with the quantities integrated out.
pub fn verify_lemma1(problem: &Problem, strategy: &HistoryStrategy) -> Result<(f64, f64)> {
    let limits = SearchLimits::default();
    if trajectory_count(problem).is_none_or(|c| c > limits.pairs) {
        return Err(Error::SearchSpaceTooLarge {
            count: trajectory_count(problem)
                .map_or_else(|| "more than 2^128".into(), |c| c.to_string()),
            limit: limits.pairs.to_string(),
        });
    }
    let lhs = exact_loss_history(problem, strategy)?;
    let bar = bar_loss_table(problem);
    let init = problem.init();
    let mut rhs = 0.0;
    let mut walk = Walk::new(problem, strategy);
    for x in 0..init.len() {
        let p = init.get(x);
        if p == 0.0 {
            continue;
        }
        walk.xs.push(x);
        walk.marginal(&bar, p, &mut rhs);
        walk.xs.pop();
    }
    Ok((lhs, rhs))
}

/// Lexicographic stream over every deterministic history strategy.
#[derive(Debug, Clone)]
pub struct HistoryStrategies {
    mode: HistoryMode,
    n_x: usize,
    n_y: usize,
    n_yhat: usize,
    sizes: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for HistoryStrategies {
    type Item = HistoryStrategy;

    fn next(&mut self) -> Option<HistoryStrategy> {
        if self.done {
            return None;
        }
        let mut tables = Vec::with_capacity(self.sizes.len());
        let mut offset = 0;
        for &size in &self.sizes {
            tables.push(self.digits[offset..offset + size].to_vec());
            offset += size;
        }
        // Odometer increment, last digit fastest.
        self.done = true;
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.n_yhat {
                self.done = false;
                break;
            }
            *d = 0;
        }
        Some(HistoryStrategy {
            mode: self.mode,
            n_x: self.n_x,
            n_y: self.n_y,
            tables,
        })
    }
}

fn too_large(space: SearchSpace, limit: u128) -> Error {
    Error::SearchSpaceTooLarge {
        count: space.to_string(),
        limit: limit.to_string(),
    }
}

/// Enumerates every deterministic history strategy, failing up front when the
/// count exceeds `limits.strategies`.
pub fn enumerate_history_strategies(
    problem: &Problem,
    mode: HistoryMode,
    limits: SearchLimits,
) -> Result<HistoryStrategies> {
    let space = SearchSpace::of(problem, mode);
    if space.exceeds(limits.strategies) {
        return Err(too_large(space, limits.strategies));
    }
    let sizes: Vec<usize> = (1..=problem.n())
        .map(|round| history_count(problem, mode, round).expect("bounded by the limit") as usize)
        .collect();
    Ok(HistoryStrategies {
        mode,
        n_x: problem.x_space().len(),
        n_y: problem.y_space().len(),
        n_yhat: problem.yhat_space().len(),
        digits: vec![0; sizes.iter().sum()],
        sizes,
        done: false,
    })
}

/// How the brute-force minimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// Every strategy enumerated and evaluated by full trajectory summation.
    Enumeration,
    /// Exact minimization over the history tree: every history node picks its
    /// own estimate, so the minimum over all tables is found without listing them.
    HistoryTree,
}

impl std::str::FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(SearchMethod::Enumeration),
            "tree" => Ok(SearchMethod::HistoryTree),
            other => Err(Error::Parse(format!(
                "unknown search method {other:?} (expected enumerate|tree)"
            ))),
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMethod::Enumeration => "enumerate",
            SearchMethod::HistoryTree => "tree",
        })
    }
}

/// Number of strategies for which both sides of the marginalization identity are recorded.
pub const LEMMA1_SAMPLE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub mode: HistoryMode,
    pub method: SearchMethod,
    pub brute_min: f64,
    pub dp_min: f64,
    /// `brute_min - dp_min`.
    pub gap: f64,
    pub witness: HistoryStrategy,
    /// Predicted size of the strategy space.
    pub search_space: SearchSpace,
    /// Strategies evaluated one by one; `None` for the history-tree search.
    pub strategies_searched: Option<u128>,
    /// `(lhs, rhs)` of the marginalization identity for the first strategies
    /// searched and the witness.
    pub lemma1_pairs: Vec<(f64, f64)>,
}

/// Minimum inference loss over all history strategies by exhaustive enumeration.
pub fn brute_force_optimum(
    problem: &Problem,
    mode: HistoryMode,
    limits: SearchLimits,
) -> Result<OracleReport> {
    let space = SearchSpace::of(problem, mode);
    let strategies = enumerate_history_strategies(problem, mode, limits)?;
    let pairs = space
        .count()
        .and_then(|c| c.checked_mul(trajectory_count(problem)?));
    if pairs.is_none_or(|p| p > limits.pairs) {
        return Err(Error::SearchSpaceTooLarge {
            count: format!(
                "{space} strategies x {} trajectories",
                trajectory_count(problem).map_or_else(|| "huge".into(), |c| c.to_string())
            ),
            limit: format!("{} pairs", limits.pairs),
        });
    }

    let mut best: Option<(f64, HistoryStrategy)> = None;
    let mut searched = 0u128;
    let mut lemma1_pairs = Vec::new();
    for strategy in strategies {
        let loss = exact_loss_history(problem, &strategy)?;
        if (searched as usize) < LEMMA1_SAMPLE {
            lemma1_pairs.push(verify_lemma1(problem, &strategy)?);
        }
        searched += 1;
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, strategy));
        }
    }
    let (brute_min, witness) = best.expect("strategy space is never empty");
    lemma1_pairs.push(verify_lemma1(problem, &witness)?);
    finish(problem, mode, SearchMethod::Enumeration, brute_min, witness, space, Some(searched), lemma1_pairs)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &Problem,
    mode: HistoryMode,
    method: SearchMethod,
    brute_min: f64,
    witness: HistoryStrategy,
    search_space: SearchSpace,
    strategies_searched: Option<u128>,
    lemma1_pairs: Vec<(f64, f64)>,
) -> Result<OracleReport> {
    let dp = solve(problem, TieBreakRule::MyopicPreferred);
    let dp_min = minimum_inference_loss(problem, &dp)?;
    Ok(OracleReport {
        mode,
        method,
        brute_min,
        dp_min,
        gap: brute_min - dp_min,
        witness,
        search_space,
        strategies_searched,
        lemma1_pairs,
    })
}

/// Total number of history nodes over all rounds.
fn history_nodes(problem: &Problem, mode: HistoryMode) -> Option<u128> {
    SearchSpace::of(problem, mode).exponent
}

struct Tree<'a> {
    problem: &'a Problem,
    mode: HistoryMode,
    tables: Vec<Vec<usize>>,
    xs: Vec<usize>,
    ys: Vec<usize>,
}

impl Tree<'_> {
    fn index(&self, round: usize) -> usize {
        let n_x = self.problem.x_space().len();
        let n_y = self.problem.y_space().len();
        let mut h = 0;
        for &x in &self.xs[..round] {
            h = h * n_x + x;
        }
        if self.mode == HistoryMode::Revealed {
            for &y in &self.ys[..round - 1] {
                h = h * n_y + y;
            }
        }
        h
    }

    /// Optimal expected loss from the current history node onward, recording
    /// the minimizing estimate in the tables.
    fn value(&mut self) -> f64 {
        let round = self.xs.len();
        let n = self.problem.n();
        let x = self.xs[round - 1];
        let q = self.problem.quantity(round).row(x);
        let n_yhat = self.problem.yhat_space().len();
        let mut values = Vec::with_capacity(n_yhat);
        for a in 0..n_yhat {
            let mut total = 0.0;
            for y in 0..q.len() {
                total += q.get(y) * self.problem.loss().get(x, y, a);
            }
            if round < n {
                let t = self.problem.transition(round + 1).row(x, a);
                match self.mode {
                    HistoryMode::Revealed => {
                        for y in 0..q.len() {
                            self.ys.push(y);
                            let mut future = 0.0;
                            for xn in 0..t.len() {
                                self.xs.push(xn);
                                future += t.get(xn) * self.value();
                                self.xs.pop();
                            }
                            self.ys.pop();
                            total += q.get(y) * future;
                        }
                    }
                    HistoryMode::Unrevealed => {
                        for xn in 0..t.len() {
                            self.xs.push(xn);
                            total += t.get(xn) * self.value();
                            self.xs.pop();
                        }
                    }
                }
            }
            values.push(total);
        }
        let best = argmin_first(&values);
        let h = self.index(round);
        self.tables[round - 1][h] = best;
        values[best]
    }
}

/// Minimum inference loss over all history strategies by exact recursion over
/// the history tree. Covers strategy spaces far too large to enumerate; the
/// work is `|Yhat|` times the number of history nodes, each expanded once per estimate.
pub fn history_tree_optimum(
    problem: &Problem,
    mode: HistoryMode,
    limits: SearchLimits,
) -> Result<OracleReport> {
    let space = SearchSpace::of(problem, mode);
    let nodes = history_nodes(problem, mode);
    // Each node is re-expanded once per estimate of each ancestor.
    let work = nodes.and_then(|m| {
        let per_level = (problem.yhat_space().len() as u128).checked_pow(problem.n() as u32)?;
        m.checked_mul(per_level)
    });
    if work.is_none_or(|w| w > limits.pairs) {
        return Err(Error::SearchSpaceTooLarge {
            count: format!(
                "{} history-node expansions",
                work.map_or_else(|| "more than 2^128".into(), |w| w.to_string())
            ),
            limit: format!("{} pairs", limits.pairs),
        });
    }
    let mut tree = Tree {
        problem,
        mode,
        tables: (1..=problem.n())
            .map(|round| vec![0; history_count(problem, mode, round).unwrap() as usize])
            .collect(),
        xs: Vec::with_capacity(problem.n()),
        ys: Vec::with_capacity(problem.n()),
    };
    let init = problem.init();
    let mut brute_min = 0.0;
    for x in 0..init.len() {
        tree.xs.push(x);
        brute_min += init.get(x) * tree.value();
        tree.xs.pop();
    }
    let witness = HistoryStrategy::from_tables(problem, mode, tree.tables)?;
    let lemma1_pairs = vec![verify_lemma1(problem, &witness)?];
    finish(problem, mode, SearchMethod::HistoryTree, brute_min, witness, space, None, lemma1_pairs)
}

/// Runs the requested search.
pub fn oracle_optimum(
    problem: &Problem,
    mode: HistoryMode,
    method: SearchMethod,
    limits: SearchLimits,
) -> Result<OracleReport> {
    match method {
        SearchMethod::Enumeration => brute_force_optimum(problem, mode, limits),
        SearchMethod::HistoryTree => history_tree_optimum(problem, mode, limits),
    }
}

fn random_row(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    // Strictly positive weights keep every trajectory reachable.
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| v / sum).collect()
}

/// A random instance with stochastic kernels and losses drawn uniformly from `[0, 1)`.
pub fn random_problem(
    rng: &mut impl Rng,
    n: usize,
    n_x: usize,
    n_y: usize,
    n_yhat: usize,
) -> Result<Problem> {
    let labels = |k: usize| (0..k).map(|i| i.to_string()).collect::<Vec<_>>();
    let data = ProblemData {
        n,
        x_space: labels(n_x),
        y_space: labels(n_y),
        yhat_space: labels(n_yhat),
        init: random_row(rng, n_x),
        transitions: (1..n)
            .map(|_| {
                (0..n_x)
                    .map(|_| (0..n_yhat).map(|_| random_row(rng, n_x)).collect())
                    .collect()
            })
            .collect(),
        quantities: (0..n)
            .map(|_| (0..n_x).map(|_| random_row(rng, n_y)).collect())
            .collect(),
        loss: (0..n_x)
            .map(|_| {
                (0..n_y)
                    .map(|_| (0..n_yhat).map(|_| rng.random_range(0.0..1.0)).collect())
                    .collect()
            })
            .collect(),
    };
    crate::model::validate_problem(data)
}

/// A uniformly random deterministic history strategy.
pub fn random_history_strategy(
    problem: &Problem,
    mode: HistoryMode,
    rng: &mut impl Rng,
) -> Result<HistoryStrategy> {
    let n_yhat = problem.yhat_space().len();
    HistoryStrategy::from_fn(problem, mode, |_, _, _| rng.random_range(0..n_yhat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_markov;
    use crate::examples::{example_section33, example_stock};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn strategy_counts() {
        let one = example_section33(1);
        let all: Vec<_> = enumerate_history_strategies(&one, HistoryMode::Revealed, SearchLimits::default())
            .unwrap()
            .collect();
        assert_eq!(all.len(), 4);
        assert_eq!(all[0].tables(), &[vec![0, 0]]);
        assert_eq!(all[1].tables(), &[vec![0, 1]]);
        assert_eq!(all[3].tables(), &[vec![1, 1]]);

        let two = example_section33(2);
        // Round 1: 2 histories; round 2: |X|^2 |Y| = 8 histories.
        let space = SearchSpace::of(&two, HistoryMode::Revealed);
        assert_eq!(space.count(), Some(1 << 10));
        let n = enumerate_history_strategies(&two, HistoryMode::Revealed, SearchLimits::default())
            .unwrap()
            .count();
        assert_eq!(n, 1024);
        let n = enumerate_history_strategies(&two, HistoryMode::Unrevealed, SearchLimits::default())
            .unwrap()
            .count();
        assert_eq!(n, 64);
    }

    #[test]
    fn five_rounds_is_too_large() {
        let p = example_section33(5);
        let err = enumerate_history_strategies(&p, HistoryMode::Revealed, SearchLimits::default())
            .unwrap_err();
        match err {
            Error::SearchSpaceTooLarge { count, .. } => assert_eq!(count, "2^682"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn history_encoding_round_trips() {
        let p = example_section33(3);
        let s = HistoryStrategy::from_fn(&p, HistoryMode::Revealed, |round, xs, ys| {
            // Arbitrary but history-dependent rule.
            (xs.iter().sum::<usize>() + ys.iter().sum::<usize>() + round) % 2
        })
        .unwrap();
        for h in 0..32 {
            let (xs, ys) = decode_history(h, 3, 2, 2, 2);
            assert_eq!(
                s.decide(3, &xs, &ys),
                (xs.iter().sum::<usize>() + ys.iter().sum::<usize>() + 3) % 2
            );
        }
    }

    #[test]
    fn one_round_closed_form() {
        let p = example_stock(1).with_init(crate::model::Distribution::uniform(2)).unwrap();
        let s = HistoryStrategy::from_tables(&p, HistoryMode::Revealed, vec![vec![1, 0]]).unwrap();
        // 0.5 * P(Y != 1 | X = 0) + 0.5 * P(Y != 0 | X = 1)
        let want = 0.5 * 0.6 + 0.5 * 0.7;
        assert!(close(exact_loss_history(&p, &s).unwrap(), want));
        let (lhs, rhs) = verify_lemma1(&p, &s).unwrap();
        assert!(close(lhs, rhs));
    }

    #[test]
    fn lifted_markov_matches_evaluation() {
        let p = example_stock(6);
        let myopic = MarkovStrategy::myopic(&p);
        let lifted = HistoryStrategy::from_markov(&p, &myopic, HistoryMode::Unrevealed).unwrap();
        assert!(close(exact_loss_history(&p, &lifted).unwrap(), 2.4));

        let p = example_section33(2);
        let opt = MarkovStrategy::optimal(&solve(&p, TieBreakRule::MyopicPreferred));
        let lifted = HistoryStrategy::from_markov(&p, &opt, HistoryMode::Revealed).unwrap();
        assert!(close(
            exact_loss_history(&p, &lifted).unwrap(),
            evaluate_markov(&p, &opt).unwrap().j
        ));
    }

    #[test]
    fn incomplete_tables_are_rejected() {
        let p = example_section33(2);
        let err = HistoryStrategy::from_tables(&p, HistoryMode::Revealed, vec![vec![0, 0], vec![0; 4]])
            .unwrap_err();
        assert_eq!(err.kind(), "HistoryIncomplete");
        let err = HistoryStrategy::from_tables(&p, HistoryMode::Revealed, vec![vec![0, 0]]).unwrap_err();
        assert_eq!(err.kind(), "HistoryIncomplete");
    }

    #[test]
    fn lemma1_with_quantity_dependent_strategy() {
        let p = example_section33(2).with_init(crate::model::Distribution::uniform(2)).unwrap();
        let s = HistoryStrategy::from_fn(&p, HistoryMode::Revealed, |round, xs, ys| {
            if round == 1 { xs[0] } else { ys[0] }
        })
        .unwrap();
        let (lhs, rhs) = verify_lemma1(&p, &s).unwrap();
        assert!(close(lhs, rhs), "{lhs} vs {rhs}");
    }

    #[test]
    fn truncated_section33_brute_force() {
        let p = example_section33(3)
            .with_init(crate::model::Distribution::point_mass(2, 1))
            .unwrap();
        let report = brute_force_optimum(&p, HistoryMode::Unrevealed, SearchLimits::default()).unwrap();
        let dp = solve(&p, TieBreakRule::MyopicPreferred);
        assert!(report.gap.abs() <= 1e-9);
        assert!(close(report.brute_min, dp.v(1, 1)));
        assert_eq!(report.strategies_searched, Some(1 << 14));
        assert_eq!(report.search_space.count(), Some(1 << 14));
        assert!(close(exact_loss_history(&p, &report.witness).unwrap(), report.brute_min));
    }

    #[test]
    fn one_round_brute_force_is_bayes_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_problem(&mut rng, 1, 2, 2, 2).unwrap();
        let report = brute_force_optimum(&p, HistoryMode::Revealed, SearchLimits::default()).unwrap();
        let myopic = MarkovStrategy::myopic(&p);
        assert!(close(report.brute_min, evaluate_markov(&p, &myopic).unwrap().j));
        assert_eq!(report.strategies_searched, Some(4));
    }

    #[test]
    fn tree_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = random_problem(&mut rng, 2, 2, 2, 2).unwrap();
            for mode in [HistoryMode::Revealed, HistoryMode::Unrevealed] {
                let brute = brute_force_optimum(&p, mode, SearchLimits::default()).unwrap();
                let tree = history_tree_optimum(&p, mode, SearchLimits::default()).unwrap();
                assert!((brute.brute_min - tree.brute_min).abs() <= 1e-12);
                assert!(close(exact_loss_history(&p, &tree.witness).unwrap(), tree.brute_min));
            }
        }
    }

    #[test]
    fn tree_handles_three_revealed_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_problem(&mut rng, 3, 2, 2, 2).unwrap();
        assert!(brute_force_optimum(&p, HistoryMode::Revealed, SearchLimits::default()).is_err());
        let report = history_tree_optimum(&p, HistoryMode::Revealed, SearchLimits::default()).unwrap();
        assert_eq!(report.search_space.exponent, Some(42));
        assert!(report.gap.abs() <= 1e-9);
    }

    #[test]
    fn parses_modes_and_methods() {
        assert_eq!("revealed".parse::<HistoryMode>().unwrap(), HistoryMode::Revealed);
        assert_eq!("unrevealed".parse::<HistoryMode>().unwrap(), HistoryMode::Unrevealed);
        assert!("both".parse::<HistoryMode>().is_err());
        assert_eq!("tree".parse::<SearchMethod>().unwrap(), SearchMethod::HistoryTree);
    }
}
