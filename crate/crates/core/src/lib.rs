//! Dynamic inference on finite spaces.
//!
//! Each round an estimator observes `X_i`, estimates a hidden quantity `Y_i`
//! and pays a contextual loss `l(X_i, Y_i, Yhat_i)`; the estimate then feeds
//! back into the law of the next observation. Marginalizing `Y_i` turns the
//! problem into a finite-horizon MDP, which backward induction solves exactly
//! with Markov estimators. The [`oracle`] module checks that claim by brute
//! force over history-dependent strategies.

pub mod error;
pub mod eval;
pub mod examples;
pub mod format;
pub mod model;
pub mod oracle;
pub mod reduction;
pub mod sim;
pub mod solver;
pub mod trellis;

pub use error::{Error, Result};
pub use eval::{evaluate_markov, loss_to_go, EvalResult, MarkovStrategy};
pub use examples::{example_section33, example_stock, example_yield, Planner, YieldParams};
pub use model::{
    make_stationary_problem, validate_problem, Alphabet, Distribution, Problem, ProblemData,
    StationaryModel,
};
pub use oracle::{
    brute_force_optimum, enumerate_history_strategies, exact_loss_history, history_tree_optimum,
    verify_lemma1, HistoryMode, HistoryStrategy, OracleReport, SearchLimits, SearchMethod,
};
pub use reduction::{
    bar_loss_table, myopic_bayes_estimate, observation_estimate_loss, to_mdp, BarLossTable,
    MdpView,
};
pub use sim::{simulate, SimOptions, SimOutput, Trajectory};
pub use solver::{
    minimum_inference_loss, solution_report, solve, SolutionReport, SolveResult, TieBreakRule,
};
pub use trellis::{build_trellis, export_trellis, TrellisDocument, TrellisFormat};
