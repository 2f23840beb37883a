//! Browser demo. Each operation takes plain arguments, returns a JSON string,
//! and has a `#[wasm_bindgen]` wrapper; the pure functions are what the
//! native tests exercise.

use dyninfer::format::{parse_model, round12};
use dyninfer::{
    build_trellis, evaluate_markov, example_section33, example_stock, example_yield,
    minimum_inference_loss, simulate, solve, MarkovStrategy, Planner, Problem, SimOptions,
    TieBreakRule, YieldParams,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Largest horizon the demo accepts; the page draws one column per round.
pub const MAX_ROUNDS: usize = 30;
/// Upper bound on rollouts so a click cannot freeze the tab.
pub const MAX_ROLLOUTS: usize = 1_000_000;

#[derive(Serialize)]
struct NodeView {
    round: usize,
    x: String,
    v_star: f64,
    chosen: String,
    myopic: String,
    tie: bool,
}

#[derive(Serialize)]
struct EdgeView {
    round: usize,
    from: usize,
    to: usize,
    yhat: String,
    prob: f64,
    chosen: bool,
    deviation: bool,
}

#[derive(Serialize)]
struct TrellisView {
    n: usize,
    x_labels: Vec<String>,
    nodes: Vec<NodeView>,
    edges: Vec<EdgeView>,
    min_loss: f64,
    myopic_loss: f64,
    dot: String,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn check_rounds(n: usize) -> Result<(), String> {
    if (1..=MAX_ROUNDS).contains(&n) {
        Ok(())
    } else {
        Err(format!("rounds must be between 1 and {MAX_ROUNDS}"))
    }
}

fn builtin(example: &str, n: usize) -> Result<Problem, String> {
    check_rounds(n)?;
    match example {
        "section33" => Ok(example_section33(n)),
        "stock" => Ok(example_stock(n)),
        "yield" => example_yield(n, &YieldParams::default()).map_err(err),
        other => Err(format!("unknown example {other:?}")),
    }
}

fn trellis_view(problem: &Problem, tie_break: &str) -> Result<String, String> {
    let rule: TieBreakRule = tie_break.parse().map_err(err)?;
    let result = solve(problem, rule);
    let doc = build_trellis(problem, &result).map_err(err)?;
    let myopic = evaluate_markov(problem, &MarkovStrategy::myopic(problem)).map_err(err)?;
    let view = TrellisView {
        n: doc.n,
        x_labels: problem.x_space().labels().to_vec(),
        nodes: doc
            .nodes
            .iter()
            .map(|node| NodeView {
                round: node.round,
                x: node.label.clone(),
                v_star: round12(node.v_star),
                chosen: node.chosen.clone(),
                myopic: node.myopic.clone(),
                tie: node.tie,
            })
            .collect(),
        edges: doc
            .edges
            .iter()
            .map(|e| EdgeView {
                round: e.round,
                from: e.from,
                to: e.to,
                yhat: e.yhat.clone(),
                prob: round12(e.prob),
                chosen: e.chosen,
                deviation: e.deviation,
            })
            .collect(),
        min_loss: round12(minimum_inference_loss(problem, &result).map_err(err)?),
        myopic_loss: round12(myopic.j),
        dot: doc.to_dot(),
    };
    serde_json::to_string(&view).map_err(err)
}

/// Solved trellis of a built-in example (`section33`, `stock` or `yield`).
pub fn trellis_json(example: &str, n: usize, tie_break: &str) -> Result<String, String> {
    trellis_view(&builtin(example, n)?, tie_break)
}

/// Solved trellis of a model pasted in the model-file JSON format.
pub fn trellis_from_model_json(model: &str, tie_break: &str) -> Result<String, String> {
    let problem = parse_model(model).map_err(err)?;
    check_rounds(problem.n())?;
    trellis_view(&problem, tie_break)
}

/// Yield-scenario knobs as sent by the page. Missing fields take the defaults.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YieldRequest {
    pub n: usize,
    pub beta: f64,
    pub d_c: f64,
    pub c_missed: f64,
    pub c_danger: f64,
    pub shift_prob: f64,
    pub planner: String,
}

impl Default for YieldRequest {
    fn default() -> Self {
        let p = YieldParams::default();
        YieldRequest {
            n: 6,
            beta: p.beta,
            d_c: p.d_c,
            c_missed: p.c_missed,
            c_danger: p.c_danger,
            shift_prob: p.shift_prob,
            planner: "persist".into(),
        }
    }
}

#[derive(Serialize)]
struct YieldView {
    grid: Vec<f64>,
    yield_prob: Vec<f64>,
    /// `policy[round - 1][x]`, estimate labels.
    policy: Vec<Vec<String>>,
    myopic: Vec<Vec<String>>,
    v_star: Vec<Vec<f64>>,
    min_loss: f64,
    myopic_loss: f64,
}

/// Optimal and myopic yield predictions over the distance grid, per round.
pub fn yield_policy_json(request: &str) -> Result<String, String> {
    let req: YieldRequest = serde_json::from_str(request).map_err(err)?;
    check_rounds(req.n)?;
    let planner = match req.planner.as_str() {
        "persist" => Planner::Persist,
        "fall-back" => Planner::FallBack,
        other => return Err(format!("unknown planner {other:?} (expected persist|fall-back)")),
    };
    let params = YieldParams {
        beta: req.beta,
        d_c: req.d_c,
        c_missed: req.c_missed,
        c_danger: req.c_danger,
        shift_prob: req.shift_prob,
        planner,
        ..YieldParams::default()
    };
    let problem = example_yield(req.n, &params).map_err(err)?;
    let result = solve(&problem, TieBreakRule::MyopicPreferred);
    let labels = problem.yhat_space();
    let label_rows = |table: &[Vec<usize>]| -> Vec<Vec<String>> {
        table
            .iter()
            .map(|row| row.iter().map(|&a| labels.label(a).to_string()).collect())
            .collect()
    };
    let myopic = MarkovStrategy::myopic(&problem);
    let view = YieldView {
        yield_prob: params.grid.iter().map(|&g| round12(params.yield_prob(g))).collect(),
        grid: params.grid.clone(),
        policy: label_rows(result.policy_table()),
        myopic: label_rows(myopic.table()),
        v_star: result
            .v_table()
            .iter()
            .map(|row| row.iter().map(|&v| round12(v)).collect())
            .collect(),
        min_loss: round12(minimum_inference_loss(&problem, &result).map_err(err)?),
        myopic_loss: round12(evaluate_markov(&problem, &myopic).map_err(err)?.j),
    };
    serde_json::to_string(&view).map_err(err)
}

#[derive(Serialize)]
struct MonteCarloView {
    exact: f64,
    mean: f64,
    std_error: f64,
    /// `(mean - exact) / std_error`; 0 when the estimate has no spread.
    z: f64,
    rollouts: usize,
    seed: u64,
}

/// Simulated vs exact expected loss of the `optimal` or `myopic` strategy.
pub fn monte_carlo_json(
    example: &str,
    n: usize,
    strategy: &str,
    rollouts: usize,
    seed: u64,
) -> Result<String, String> {
    if !(1..=MAX_ROLLOUTS).contains(&rollouts) {
        return Err(format!("rollouts must be between 1 and {MAX_ROLLOUTS}"));
    }
    let problem = builtin(example, n)?;
    let strategy = match strategy {
        "optimal" => MarkovStrategy::optimal(&solve(&problem, TieBreakRule::MyopicPreferred)),
        "myopic" => MarkovStrategy::myopic(&problem),
        other => return Err(format!("unknown strategy {other:?} (expected optimal|myopic)")),
    };
    let exact = evaluate_markov(&problem, &strategy).map_err(err)?.j;
    let out = simulate(&problem, &strategy, SimOptions::new(rollouts, seed)).map_err(err)?;
    let se = out.std_error();
    let z = if se > 0.0 { (out.mean - exact) / se } else { 0.0 };
    let view = MonteCarloView {
        exact: round12(exact),
        mean: round12(out.mean),
        std_error: round12(se),
        z: round12(z),
        rollouts,
        seed,
    };
    serde_json::to_string(&view).map_err(err)
}

#[wasm_bindgen]
pub fn trellis(example: &str, n: usize, tie_break: &str) -> Result<String, JsError> {
    trellis_json(example, n, tie_break).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trellisFromModel)]
pub fn trellis_from_model(model: &str, tie_break: &str) -> Result<String, JsError> {
    trellis_from_model_json(model, tie_break).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = yieldPolicy)]
pub fn yield_policy(request: &str) -> Result<String, JsError> {
    yield_policy_json(request).map_err(|e| JsError::new(&e))
}

/// `seed` arrives as a JS number; values above 2^53 lose precision there anyway.
#[wasm_bindgen(js_name = monteCarlo)]
pub fn monte_carlo(
    example: &str,
    n: usize,
    strategy: &str,
    rollouts: usize,
    seed: f64,
) -> Result<String, JsError> {
    if !(seed >= 0.0 && seed.fract() == 0.0) {
        return Err(JsError::new("seed must be a non-negative integer"));
    }
    monte_carlo_json(example, n, strategy, rollouts, seed as u64).map_err(|e| JsError::new(&e))
}
