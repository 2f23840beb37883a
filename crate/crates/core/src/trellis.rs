//! Unrolled observation-transition diagram annotated with the DP solution.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::Problem;
use crate::solver::SolveResult;

#[derive(Debug, Clone, PartialEq)]
pub struct TrellisNode {
    pub round: usize,
    pub x: usize,
    pub label: String,
    pub v_star: f64,
    pub chosen: String,
    pub myopic: String,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrellisEdge {
    /// Round of the source node; the target is in `round + 1`.
    pub round: usize,
    pub from: usize,
    pub to: usize,
    pub yhat: String,
    pub prob: f64,
    /// The edge follows the optimal estimate.
    pub chosen: bool,
    /// The edge follows an optimal estimate that differs from the myopic one.
    pub deviation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrellisDocument {
    pub n: usize,
    pub nodes: Vec<TrellisNode>,
    pub edges: Vec<TrellisEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrellisFormat {
    Dot,
    Text,
}

impl std::str::FromStr for TrellisFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(TrellisFormat::Dot),
            "text" => Ok(TrellisFormat::Text),
            other => Err(Error::Parse(format!(
                "unknown trellis format {other:?} (expected dot|text)"
            ))),
        }
    }
}

pub fn build_trellis(problem: &Problem, result: &SolveResult) -> Result<TrellisDocument> {
    result.check_matches(problem)?;
    let (n, n_x, n_yhat) = (problem.n(), problem.x_space().len(), problem.yhat_space().len());
    let ys = problem.yhat_space();
    let mut nodes = Vec::with_capacity(n * n_x);
    let mut edges = Vec::new();
    for round in 1..=n {
        for x in 0..n_x {
            let chosen = result.action(round, x);
            let myopic = result.myopic(round, x);
            nodes.push(TrellisNode {
                round,
                x,
                label: problem.x_space().label(x).to_string(),
                v_star: result.v(round, x),
                chosen: ys.label(chosen).to_string(),
                myopic: ys.label(myopic).to_string(),
                tie: result.ties(round, x).len() > 1,
            });
            if round == n {
                continue;
            }
            let kernel = problem.transition(round + 1);
            for a in 0..n_yhat {
                for to in 0..n_x {
                    let prob = kernel.prob(x, a, to);
                    if prob > 0.0 {
                        edges.push(TrellisEdge {
                            round,
                            from: x,
                            to,
                            yhat: ys.label(a).to_string(),
                            prob,
                            chosen: a == chosen,
                            deviation: a == chosen && chosen != myopic,
                        });
                    }
                }
            }
        }
    }
    Ok(TrellisDocument { n, nodes, edges })
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl TrellisDocument {
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        out.push_str("digraph trellis {\n  rankdir=LR;\n  node [shape=box];\n");
        for round in 1..=self.n {
            let _ = writeln!(out, "  subgraph round_{round} {{\n    rank=same;");
            for node in self.nodes.iter().filter(|n| n.round == round) {
                let _ = writeln!(
                    out,
                    "    r{}_x{} [label=\"x={}\\nV*={:.4}\"];",
                    node.round,
                    node.x,
                    escape(&node.label),
                    node.v_star
                );
            }
            out.push_str("  }\n");
        }
        for e in &self.edges {
            let label = if e.prob < 1.0 {
                format!("yhat={} p={:.4}", escape(&e.yhat), e.prob)
            } else {
                format!("yhat={}", escape(&e.yhat))
            };
            let style = if e.chosen { "solid" } else { "dashed" };
            let color = if e.deviation { ", color=blue" } else { "" };
            let _ = writeln!(
                out,
                "  r{}_x{} -> r{}_x{} [label=\"{label}\", style={style}{color}];",
                e.round,
                e.from,
                e.round + 1,
                e.to
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .nodes
            .iter()
            .flat_map(|n| [n.label.len(), n.chosen.len(), n.myopic.len()])
            .max()
            .unwrap_or(1)
            .max(6);
        let mut out = String::new();
        for round in 1..=self.n {
            let _ = writeln!(out, "round {round}");
            let _ = writeln!(
                out,
                "  {:<width$}  {:>10}  {:<width$}  {:<width$}  tie",
                "x", "V*", "yhat*", "myopic"
            );
            for node in self.nodes.iter().filter(|n| n.round == round) {
                let _ = writeln!(
                    out,
                    "  {:<width$}  {:>10.4}  {:<width$}  {:<width$}  {}",
                    node.label,
                    node.v_star,
                    node.chosen,
                    node.myopic,
                    if node.tie { "yes" } else { "no" }
                );
            }
        }
        out
    }

    pub fn render(&self, format: TrellisFormat) -> String {
        match format {
            TrellisFormat::Dot => self.to_dot(),
            TrellisFormat::Text => self.to_text(),
        }
    }
}

pub fn export_trellis(
    problem: &Problem,
    result: &SolveResult,
    format: TrellisFormat,
) -> Result<String> {
    Ok(build_trellis(problem, result)?.render(format))
}
