//! JSON and CSV file formats. See `docs/FORMATS.md` for the schemas.
//!
//! Emitted JSON has sorted object keys. Numbers in result documents are
//! rounded to 12 significant digits; model files keep full precision.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalResult, MarkovStrategy};
use crate::model::{validate_problem, Problem, ProblemData};
use crate::oracle::{HistoryStrategy, OracleReport};
use crate::reduction::BarLossTable;
use crate::sim::SimOutput;
use crate::solver::{SolveResult, TieBreakRule};

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

/// Serializes with object keys in sorted order.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("document serializes");
    let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
    s.push('\n');
    s
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossRecord {
    pub x: String,
    pub y: String,
    pub yhat: String,
    pub value: f64,
}

type Row = BTreeMap<String, f64>;

/// On-disk model. Transition rows are keyed `"x_prev|yhat_prev"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stationary: bool,
    pub x_space: Vec<String>,
    pub y_space: Vec<String>,
    pub yhat_space: Vec<String>,
    pub init: Row,
    pub transitions: Vec<BTreeMap<String, Row>>,
    pub quantities: Vec<BTreeMap<String, Row>>,
    pub loss: Vec<LossRecord>,
}

fn index_map<'a>(labels: &'a [String]) -> BTreeMap<&'a str, usize> {
    labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
}

fn dense_row(row: &Row, labels: &[String], alphabet: &str) -> Result<Vec<f64>> {
    let index = index_map(labels);
    let mut out = vec![0.0; labels.len()];
    for (label, p) in row {
        let i = *index.get(label.as_str()).ok_or_else(|| Error::UnknownLabel {
            alphabet: alphabet.into(),
            label: label.clone(),
        })?;
        out[i] = *p;
    }
    Ok(out)
}

fn sparse_row(probs: &[f64], labels: &[String]) -> Row {
    labels.iter().cloned().zip(probs.iter().copied()).collect()
}

fn transition_key(x: &str, yhat: &str) -> String {
    format!("{x}|{yhat}")
}

impl ModelFile {
    pub fn to_data(&self) -> Result<ProblemData> {
        for (name, labels) in [("x_space", &self.x_space), ("yhat_space", &self.yhat_space)] {
            if let Some(l) = labels.iter().find(|l| l.contains('|')) {
                return Err(Error::InvalidAlphabet {
                    name: name.into(),
                    reason: format!("label {l:?} contains '|'"),
                });
            }
        }
        let (nx, ny, nyhat) = (self.x_space.len(), self.y_space.len(), self.yhat_space.len());

        let transition = |table: &BTreeMap<String, Row>, round: usize| -> Result<Vec<Vec<Vec<f64>>>> {
            let known: BTreeMap<String, ()> = self
                .x_space
                .iter()
                .flat_map(|x| self.yhat_space.iter().map(move |a| (transition_key(x, a), ())))
                .collect();
            if let Some(k) = table.keys().find(|k| !known.contains_key(*k)) {
                return Err(Error::UnknownLabel {
                    alphabet: format!("x_prev|yhat_prev (transition round {round})"),
                    label: k.clone(),
                });
            }
            if table.len() != nx * nyhat {
                return Err(Error::DimensionMismatch {
                    context: format!("transition kernel of round {round}"),
                    expected: nx * nyhat,
                    found: table.len(),
                });
            }
            self.x_space
                .iter()
                .map(|x| {
                    self.yhat_space
                        .iter()
                        .map(|a| dense_row(&table[&transition_key(x, a)], &self.x_space, "x_space"))
                        .collect()
                })
                .collect()
        };
        let quantity = |table: &BTreeMap<String, Row>, round: usize| -> Result<Vec<Vec<f64>>> {
            if let Some(k) = table.keys().find(|k| !self.x_space.contains(k)) {
                return Err(Error::UnknownLabel {
                    alphabet: "x_space".into(),
                    label: k.clone(),
                });
            }
            if table.len() != nx {
                return Err(Error::DimensionMismatch {
                    context: format!("quantity kernel of round {round}"),
                    expected: nx,
                    found: table.len(),
                });
            }
            self.x_space
                .iter()
                .map(|x| dense_row(&table[x], &self.y_space, "y_space"))
                .collect()
        };

        let mut transitions = self
            .transitions
            .iter()
            .enumerate()
            .map(|(k, t)| transition(t, k + 2))
            .collect::<Result<Vec<_>>>()?;
        let mut quantities = self
            .quantities
            .iter()
            .enumerate()
            .map(|(k, q)| quantity(q, k + 1))
            .collect::<Result<Vec<_>>>()?;

        if self.stationary {
            let expected_t = usize::from(self.n > 1);
            if transitions.len() > 1 || transitions.len() < expected_t {
                return Err(Error::HorizonMismatch {
                    n: self.n,
                    kind: "stationary transition",
                    expected: 1,
                    found: transitions.len(),
                });
            }
            if quantities.len() != 1 {
                return Err(Error::HorizonMismatch {
                    n: self.n,
                    kind: "stationary quantity",
                    expected: 1,
                    found: quantities.len(),
                });
            }
            let t = transitions.pop();
            transitions = t
                .map(|t| vec![t; self.n.saturating_sub(1)])
                .unwrap_or_default();
            quantities = vec![quantities.pop().unwrap(); self.n];
        }

        let xi = index_map(&self.x_space);
        let yi = index_map(&self.y_space);
        let ai = index_map(&self.yhat_space);
        let mut loss = vec![vec![vec![None; nyhat]; ny]; nx];
        for r in &self.loss {
            let lookup = |m: &BTreeMap<&str, usize>, l: &str, a: &str| {
                m.get(l).copied().ok_or_else(|| Error::UnknownLabel {
                    alphabet: a.into(),
                    label: l.into(),
                })
            };
            let (x, y, a) = (
                lookup(&xi, &r.x, "x_space")?,
                lookup(&yi, &r.y, "y_space")?,
                lookup(&ai, &r.yhat, "yhat_space")?,
            );
            if loss[x][y][a].replace(r.value).is_some() {
                return Err(Error::InvalidLoss(format!(
                    "duplicate entry ({}, {}, {})",
                    r.x, r.y, r.yhat
                )));
            }
        }
        let loss = loss
            .into_iter()
            .enumerate()
            .map(|(x, per_y)| {
                per_y
                    .into_iter()
                    .enumerate()
                    .map(|(y, per_a)| {
                        per_a
                            .into_iter()
                            .enumerate()
                            .map(|(a, v)| {
                                v.ok_or_else(|| {
                                    Error::InvalidLoss(format!(
                                        "missing entry ({}, {}, {})",
                                        self.x_space[x], self.y_space[y], self.yhat_space[a]
                                    ))
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(ProblemData {
            n: self.n,
            x_space: self.x_space.clone(),
            y_space: self.y_space.clone(),
            yhat_space: self.yhat_space.clone(),
            init: dense_row(&self.init, &self.x_space, "x_space")?,
            transitions,
            quantities,
            loss,
        })
    }

    pub fn from_problem(problem: &Problem) -> Self {
        let data = problem.to_data();
        let transitions = data
            .transitions
            .iter()
            .map(|t| {
                let mut table = BTreeMap::new();
                for (x, per_a) in data.x_space.iter().zip(t) {
                    for (a, row) in data.yhat_space.iter().zip(per_a) {
                        table.insert(transition_key(x, a), sparse_row(row, &data.x_space));
                    }
                }
                table
            })
            .collect();
        let quantities = data
            .quantities
            .iter()
            .map(|q| {
                data.x_space
                    .iter()
                    .zip(q)
                    .map(|(x, row)| (x.clone(), sparse_row(row, &data.y_space)))
                    .collect()
            })
            .collect();
        let mut loss = Vec::new();
        for (x, per_y) in data.x_space.iter().zip(&data.loss) {
            for (y, per_a) in data.y_space.iter().zip(per_y) {
                for (a, v) in data.yhat_space.iter().zip(per_a) {
                    loss.push(LossRecord {
                        x: x.clone(),
                        y: y.clone(),
                        yhat: a.clone(),
                        value: *v,
                    });
                }
            }
        }
        ModelFile {
            n: data.n,
            stationary: false,
            init: sparse_row(&data.init, &data.x_space),
            x_space: data.x_space,
            y_space: data.y_space,
            yhat_space: data.yhat_space,
            transitions,
            quantities,
            loss,
        }
    }
}

pub fn parse_model(text: &str) -> Result<Problem> {
    let file: ModelFile = parse_json(text, "model file")?;
    validate_problem(file.to_data()?)
}

pub fn write_model(problem: &Problem) -> String {
    to_json(&ModelFile::from_problem(problem))
}

/// `{"policy": [{x: yhat}, ...]}`, one object per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub policy: Vec<BTreeMap<String, String>>,
}

impl StrategyFile {
    pub fn from_strategy(problem: &Problem, strategy: &MarkovStrategy) -> Self {
        StrategyFile {
            policy: labelled_policy(problem, strategy.table()),
        }
    }

    pub fn to_strategy(&self, problem: &Problem) -> Result<MarkovStrategy> {
        if self.policy.len() != problem.n() {
            return Err(Error::ShapeMismatch(format!(
                "strategy covers {} rounds, problem has {}",
                self.policy.len(),
                problem.n()
            )));
        }
        let table = self
            .policy
            .iter()
            .enumerate()
            .map(|(k, round)| {
                let mut row = vec![None; problem.x_space().len()];
                for (x, a) in round {
                    let x = problem.x_space().index_of(x)?;
                    row[x] = Some(problem.yhat_space().index_of(a)?);
                }
                row.into_iter()
                    .enumerate()
                    .map(|(x, a)| {
                        a.ok_or_else(|| {
                            Error::ShapeMismatch(format!(
                                "round {} has no estimate for x = {}",
                                k + 1,
                                problem.x_space().label(x)
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MarkovStrategy::new(table))
    }
}

pub fn parse_strategy(problem: &Problem, text: &str) -> Result<MarkovStrategy> {
    parse_json::<StrategyFile>(text, "strategy file")?.to_strategy(problem)
}

fn labelled_policy(problem: &Problem, table: &[Vec<usize>]) -> Vec<BTreeMap<String, String>> {
    table
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(x, &a)| {
                    (
                        problem.x_space().label(x).to_string(),
                        problem.yhat_space().label(a).to_string(),
                    )
                })
                .collect()
        })
        .collect()
}

fn labelled_values(problem: &Problem, table: &[Vec<f64>]) -> Vec<BTreeMap<String, f64>> {
    table
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(x, &v)| (problem.x_space().label(x).to_string(), round12(v)))
                .collect()
        })
        .collect()
}

/// Output of the `solve` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveDocument {
    pub tie_break: String,
    pub v_star: Vec<BTreeMap<String, f64>>,
    pub q_star: Vec<BTreeMap<String, BTreeMap<String, f64>>>,
    pub policy: Vec<BTreeMap<String, String>>,
    pub ties: Vec<BTreeMap<String, Vec<String>>>,
    pub min_loss: f64,
}

impl SolveDocument {
    pub fn new(problem: &Problem, result: &SolveResult, min_loss: f64) -> Self {
        let xs = problem.x_space();
        let ys = problem.yhat_space();
        let rounds = 1..=result.n();
        SolveDocument {
            tie_break: match result.rule() {
                TieBreakRule::MyopicPreferred => "myopic".into(),
                TieBreakRule::FirstIndex => "first".into(),
            },
            v_star: labelled_values(problem, result.v_table()),
            q_star: rounds
                .clone()
                .map(|round| {
                    (0..xs.len())
                        .map(|x| {
                            let row = (0..ys.len())
                                .map(|a| (ys.label(a).to_string(), round12(result.q(round, x, a))))
                                .collect();
                            (xs.label(x).to_string(), row)
                        })
                        .collect()
                })
                .collect(),
            policy: labelled_policy(problem, result.policy_table()),
            ties: rounds
                .map(|round| {
                    (0..xs.len())
                        .map(|x| {
                            let tied = result
                                .ties(round, x)
                                .iter()
                                .map(|&a| ys.label(a).to_string())
                                .collect();
                            (xs.label(x).to_string(), tied)
                        })
                        .collect()
                })
                .collect(),
            min_loss: round12(min_loss),
        }
    }
}

/// Output of the `evaluate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalDocument {
    pub j: f64,
    pub v: Vec<BTreeMap<String, f64>>,
}

impl EvalDocument {
    pub fn new(problem: &Problem, result: &EvalResult) -> Self {
        EvalDocument {
            j: round12(result.j),
            v: labelled_values(problem, result.v_table()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDocument {
    pub id: u64,
    pub xs: Vec<String>,
    pub ys: Vec<String>,
    pub yhats: Vec<String>,
    pub loss: f64,
}

/// Output of the `simulate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDocument {
    pub mean: f64,
    pub var: f64,
    pub rollouts: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<TrajectoryDocument>,
}

impl SimDocument {
    pub fn new(problem: &Problem, out: &SimOutput) -> Self {
        let labels = |alphabet: &crate::model::Alphabet, idx: &[usize]| {
            idx.iter().map(|&i| alphabet.label(i).to_string()).collect()
        };
        SimDocument {
            mean: round12(out.mean),
            var: round12(out.var),
            rollouts: out.rollouts as u64,
            seed: out.seed,
            trajectories: out
                .trajectories
                .iter()
                .map(|t| TrajectoryDocument {
                    id: t.id,
                    xs: labels(problem.x_space(), &t.xs),
                    ys: labels(problem.y_space(), &t.ys),
                    yhats: labels(problem.yhat_space(), &t.yhats),
                    loss: round12(t.loss),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryStrategyDocument {
    pub mode: String,
    /// `tables[round - 1][h]`, histories in lexicographic order.
    pub tables: Vec<Vec<String>>,
}

impl HistoryStrategyDocument {
    pub fn new(problem: &Problem, strategy: &HistoryStrategy) -> Self {
        HistoryStrategyDocument {
            mode: strategy.mode().to_string(),
            tables: strategy
                .tables()
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|&a| problem.yhat_space().label(a).to_string())
                        .collect()
                })
                .collect(),
        }
    }
}

/// Output of the `verify` subcommand, one per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDocument {
    pub mode: String,
    pub method: String,
    pub brute_min: f64,
    pub dp_min: f64,
    pub gap: f64,
    pub search_space: String,
    pub strategies_searched: Option<u64>,
    pub witness: HistoryStrategyDocument,
    pub lemma1_pairs: Vec<[f64; 2]>,
}

impl OracleDocument {
    pub fn new(problem: &Problem, report: &OracleReport) -> Self {
        OracleDocument {
            mode: report.mode.to_string(),
            method: report.method.to_string(),
            brute_min: round12(report.brute_min),
            dp_min: round12(report.dp_min),
            gap: round12(report.gap),
            search_space: report.search_space.to_string(),
            strategies_searched: report.strategies_searched.map(|c| c as u64),
            witness: HistoryStrategyDocument::new(problem, &report.witness),
            lemma1_pairs: report
                .lemma1_pairs
                .iter()
                .map(|&(l, r)| [round12(l), round12(r)])
                .collect(),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `round,x,yhat,value` with one header row and 12 significant digits.
pub fn bar_loss_csv(problem: &Problem, table: &BarLossTable) -> String {
    let mut out = String::from("round,x,yhat,value\n");
    for round in 1..=table.n() {
        for (x, xl) in problem.x_space().labels().iter().enumerate() {
            for (a, al) in problem.yhat_space().labels().iter().enumerate() {
                out.push_str(&format!(
                    "{round},{},{},{}\n",
                    csv_field(xl),
                    csv_field(al),
                    round12(table.get(round, x, a))
                ));
            }
        }
    }
    out
}
