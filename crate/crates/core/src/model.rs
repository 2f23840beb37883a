//! Problem instances: alphabets, kernels, contextual loss and horizon.
//!
//! Rounds are 1-indexed everywhere in the public API. The transition kernel
//! for round `i` (2..=n) gives the law of the round-`i` observation given the
//! round-`i-1` observation and estimate; the quantity kernel for round `i`
//! (1..=n) gives the law of the hidden quantity given the round-`i` observation.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Largest admissible deviation of a row sum from one before validation rejects it.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A finite, ordered set of distinct labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    name: String,
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(name: &str, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let invalid = |reason: String| Error::InvalidAlphabet {
            name: name.to_string(),
            reason,
        };
        if labels.is_empty() {
            return Err(invalid("alphabet is empty".into()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(invalid(format!("duplicate label {label:?}")));
            }
        }
        Ok(Alphabet {
            name: name.to_string(),
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; alphabets are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                alphabet: self.name.clone(),
                label: label.to_string(),
            })
    }

    pub fn check_index(&self, index: usize) -> Result<usize> {
        if index < self.labels.len() {
            Ok(index)
        } else {
            Err(Error::UnknownLabel {
                alphabet: self.name.clone(),
                label: format!("#{index}"),
            })
        }
    }
}

/// A probability vector over the indices of some alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates `probs`; a row whose sum is off by at most [`ROW_TOLERANCE`]
    /// is re-normalized, anything further off is rejected.
    pub fn new(probs: Vec<f64>, context: &str) -> Result<Self> {
        let not_stochastic = |reason: String| Error::NotStochastic {
            context: context.to_string(),
            reason,
        };
        if probs.is_empty() {
            return Err(not_stochastic("empty row".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(not_stochastic(format!("entry {p} is negative or not finite")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(not_stochastic(format!("row sums to {sum}")));
        }
        if sum == 1.0 {
            Ok(Distribution(probs))
        } else {
            Ok(Distribution(probs.into_iter().map(|p| p / sum).collect()))
        }
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        assert!(index < len, "point mass index {index} out of range {len}");
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Distribution(probs)
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Distribution(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    /// Index of the unique unit entry, if the distribution is a point mass.
    pub fn point_mass_index(&self) -> Option<usize> {
        let mut ones = self.0.iter().enumerate().filter(|(_, p)| **p != 0.0);
        match (ones.next(), ones.next()) {
            (Some((i, p)), None) if *p == 1.0 => Some(i),
            _ => None,
        }
    }
}

/// Observation-transition kernel: `(x_prev, yhat_prev) -> law of x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    n_yhat: usize,
    rows: Vec<Distribution>,
}

impl TransitionKernel {
    pub fn row(&self, x_prev: usize, yhat_prev: usize) -> &Distribution {
        &self.rows[x_prev * self.n_yhat + yhat_prev]
    }

    /// Probability of moving to `x_next` from `x_prev` after estimating `yhat_prev`.
    pub fn prob(&self, x_prev: usize, yhat_prev: usize, x_next: usize) -> f64 {
        self.row(x_prev, yhat_prev).get(x_next)
    }
}

/// Quantity-generation kernel: `x -> law of y`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityKernel {
    rows: Vec<Distribution>,
}

impl QuantityKernel {
    pub fn row(&self, x: usize) -> &Distribution {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x].get(y)
    }
}

/// Contextual loss `l(x, y, yhat)`, dense over all triples.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualLoss {
    n_y: usize,
    n_yhat: usize,
    values: Vec<f64>,
}

impl ContextualLoss {
    pub fn get(&self, x: usize, y: usize, yhat: usize) -> f64 {
        self.values[(x * self.n_y + y) * self.n_yhat + yhat]
    }
}

/// Unvalidated, index-based problem data.
///
/// Array layouts: `transitions[k][x_prev][yhat_prev][x]` for round `k + 2`,
/// `quantities[k][x][y]` for round `k + 1`, `loss[x][y][yhat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub n: usize,
    pub x_space: Vec<String>,
    pub y_space: Vec<String>,
    pub yhat_space: Vec<String>,
    pub init: Vec<f64>,
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    pub quantities: Vec<Vec<Vec<f64>>>,
    pub loss: Vec<Vec<Vec<f64>>>,
}

/// Single-round tables of a stationary model, expanded to any horizon by
/// [`make_stationary_problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryModel {
    pub x_space: Vec<String>,
    pub y_space: Vec<String>,
    pub yhat_space: Vec<String>,
    pub init: Vec<f64>,
    /// `transition[x_prev][yhat_prev][x]`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `quantity[x][y]`
    pub quantity: Vec<Vec<f64>>,
    /// `loss[x][y][yhat]`
    pub loss: Vec<Vec<Vec<f64>>>,
}

impl StationaryModel {
    pub fn expand(&self, n: usize) -> ProblemData {
        ProblemData {
            n,
            x_space: self.x_space.clone(),
            y_space: self.y_space.clone(),
            yhat_space: self.yhat_space.clone(),
            init: self.init.clone(),
            transitions: vec![self.transition.clone(); n.saturating_sub(1)],
            quantities: vec![self.quantity.clone(); n],
            loss: self.loss.clone(),
        }
    }
}

/// A validated dynamic inference problem. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    n: usize,
    x_space: Alphabet,
    y_space: Alphabet,
    yhat_space: Alphabet,
    init: Distribution,
    transitions: Vec<TransitionKernel>,
    quantities: Vec<QuantityKernel>,
    loss: ContextualLoss,
}

fn check_len(context: impl FnOnce() -> String, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: context(),
            expected,
            found,
        })
    }
}

/// Validates raw problem data, re-normalizing rows that drift from one by at
/// most [`ROW_TOLERANCE`].
pub fn validate_problem(data: ProblemData) -> Result<Problem> {
    let ProblemData {
        n,
        x_space,
        y_space,
        yhat_space,
        init,
        transitions,
        quantities,
        loss,
    } = data;

    if n == 0 {
        return Err(Error::InvalidParams("horizon n must be at least 1".into()));
    }
    let x_space = Alphabet::new("x_space", x_space)?;
    let y_space = Alphabet::new("y_space", y_space)?;
    let yhat_space = Alphabet::new("yhat_space", yhat_space)?;
    let (nx, ny, nyhat) = (x_space.len(), y_space.len(), yhat_space.len());

    if transitions.len() != n - 1 {
        return Err(Error::HorizonMismatch {
            n,
            kind: "transition",
            expected: n - 1,
            found: transitions.len(),
        });
    }
    if quantities.len() != n {
        return Err(Error::HorizonMismatch {
            n,
            kind: "quantity",
            expected: n,
            found: quantities.len(),
        });
    }

    check_len(|| "init".into(), nx, init.len())?;
    let init = Distribution::new(init, "init")?;

    let transitions = transitions
        .into_iter()
        .enumerate()
        .map(|(k, table)| {
            let round = k + 2;
            check_len(|| format!("transition kernel of round {round}"), nx, table.len())?;
            let mut rows = Vec::with_capacity(nx * nyhat);
            for (xp, per_action) in table.into_iter().enumerate() {
                check_len(
                    || format!("transition kernel of round {round}, x_prev {xp}"),
                    nyhat,
                    per_action.len(),
                )?;
                for (a, row) in per_action.into_iter().enumerate() {
                    let context = format!("transition kernel of round {round}, row ({xp}, {a})");
                    check_len(|| context.clone(), nx, row.len())?;
                    rows.push(Distribution::new(row, &context)?);
                }
            }
            Ok(TransitionKernel { n_yhat: nyhat, rows })
        })
        .collect::<Result<Vec<_>>>()?;

    let quantities = quantities
        .into_iter()
        .enumerate()
        .map(|(k, table)| {
            let round = k + 1;
            check_len(|| format!("quantity kernel of round {round}"), nx, table.len())?;
            let rows = table
                .into_iter()
                .enumerate()
                .map(|(x, row)| {
                    let context = format!("quantity kernel of round {round}, row {x}");
                    check_len(|| context.clone(), ny, row.len())?;
                    Distribution::new(row, &context)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(QuantityKernel { rows })
        })
        .collect::<Result<Vec<_>>>()?;

    check_len(|| "loss table".into(), nx, loss.len())?;
    let mut values = Vec::with_capacity(nx * ny * nyhat);
    for (x, per_y) in loss.into_iter().enumerate() {
        check_len(|| format!("loss table, x {x}"), ny, per_y.len())?;
        for (y, per_yhat) in per_y.into_iter().enumerate() {
            check_len(|| format!("loss table, ({x}, {y})"), nyhat, per_yhat.len())?;
            for (a, v) in per_yhat.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidLoss(format!(
                        "entry ({x}, {y}, {a}) is not finite"
                    )));
                }
                values.push(v);
            }
        }
    }

    Ok(Problem {
        n,
        x_space,
        y_space,
        yhat_space,
        init,
        transitions,
        quantities,
        loss: ContextualLoss {
            n_y: ny,
            n_yhat: nyhat,
            values,
        },
    })
}

/// Builds a problem whose kernels are the same in every round.
pub fn make_stationary_problem(n: usize, model: &StationaryModel) -> Result<Problem> {
    if n == 0 {
        return Err(Error::InvalidParams("horizon n must be at least 1".into()));
    }
    validate_problem(model.expand(n))
}

impl Problem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_space(&self) -> &Alphabet {
        &self.x_space
    }

    pub fn y_space(&self) -> &Alphabet {
        &self.y_space
    }

    pub fn yhat_space(&self) -> &Alphabet {
        &self.yhat_space
    }

    pub fn init(&self) -> &Distribution {
        &self.init
    }

    pub fn loss(&self) -> &ContextualLoss {
        &self.loss
    }

    pub fn transitions(&self) -> &[TransitionKernel] {
        &self.transitions
    }

    pub fn quantities(&self) -> &[QuantityKernel] {
        &self.quantities
    }

    pub fn check_round(&self, round: usize) -> Result<usize> {
        if (1..=self.n).contains(&round) {
            Ok(round)
        } else {
            Err(Error::RoundOutOfRange { round, n: self.n })
        }
    }

    /// Kernel governing the observation of `round` (2..=n).
    pub fn transition(&self, round: usize) -> &TransitionKernel {
        assert!(
            (2..=self.n).contains(&round),
            "no transition kernel for round {round}"
        );
        &self.transitions[round - 2]
    }

    /// Kernel generating the quantity of `round` (1..=n).
    pub fn quantity(&self, round: usize) -> &QuantityKernel {
        &self.quantities[round - 1]
    }

    /// Same problem with a different initial distribution.
    pub fn with_init(&self, init: Distribution) -> Result<Problem> {
        check_len(|| "init".into(), self.x_space.len(), init.len())?;
        Ok(Problem {
            init,
            ..self.clone()
        })
    }

    /// Index-based raw data; `validate_problem(p.to_data())` reproduces `p`.
    pub fn to_data(&self) -> ProblemData {
        let (nx, ny, nyhat) = (self.x_space.len(), self.y_space.len(), self.yhat_space.len());
        ProblemData {
            n: self.n,
            x_space: self.x_space.labels().to_vec(),
            y_space: self.y_space.labels().to_vec(),
            yhat_space: self.yhat_space.labels().to_vec(),
            init: self.init.probs().to_vec(),
            transitions: self
                .transitions
                .iter()
                .map(|t| {
                    (0..nx)
                        .map(|xp| (0..nyhat).map(|a| t.row(xp, a).probs().to_vec()).collect())
                        .collect()
                })
                .collect(),
            quantities: self
                .quantities
                .iter()
                .map(|q| (0..nx).map(|x| q.row(x).probs().to_vec()).collect())
                .collect(),
            loss: (0..nx)
                .map(|x| {
                    (0..ny)
                        .map(|y| (0..nyhat).map(|a| self.loss.get(x, y, a)).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> Vec<String> {
        vec!["0".into(), "1".into()]
    }

    fn one_round(quantity: Vec<Vec<f64>>) -> ProblemData {
        ProblemData {
            n: 1,
            x_space: binary(),
            y_space: binary(),
            yhat_space: binary(),
            init: vec![0.5, 0.5],
            transitions: vec![],
            quantities: vec![quantity],
            loss: vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]; 2],
        }
    }

    #[test]
    fn single_round_problem_is_valid() {
        let p = validate_problem(one_round(vec![vec![0.9, 0.1], vec![0.4, 0.6]])).unwrap();
        assert_eq!(p.n(), 1);
        assert!(p.transitions().is_empty());
        assert_eq!(p.quantity(1).prob(1, 1), 0.6);
    }

    #[test]
    fn row_summing_to_1_1_is_rejected() {
        let err = validate_problem(one_round(vec![vec![0.5, 0.6], vec![0.4, 0.6]])).unwrap_err();
        assert_eq!(err.kind(), "NotStochastic");
    }

    #[test]
    fn negative_entry_is_rejected() {
        let err = Distribution::new(vec![1.2, -0.2], "row").unwrap_err();
        assert_eq!(err.kind(), "NotStochastic");
    }

    #[test]
    fn small_drift_is_renormalized() {
        let d = Distribution::new(vec![0.5 + 4e-10, 0.5], "row").unwrap();
        let sum: f64 = d.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert!(Distribution::new(vec![0.5 + 2e-9, 0.5], "row").is_err());
    }

    #[test]
    fn exact_rows_are_kept_verbatim() {
        let d = Distribution::new(vec![0.1, 0.9], "row").unwrap();
        assert_eq!(d.probs(), &[0.1, 0.9]);
    }

    #[test]
    fn kernel_count_must_match_horizon() {
        let mut data = one_round(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        data.n = 2;
        let err = validate_problem(data.clone()).unwrap_err();
        assert!(matches!(err, Error::HorizonMismatch { kind: "transition", .. }));
        data.transitions.push(vec![vec![vec![1.0, 0.0]; 2]; 2]);
        let err = validate_problem(data).unwrap_err();
        assert!(matches!(err, Error::HorizonMismatch { kind: "quantity", .. }));
    }

    #[test]
    fn wrongly_shaped_kernel_is_dimension_mismatch() {
        let err = validate_problem(one_round(vec![vec![1.0, 0.0]])).unwrap_err();
        assert_eq!(err.kind(), "DimensionMismatch");
        let err = validate_problem(one_round(vec![vec![1.0], vec![1.0]])).unwrap_err();
        assert_eq!(err.kind(), "DimensionMismatch");
    }

    #[test]
    fn alphabets_reject_duplicates_and_empty() {
        assert!(Alphabet::new("x", ["a", "a"]).is_err());
        assert!(Alphabet::new("x", Vec::<String>::new()).is_err());
        let a = Alphabet::new("x", ["a", "b"]).unwrap();
        assert_eq!(a.index_of("b").unwrap(), 1);
        assert_eq!(a.index_of("c").unwrap_err().kind(), "UnknownLabel");
    }

    #[test]
    fn non_finite_loss_is_rejected() {
        let mut data = one_round(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        data.loss[0][0][0] = f64::NAN;
        assert_eq!(validate_problem(data).unwrap_err().kind(), "InvalidLoss");
    }

    #[test]
    fn stationary_expansion_at_n_1_has_no_transitions() {
        let model = StationaryModel {
            x_space: binary(),
            y_space: binary(),
            yhat_space: binary(),
            init: vec![1.0, 0.0],
            transition: vec![vec![vec![1.0, 0.0]; 2]; 2],
            quantity: vec![vec![1.0, 0.0]; 2],
            loss: vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]; 2],
        };
        let p = make_stationary_problem(1, &model).unwrap();
        assert!(p.transitions().is_empty());
        let p = make_stationary_problem(5, &model).unwrap();
        assert_eq!(p.transitions().len(), 4);
        assert_eq!(p.quantities().len(), 5);
        assert!(make_stationary_problem(0, &model).is_err());
    }

    #[test]
    fn to_data_round_trips() {
        let p = validate_problem(one_round(vec![vec![0.9, 0.1], vec![0.4, 0.6]])).unwrap();
        assert_eq!(validate_problem(p.to_data()).unwrap(), p);
    }
}
