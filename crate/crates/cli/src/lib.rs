//! `dyninfer` command-line front end.
//!
//! Exit status: 0 on success, 1 on domain or I/O errors (one JSON line on
//! stderr: `{"error": <kind>, "message": <text>}`), 2 on usage errors.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dyninfer::examples::{Planner, YieldParams};
use dyninfer::format::{
    bar_loss_csv, parse_model, parse_strategy, to_json, write_model, EvalDocument,
    OracleDocument, SimDocument, SolveDocument,
};
use dyninfer::oracle::{oracle_optimum, random_problem, SearchLimits, SearchMethod};
use dyninfer::solver::minimum_inference_loss;
use dyninfer::{
    bar_loss_table, evaluate_markov, export_trellis, simulate, solve, Distribution, Error,
    HistoryMode, MarkovStrategy, Problem, SimOptions, TieBreakRule, TrellisFormat,
};

#[derive(Debug, Parser)]
#[command(name = "dyninfer", version, about = "Finite-state dynamic inference toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieBreak {
    Myopic,
    First,
}

impl From<TieBreak> for TieBreakRule {
    fn from(t: TieBreak) -> Self {
        match t {
            TieBreak::Myopic => TieBreakRule::MyopicPreferred,
            TieBreak::First => TieBreakRule::FirstIndex,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Revealed,
    Unrevealed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    /// List and evaluate every strategy.
    Enumerate,
    /// Exact minimization over the history tree.
    Tree,
    /// Enumerate when within the limit, otherwise use the history tree.
    Auto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Dot,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlannerArg {
    Persist,
    FallBack,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON file, `-` for standard input.
    #[arg(short = 'm', long = "model")]
    pub model: PathBuf,
    /// Initial law override: a single label for a point mass, or `label=p,label=p,...`.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Output file, `-` for standard output.
    #[arg(short = 'o', long = "output", default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve by backward induction and print V*, Q*, the policy and ties.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "myopic")]
        tie_break: TieBreak,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Exact inference loss and loss-to-go of a Markov strategy.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        /// Strategy JSON; defaults to the optimal strategy.
        #[arg(short = 's', long)]
        strategy: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Monte Carlo rollouts of a Markov strategy.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Strategy JSON; defaults to the optimal strategy.
        #[arg(short = 's', long)]
        strategy: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        rollouts: usize,
        #[arg(long, env = "DYNINFER_SEED", default_value_t = 0)]
        seed: u64,
        /// Retain and print up to this many trajectories.
        #[arg(long)]
        keep_trajectories: Option<usize>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Brute-force check that no history-dependent strategy beats the DP optimum.
    Verify {
        /// Model JSON file; omit to sweep random binary instances.
        #[arg(short = 'm', long = "model")]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "revealed")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "enumerate")]
        method: Method,
        /// Maximum number of strategies to enumerate.
        #[arg(long, default_value_t = 1_000_000)]
        limit: u128,
        /// Number of random instances.
        #[arg(long, conflicts_with = "model")]
        instances: Option<usize>,
        #[arg(long, env = "DYNINFER_SEED", default_value_t = 0)]
        seed: u64,
        /// Horizon of random instances; drawn from 1..=3 when omitted.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Unrolled transition diagram annotated with V* and the optimal estimates.
    ExportTrellis {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short = 'f', long, value_enum, default_value = "dot")]
        format: Format,
        #[arg(long, value_enum, default_value = "myopic")]
        tie_break: TieBreak,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Export derived tables.
    Export {
        #[command(subcommand)]
        what: ExportWhat,
    },
    /// Write a built-in model as JSON.
    Example {
        #[command(subcommand)]
        which: ExampleWhich,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExportWhat {
    /// Observation-estimate loss table as CSV.
    BarLoss {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExampleWhich {
    /// Alternating binary machine.
    Section33 {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Stock trend prediction with deterministic market response.
    Stock {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Yield prediction on a distance grid.
    Yield {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 10.0)]
        dc: f64,
        /// Grid as `start:step:end` (inclusive).
        #[arg(long, default_value = "0:2:20")]
        grid: String,
        #[arg(long, default_value_t = 0.05)]
        c_missed: f64,
        #[arg(long, default_value_t = 1.0)]
        c_danger: f64,
        #[arg(long, value_enum, default_value = "persist")]
        planner: PlannerArg,
        #[arg(long, default_value_t = 0.7)]
        shift_prob: f64,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Debug)]
pub enum CliError {
    Domain(Error),
    Io(String),
    /// `verify` ran but a check failed.
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    fn kind(&self) -> &str {
        match self {
            CliError::Domain(e) => e.kind(),
            CliError::Io(_) => "Io",
            CliError::Failed(_) => "VerificationFailed",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Domain(e) => e.to_string(),
            CliError::Io(m) | CliError::Failed(m) => m.clone(),
        }
    }

    /// Single-line JSON diagnostic.
    pub fn to_line(&self) -> String {
        let mut map = serde_json::Map::new();
        map.insert("error".into(), self.kind().into());
        map.insert("message".into(), self.message().into());
        serde_json::Value::Object(map).to_string()
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_input(path: &PathBuf) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(format!("reading standard input: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn write_output(path: &PathBuf, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    if path.as_os_str() == "-" {
        stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("writing standard output: {e}")))
    } else {
        fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Parses `label` (point mass) or `label=p,label=p,...` against the observation space.
pub fn parse_init(problem: &Problem, spec: &str) -> Result<Distribution, Error> {
    let xs = problem.x_space();
    if !spec.contains('=') {
        return Ok(Distribution::point_mass(xs.len(), xs.index_of(spec.trim())?));
    }
    let mut probs = vec![0.0; xs.len()];
    for part in spec.split(',') {
        let (label, p) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("init entry {part:?} is not label=p")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("init probability {p:?} is not a number")))?;
        probs[xs.index_of(label.trim())?] = p;
    }
    Distribution::new(probs, "init")
}

fn load(model: &ModelArgs) -> CliResult<Problem> {
    let problem = parse_model(&read_input(&model.model)?)?;
    match &model.init {
        Some(spec) => Ok(problem.with_init(parse_init(&problem, spec)?)?),
        None => Ok(problem),
    }
}

fn load_strategy(problem: &Problem, path: &Option<PathBuf>) -> CliResult<MarkovStrategy> {
    match path {
        Some(p) => Ok(parse_strategy(problem, &read_input(p)?)?),
        None => Ok(MarkovStrategy::optimal(&solve(
            problem,
            TieBreakRule::MyopicPreferred,
        ))),
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::InvalidParams(format!("grid {spec:?} is not start:step:end"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, step, end] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || end < start {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

const GAP_TOLERANCE: f64 = 1e-9;
const LEMMA1_TOLERANCE: f64 = 1e-12;

fn verify_one(
    problem: &Problem,
    mode: HistoryMode,
    method: Method,
    limits: SearchLimits,
) -> CliResult<OracleDocument> {
    let method = match method {
        Method::Enumerate => SearchMethod::Enumeration,
        Method::Tree => SearchMethod::HistoryTree,
        Method::Auto => {
            let space = dyninfer::oracle::SearchSpace::of(problem, mode);
            if space.count().is_some_and(|c| c <= limits.strategies) {
                SearchMethod::Enumeration
            } else {
                SearchMethod::HistoryTree
            }
        }
    };
    let report = oracle_optimum(problem, mode, method, limits)?;
    Ok(OracleDocument::new(problem, &report))
}

fn run_command(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Solve {
            model,
            tie_break,
            out,
        } => {
            let problem = load(&model)?;
            let result = solve(&problem, tie_break.into());
            let min_loss = minimum_inference_loss(&problem, &result)?;
            let doc = SolveDocument::new(&problem, &result, min_loss);
            write_output(&out.output, &to_json(&doc), stdout)
        }
        Command::Evaluate {
            model,
            strategy,
            out,
        } => {
            let problem = load(&model)?;
            let strategy = load_strategy(&problem, &strategy)?;
            let result = evaluate_markov(&problem, &strategy)?;
            write_output(&out.output, &to_json(&EvalDocument::new(&problem, &result)), stdout)
        }
        Command::Simulate {
            model,
            strategy,
            rollouts,
            seed,
            keep_trajectories,
            out,
        } => {
            let problem = load(&model)?;
            let strategy = load_strategy(&problem, &strategy)?;
            let options = SimOptions {
                rollouts,
                seed,
                keep_trajectories,
            };
            let result = simulate(&problem, &strategy, options)?;
            write_output(&out.output, &to_json(&SimDocument::new(&problem, &result)), stdout)
        }
        Command::Verify {
            model,
            mode,
            method,
            limit,
            instances,
            seed,
            n,
            out,
        } => {
            let mode = match mode {
                Mode::Revealed => HistoryMode::Revealed,
                Mode::Unrevealed => HistoryMode::Unrevealed,
            };
            let limits = SearchLimits {
                strategies: limit,
                ..SearchLimits::default()
            };
            let problems: Vec<Problem> = match (model, instances) {
                (Some(path), _) => vec![parse_model(&read_input(&path)?)?],
                (None, Some(k)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..k)
                        .map(|_| {
                            let horizon = n.unwrap_or_else(|| rng.random_range(1..=3));
                            random_problem(&mut rng, horizon, 2, 2, 2)
                        })
                        .collect::<Result<_, _>>()?
                }
                (None, None) => {
                    return Err(CliError::Domain(Error::InvalidParams(
                        "verify needs --model or --instances".into(),
                    )))
                }
            };
            let mut text = String::new();
            let mut gap_max = 0.0f64;
            let mut lemma_max = 0.0f64;
            for problem in &problems {
                let doc = verify_one(problem, mode, method, limits)?;
                gap_max = gap_max.max(doc.gap.abs());
                for [l, r] in &doc.lemma1_pairs {
                    lemma_max = lemma_max.max((l - r).abs());
                }
                let value = serde_json::to_value(&doc).expect("document serializes");
                text.push_str(&value.to_string());
                text.push('\n');
            }
            let pass = gap_max <= GAP_TOLERANCE && lemma_max <= LEMMA1_TOLERANCE;
            text.push_str(&format!(
                "{} gap_max={gap_max:e}\n",
                if pass { "PASS" } else { "FAIL" }
            ));
            write_output(&out.output, &text, stdout)?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Failed(format!(
                    "gap_max={gap_max:e} lemma1_max={lemma_max:e}"
                )))
            }
        }
        Command::ExportTrellis {
            model,
            format,
            tie_break,
            out,
        } => {
            let problem = load(&model)?;
            let result = solve(&problem, tie_break.into());
            let format = match format {
                Format::Dot => TrellisFormat::Dot,
                Format::Text => TrellisFormat::Text,
            };
            write_output(&out.output, &export_trellis(&problem, &result, format)?, stdout)
        }
        Command::Export {
            what: ExportWhat::BarLoss { model, out },
        } => {
            let problem = load(&model)?;
            write_output(&out.output, &bar_loss_csv(&problem, &bar_loss_table(&problem)), stdout)
        }
        Command::Example { which } => {
            let (problem, out) = match which {
                ExampleWhich::Section33 { n, out } => (horizon(n, dyninfer::example_section33)?, out),
                ExampleWhich::Stock { n, out } => (horizon(n, dyninfer::example_stock)?, out),
                ExampleWhich::Yield {
                    n,
                    beta,
                    dc,
                    grid,
                    c_missed,
                    c_danger,
                    planner,
                    shift_prob,
                    out,
                } => {
                    let params = YieldParams {
                        beta,
                        d_c: dc,
                        grid: parse_grid(&grid)?,
                        c_missed,
                        c_danger,
                        planner: match planner {
                            PlannerArg::Persist => Planner::Persist,
                            PlannerArg::FallBack => Planner::FallBack,
                        },
                        shift_prob,
                    };
                    (dyninfer::example_yield(n, &params)?, out)
                }
            };
            write_output(&out.output, &write_model(&problem), stdout)
        }
    }
}

fn horizon(n: usize, build: fn(usize) -> Problem) -> CliResult<Problem> {
    if n == 0 {
        return Err(Error::InvalidParams("horizon n must be at least 1".into()).into());
    }
    Ok(build(n))
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match run_command(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_line());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("0:2:6").unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(parse_grid("0:0.5:1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("0:0:1").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn init_spec() {
        let p = dyninfer::example_stock(2);
        assert_eq!(parse_init(&p, "1").unwrap().probs(), &[0.0, 1.0]);
        assert_eq!(parse_init(&p, "0=0.25,1=0.75").unwrap().probs(), &[0.25, 0.75]);
        assert_eq!(parse_init(&p, "2").unwrap_err().kind(), "UnknownLabel");
        assert_eq!(parse_init(&p, "0=0.5").unwrap_err().kind(), "NotStochastic");
    }

    #[test]
    fn error_line_is_json() {
        let e = CliError::Domain(Error::RoundOutOfRange { round: 9, n: 2 });
        let v: serde_json::Value = serde_json::from_str(&e.to_line()).unwrap();
        assert_eq!(v["error"], "RoundOutOfRange");
    }
}
