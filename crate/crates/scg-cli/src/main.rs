//! Command-line front end for the structural-causal-games engine.
//!
//! Subcommands: `validate`, `solve`, `relevance`, `intervene`, `search`,
//! `scenario`. Every run prints a JSON report to stdout (or raw game JSON
//! for `scenario --export`). Exit codes: 0 success, 1 domain errors such as
//! an empty equilibrium set, 2 usage or parse errors.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use scg_core::equilibrium::{enumerate, EqMode, EquilibriumConfig, Weighting};
use scg_core::gamefile::{GameFile, PrePolicyFile};
use scg_core::intervention::{apply_pre_policy, causal_effect, PrePolicy};
use scg_core::relevance;
use scg_core::scenarios::{self, gridworld};
use scg_core::search::{search, SearchConfig};
use scg_core::{OutcomeSpec, Scg, VariableId};

use report::{CliError, RunReport};

#[derive(Parser)]
#[command(
    name = "scg",
    version,
    about = "Finite structural causal games: equilibria, interventions, pre-policy search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Pure,
    Behavioural,
}

#[derive(Args, Debug)]
struct EqArgs {
    /// Equilibrium enumeration mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Pure)]
    mode: ModeArg,
    /// Simplex grid resolution for behavioural enumeration.
    #[arg(long = "grid-k", default_value_t = 10)]
    grid_k: usize,
    /// Deviation tolerance of the epsilon-Nash test (behavioural mode).
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// `uniform`, or a path to a JSON array of per-profile weights.
    #[arg(long, default_value = "uniform")]
    weighting: String,
}

impl EqArgs {
    fn to_config(&self) -> Result<EquilibriumConfig, CliError> {
        let weighting = if self.weighting == "uniform" {
            Weighting::Uniform
        } else {
            let text = read_file(Path::new(&self.weighting))?;
            let weights: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("weight file `{}`: {e}", self.weighting)))?;
            Weighting::Explicit(weights)
        };
        Ok(EquilibriumConfig {
            mode: match self.mode {
                ModeArg::Pure => EqMode::Pure,
                ModeArg::Behavioural => EqMode::BehaviouralGrid,
            },
            grid_k: self.grid_k,
            epsilon: self.epsilon,
            weighting,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a game file and report every invariant violation.
    Validate { game: PathBuf },
    /// Enumerate rational outcomes (Nash equilibria) of a game.
    Solve {
        game: PathBuf,
        #[command(flatten)]
        eq: EqArgs,
        /// Write the game graph in DOT format to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Compute the s-relevance graph and the sufficient-recall verdict.
    Relevance {
        game: PathBuf,
        /// Write the relevance graph in DOT format to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Causal effect of a pre-policy on an outcome.
    Intervene {
        game: PathBuf,
        /// Decision to fix (with --fix).
        #[arg(long)]
        decision: Option<String>,
        /// Action the fixed decision plays in every context.
        #[arg(long)]
        fix: Option<String>,
        /// JSON pre-policy file fixing one or more decisions.
        #[arg(long = "pre-file")]
        pre_file: Option<PathBuf>,
        /// Outcome as VAR=VALUE; defaults to the game's outcome.
        #[arg(long)]
        outcome: Option<String>,
        #[command(flatten)]
        eq: EqArgs,
        /// Add per-profile outcome probabilities to the report.
        #[arg(long)]
        explain: bool,
        /// Write the intervened game's relevance graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Search for the pre-policy maximizing the interventional outcome
    /// probability.
    Search {
        game: PathBuf,
        /// Decision whose pre-policy is searched.
        #[arg(long)]
        decision: String,
        /// Outcome as VAR=VALUE; defaults to the game's outcome.
        #[arg(long)]
        outcome: Option<String>,
        /// Candidate simplex grid resolution (1 = pure policies).
        #[arg(long = "grid-k", default_value_t = 1)]
        grid_k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "iters", default_value_t = 300)]
        iterations: usize,
        #[arg(long = "lr", default_value_t = 0.1)]
        learning_rate: f64,
        /// Also include the empty intervention as a candidate.
        #[arg(long = "include-empty")]
        include_empty: bool,
        /// Write the sampling trajectory as CSV to this path.
        #[arg(long = "trajectory-csv")]
        trajectory_csv: Option<PathBuf>,
    },
    /// Built-in scenarios: household, rps-cooperative, rps-competitive,
    /// cyclic, gridworld.
    Scenario {
        name: String,
        /// Print the game-description JSON instead of a summary report.
        #[arg(long)]
        export: bool,
        /// Include the ASCII map (gridworld only).
        #[arg(long)]
        map: bool,
        /// Write the game graph in DOT format to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli.command, started) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !err.is_quiet() {
                println!("{}", err.to_json());
            }
            ExitCode::from(err.exit_code())
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read `{}`: {e}", path.display())))
}

fn load_game(path: &Path) -> Result<(Scg, String), CliError> {
    let text = read_file(path)?;
    let scg = GameFile::from_json(&text)
        .and_then(|f| f.to_scg())
        .map_err(CliError::from_gamefile)?;
    Ok((scg, text))
}

fn parse_outcome(scg: &Scg, flag: &Option<String>) -> Result<OutcomeSpec, CliError> {
    if let Some(text) = flag {
        let (var, value) = text.split_once('=').ok_or_else(|| {
            CliError::usage(format!("outcome `{text}` is not of the form VAR=VALUE"))
        })?;
        Ok(OutcomeSpec::new(var.trim(), value.trim()))
    } else {
        scg.outcome().cloned().ok_or_else(|| {
            CliError::usage("game declares no outcome; pass --outcome VAR=VALUE".to_string())
        })
    }
}

fn write_artifact(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::usage(format!("cannot write `{}`: {e}", path.display())))
}

fn built_in(name: &str) -> Result<Scg, CliError> {
    match name {
        "household" => Ok(scenarios::household()),
        "rps-cooperative" => Ok(scenarios::rps(true)),
        "rps-competitive" => Ok(scenarios::rps(false)),
        "cyclic" => Ok(scenarios::cyclic_game()),
        "gridworld" => gridworld::gridworld_scg(&gridworld::GridworldConfig::default())
            .map_err(|e| CliError::domain("layout_invalid", e.to_string())),
        other => Err(CliError::usage(format!(
            "unknown scenario `{other}`; expected household, rps-cooperative, rps-competitive, cyclic, or gridworld"
        ))),
    }
}

fn run(command: Command, started: Instant) -> Result<(), CliError> {
    match command {
        Command::Validate { game } => {
            let text = read_file(&game)?;
            let scg = GameFile::from_json(&text)
                .and_then(|f| f.to_scg_unvalidated())
                .map_err(CliError::from_gamefile)?;
            let violations = scg.validate();
            let payload = json!({
                "valid": violations.is_empty(),
                "violations": violations,
            });
            let report = RunReport::new("validate", &text, None, payload, started);
            report.print();
            if violations.is_empty() {
                Ok(())
            } else {
                Err(CliError::quiet_domain(
                    "invalid_game",
                    "game has violations",
                ))
            }
        }
        Command::Solve { game, eq, dot } => {
            let (scg, text) = load_game(&game)?;
            let config = eq.to_config()?;
            let outcomes = enumerate(&scg, &config).map_err(CliError::from_equilibrium)?;
            if let Some(path) = dot {
                write_artifact(&path, &scg.dag().to_dot())?;
            }
            let payload = outcomes.report(&scg).map_err(CliError::from_equilibrium)?;
            RunReport::new("solve", &text, None, payload, started).print();
            Ok(())
        }
        Command::Relevance { game, dot } => {
            let (scg, text) = load_game(&game)?;
            let graph = relevance::s_relevance_graph(&scg).map_err(CliError::from_model)?;
            if let Some(path) = dot {
                write_artifact(&path, &relevance::to_dot(&graph))?;
            }
            let payload = json!({
                "nodes": graph.nodes,
                "intervened": graph.intervened,
                "edges": graph.edges,
                "sufficient_recall": relevance::has_sufficient_recall(&graph),
                "cycle": relevance::find_cycle(&graph),
            });
            RunReport::new("relevance", &text, None, payload, started).print();
            Ok(())
        }
        Command::Intervene {
            game,
            decision,
            fix,
            pre_file,
            outcome,
            eq,
            explain,
            dot,
        } => {
            let (scg, text) = load_game(&game)?;
            let pre = build_pre_policy(&scg, &decision, &fix, &pre_file)?;
            let outcome = parse_outcome(&scg, &outcome)?;
            let config = eq.to_config()?;
            let report =
                causal_effect(&scg, &pre, &outcome, &config).map_err(CliError::from_equilibrium)?;
            if let Some(path) = dot {
                let intervened = apply_pre_policy(&scg, &pre).map_err(CliError::from_model)?;
                let graph =
                    relevance::s_relevance_graph(&intervened).map_err(CliError::from_model)?;
                write_artifact(&path, &relevance::to_dot(&graph))?;
            }
            let payload = report
                .to_json(&scg, &outcome, explain)
                .map_err(CliError::from_equilibrium)?;
            RunReport::new("intervene", &text, None, payload, started).print();
            Ok(())
        }
        Command::Search {
            game,
            decision,
            outcome,
            grid_k,
            seed,
            iterations,
            learning_rate,
            include_empty,
            trajectory_csv,
        } => {
            let (scg, text) = load_game(&game)?;
            let decision = VariableId::new(decision);
            let outcome = parse_outcome(&scg, &outcome)?;
            let config = SearchConfig {
                iterations,
                learning_rate,
                seed,
                candidate_grid_k: grid_k,
                include_empty,
                ..SearchConfig::default()
            };
            let report =
                search(&scg, &decision, &outcome, &config).map_err(CliError::from_search)?;
            if let Some(path) = trajectory_csv {
                write_artifact(&path, &report.trajectory_csv())?;
            }
            let payload = serde_json::to_value(&report).expect("report serializes");
            RunReport::new("search", &text, Some(seed), payload, started).print();
            Ok(())
        }
        Command::Scenario {
            name,
            export,
            map,
            dot,
        } => {
            let scg = built_in(&name)?;
            let file = GameFile::from_scg(&scg);
            let text = file.to_json_pretty();
            if let Some(path) = dot {
                write_artifact(&path, &scg.dag().to_dot())?;
            }
            if export {
                println!("{text}");
                return Ok(());
            }
            let mut payload = json!({
                "name": name,
                "agents": scg.agents(),
                "decisions": scg.decisions(),
                "variables": scg.dag().len(),
                "outcome": scg.outcome(),
            });
            if map {
                if name != "gridworld" {
                    return Err(CliError::usage("--map only applies to gridworld".into()));
                }
                let config = gridworld::GridworldConfig::default();
                payload["map"] = json!(gridworld::ascii_map(&config, None, None));
            }
            RunReport::new("scenario", &text, None, payload, started).print();
            Ok(())
        }
    }
}

fn build_pre_policy(
    scg: &Scg,
    decision: &Option<String>,
    fix: &Option<String>,
    pre_file: &Option<PathBuf>,
) -> Result<PrePolicy, CliError> {
    match (decision, fix, pre_file) {
        (Some(d), Some(action), None) => {
            let policy = scg
                .pure_policy(&VariableId::new(d.clone()), action)
                .map_err(CliError::from_model)?;
            Ok(PrePolicy::fixing(policy))
        }
        (None, None, Some(path)) => {
            let text = read_file(path)?;
            PrePolicyFile::from_json(&text)
                .and_then(|f| f.to_pre_policy(scg))
                .map_err(CliError::from_gamefile)
        }
        (None, None, None) => Ok(PrePolicy::empty()),
        _ => Err(CliError::usage(
            "pass either --decision with --fix, or --pre-file, or neither (empty intervention)"
                .to_string(),
        )),
    }
}
