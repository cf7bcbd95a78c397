//! Command surface: simulate runs, verify traces, export bounds graphs,
//! decide knowledge of timed precedence, drive coordination tasks, and
//! cross-check against the brute-force oracle.
//!
//! Exit codes: 0 success / verdict positive, 1 verdict negative,
//! 2 usage error, 3 input error.

use bcm_cli::{addr, scenario, trace};

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use bcm_core::causality::{self, GeneralNode};
use bcm_core::coordination::{evaluate_task, knows_precedence, KnowledgeVerdict, TaskVerdict};
use bcm_core::graph::{build_basic, build_extended, build_local};
use bcm_core::oracle::{self, EnumerationBudget, ThreeValued};
use bcm_core::sim::{execute, validate, Run, Schedule};
use bcm_core::state::NodeId;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::addr::{format_general, format_node_id, parse_general, parse_node_id};
use crate::scenario::{parse_scenario, Scenario};
use crate::trace::{read_trace, write_trace};

#[derive(Parser)]
#[command(
    name = "bcm",
    version,
    about = "Clockless bounded-communication model toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulePolicy {
    /// The scenario's deliver lines; unlisted messages at their upper bound.
    Scenario,
    Earliest,
    Latest,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Basic,
    Local,
    Extended,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flooding protocol and print (or save) the trace.
    Simulate {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "scenario")]
        schedule: SchedulePolicy,
        /// Write the trace here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a trace against its scenario's rules.
    Verify { scenario: PathBuf, trace: PathBuf },
    /// Export a bounds graph in DOT format.
    Graph {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        kind: GraphKind,
        /// Observer node (required for local/extended graphs), e.g. B@2.
        #[arg(long)]
        node: Option<String>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "scenario")]
        schedule: SchedulePolicy,
    },
    /// Decide knowledge of timed precedence at a node.
    Check {
        scenario: PathBuf,
        /// Observer node, e.g. B@2.
        #[arg(long)]
        node: String,
        /// The earlier chain endpoint, e.g. C@1/A.
        #[arg(long)]
        theta1: String,
        /// The later chain endpoint, e.g. B@2.
        #[arg(long)]
        theta2: String,
        #[arg(long)]
        x: i64,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "scenario")]
        schedule: SchedulePolicy,
    },
    /// Run the scenario's coordination task end to end.
    Coordinate {
        scenario: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "scenario")]
        schedule: SchedulePolicy,
    },
    /// Ground-truth verdicts by exhaustive enumeration.
    Oracle {
        #[command(subcommand)]
        query: OracleQuery,
    },
}

#[derive(Subcommand)]
enum OracleQuery {
    /// Does the observer know theta1 precedes theta2 by at least x?
    Knows {
        scenario: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long)]
        theta1: String,
        #[arg(long)]
        theta2: String,
        #[arg(long)]
        x: i64,
        /// Extra time slots each external input may shift by.
        #[arg(long, default_value = "0")]
        slack: u32,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "scenario")]
        schedule: SchedulePolicy,
    },
    /// Does every run satisfy theta1 before theta2 by at least x?
    Supports {
        scenario: PathBuf,
        #[arg(long)]
        theta1: String,
        #[arg(long)]
        theta2: String,
        #[arg(long)]
        x: i64,
        #[arg(long, default_value = "0")]
        slack: u32,
        #[arg(long, value_enum, default_value = "scenario")]
        schedule: SchedulePolicy,
    },
    /// Count the enumerated runs.
    Count {
        scenario: PathBuf,
        #[arg(long, default_value = "0")]
        slack: u32,
    },
}

enum CliError {
    Input(String),
    VerdictNegative,
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

macro_rules! input_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}
input_error!(
    scenario::ScenarioError,
    trace::TraceError,
    addr::AddrError,
    bcm_core::SimError,
    bcm_core::graph::GraphError,
    bcm_core::causality::CausalityError,
    bcm_core::coordination::CoordError,
    bcm_core::oracle::OracleError
);

fn load_scenario(path: &PathBuf) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_scenario(&text)?)
}

fn build_run(
    scenario: &Scenario,
    trace_path: &Option<PathBuf>,
    policy: SchedulePolicy,
) -> Result<Run, CliError> {
    if let Some(path) = trace_path {
        let text = std::fs::read_to_string(path)?;
        return Ok(read_trace(scenario, &text)?);
    }
    let schedule = match policy {
        SchedulePolicy::Scenario => scenario.schedule(),
        SchedulePolicy::Earliest => Schedule::Earliest,
        SchedulePolicy::Latest => Schedule::Latest,
    };
    Ok(execute(
        scenario.net.clone(),
        &scenario.externals,
        &schedule,
        scenario.horizon,
    )?)
}

/// JSON with sorted keys, one trailing newline.
fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn verdict_json(
    scenario: &Scenario,
    run: &Run,
    observer: NodeId,
    theta1: &GeneralNode,
    theta2: &GeneralNode,
    x: i64,
    verdict: &KnowledgeVerdict,
) -> serde_json::Value {
    let net = &scenario.net;
    let time_of = |n: &GeneralNode| {
        causality::resolve_id(run, n).map(|id| {
            json!({
                "node": format_node_id(net, id),
                "time": run.time(id).unwrap(),
            })
        })
    };
    json!({
        "holds": verdict.holds,
        "max_weight": verdict.max_weight,
        "certificate": verdict.certificate.as_ref().map(|c| c.to_json(net)),
        "observer": format_node_id(net, observer),
        "scenario": scenario.hash,
        "theta1": format_general(net, theta1),
        "theta2": format_general(net, theta2),
        "resolved": {
            "theta1": time_of(theta1),
            "theta2": time_of(theta2),
        },
        "x": x,
    })
}

fn run_command(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            scenario,
            schedule,
            output,
        } => {
            let sc = load_scenario(&scenario)?;
            let run = build_run(&sc, &None, schedule)?;
            let text = write_trace(&sc, &run);
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Verify { scenario, trace } => {
            let sc = load_scenario(&scenario)?;
            let text = std::fs::read_to_string(&trace)?;
            let run = read_trace(&sc, &text)?;
            let violations = validate(&run);
            if violations.is_empty() {
                println!(
                    "ok: {} deliveries, horizon {}",
                    run.deliveries().len(),
                    run.horizon()
                );
                Ok(())
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                Err(CliError::VerdictNegative)
            }
        }
        Command::Graph {
            scenario,
            kind,
            node,
            trace,
            schedule,
        } => {
            let sc = load_scenario(&scenario)?;
            let run = build_run(&sc, &trace, schedule)?;
            let graph = match kind {
                GraphKind::Basic => build_basic(&run)?,
                GraphKind::Local | GraphKind::Extended => {
                    let addr = node.ok_or_else(|| {
                        CliError::Input("--node is required for local/extended graphs".into())
                    })?;
                    let observer = parse_node_id(&sc.net, &addr)?;
                    if run.time(observer).is_none() {
                        return Err(CliError::Input(format!("{addr} is not in the trace")));
                    }
                    match kind {
                        GraphKind::Local => build_local(&run, observer)?,
                        _ => build_extended(&run, observer)?,
                    }
                }
            };
            print!("{}", graph.to_dot(&run));
            Ok(())
        }
        Command::Check {
            scenario,
            node,
            theta1,
            theta2,
            x,
            trace,
            schedule,
        } => {
            let sc = load_scenario(&scenario)?;
            let run = build_run(&sc, &trace, schedule)?;
            let observer = parse_node_id(&sc.net, &node)?;
            let t1 = parse_general(&sc.net, &run, &theta1)?;
            let t2 = parse_general(&sc.net, &run, &theta2)?;
            let verdict = knows_precedence(&run, observer, &t1, &t2, x)?;
            print_json(&verdict_json(&sc, &run, observer, &t1, &t2, x, &verdict));
            if verdict.holds {
                Ok(())
            } else {
                Err(CliError::VerdictNegative)
            }
        }
        Command::Coordinate {
            scenario,
            trace,
            schedule,
        } => {
            let sc = load_scenario(&scenario)?;
            let task = sc
                .task
                .clone()
                .ok_or_else(|| CliError::Input("scenario has no task line".into()))?;
            let run = build_run(&sc, &trace, schedule)?;
            let outcome = evaluate_task(run, &task)?;
            let net = &sc.net;
            let place = |v: Option<(NodeId, u32)>| {
                v.map(|(id, t)| json!({ "node": format_node_id(net, id), "time": t }))
            };
            print_json(&json!({
                "action_a": place(outcome.action_a),
                "action_b": place(outcome.action_b),
                "certificate": outcome
                    .knowledge
                    .as_ref()
                    .and_then(|k| k.certificate.as_ref())
                    .map(|c| c.to_json(net)),
                "go": outcome.go.map(|id| format_node_id(net, id)),
                "max_weight": outcome.knowledge.as_ref().and_then(|k| k.max_weight),
                "scenario": sc.hash,
                "verdict": match outcome.verdict {
                    TaskVerdict::Compliant => "compliant",
                    TaskVerdict::CompliantNoAction => "compliant-no-action",
                    TaskVerdict::IncompleteTrace => "incomplete-trace",
                    TaskVerdict::Violated { .. } => "violated",
                },
            }));
            match outcome.verdict {
                TaskVerdict::Compliant => Ok(()),
                _ => Err(CliError::VerdictNegative),
            }
        }
        Command::Oracle { query } => run_oracle(query),
    }
}

fn oracle_json(answer: &bcm_core::OracleAnswer) -> serde_json::Value {
    json!({
        "verdict": match answer.verdict {
            ThreeValued::True => "true",
            ThreeValued::False => "false",
            ThreeValued::Unknown => "unknown",
        },
        "runs_checked": answer.runs_checked,
        "uncertain_runs": answer.uncertain_runs,
        "caveat_horizon": answer.uncertain_runs > 0,
    })
}

fn run_oracle(query: OracleQuery) -> Result<(), CliError> {
    match query {
        OracleQuery::Knows {
            scenario,
            node,
            theta1,
            theta2,
            x,
            slack,
            trace,
            schedule,
        } => {
            let sc = load_scenario(&scenario)?;
            let run = build_run(&sc, &trace, schedule)?;
            let observer = parse_node_id(&sc.net, &node)?;
            if run.time(observer).is_none() {
                return Err(CliError::Input(format!("{node} is not in the trace")));
            }
            let t1 = parse_general(&sc.net, &run, &theta1)?;
            let t2 = parse_general(&sc.net, &run, &theta2)?;
            let budget = EnumerationBudget {
                horizon: sc.horizon,
                max_runs: sc.max_runs,
                external_slack: slack,
            };
            let answer = oracle::oracle_knows(&run, observer, &t1, &t2, x, &budget)?;
            print_json(&oracle_json(&answer));
            match answer.verdict {
                ThreeValued::True => Ok(()),
                _ => Err(CliError::VerdictNegative),
            }
        }
        OracleQuery::Supports {
            scenario,
            theta1,
            theta2,
            x,
            slack,
            schedule,
        } => {
            let sc = load_scenario(&scenario)?;
            let run = build_run(&sc, &None, schedule)?;
            let t1 = parse_general(&sc.net, &run, &theta1)?;
            let t2 = parse_general(&sc.net, &run, &theta2)?;
            let budget = EnumerationBudget {
                horizon: sc.horizon,
                max_runs: sc.max_runs,
                external_slack: slack,
            };
            let answer =
                oracle::oracle_supports(sc.net.clone(), &sc.externals, &t1, &t2, x, &budget)?;
            print_json(&oracle_json(&answer));
            match answer.verdict {
                ThreeValued::True => Ok(()),
                _ => Err(CliError::VerdictNegative),
            }
        }
        OracleQuery::Count { scenario, slack } => {
            let sc = load_scenario(&scenario)?;
            let budget = EnumerationBudget {
                horizon: sc.horizon,
                max_runs: sc.max_runs,
                external_slack: slack,
            };
            let mut distinct: BTreeSet<String> = BTreeSet::new();
            let mut n = 0usize;
            oracle::for_each_run(sc.net.clone(), &sc.externals, &budget, &mut |r| {
                n += 1;
                distinct.insert(write_trace(&sc, r));
                true
            })?;
            print_json(&json!({ "runs": n, "distinct_traces": distinct.len() }));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::VerdictNegative) => ExitCode::from(1),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
