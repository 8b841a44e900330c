//! Command-line workbench for verifying obviously strategyproof mechanisms.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use osp_core::allocation::{makespan, payment_table_from_map, social_cost, PaymentTable};
use osp_core::cmon::{check_osp, check_two_cycles, OspVerdict};
use osp_core::domain::{DomainProfile, TypeProfile};
use osp_core::imptree::{ImplementationTree, TreeSpec};
use osp_core::mechanism::Mechanism;
use osp_core::oracle::{brute_makespan_opt, brute_social_cost_opt, OracleBudget};
use osp_core::rational::Rational;
use osp_core::scheduling::{
    approx_sweep, approx_sweep_sampled, default_payment_constants, greedy_mechanism,
    lower_bound_witnesses, mech_few_jobs, mech_many_jobs_with, two_job_three_value_mechanism,
    SchedulingInstance, SurvivorEstimate,
};
use osp_core::setsystem::{
    optimal_osp_feasible, parallel_paths_feasible, run_mechanism, FeasibilityVerdict,
    Misalignment, SetSystemInstance,
};
use report::{digest, RunReport, EXIT_BUDGET, EXIT_INPUT, EXIT_REFUTED, EXIT_VERIFIED};
use serde::Deserialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "osp", version, about = "verify obviously strategyproof mechanisms")]
struct Cli {
    /// Emit the full machine-readable report.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a mechanism file is OSP; emit payments or a negative cycle.
    Check(CheckArgs),
    /// Synthesize shortest-path payments for a mechanism file.
    Payments(PaymentsArgs),
    /// Scheduling mechanisms: run, sweep, lowerbound.
    Sched {
        #[command(subcommand)]
        command: SchedCommand,
    },
    /// Set-system mechanisms: feasible, run.
    Setsys {
        #[command(subcommand)]
        command: SetsysCommand,
    },
    /// Parallel-path shortest-path auctions.
    Paths {
        #[command(subcommand)]
        command: PathsCommand,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Mechanism file: {"domains": [[..]], "tree": {..}, "payments": {..}?}.
    #[arg(long)]
    mechanism: std::path::PathBuf,
    /// Run only the two-cycle test (sufficient for domains of size <= 3).
    #[arg(long)]
    two_cycles: bool,
}

#[derive(Args)]
struct PaymentsArgs {
    #[arg(long)]
    mechanism: std::path::PathBuf,
}

#[derive(Subcommand)]
enum SchedCommand {
    /// Execute a mechanism on a profile and print the transcript.
    Run(SchedRunArgs),
    /// Exact worst-case approximation ratio over the whole profile space.
    Sweep(SchedSweepArgs),
    /// Replay the square-root lower-bound case analysis.
    Lowerbound(LowerboundArgs),
}

#[derive(Args)]
struct SchedRunArgs {
    #[arg(long, value_enum)]
    mech: MechKind,
    /// Instance file: {"n": 2, "m": 2, "domains": [[..]]}.
    #[arg(long)]
    instance: std::path::PathBuf,
    /// Comma-separated true types, e.g. "1,3/2,4".
    #[arg(long)]
    profile: String,
    /// Survivor-cost estimate used by the many-jobs mechanism.
    #[arg(long, value_enum, default_value_t = EstimateKind::CheapestEliminated)]
    estimate: EstimateKind,
}

#[derive(Args)]
struct SchedSweepArgs {
    #[arg(long, value_enum)]
    mech: MechKind,
    #[arg(long)]
    instance: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = EstimateKind::CheapestEliminated)]
    estimate: EstimateKind,
    /// Cap on the exhaustive profile count.
    #[arg(long, default_value_t = 1_000_000)]
    max_profiles: usize,
    /// Sample this many random profiles instead of exhausting.
    #[arg(long)]
    sample: Option<usize>,
    /// Seed for sampling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LowerboundArgs {
    /// Machine count; must be a perfect square. Jobs equal machines.
    #[arg(long)]
    n: usize,
    /// Lowest domain value; defaults to 1.
    #[arg(long)]
    low: Option<String>,
    /// Middle domain value; defaults to m*low.
    #[arg(long)]
    mid: Option<String>,
    /// Highest domain value; defaults to m*sqrt(n)*mid.
    #[arg(long)]
    high: Option<String>,
}

#[derive(Subcommand)]
enum SetsysCommand {
    /// Decide whether an exactly optimal OSP mechanism exists.
    Feasible(SetsysFeasibleArgs),
    /// Run the adaptive optimal mechanism on a profile.
    Run(SetsysRunArgs),
}

#[derive(Args)]
struct SetsysFeasibleArgs {
    /// Instance file: {"elements": 3, "feasible": [[0],[1,2]],
    /// "tie_order": [0,1]?, "domains": [[..]]}.
    #[arg(long)]
    instance: std::path::PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    max_subdomains: usize,
}

#[derive(Args)]
struct SetsysRunArgs {
    #[arg(long)]
    instance: std::path::PathBuf,
    #[arg(long)]
    profile: String,
}

#[derive(Subcommand)]
enum PathsCommand {
    /// Closed-form feasibility for two parallel paths with a two-value domain.
    Check(PathsCheckArgs),
}

#[derive(Args)]
struct PathsCheckArgs {
    /// Edge count of the top path.
    #[arg(long)]
    t: usize,
    /// Edge count of the bottom path.
    #[arg(long)]
    b: usize,
    /// Low cost value.
    #[arg(long = "L")]
    low: String,
    /// High cost value.
    #[arg(long = "H")]
    high: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechKind {
    Many,
    Few,
    Gr,
    #[value(name = "2x2x3")]
    TwoByTwoByThree,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimateKind {
    CheapestEliminated,
    HighestSurvivorBound,
}

impl From<EstimateKind> for SurvivorEstimate {
    fn from(kind: EstimateKind) -> Self {
        match kind {
            EstimateKind::CheapestEliminated => SurvivorEstimate::CheapestEliminated,
            EstimateKind::HighestSurvivorBound => SurvivorEstimate::HighestSurvivorBound,
        }
    }
}

#[derive(Deserialize)]
struct MechanismFile {
    domains: Vec<Vec<Rational>>,
    tree: TreeSpec,
    #[serde(default)]
    payments: Option<BTreeMap<String, Vec<Rational>>>,
}

struct CommandError {
    exit: i32,
    message: String,
}

impl CommandError {
    fn input(message: impl Into<String>) -> Self {
        CommandError { exit: EXIT_INPUT, message: message.into() }
    }
}

impl From<osp_core::Error> for CommandError {
    fn from(err: osp_core::Error) -> Self {
        let exit = match err {
            osp_core::Error::BudgetExceeded(_) => EXIT_BUDGET,
            _ => EXIT_INPUT,
        };
        CommandError { exit, message: err.to_string() }
    }
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let command_echo = argv.join(" ");
    let started = Instant::now();
    let outcome = dispatch(&cli.command, cli.json);
    let mut report = match outcome {
        Ok(report) => report,
        Err(err) => {
            RunReport::new(command_echo.clone(), json!({ "error": err.message }), err.exit)
        }
    };
    report.command = command_echo;
    report.timing_ms = started.elapsed().as_millis();
    report.emit(cli.json);
    std::process::exit(report.exit_code);
}

fn dispatch(command: &Command, json: bool) -> Result<RunReport, CommandError> {
    match command {
        Command::Check(args) => cmd_check(args),
        Command::Payments(args) => cmd_payments(args),
        Command::Sched { command } => match command {
            SchedCommand::Run(args) => cmd_sched_run(args),
            SchedCommand::Sweep(args) => cmd_sched_sweep(args),
            SchedCommand::Lowerbound(args) => cmd_sched_lowerbound(args, json),
        },
        Command::Setsys { command } => match command {
            SetsysCommand::Feasible(args) => cmd_setsys_feasible(args),
            SetsysCommand::Run(args) => cmd_setsys_run(args),
        },
        Command::Paths { command } => match command {
            PathsCommand::Check(args) => cmd_paths_check(args),
        },
    }
}

fn read_file(path: &std::path::Path) -> Result<(Vec<u8>, String), CommandError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CommandError::input(format!("cannot read {}: {e}", path.display())))?;
    let hash = digest(&bytes);
    Ok((bytes, hash))
}

fn load_mechanism(path: &std::path::Path) -> Result<(Mechanism, String), CommandError> {
    let (bytes, hash) = read_file(path)?;
    let file: MechanismFile = serde_json::from_slice(&bytes)
        .map_err(|e| CommandError::input(format!("malformed mechanism file: {e}")))?;
    let domains = DomainProfile::new(file.domains)?;
    let tree = ImplementationTree::from_spec(domains.clone(), file.tree)?;
    let mut mechanism = Mechanism::from_tree(tree)?;
    if let Some(map) = &file.payments {
        mechanism.payments = Some(payment_table_from_map(domains, map)?);
    }
    Ok((mechanism, hash))
}

fn load_scheduling(path: &std::path::Path) -> Result<(SchedulingInstance, String), CommandError> {
    let (bytes, hash) = read_file(path)?;
    let instance: SchedulingInstance = serde_json::from_slice(&bytes)
        .map_err(|e| CommandError::input(format!("malformed instance file: {e}")))?;
    Ok((instance, hash))
}

fn load_setsystem(path: &std::path::Path) -> Result<(SetSystemInstance, String), CommandError> {
    let (bytes, hash) = read_file(path)?;
    let instance: SetSystemInstance = serde_json::from_slice(&bytes)
        .map_err(|e| CommandError::input(format!("malformed instance file: {e}")))?;
    Ok((instance, hash))
}

fn payments_json(payments: &PaymentTable) -> Value {
    serde_json::to_value(payments).expect("payments serialize")
}

fn cycle_json(cycle: &osp_core::cmon::NegativeCycle) -> Value {
    json!({
        "agent": cycle.agent,
        "cycle": cycle.profiles.iter().map(|p| p.key()).collect::<Vec<_>>(),
        "edge_weights": cycle.edge_weights.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "weight": cycle.total.to_string(),
    })
}

fn cmd_check(args: &CheckArgs) -> Result<RunReport, CommandError> {
    let (mechanism, hash) = load_mechanism(&args.mechanism)?;
    let verdict_value;
    let exit;
    if args.two_cycles {
        let report = check_two_cycles(&mechanism.rule, &mechanism.tree)?;
        exit = if report.holds { EXIT_VERIFIED } else { EXIT_REFUTED };
        verdict_value = json!({
            "mode": "two-cycles",
            "holds": report.holds,
            "insufficient_domains": report.insufficient_domains,
            "warning": report.insufficient_domains.then_some(
                "some domain has four or more values: two-cycle monotonicity is \
                 necessary but not sufficient for OSP"
            ),
            "violation": report.violation.as_ref().map(cycle_json),
        });
    } else {
        match check_osp(&mechanism.rule, &mechanism.tree)? {
            OspVerdict::Osp { payments } => {
                exit = EXIT_VERIFIED;
                let provided_ok = mechanism
                    .payments
                    .as_ref()
                    .map(|p| {
                        osp_core::cmon::truthful_dominance_holds(
                            &mechanism.tree,
                            &mechanism.rule,
                            p,
                        )
                    })
                    .transpose()?;
                verdict_value = json!({
                    "is_osp": true,
                    "payments": payments_json(&payments),
                    "provided_payments_valid": provided_ok,
                });
            }
            OspVerdict::NotOsp { cycle } => {
                exit = EXIT_REFUTED;
                verdict_value = json!({
                    "is_osp": false,
                    "certificate": cycle_json(&cycle),
                });
            }
        }
    }
    Ok(RunReport::new(String::new(), verdict_value, exit).with_digest(Some(hash)))
}

fn cmd_payments(args: &PaymentsArgs) -> Result<RunReport, CommandError> {
    let (mechanism, hash) = load_mechanism(&args.mechanism)?;
    match check_osp(&mechanism.rule, &mechanism.tree)? {
        OspVerdict::Osp { payments } => Ok(RunReport::new(
            String::new(),
            json!({ "payments": payments_json(&payments) }),
            EXIT_VERIFIED,
        )
        .with_digest(Some(hash))),
        OspVerdict::NotOsp { cycle } => Ok(RunReport::new(
            String::new(),
            json!({
                "error": "no OSP payments exist",
                "certificate": cycle_json(&cycle),
            }),
            EXIT_REFUTED,
        )
        .with_digest(Some(hash))),
    }
}

fn build_sched_mechanism(
    kind: MechKind,
    estimate: EstimateKind,
    instance: &SchedulingInstance,
) -> Result<Mechanism, CommandError> {
    match kind {
        MechKind::Many => Ok(mech_many_jobs_with(instance, estimate.into())?),
        MechKind::Few => Ok(mech_few_jobs(instance)?),
        MechKind::Gr => Ok(greedy_mechanism(instance)?),
        MechKind::TwoByTwoByThree => {
            if instance.n != 2 || instance.m != 2 {
                return Err(CommandError::input(
                    "the 2x2x3 mechanism needs exactly two machines and two jobs",
                ));
            }
            let first = instance.domains.domain(0).to_vec();
            if first.len() != 3 || instance.domains.domain(1) != first.as_slice() {
                return Err(CommandError::input(
                    "the 2x2x3 mechanism needs a homogeneous three-value domain",
                ));
            }
            let (pm, pp) = default_payment_constants(&first[0], &first[1], &first[2]);
            Ok(two_job_three_value_mechanism(&first[0], &first[1], &first[2], &pm, &pp)?)
        }
    }
}

fn cmd_sched_run(args: &SchedRunArgs) -> Result<RunReport, CommandError> {
    let (instance, hash) = load_scheduling(&args.instance)?;
    let profile = TypeProfile::parse_key(&args.profile, instance.n)?;
    if !instance.domains.contains(&profile) {
        return Err(CommandError::input("profile is outside the instance domain"));
    }
    let mechanism = build_sched_mechanism(args.mech, args.estimate, &instance)?;
    let transcript = mechanism.run(&profile)?;
    let achieved = makespan(&transcript.allocation, &profile)?;
    let (_, best) = brute_makespan_opt(&profile, instance.m, &OracleBudget::default())?;
    let ratio = if best.is_zero() { Rational::one() } else { &achieved / &best };
    let verdict = json!({
        "profile": profile.key(),
        "allocation": transcript.allocation,
        "makespan": achieved.to_string(),
        "optimal_makespan": best.to_string(),
        "ratio": ratio.to_string(),
        "queries": transcript.queries.iter().map(|q| json!({
            "agent": q.agent, "asked": q.asked.to_string(), "yes": q.yes,
        })).collect::<Vec<_>>(),
        "leaf_trace": transcript.tree_trace,
    });
    Ok(RunReport::new(String::new(), verdict, EXIT_VERIFIED).with_digest(Some(hash)))
}

fn cmd_sched_sweep(args: &SchedSweepArgs) -> Result<RunReport, CommandError> {
    let (instance, hash) = load_scheduling(&args.instance)?;
    let mechanism = build_sched_mechanism(args.mech, args.estimate, &instance)?;
    let (report, mode) = match args.sample {
        Some(samples) => {
            let seed = args.seed.unwrap_or(0);
            (approx_sweep_sampled(&mechanism.rule, &instance, samples, seed)?, "sampled")
        }
        None => {
            let budget =
                OracleBudget { max_profiles: args.max_profiles, ..OracleBudget::default() };
            (approx_sweep(&mechanism.rule, &instance, &budget)?, "exhaustive")
        }
    };
    let verdict = json!({
        "mode": mode,
        "worst_ratio": report.worst_ratio.to_string(),
        "witness": report.witness.key(),
        "profiles_checked": report.profiles_checked,
    });
    Ok(RunReport::new(String::new(), verdict, EXIT_VERIFIED)
        .with_digest(Some(hash))
        .with_seed(args.sample.map(|_| args.seed.unwrap_or(0))))
}

fn cmd_sched_lowerbound(args: &LowerboundArgs, json: bool) -> Result<RunReport, CommandError> {
    let parse = |text: &Option<String>, fallback: Rational| -> Result<Rational, CommandError> {
        match text {
            Some(t) => Ok(t.parse::<Rational>()?),
            None => Ok(fallback),
        }
    };
    let m = args.n as u64;
    let root = osp_core::scheduling::ceil_sqrt(args.n as u64);
    let low = parse(&args.low, Rational::one())?;
    let mid = parse(&args.mid, low.scale(m))?;
    let high = parse(&args.high, mid.scale(m * root))?;
    let report = lower_bound_witnesses(args.n, &low, &mid, &high)?;
    let exit = if report.all_closed { EXIT_VERIFIED } else { EXIT_REFUTED };
    let mut tally = std::collections::BTreeMap::new();
    for branch in &report.branches {
        let kind = match &branch.closure {
            osp_core::scheduling::BranchClosure::NegativeTwoCycle { .. } => "negative_two_cycle",
            osp_core::scheduling::BranchClosure::NoDivergenceContradiction { .. } => {
                "no_divergence"
            }
            osp_core::scheduling::BranchClosure::AllHighContradiction { .. } => "all_high",
        };
        *tally.entry(kind).or_insert(0usize) += 1;
    }
    let mut verdict = json!({
        "n": report.params.n,
        "m": report.params.m,
        "root": report.params.root,
        "low": report.params.low.to_string(),
        "mid": report.params.mid.to_string(),
        "high": report.params.high.to_string(),
        "branch_count": report.branches.len(),
        "closures": tally,
        "all_closed": report.all_closed,
    });
    if json {
        verdict["branches"] =
            serde_json::to_value(&report.branches).expect("branches serialize");
    }
    Ok(RunReport::new(String::new(), verdict, exit))
}

fn cmd_setsys_feasible(args: &SetsysFeasibleArgs) -> Result<RunReport, CommandError> {
    let (instance, hash) = load_setsystem(&args.instance)?;
    let verdict = optimal_osp_feasible(&instance, args.max_subdomains)?;
    let (value, exit) = match verdict {
        FeasibilityVerdict::Feasible => (json!({ "feasible": true }), EXIT_VERIFIED),
        FeasibilityVerdict::Infeasible { subdomain, violation } => {
            let kind = match &violation {
                Misalignment::Strong(_) => "strong",
                Misalignment::Mixed(_) => "mixed",
            };
            (
                json!({
                    "feasible": false,
                    "subdomain": subdomain
                        .per_element()
                        .iter()
                        .map(|vals| vals.iter().map(|v| v.to_string()).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                    "violation": kind,
                }),
                EXIT_REFUTED,
            )
        }
    };
    Ok(RunReport::new(String::new(), value, exit).with_digest(Some(hash)))
}

fn cmd_setsys_run(args: &SetsysRunArgs) -> Result<RunReport, CommandError> {
    let (instance, hash) = load_setsystem(&args.instance)?;
    let profile = TypeProfile::parse_key(&args.profile, instance.elements())?;
    let run = run_mechanism(&instance, &profile)?;
    let cost = social_cost(&run.allocation, &profile)?;
    let (_, best) = brute_social_cost_opt(&instance, &profile)?;
    let verdict = json!({
        "profile": profile.key(),
        "chosen_set": instance.set(run.chosen),
        "allocation": run.allocation,
        "cost": cost.to_string(),
        "optimal_cost": best.to_string(),
        "queries": run.transcript.queries.iter().map(|q| json!({
            "agent": q.agent, "asked": q.asked.to_string(), "yes": q.yes,
        })).collect::<Vec<_>>(),
    });
    Ok(RunReport::new(String::new(), verdict, EXIT_VERIFIED).with_digest(Some(hash)))
}

fn cmd_paths_check(args: &PathsCheckArgs) -> Result<RunReport, CommandError> {
    let low: Rational = args.low.parse()?;
    let high: Rational = args.high.parse()?;
    let feasible = parallel_paths_feasible(args.t, args.b, &low, &high)?;
    let verdict = json!({
        "top": args.t,
        "bottom": args.b,
        "low": low.to_string(),
        "high": high.to_string(),
        "feasible": feasible,
    });
    let exit = if feasible { EXIT_VERIFIED } else { EXIT_REFUTED };
    Ok(RunReport::new(String::new(), verdict, exit))
}
