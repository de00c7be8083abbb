//! The `kpump` command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kpump::pebble::{equivalent, pebble_solve, PebbleInstance};
use kpump::roadmap::{preprocess, PlannerError, PlannerParams, RunOptions};
use kpump::scenario::{load_plan, load_scenario, save_plan, ColorGroup, PlanFile, Scenario};
use kpump::verify::{plan_stats, verify_plan, DEFAULT_EPS};

pub mod svg;

/// Exit code for a run that could not find a plan.
pub const EXIT_NO_PLAN: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kpump", version, about = "Multi-color disc robot motion planner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan a scenario and write a plan file.
    Plan(PlanArgs),
    /// Plan with the unpumped baseline (mu forced to the robot count).
    Kbasic(PlanArgs),
    /// Check a plan file against its scenario.
    Verify(VerifyArgs),
    /// Solve a pebble instance in the text format.
    Pebble(PebbleArgs),
    /// Render a scenario, and optionally a plan, as an animated SVG.
    Svg(SvgArgs),
    /// Run planners over growing robot counts and print a success table.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Kbasic,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Sampled pebble graphs.
    #[arg(long)]
    pub g: usize,
    /// Connections per graph pair.
    #[arg(long)]
    pub q: usize,
    /// Pumped size per graph; required unless the baseline is used.
    #[arg(long)]
    pub mu: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// Also write the report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PebbleArgs {
    /// Instance file, or `-` for standard input.
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SvgArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Seconds per plan step in the animation.
    #[arg(long, default_value_t = 1.0)]
    pub step_seconds: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub g: usize,
    #[arg(long)]
    pub q: usize,
    #[arg(long)]
    pub mu: usize,
    /// Seeds 0..seeds are run for every row.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Only run the full robot count instead of adding robots one by one.
    #[arg(long)]
    pub full_only: bool,
    #[arg(long, value_delimiter = ',', default_value = "kpump,kbasic")]
    pub planners: Vec<Planner>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Planner {
    Kpump,
    Kbasic,
}

impl Planner {
    pub fn name(self) -> &'static str {
        match self {
            Planner::Kpump => "kpump",
            Planner::Kbasic => "kbasic",
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Plan(a) => {
            let planner = if a.baseline == Some(Baseline::Kbasic) {
                Planner::Kbasic
            } else {
                Planner::Kpump
            };
            cmd_plan(&a, planner)
        }
        Command::Kbasic(a) => cmd_plan(&a, Planner::Kbasic),
        Command::Verify(a) => cmd_verify(&a),
        Command::Pebble(a) => cmd_pebble(&a),
        Command::Svg(a) => cmd_svg(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_scenario(&bytes).with_context(|| format!("loading scenario {}", path.display()))
}

/// A successful planning run.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub file: PlanFile,
    pub graphs: usize,
    pub nodes: usize,
    pub connection_edges: usize,
    pub equivalence_edges: usize,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
}

/// Preprocesses and queries `scenario` from its starts to its targets.
pub fn plan_scenario(
    scenario: &Scenario,
    params: PlannerParams,
    planner: Planner,
    time_limit: Option<f64>,
    threads: usize,
) -> Result<PlanOutcome, PlannerError> {
    let started = Instant::now();
    let params = match planner {
        Planner::Kpump => params,
        Planner::Kbasic => params.kbasic(scenario.robot_count()),
    };
    let opts = RunOptions {
        threads,
        deadline: time_limit.map(|s| started + Duration::from_secs_f64(s.max(0.0))),
    };
    let state = preprocess(scenario, &params, &opts)?;
    let (graphs, nodes) = (state.graph_count(), state.node_count());
    let (connection_edges, equivalence_edges) = (state.connection_edge_count(), state.equivalence_edge_count());
    let warnings = state.warnings().to_vec();
    let plan = state.into_query(&scenario.starts(), &scenario.targets(), &opts)?;
    let counts: Vec<usize> = scenario.colors.iter().map(|c| c.starts.len()).collect();
    Ok(PlanOutcome {
        file: PlanFile::new(scenario.name.clone(), params.echo(planner.name()), &plan, &counts),
        graphs,
        nodes,
        connection_edges,
        equivalence_edges,
        warnings,
        elapsed: started.elapsed(),
    })
}

/// Whether a planner error means "no plan found" rather than bad input.
pub fn is_no_plan(e: &PlannerError) -> bool {
    matches!(
        e,
        PlannerError::QueryInfeasible | PlannerError::TimedOut | PlannerError::AllSamplesFailed(_)
    )
}

pub fn cmd_plan(a: &PlanArgs, planner: Planner) -> Result<i32> {
    let scenario = read_scenario(&a.scenario)?;
    let mu = match (a.mu, planner) {
        (Some(mu), _) => mu,
        (None, Planner::Kbasic) => scenario.robot_count(),
        (None, Planner::Kpump) => bail!("--mu is required"),
    };
    if let Some(t) = a.time_limit {
        if !(t.is_finite() && t >= 0.0) {
            bail!("--time-limit must be a non-negative number of seconds");
        }
    }
    let params = PlannerParams::new(a.g, a.q, mu, a.seed);
    match plan_scenario(&scenario, params, planner, a.time_limit, a.threads) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            fs::write(&a.out, save_plan(&out.file)).with_context(|| format!("writing {}", a.out.display()))?;
            let stats = plan_stats(&out.file.plan());
            println!(
                "planner={} steps={} total_length={:.6} graphs={} nodes={} connection_edges={} equivalence_edges={} elapsed={:.3}s",
                planner.name(),
                stats.step_count,
                stats.total_length,
                out.graphs,
                out.nodes,
                out.connection_edges,
                out.equivalence_edges,
                out.elapsed.as_secs_f64()
            );
            Ok(0)
        }
        Err(e) if is_no_plan(&e) => {
            eprintln!("no plan: {e}");
            Ok(EXIT_NO_PLAN)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let scenario = read_scenario(&a.scenario)?;
    let bytes = fs::read(&a.plan).with_context(|| format!("reading {}", a.plan.display()))?;
    let file = load_plan(&bytes).with_context(|| format!("loading plan {}", a.plan.display()))?;
    let report = verify_plan(&scenario, &file.plan(), a.eps);
    let json = report.to_json();
    println!("{json}");
    if let Some(path) = &a.report {
        fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

pub fn cmd_pebble(a: &PebbleArgs) -> Result<i32> {
    let text = if a.input.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).context("reading standard input")?
    } else {
        fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?
    };
    let inst: PebbleInstance = text.parse().context("parsing pebble instance")?;
    if !equivalent(&inst.graph, &inst.start, &inst.target)? {
        println!("infeasible: component counts differ");
        return Ok(EXIT_NO_PLAN);
    }
    let path = pebble_solve(&inst.graph, &inst.start, &inst.target)?;
    for m in &path.moves {
        println!("{m}");
    }
    println!("moves: {}", path.moves.len());
    Ok(0)
}

pub fn cmd_svg(a: &SvgArgs) -> Result<i32> {
    let scenario = read_scenario(&a.scenario)?;
    let plan = match &a.plan {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            load_plan(&bytes)?.plan()
        }
        None => Default::default(),
    };
    if !(a.step_seconds.is_finite() && a.step_seconds > 0.0) {
        bail!("--step-seconds must be positive");
    }
    fs::write(&a.out, svg::render(&scenario, &plan, a.step_seconds))
        .with_context(|| format!("writing {}", a.out.display()))?;
    Ok(0)
}

/// The first `n` robots, taking one robot per color in turn.
pub fn first_robots(scenario: &Scenario, n: usize) -> Result<Scenario> {
    let mut take = vec![0; scenario.colors.len()];
    let mut left = n.min(scenario.robot_count());
    let mut round = 0;
    while left > 0 {
        for (c, g) in scenario.colors.iter().enumerate() {
            if left > 0 && round < g.starts.len() {
                take[c] += 1;
                left -= 1;
            }
        }
        round += 1;
    }
    let colors = scenario
        .colors
        .iter()
        .zip(&take)
        .filter(|(_, &t)| t > 0)
        .map(|(g, &t)| ColorGroup {
            radius: g.radius,
            starts: g.starts[..t].to_vec(),
            targets: g.targets[..t].to_vec(),
        })
        .collect();
    Ok(Scenario::new(
        format!("{}-{n}", scenario.name),
        scenario.workspace.clone(),
        colors,
    )?)
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub robots: usize,
    pub planner: Planner,
    pub successes: usize,
    pub runs: usize,
    pub mean_seconds: f64,
}

pub fn bench(a: &BenchArgs, scenario: &Scenario) -> Result<Vec<BenchRow>> {
    let total = scenario.robot_count();
    let counts: Vec<usize> = if a.full_only { vec![total] } else { (1..=total).collect() };
    let mut rows = Vec::new();
    for n in counts {
        let sub = first_robots(scenario, n)?;
        for &planner in &a.planners {
            let mut successes = 0;
            let mut seconds = 0.0;
            for seed in 0..a.seeds {
                let params = PlannerParams::new(a.g, a.q, a.mu.max(n), seed);
                let started = Instant::now();
                match plan_scenario(&sub, params, planner, Some(a.time_limit), a.threads) {
                    Ok(out) => {
                        if verify_plan(&sub, &out.file.plan(), DEFAULT_EPS).passed {
                            successes += 1;
                        }
                    }
                    Err(e) if is_no_plan(&e) => {}
                    Err(e) => return Err(e.into()),
                }
                seconds += started.elapsed().as_secs_f64();
            }
            rows.push(BenchRow {
                robots: n,
                planner,
                successes,
                runs: a.seeds as usize,
                mean_seconds: if a.seeds == 0 { 0.0 } else { seconds / a.seeds as f64 },
            });
        }
    }
    Ok(rows)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let scenario = read_scenario(&a.scenario)?;
    println!("| robots | planner | success | mean time (s) |");
    println!("|---:|---|---:|---:|");
    for r in bench(a, &scenario)? {
        println!(
            "| {} | {} | {}/{} | {:.3} |",
            r.robots,
            r.planner.name(),
            r.successes,
            r.runs,
            r.mean_seconds
        );
    }
    Ok(0)
}
