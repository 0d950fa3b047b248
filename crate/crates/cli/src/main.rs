use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tugwar::continuum::{self, DomainSpec, LadderOptions, Schedule};
use tugwar::engine::{self, IterationTrace};
use tugwar::graph::{build_eps_adjacency, Graph, VertexFunction};
use tugwar::io;
use tugwar::report;
use tugwar::sim::{self, PlaySetup, Role, StrategyParams, StrategyRegistry};
use tugwar::solver::{SolveOptions, SolverRegistry};
use tugwar::Error;

/// Exit code for malformed or inconsistent input.
const EXIT_INPUT: u8 = 1;
/// Exit code for a run that completed but missed its diagnostic target.
const EXIT_DIAGNOSTIC: u8 = 2;

const OUT_DIR_ENV: &str = "TUGWAR_OUT_DIR";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "tugwar",
    version,
    about = "Tug-of-war games on graphs and the discrete infinity Laplacian"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Residual or bracket-width target.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Sweep budget.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    n_max: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; defaults to $TUGWAR_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Json,
    Csv,
}

/// Where the graph comes from: an edge list or a point cloud.
#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
struct GraphInput {
    /// Edge-list file (`vertices N loops 0|1`, then `u v` lines).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Point-cloud CSV (`epsilon,<v>` then coordinate rows).
    #[arg(long)]
    cloud: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Value iteration from u0; writes the trace.
    Iterate {
        #[command(flatten)]
        input: GraphInput,
        /// Running payoff: inline `a,b,c` or a `vertex_index,value` CSV.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        /// Terminal payoff; zero when absent.
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<String>,
        #[arg(long)]
        n: usize,
    },
    /// Certified bracket on the long-term advantage.
    Cf {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        /// Exact sweep count; otherwise iterate until the width is `tol`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Solve `A_{f-c} u = u`.
    Solve {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        /// One of: averaged, direct-search, fixed-point, general.
        #[arg(long, default_value = "general")]
        method: String,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// `c_f(eps)` on a sampled domain, optionally solving the eps-equation.
    Continuum {
        /// Domain JSON `{shape, params, mesh, sampler}`.
        #[arg(long)]
        domain: PathBuf,
        /// x | radius | interval-example | const=<v>
        #[arg(long)]
        payoff: String,
        #[arg(long)]
        eps: f64,
        /// Also solve `-Δ_∞^ε u = f - c` (CSV output is then `x,u` for 1D).
        #[arg(long)]
        solve: bool,
    },
    /// Ladder of `c_f(eps)` over a refining schedule.
    Ladder {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        payoff: String,
        #[arg(long)]
        base_eps: f64,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = ScheduleArg::Halving)]
        schedule: ScheduleArg,
        /// Bracket width per rung.
        #[arg(long, default_value_t = 1e-3)]
        width: f64,
    },
    /// Monte Carlo play or hitting-time runs.
    Simulate {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<String>,
        #[arg(long, default_value_t = 0)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// Maximizer strategy name.
        #[arg(long = "max", default_value = "greedy")]
        maximizer: String,
        /// Minimizer strategy name.
        #[arg(long = "min", default_value = "greedy")]
        minimizer: String,
        /// Target for pull strategies; switches to a hitting-time run with `--hitting`.
        #[arg(long)]
        target: Option<usize>,
        /// Pull toward `--target` against the `--max` strategy and report the arrival time.
        #[arg(long)]
        hitting: bool,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Also dump transcripts to this CSV.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
    /// Reproduce the closed-form examples.
    Examples {
        /// Example name, or `all`.
        #[arg(long, default_value = "all")]
        name: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ScheduleArg {
    Halving,
    Thirding,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Halving => Schedule::Halving,
            ScheduleArg::Thirding => Schedule::Thirding,
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Iterate { .. } => "iterate",
            Command::Cf { .. } => "cf",
            Command::Solve { .. } => "solve",
            Command::Continuum { .. } => "continuum",
            Command::Ladder { .. } => "ladder",
            Command::Simulate { .. } => "simulate",
            Command::Examples { .. } => "examples",
        }
    }
}

/// Result of a command: the artifact text and whether its diagnostic target was met.
struct Outcome {
    artifact: String,
    ok: bool,
}

impl Outcome {
    fn ok(artifact: String) -> Self {
        Self { artifact, ok: true }
    }
}

fn load_graph(input: &GraphInput) -> anyhow::Result<Graph> {
    match (&input.graph, &input.cloud) {
        (Some(p), None) => Ok(io::read_graph(p)?),
        (None, Some(p)) => Ok(build_eps_adjacency(io::read_point_cloud(p)?)?),
        _ => bail!("give exactly one of --graph or --cloud"),
    }
}

/// Inline literal unless the argument names an existing file.
fn load_function(arg: &str, g: &Graph) -> anyhow::Result<VertexFunction> {
    let path = Path::new(arg);
    let f = if path.is_file() {
        io::read_vertex_function(path)?
    } else {
        io::parse_inline_function(arg)?
    };
    g.check_function(&f)?;
    Ok(f)
}

fn payoff(name: &str) -> anyhow::Result<Box<dyn Fn(&[f64]) -> f64>> {
    Ok(match name {
        "x" => Box::new(|p: &[f64]| p[0]),
        "radius" => Box::new(|p: &[f64]| p.iter().map(|v| v * v).sum::<f64>().sqrt()),
        "interval-example" => Box::new(|p: &[f64]| report::interval_example_payoff(p[0])),
        other => match other.strip_prefix("const=") {
            Some(v) => {
                let v: f64 = v
                    .parse()
                    .with_context(|| format!("bad constant in payoff '{other}'"))?;
                Box::new(move |_: &[f64]| v)
            }
            None => {
                return Err(Error::UnknownName {
                    kind: "payoff",
                    name: other.to_string(),
                }
                .into())
            }
        },
    })
}

fn trace_artifact(trace: &IterationTrace, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Csv => io::format_trace_csv(trace),
        Format::Json => io::to_json(trace)?,
    })
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let c = &cli.common;
    if !(c.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", c.tol)).into());
    }
    if c.n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()).into());
    }
    match &cli.command {
        Command::Iterate { input, f, u0, n } => {
            let g = load_graph(input)?;
            let f = load_function(f, &g)?;
            let u0 = match u0 {
                Some(s) => load_function(s, &g)?,
                None => VertexFunction::zeros(g.vertex_count()),
            };
            let trace = engine::iterate(&g, &f, &u0, *n)?;
            Ok(Outcome::ok(trace_artifact(&trace, c.format)?))
        }
        Command::Cf { input, f, n } => {
            let g = load_graph(input)?;
            let f = load_function(f, &g)?;
            let b = match n {
                Some(n) => engine::cf_bracket(&g, &f, *n)?,
                None => engine::cf_bracket_until(&g, &f, c.tol, c.n_max)?,
            };
            let artifact = match c.format {
                Format::Json => io::bracket_json(&b)?,
                Format::Csv => format!(
                    "lower,upper,n,tol_met\n{},{},{},{}\n",
                    b.lower, b.upper, b.n, b.tol_met
                ),
            };
            Ok(Outcome {
                artifact,
                ok: n.is_some() || b.tol_met,
            })
        }
        Command::Solve {
            input,
            f,
            method,
            restarts,
        } => {
            let g = load_graph(input)?;
            let f = load_function(f, &g)?;
            let registry = SolverRegistry::builtin();
            let solver = registry.get(method)?;
            let opts = SolveOptions {
                tol: c.tol,
                n_max: c.n_max,
                restarts: *restarts,
            };
            let (res, ok) = match solver.solve(&g, &f, &opts) {
                Ok(r) => (r, true),
                Err(Error::NotConverged(best)) => (*best, false),
                Err(e) => return Err(e.into()),
            };
            let artifact = match c.format {
                Format::Json => io::solve_result_json(&res)?,
                Format::Csv => io::format_vertex_function(&res.u),
            };
            Ok(Outcome { artifact, ok })
        }
        Command::Continuum {
            domain,
            payoff: name,
            eps,
            solve,
        } => {
            let domain = io::read_domain(domain)?;
            let f = payoff(name)?;
            if !solve {
                let b = continuum::cf_eps_until(&domain, f.as_ref(), *eps, c.tol, c.n_max)?;
                return Ok(Outcome {
                    artifact: io::bracket_json(&b)?,
                    ok: b.tol_met,
                });
            }
            let d = continuum::discretize(&domain, f.as_ref(), *eps)?;
            let sol = match continuum::solve_discretized(&d, c.tol, c.n_max) {
                Ok(s) => s,
                Err(Error::NotConverged(best)) => {
                    // Best-effort artifact: the closest iterate found.
                    return Ok(Outcome {
                        artifact: io::solve_result_json(&best)?,
                        ok: false,
                    });
                }
                Err(e) => return Err(e.into()),
            };
            let artifact = match c.format {
                Format::Json => io::to_json(&sol)?,
                Format::Csv => io::format_plot_csv(d.points(), &sol.result.u)?,
            };
            Ok(Outcome::ok(artifact))
        }
        Command::Ladder {
            domain,
            payoff: name,
            base_eps,
            depth,
            schedule,
            width,
        } => {
            let domain: DomainSpec = io::read_domain(domain)?;
            let f = payoff(name)?;
            let ladder = continuum::cf_ladder(
                &domain,
                f.as_ref(),
                *base_eps,
                *depth,
                (*schedule).into(),
                LadderOptions {
                    tol: *width,
                    n_max: c.n_max,
                },
            )?;
            let ok = ladder.violations().is_empty();
            let artifact = match c.format {
                Format::Json => io::to_json(&ladder)?,
                Format::Csv => io::format_ladder_csv(&ladder),
            };
            Ok(Outcome { artifact, ok })
        }
        Command::Simulate {
            input,
            f,
            u0,
            horizon,
            start,
            maximizer,
            minimizer,
            target,
            hitting,
            trials,
            transcripts,
        } => {
            let g = load_graph(input)?;
            let registry = StrategyRegistry::builtin();
            if *hitting {
                let target = target.ok_or_else(|| {
                    anyhow!(Error::InvalidParameter("--hitting needs --target".into()))
                })?;
                let params = StrategyParams {
                    target: Some(target),
                    table: None,
                };
                let opponent = registry.build(maximizer, &g, Role::Maximizer, &params)?;
                let rep = sim::hitting_time_experiment(
                    &g,
                    target,
                    *start,
                    opponent.as_ref(),
                    *trials,
                    c.seed,
                )?;
                let ok = rep.within_diam_squared() && rep.cap_hits == 0;
                return Ok(Outcome {
                    artifact: io::to_json(&rep)?,
                    ok,
                });
            }
            let f = match f {
                Some(s) => load_function(s, &g)?,
                None => VertexFunction::zeros(g.vertex_count()),
            };
            let u0 = match u0 {
                Some(s) => load_function(s, &g)?,
                None => VertexFunction::zeros(g.vertex_count()),
            };
            let trace = engine::iterate_recording(&g, &f, &u0, *horizon)?;
            let params = StrategyParams {
                target: *target,
                table: Some(trace.iterates.clone()),
            };
            let s1 = registry.build(maximizer, &g, Role::Maximizer, &params)?;
            let s2 = registry.build(minimizer, &g, Role::Minimizer, &params)?;
            let setup = PlaySetup {
                graph: &g,
                f: &f,
                u0: &u0,
                horizon: *horizon,
                start: *start,
            };
            let mut rep = sim::play(
                setup,
                s1.as_ref(),
                s2.as_ref(),
                *trials,
                c.seed,
                transcripts.is_some(),
            )?;
            if let (Some(path), Some(ts)) = (transcripts, rep.transcripts.take()) {
                fs::write(path, io::format_transcripts_csv(&ts))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Outcome::ok(io::to_json(&rep)?))
        }
        Command::Examples { name } => {
            let rows = if name == "all" {
                report::examples_suite()
            } else {
                vec![report::run_example(name)?]
            };
            eprint!("{}", report::format_table(&rows));
            let ok = rows.iter().all(|r| r.passed);
            let artifact = match c.format {
                Format::Json => io::to_json(&serde_json::json!({ "rows": rows }))?,
                Format::Csv => {
                    let mut s =
                        String::from("name,expected,computed,tolerance,comparison,passed\n");
                    for r in &rows {
                        s.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            r.name,
                            r.expected,
                            r.computed,
                            r.tolerance,
                            serde_json::to_value(r.comparison)?.as_str().unwrap_or(""),
                            r.passed
                        ));
                    }
                    s
                }
            };
            Ok(Outcome { artifact, ok })
        }
    }
}

fn output_path(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.common.out {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUT_DIR_ENV)?;
    let ext = match cli.common.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    Some(PathBuf::from(dir).join(format!("{}.{ext}", cli.command.name())))
}

fn emit(cli: &Cli, artifact: &str) -> anyhow::Result<()> {
    match output_path(cli) {
        Some(path) => {
            fs::write(&path, artifact).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{artifact}");
            if !artifact.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NotConverged(_) | Error::IllegalMove { .. }) => EXIT_DIAGNOSTIC,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match serde_json::to_string(&cli) {
        Ok(cfg) => eprintln!("config: {cfg}"),
        Err(e) => eprintln!("config: <unserializable: {e}>"),
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    if let Err(e) = emit(&cli, &outcome.artifact) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INPUT);
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("diagnostic target not met");
        ExitCode::from(EXIT_DIAGNOSTIC)
    }
}
