use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use netalloc::bounds::{theorem1_bound, theorem2_bound, theorem3_bound, Bound, BoundQuery};
use netalloc::network::{generate_random_network, validate_network, GeneratorParams, ScenarioSet};
use netalloc::saa::crude_value_range;
use netalloc::two_stage::{exact_evaluate, mc_evaluate};

use crate::error::{CliError, CliResult};
use crate::experiment::{aggregate, load_plan, run_plan, write_csv, AGGREGATE_HEADER, RUN_HEADER};
use crate::io::{load_valid_network, read_allocation, read_json, read_network, read_scenarios, write_text};
use crate::solver::{elapsed_ms, run_method, true_value, Method, SolveParams, TrueEval};

#[derive(Debug, Parser)]
#[command(name = "netalloc", version, about = "Two-stage resource allocation on unreliable networks")]
pub struct Cli {
    /// Report wall times as 0 so that output is byte-stable across runs.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network file; exits 1 when it has violations.
    Validate { network: PathBuf },
    /// Write a random layered network.
    Generate(GenerateArgs),
    /// Compute an allocation with one of the optimizers.
    Solve(SolveArgs),
    /// Value a fixed allocation exactly or by sampling.
    Evaluate(EvaluateArgs),
    /// Run an experiment plan and write per-run and aggregate CSV files.
    Experiment {
        plan: PathBuf,
        /// Overrides the plan's output path.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Sample sizes from the three Hoeffding-type bounds.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator parameters as JSON; flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub producers: Option<usize>,
    #[arg(long)]
    pub consumers: Option<usize>,
    #[arg(long)]
    pub regular: Option<usize>,
    #[arg(long)]
    pub edges: Option<usize>,
    #[arg(long)]
    pub unreliable: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Network file to write; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub network: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Sample size for `saa`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of candidates for `subselect`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n1: Option<usize>,
    /// Evaluation sample size for `subselect`; defaults to 2·n1.
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Explicit scenario set for `exact`.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Allocation file to write; printed after the summary when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Write the subselection audit trail (JSON) here.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["exact", "mc"])))]
pub struct EvaluateArgs {
    pub network: PathBuf,
    pub allocation: PathBuf,
    /// Enumerate every scenario (or use --scenarios).
    #[arg(long)]
    pub exact: bool,
    /// Sample this many scenarios.
    #[arg(long, value_name = "N")]
    pub mc: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Width of the recourse value range.
    #[arg(long)]
    pub q_d: Option<f64>,
    /// Take q_d as the crude range of this network when --q-d is absent.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    /// Size of a finite allocation set (enables the second bound).
    #[arg(long)]
    pub x_space: Option<u64>,
    /// Dimension of the allocation box (with --d-box and --lipschitz, enables the third bound).
    #[arg(long, requires_all = ["d_box", "lipschitz"])]
    pub n_dim: Option<u64>,
    #[arg(long)]
    pub d_box: Option<f64>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let timing = !cli.no_timing;
    match cli.command {
        Command::Validate { network } => cmd_validate(network),
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a, timing),
        Command::Evaluate(a) => cmd_evaluate(a, timing),
        Command::Experiment { plan, output } => cmd_experiment(plan, output, timing),
        Command::Bounds(a) => cmd_bounds(a),
    }
}

fn cmd_validate(path: PathBuf) -> CliResult<()> {
    let net = read_network(&path)?;
    let report = validate_network(&net);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if !report.is_ok() {
        for v in &report.violations {
            println!("violation: {v}");
        }
        return Err(CliError::domain(format!(
            "{}: {} violation(s)",
            path.display(),
            report.violations.len()
        )));
    }
    println!(
        "ok: {} nodes, {} edges, k = {} unreliable, {} scenarios",
        net.nodes().len(),
        net.edges().len(),
        net.k(),
        scenario_space(net.k())
    );
    Ok(())
}

fn scenario_space(k: usize) -> String {
    if k < 64 {
        (1u64 << k).to_string()
    } else {
        format!("2^{k}")
    }
}

fn cmd_generate(a: GenerateArgs) -> CliResult<()> {
    let mut p: GeneratorParams = match &a.params {
        Some(path) => read_json(path)?,
        None => GeneratorParams::default(),
    };
    p.n_producers = a.producers.unwrap_or(p.n_producers);
    p.n_consumers = a.consumers.unwrap_or(p.n_consumers);
    p.n_regular = a.regular.unwrap_or(p.n_regular);
    p.n_edges = a.edges.unwrap_or(p.n_edges);
    p.n_unreliable = a.unreliable.unwrap_or(p.n_unreliable);
    let net = generate_random_network(&p, a.seed)?;
    let summary = format!(
        "seed = {}, k = {}, scenario space 2^{} = {}",
        a.seed,
        net.k(),
        net.k(),
        scenario_space(net.k())
    );
    match &a.output {
        Some(path) => {
            write_text(path, &net.to_json())?;
            println!("{summary}");
        }
        None => {
            print!("{}", net.to_json());
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs, timing: bool) -> CliResult<()> {
    let net = load_valid_network(&a.network)?;
    if matches!(a.method, Method::Evaluate | Method::Bounds) {
        return Err(CliError::domain(format!(
            "use the `{}` subcommand instead",
            a.method.name()
        )));
    }
    let scenarios = match &a.scenarios {
        Some(p) => Some(read_scenarios(p)?),
        None => None,
    };
    let params = SolveParams {
        n: a.n,
        k: a.k,
        n1: a.n1,
        n2: a.n2,
        seed: a.seed,
        scenarios,
    };
    let out = run_method(&net, a.method, &params)?;
    let mut line = format!("method={}", a.method.name());
    match a.method {
        Method::Saa => line += &format!(" n={} seed={}", a.n.unwrap(), a.seed),
        Method::Subselect => {
            line += &format!(
                " k={} n1={} n2={} seed={}",
                a.k.unwrap(),
                a.n1.unwrap(),
                params.resolved_n2().unwrap(),
                a.seed
            )
        }
        _ => {}
    }
    line += &format!(" objective={}", out.objective);
    if let Some(se) = out.objective_se {
        line += &format!(" std_error={se}");
    }
    if let Some(t) = true_value(&net, &out.allocation, &TrueEval::Auto)? {
        line += &format!(" true_objective={}", t.value);
    }
    if let Some(d) = out.n_distinct {
        line += &format!(" n_distinct_scenarios={d}");
    }
    if timing {
        line += &format!(" wall_time_ms={}", out.wall_ms);
    }
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}");
    if let (Some(path), Some(audit)) = (&a.audit, &out.audit) {
        let trail = serde_json::json!({
            "chosen": audit.chosen,
            "eval_seed": audit.eval_seed,
            "n2_distinct": audit.n2_distinct,
            "candidates": audit.candidates,
        });
        write_text(path, &(serde_json::to_string_pretty(&trail).expect("audit serializes") + "\n"))?;
    }
    match &a.output {
        Some(path) => write_text(path, &out.allocation.to_json())?,
        None => {
            let _ = write!(stdout, "{}", out.allocation.to_json());
        }
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, timing: bool) -> CliResult<()> {
    let net = load_valid_network(&a.network)?;
    let x = read_allocation(&a.allocation)?;
    let start = Instant::now();
    let r = match a.mc {
        Some(n) => {
            if a.scenarios.is_some() {
                return Err(CliError::domain("--scenarios applies to --exact only"));
            }
            mc_evaluate(&net, &x, n, a.seed)?
        }
        None => {
            let set = match &a.scenarios {
                Some(p) => read_scenarios(p)?,
                None => ScenarioSet::bernoulli(&net),
            };
            exact_evaluate(&net, &x, &set, false)?
        }
    };
    let wall = if timing { elapsed_ms(start) } else { 0.0 };
    println!("estimate,std_error,n_samples,wall_time_ms");
    println!("{},{},{},{}", r.estimate, r.std_error, r.n_samples, wall);
    Ok(())
}

fn cmd_experiment(plan: PathBuf, output: Option<PathBuf>, timing: bool) -> CliResult<()> {
    let mut loaded = load_plan(&plan)?;
    if let Some(o) = output {
        if loaded.plan.aggregate_path.is_none() {
            loaded.aggregate_path = crate::experiment::default_aggregate_path(&o);
        }
        loaded.output_path = o;
    }
    if !timing {
        loaded.plan.record_timing = false;
    }
    let rows = run_plan(&loaded)?;
    let agg = aggregate(&rows);
    write_csv(&loaded.output_path, &rows, &RUN_HEADER)?;
    write_csv(&loaded.aggregate_path, &agg, &AGGREGATE_HEADER)?;
    println!(
        "wrote {} rows to {} and {} aggregate rows to {}",
        rows.len(),
        loaded.output_path.display(),
        agg.len(),
        loaded.aggregate_path.display()
    );
    Ok(())
}

fn cmd_bounds(a: BoundsArgs) -> CliResult<()> {
    let q_d = match (a.q_d, &a.network) {
        (Some(q), _) => q,
        (None, Some(path)) => crude_value_range(&load_valid_network(path)?),
        (None, None) => return Err(CliError::domain("give --q-d or --network")),
    };
    let mut q = BoundQuery::new(q_d, a.epsilon, a.delta);
    q.x_space_size = a.x_space;
    q.n_dim = a.n_dim;
    q.d_box = a.d_box;
    q.lipschitz_k = a.lipschitz;
    let common = format!("q_d={} epsilon={} delta={}", q.q_d, q.epsilon, q.delta);
    let show = |name: &str, extra: String, b: Bound| {
        println!("{name} {common}{extra} N={}", b.n);
        if let Some(w) = b.warning {
            println!("warning: {w}");
        }
    };
    show("theorem1", String::new(), theorem1_bound(&q)?);
    if let Some(x) = q.x_space_size {
        show("theorem2", format!(" x_space={x}"), theorem2_bound(&q)?);
    }
    if let Some(n) = q.n_dim {
        show(
            "theorem3",
            format!(" n_dim={n} d_box={} lipschitz={}", q.d_box.unwrap(), q.lipschitz_k.unwrap()),
            theorem3_bound(&q)?,
        );
    }
    Ok(())
}
