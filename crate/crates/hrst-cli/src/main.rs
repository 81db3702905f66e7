//! `hrst` — sample Poisson clouds in hyperbolic space, build radial spanning
//! trees, render them in the Poincaré disc, and run the Monte Carlo
//! experiments.
//!
//! Exit codes: 0 success, 2 usage error, 3 resource cap exceeded, 4 numeric
//! or verification failure. All outputs are reproducible from the command
//! line plus the seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hrst::experiments::{self, ExperimentConfig, ExperimentKind, KindParams};
use hrst::ppp::{sample_ball, SeedDescriptor};
use hrst::render::{render_svg, EdgeStyle, RenderSpec};
use hrst::rst::{build, RadialTree};
use hrst::Error;

#[derive(Parser)]
#[command(
    name = "hrst",
    version,
    about = "Radial spanning trees on Poisson processes in hyperbolic space"
)]
struct Cli {
    /// Worker threads for replications (default: HRST_JOBS or all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Poisson cloud in a ball and optionally build its tree.
    Simulate(SimulateArgs),
    /// Render a d=1 tree file to SVG in the Poincaré disc.
    Render(RenderArgs),
    /// Run one Monte Carlo experiment and write its report.
    Experiment(ExperimentArgs),
    /// Run an experiment over a grid of (lambda, horizon) values.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stream index under the master seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output cloud file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also build the tree and write it here (JSON).
    #[arg(long)]
    build: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StyleArg {
    Arc,
    Geodesic,
}

#[derive(Args)]
struct RenderArgs {
    /// Tree file produced by `simulate --build`.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 800)]
    size: u32,
    #[arg(long, value_enum, default_value_t = StyleArg::Geodesic)]
    style: StyleArg,
    /// Disable per-subtree coloring.
    #[arg(long)]
    no_color: bool,
    #[arg(long, default_value_t = 64)]
    samples: u32,
    #[arg(long, default_value_t = 0.8)]
    stroke_width: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// levelcount | mbd_moments | density_thick | straightness | stab_probe | emptying_demo
    kind: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 8.0)]
    horizon: f64,
    #[arg(long, default_value_t = 2.0)]
    margin: f64,
    /// Comma-separated level grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 3.0, 4.0, 5.0])]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-level CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_prime: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    h_values: Option<Vec<f64>>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    trace_band: Option<f64>,
}

impl ParamArgs {
    fn into_params(self) -> KindParams {
        KindParams {
            p: self.p,
            delta: self.delta,
            delta_prime: self.delta_prime,
            h_values: self.h_values,
            h: self.h,
            theta: self.theta,
            epsilon: self.epsilon,
            kappa: self.kappa,
            resamples: self.resamples,
            trace_band: self.trace_band,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    kind: String,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![8.0])]
    horizons: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    margin: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 3.0, 4.0, 5.0])]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Merged CSV output.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli
        .jobs
        .or_else(|| std::env::var("HRST_JOBS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &CliError) -> u8 {
    match err {
        CliError::Usage(_) => 2,
        CliError::Lib(Error::CountCapExceeded { .. }) => 3,
        CliError::Lib(Error::NotPlanarDimension(_)) => 2,
        CliError::Io(_) | CliError::Lib(_) => 4,
    }
}

enum CliError {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(args) => simulate(args),
        Command::Render(args) => render(args),
        Command::Experiment(args) => experiment(args),
        Command::Sweep(args) => sweep(args),
    }
}

fn write_atomic(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.radius <= 0.0 || args.lambda < 0.0 || args.dim < 1 {
        return Err(CliError::Usage(
            "simulate needs --radius > 0, --lambda >= 0, --dim >= 1".into(),
        ));
    }
    let cloud = sample_ball(
        args.dim,
        args.lambda,
        args.radius,
        SeedDescriptor::new(args.seed, args.stream),
    )?;
    let mut json = serde_json::to_string_pretty(&cloud).expect("cloud serializes");
    json.push('\n');
    write_atomic(&args.out, &json)?;
    eprintln!("wrote {} points to {}", cloud.len(), args.out.display());
    if let Some(tree_path) = args.build {
        let tree = build(cloud)?;
        if tree.tie_count > 0 {
            eprintln!(
                "warning: {} exact ancestor-distance ties broken by index",
                tree.tie_count
            );
        }
        let mut json = serde_json::to_string_pretty(&tree).expect("tree serializes");
        json.push('\n');
        write_atomic(&tree_path, &json)?;
        eprintln!("wrote tree to {}", tree_path.display());
    }
    Ok(())
}

fn load_tree(path: &PathBuf) -> Result<RadialTree, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut tree: RadialTree = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse tree file: {e}")))?;
    tree.rebuild_children();
    Ok(tree)
}

fn render(args: RenderArgs) -> Result<(), CliError> {
    let tree = load_tree(&args.tree)?;
    let spec = RenderSpec {
        size_px: args.size,
        edge_style: match args.style {
            StyleArg::Arc => EdgeStyle::Arc,
            StyleArg::Geodesic => EdgeStyle::Geodesic,
        },
        color_subtrees: !args.no_color,
        samples_per_edge: args.samples,
        stroke_width: args.stroke_width,
    };
    let svg = render_svg(&tree, &spec)?;
    write_atomic(&args.out, &svg)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn parse_kind(kind: &str) -> Result<ExperimentKind, CliError> {
    kind.parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig {
        kind: parse_kind(&args.kind)?,
        d: args.dim,
        lambda: args.lambda,
        horizon: args.horizon,
        margin: args.margin,
        levels: args.levels,
        replications: args.reps,
        master_seed: args.seed,
        params: args.params.into_params(),
    };
    let report = experiments::run(&cfg)?;
    eprintln!(
        "{}: {} replications in {:.2}s",
        cfg.kind, cfg.replications, report.wall_clock_secs
    );
    for (k, v) in &report.summary {
        eprintln!("  {k} = {v}");
    }
    match (&args.out, &args.csv) {
        (None, None) => println!("{}", report.to_json()),
        (out, csv) => {
            if let Some(path) = out {
                write_atomic(path, &report.to_json())?;
                eprintln!("wrote {}", path.display());
            }
            if let Some(path) = csv {
                write_atomic(path, &report.to_csv())?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = ExperimentConfig {
        kind: parse_kind(&args.kind)?,
        d: args.dim,
        lambda: 1.0,
        horizon: 8.0,
        margin: args.margin,
        levels: args.levels,
        replications: args.reps,
        master_seed: args.seed,
        params: args.params.into_params(),
    };
    let (reports, merged) = experiments::run_sweep(&base, &args.lambdas, &args.horizons)?;
    write_atomic(&args.out, &merged)?;
    eprintln!(
        "swept {} configs, wrote {}",
        reports.len(),
        args.out.display()
    );
    Ok(())
}
