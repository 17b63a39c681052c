use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbm_core::estimators::AlphaMode;
use rbm_core::harness::{run_experiment, run_float_demo, validate_saved_run, ExperimentConfig};
use rbm_core::{EstimatorKind, ProblemKind, RbError};

#[derive(Parser)]
#[command(name = "rbm", version, about = "Reduced basis greedy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a greedy experiment described by a TOML config.
    Run(Box<RunArgs>),
    /// Tabulate the expanded vs direct difference-norm formulas.
    FloatDemo {
        /// Smallest exponent N in b = a + mu * 4^-N.
        #[arg(long, default_value_t = 1)]
        n_min: u32,
        #[arg(long, default_value_t = 22)]
        n_max: u32,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "float_demo.csv")]
        output: PathBuf,
    },
    /// Recompute true errors for a saved run directory.
    Validate {
        run_dir: PathBuf,
        /// Validation grid counts, comma separated (default: the run's).
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long)]
    estimator: Option<EstimatorKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    nodes_per_dim: Option<usize>,
    #[arg(long)]
    sign_at_zero: Option<f64>,
    #[arg(long)]
    eps_tol: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    training_grid: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_alpha_mode)]
    alpha_mode: Option<AlphaMode>,
    #[arg(long)]
    alpha_floor: Option<f64>,
    #[arg(long)]
    drop_tol: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    validation: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    validation_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    lagrange_checkpoints: Option<Vec<usize>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn parse_alpha_mode(s: &str) -> Result<AlphaMode, String> {
    match s {
        "unit" => Ok(AlphaMode::Unit),
        "exact-eig" => Ok(AlphaMode::ExactEig),
        other => Err(format!("unknown alpha mode '{other}' (expected unit or exact-eig)")),
    }
}

impl RunArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(c.problem, self.problem);
        set!(c.estimator, self.estimator);
        set!(c.seed, self.seed);
        set!(c.workers, self.workers);
        set!(c.truth.nodes_per_dim, self.nodes_per_dim);
        set!(c.truth.sign_at_zero, self.sign_at_zero);
        set!(c.greedy.eps_tol, self.eps_tol);
        set!(c.greedy.n_max, self.n_max);
        set!(c.greedy.training_grid, self.training_grid);
        set!(c.greedy.alpha_mode, self.alpha_mode);
        set!(c.greedy.alpha_floor, self.alpha_floor);
        set!(c.greedy.drop_tol, self.drop_tol);
        set!(c.greedy.rank_tol, self.rank_tol);
        set!(c.validation.enabled, self.validation);
        set!(c.validation.checkpoints, self.checkpoints);
        set!(c.output.lagrange_checkpoints, self.lagrange_checkpoints);
        set!(c.output.dir, self.output_dir);
        if self.validation_grid.is_some() {
            c.validation.grid = self.validation_grid;
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rbm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), RbError> {
    match cli.command {
        Command::Run(args) => {
            let mut config = ExperimentConfig::from_file(&args.config)?;
            args.apply(&mut config);
            config.validate()?;
            let out = run_experiment(&config)?;
            println!("{}: N = {}, {}", out.dir.display(), out.final_n, out.history.termination.label());
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::FloatDemo { n_min, n_max, samples, seed, output } => {
            if n_min > n_max {
                return Err(RbError::Config(format!("--n-min {n_min} exceeds --n-max {n_max}")));
            }
            let n_values: Vec<u32> = (n_min..=n_max).collect();
            let rows = run_float_demo(&n_values, samples, seed, &output)?;
            println!("{}: {} rows", output.display(), rows.len());
        }
        Command::Validate { run_dir, grid, workers } => {
            let (path, max) = validate_saved_run(&run_dir, grid, workers)?;
            match max {
                Some(m) => println!("{}: max true error {m:.3e}", path.display()),
                None => println!("{}: no valid points", path.display()),
            }
        }
    }
    Ok(())
}
