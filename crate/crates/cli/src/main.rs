use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pai_cli::account::{account, render};
use pai_cli::config::{Experiment, ExperimentConfig, Plan};
use pai_cli::experiments::{local_sigma, run};
use pai_cli::report::{write_csv, write_json_lines};
use pai_cli::verify::{all_passed, run_verify, VerifyOptions, DEFAULT_PAI_CASES, DEFAULT_SHIFT_CASES};
use pai_core::accountant::SgdPrivacyConfig;
use pai_core::divergence::RenyiOrder;
use pai_core::oracle::SuiteOptions;

#[derive(Parser)]
#[command(name = "pai", version, about = "Privacy amplification by iteration: accountant, experiments, verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print RDP and (ε, δ) tables for PNSGD and its variants.
    Account(AccountArgs),
    /// Run a utility experiment and write one CSV row per configuration.
    Run(RunArgs),
    /// Run the oracle suites; JSON lines on stdout, nonzero exit on failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct AccountArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long = "lipschitz", short = 'L', default_value_t = 1.0)]
    lipschitz: f64,
    /// Noise scale; derived from --epsilon and --delta when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    /// Target of the local calibration `σ = 2L√(2 ln(1.25/δ))/ε`.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Smoothness of the loss.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 4.0, 8.0, 16.0, 32.0])]
    orders: Vec<f64>,
    /// JSON lines instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Key-value file (`key = value` per line); its entries override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    /// Dataset size; a comma-separated list sweeps.
    #[arg(long)]
    n: Option<String>,
    /// Dimension; a comma-separated list sweeps.
    #[arg(long)]
    d: Option<String>,
    /// Number of tasks (multitask).
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    m_public: Option<String>,
    #[arg(long = "radius", short = 'R')]
    radius: Option<f64>,
    #[arg(long = "lipschitz", short = 'L')]
    lipschitz: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Output CSV; relative paths resolve against $PAI_OUTPUT_DIR.
    #[arg(long)]
    output_path: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_PAI_CASES)]
    cases: usize,
    #[arg(long, default_value_t = DEFAULT_SHIFT_CASES)]
    shift_cases: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_wrong_constant: bool,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Account(args) => account_cmd(args),
        Command::Run(args) => run_cmd(args),
        Command::Verify(args) => verify_cmd(args),
    }
}

fn account_cmd(args: AccountArgs) -> Result<ExitCode> {
    let sigma = match args.sigma {
        Some(s) => s,
        None => {
            let cfg = ExperimentConfig {
                lipschitz: args.lipschitz,
                epsilon: args.epsilon,
                delta: args.delta,
                ..Default::default()
            };
            local_sigma(&cfg)?
        }
    };
    let cfg = SgdPrivacyConfig::new(args.n, args.lipschitz, sigma, args.eta, args.beta)?;
    let orders = args.orders.iter().map(|&a| RenyiOrder::new(a)).collect::<Result<Vec<_>, _>>()?;
    let tables = account(&cfg, &orders, args.delta)?;
    let stdout = std::io::stdout();
    if args.json {
        write_json_lines(stdout.lock(), &tables.rdp)?;
        write_json_lines(stdout.lock(), &tables.dp)?;
    } else {
        println!("n = {}, L = {}, σ = {sigma}, η = {}, β = {}", args.n, args.lipschitz, args.eta, args.beta);
        print!("{}", render(&tables));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_cmd(args: RunArgs) -> Result<ExitCode> {
    let mut plan = Plan::new(ExperimentConfig::default());
    let flags: [(&str, Option<String>); 15] = [
        ("task", args.task),
        ("n", args.n),
        ("d", args.d),
        ("k", args.k),
        ("m_public", args.m_public),
        ("radius", args.radius.map(|v| v.to_string())),
        ("lipschitz", args.lipschitz.map(|v| v.to_string())),
        ("epsilon", args.epsilon.map(|v| v.to_string())),
        ("delta", args.delta.map(|v| v.to_string())),
        ("trials", args.trials.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("variant", args.variant),
        ("mc_samples", args.mc_samples.map(|v| v.to_string())),
        ("lambda", args.lambda.map(|v| v.to_string())),
        ("output_path", args.output_path.map(|p| p.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            plan.set(key, &v)?;
        }
    }
    if let Some(path) = &args.config {
        plan.apply_file(path)?;
    }
    let configs = plan.configs()?;
    let mut rows = Vec::with_capacity(configs.len());
    let mut all_within = true;
    for cfg in &configs {
        let outcome = run(args.experiment, cfg).with_context(|| format!("{} (n = {}, d = {})", args.experiment, cfg.n, cfg.d))?;
        for w in &outcome.warnings {
            eprintln!("warning: {w}");
        }
        eprintln!(
            "{} task={} n={} d={} k={}: mean excess {:.6} ± {:.6}, bound {:.6}, {:.2}s",
            args.experiment,
            cfg.task,
            cfg.n,
            cfg.d,
            cfg.k,
            outcome.row.mean_excess,
            outcome.row.std_error,
            outcome.row.bound,
            outcome.wall_seconds
        );
        all_within &= outcome.row.within_bound;
        rows.push(outcome.row);
    }
    let path = plan.base.resolved_output(args.experiment);
    write_csv(&path, &rows)?;
    eprintln!("wrote {}", path.display());
    if all_within {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("measured excess loss exceeds the bound by more than 3 standard errors");
        Ok(ExitCode::from(2))
    }
}

fn verify_cmd(args: VerifyArgs) -> Result<ExitCode> {
    let options = VerifyOptions {
        seed: args.seed,
        pai_cases: args.cases,
        shift_cases: args.shift_cases,
        suite: SuiteOptions {
            wrong_constant: args.inject_wrong_constant,
        },
    };
    let rows = run_verify(&options);
    match &args.output {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_json_lines(std::io::BufWriter::new(file), &rows)?;
        }
        None => write_json_lines(std::io::stdout().lock(), &rows)?,
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let mut err = std::io::stderr();
    writeln!(err, "{} checks, {} failed", rows.len(), failed)?;
    Ok(if all_passed(&rows) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
