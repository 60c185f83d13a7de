use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rareflow::runner::{self, ConfigError, Overrides};
use rareflow::{analytic_doc_price, Method};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_ENGINE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rareflow",
    version,
    about = "Rare-event estimators for down-and-out barrier calls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run MC / IPS / HFMC replications and write replications.csv and summary.csv.
    Run(Box<RunArgs>),
    /// Print the closed-form reference price.
    Price(PriceArgs),
}

#[derive(Args)]
struct MarketArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    strike: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    barrier: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    /// Path drift; defaults to r - q.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    maturity: Option<f64>,
    /// Number of monitoring steps.
    #[arg(long)]
    nt: Option<u64>,
}

impl MarketArgs {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides::new();
        o.set_opt("x0", self.x0)
            .set_opt("strike", self.strike)
            .set_opt("barrier", self.barrier)
            .set_opt("r", self.r)
            .set_opt("q", self.q)
            .set_opt("mu", self.mu)
            .set_opt("sigma", self.sigma)
            .set_opt("maturity", self.maturity)
            .set_opt("n_t", self.nt.map(|v| v.to_string()));
        o
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// mc, ips, hfmc or all; comma separated lists are accepted.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u64>,
    /// Particles (paths) per replication.
    #[arg(long)]
    ns: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// n_S = 10000, n_t = 250, M_s = 20 unless given explicitly.
    #[arg(long)]
    desk_scale: bool,
    #[arg(long, env = "RAREFLOW_JOBS")]
    jobs: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    tilt: Option<f64>,
    #[arg(long)]
    leapfrog_steps: Option<u64>,
    #[arg(long)]
    leapfrog_delta: Option<f64>,
    /// dt_scaled or unit.
    #[arg(long)]
    tempering: Option<String>,
    /// weighted or unweighted.
    #[arg(long)]
    hfmc_weighting: Option<String>,
    /// multinomial or systematic.
    #[arg(long)]
    resampling: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    /// Record CPU times as zero so repeated runs give identical bytes.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Closed-form down-and-out price at the corrected barrier.
    #[arg(long)]
    analytic: bool,
}

fn config_failure(e: ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn run(args: RunArgs) -> ExitCode {
    let mut o = args.market.overrides();
    let as_str = |v: Option<u64>| v.map(|v| v.to_string());
    o.set_opt("methods", args.method)
        .set_opt("seed", as_str(args.seed))
        .set_opt("replications", as_str(args.replications))
        .set_opt("n_s", as_str(args.ns))
        .set_opt("out_dir", args.out.map(|p| p.to_string_lossy().into_owned()))
        .set_opt("jobs", as_str(args.jobs))
        .set_opt("tilt", args.tilt)
        .set_opt("leapfrog_steps", as_str(args.leapfrog_steps))
        .set_opt("leapfrog_delta", args.leapfrog_delta)
        .set_opt("tempering", args.tempering)
        .set_opt("hfmc_weighting", args.hfmc_weighting)
        .set_opt("resampling", args.resampling)
        .set_opt("beta", args.beta)
        .set_opt("mass", args.mass);
    if args.desk_scale {
        o.set("desk_scale", true);
    }
    if args.no_timing {
        o.set("timing", false);
    }

    let cfg = match runner::load_config(args.market.config.as_deref(), &o) {
        Ok(cfg) => cfg,
        Err(e) => return config_failure(e),
    };
    let result = match runner::run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("engine failure: {e}");
            return ExitCode::from(EXIT_ENGINE);
        }
    };
    print!("{}", runner::comparison_table(&result));
    if let Some(rate) = hfmc_acceptance(&result) {
        println!("HFMC mean acceptance probability: {}", runner::format_number(rate));
    }
    if result.successful().next().is_some() {
        if let Err(e) = runner::emit_csv(&result, &cfg.out_dir) {
            eprintln!("i/o error writing {}: {e}", cfg.out_dir.display());
            return ExitCode::from(EXIT_IO);
        }
    }
    if result.any_failed() {
        ExitCode::from(EXIT_ENGINE)
    } else {
        ExitCode::SUCCESS
    }
}

fn hfmc_acceptance(result: &runner::ExperimentResult) -> Option<f64> {
    let run = result
        .runs
        .iter()
        .find(|r| r.method == Method::Hfmc && r.outcome.is_ok())?;
    let rates: Vec<f64> = run.replications.iter().filter_map(|r| r.acceptance_rate).collect();
    (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
}

fn price(args: PriceArgs) -> ExitCode {
    if !args.analytic {
        eprintln!("config error: only --analytic pricing is available");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cfg = match runner::load_config(args.market.config.as_deref(), &args.market.overrides()) {
        Ok(cfg) => cfg,
        Err(e) => return config_failure(e),
    };
    match analytic_doc_price(&cfg.engine.params, &cfg.engine.option) {
        Ok(c) => {
            println!("{}", runner::format_number(c));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("engine failure: {e}");
            ExitCode::from(EXIT_ENGINE)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(*args),
        Command::Price(args) => price(args),
    }
}
