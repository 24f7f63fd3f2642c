use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nsvar_cli::config::{Overrides, RunConfig};
use nsvar_cli::{exit_code, lab, run, EXIT_CONFIG, EXIT_OK, EXIT_ZERO_PLAUSIBILITY};
use nsvar_core::bivariate_lab::{LabRestriction, LikelihoodMode};
use nsvar_core::pipeline::{Algorithm, Mode, RunStatus};
use nsvar_core::sampling::QPrior;

#[derive(Parser)]
#[command(name = "nsvar", version, about = "Bayesian inference for SVARs under narrative and sign restrictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate impulse-response summaries from data.
    Run(RunArgs),
    /// Bivariate reproductions written as CSV curves.
    #[command(subcommand)]
    Lab(LabCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Auto,
    Mc,
    Chebyshev,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Robust,
    StandardUnconditional,
    StandardConditional,
}

#[derive(Clone, Copy, ValueEnum)]
enum QPriorArg {
    JointUniform,
    ConditionallyUniform,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    /// Restriction file, optionally with [model] and [run] tables.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    phi_draws: Option<usize>,
    #[arg(long)]
    q_draws: Option<usize>,
    #[arg(long)]
    max_q_attempts: Option<usize>,
    /// Simulations per narrative-probability estimate (conditional mode).
    #[arg(long)]
    r_draws: Option<usize>,
    /// Credibility level(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    q_prior: Option<QPriorArg>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    ShockSign,
    HistDecomp,
}

#[derive(Clone, Copy, ValueEnum)]
enum LikelihoodArg {
    Conditional,
    Unconditional,
}

#[derive(Args)]
struct Common {
    /// Structural matrix A0 in row order.
    #[arg(long, default_value = "1,0.5,0.2,1.2")]
    a0: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LabCommand {
    /// Likelihood over θ at the true reduced form.
    Likelihood {
        #[arg(long, value_enum, default_value = "shock-sign")]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "conditional")]
        likelihood: LikelihoodArg,
        #[arg(long = "T", default_value_t = 3)]
        t: usize,
        /// Restricted period, 0-based.
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long, default_value_t = 1_000_000)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Hellinger distance to the true θ.
    Hellinger {
        #[arg(long, value_enum, default_value = "hist-decomp")]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "conditional")]
        likelihood: LikelihoodArg,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long, default_value_t = 1_000_000)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Feasible-set widths as the restricted sample grows.
    Consistency {
        #[arg(long = "T", value_delimiter = ',', default_value = "10,100,1000")]
        t: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        replications: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn kind(k: KindArg) -> LabRestriction {
    match k {
        KindArg::ShockSign => LabRestriction::ShockSign,
        KindArg::HistDecomp => LabRestriction::HistDecomp,
    }
}

fn likelihood_mode(l: LikelihoodArg) -> LikelihoodMode {
    match l {
        LikelihoodArg::Conditional => LikelihoodMode::Conditional,
        LikelihoodArg::Unconditional => LikelihoodMode::Unconditional,
    }
}

fn run_command(args: RunArgs) -> Result<u8> {
    let overrides = Overrides {
        phi_draws: args.phi_draws,
        q_draws: args.q_draws,
        max_q_attempts: args.max_q_attempts,
        r_draws: args.r_draws,
        alphas: args.alpha,
        seed: args.seed,
        algorithm: args.algorithm.map(|a| match a {
            AlgorithmArg::Auto => Algorithm::Auto,
            AlgorithmArg::Mc => Algorithm::Mc,
            AlgorithmArg::Chebyshev => Algorithm::Chebyshev,
        }),
        mode: args.mode.map(|m| match m {
            ModeArg::Robust => Mode::Robust,
            ModeArg::StandardUnconditional => Mode::StandardUnconditional,
            ModeArg::StandardConditional => Mode::StandardConditional,
        }),
        q_prior: args.q_prior.map(|q| match q {
            QPriorArg::JointUniform => QPrior::JointUniform,
            QPriorArg::ConditionallyUniform => QPrior::ConditionallyUniform,
        }),
    };
    let (config, restrictions) = RunConfig::assemble(&args.data, &args.config, &args.targets, &overrides)?;
    let report = run::run_to_dir(config, &restrictions, &args.out)?;
    if report.status == RunStatus::ZeroPlausibility {
        log::error!("every reduced-form draw gave an empty identified set; report written with status zero_plausibility");
        return Ok(EXIT_ZERO_PLAUSIBILITY);
    }
    if let Some(p) = report.plausibility {
        log::info!("plausibility {p:.3}");
    }
    Ok(EXIT_OK)
}

fn lab_command(cmd: LabCommand) -> Result<u8> {
    match cmd {
        LabCommand::Likelihood {
            kind: k,
            likelihood,
            t,
            k: period,
            grid,
            m,
            common,
        } => {
            let args = lab::LikelihoodArgs {
                a0: lab::parse_a0(&common.a0)?,
                kind: kind(k),
                mode: likelihood_mode(likelihood),
                t,
                k: period,
                grid,
                m,
                seed: common.seed,
            };
            let pts = lab::likelihood(&args)?;
            lab::write_curve(&common.out, pts.iter().map(|p| (p.theta, p.value)))?;
        }
        LabCommand::Hellinger {
            kind: k,
            likelihood,
            grid,
            m,
            common,
        } => {
            let args = lab::HellingerArgs {
                a0: lab::parse_a0(&common.a0)?,
                kind: kind(k),
                mode: likelihood_mode(likelihood),
                grid,
                m,
                seed: common.seed,
            };
            let pts = lab::hellinger(&args)?;
            lab::write_curve(&common.out, pts.iter().map(|p| (p.theta, p.value)))?;
        }
        LabCommand::Consistency { t, replications, common } => {
            let rows = lab::consistency(&lab::parse_a0(&common.a0)?, &t, replications, common.seed)?;
            lab::write_widths(&common.out, &rows)?;
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Lab(cmd) => lab_command(cmd),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
