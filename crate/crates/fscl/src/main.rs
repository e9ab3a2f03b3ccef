use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fscl::{exit, parse_config, CliError, CliResult, ExperimentKind};

#[derive(Debug, Parser)]
#[command(name = "fscl", version, about = "Stochastic conservation laws with fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single path: snapshots, norms and (by default) residual diagnostics.
    Run(Common),
    /// Vanishing-viscosity sweep over `experiment.eps_list`.
    Sweep(Common),
    /// Monte Carlo ensemble: moments and the energy envelope.
    Ensemble(Common),
    /// Paired runs on shared noise: L¹ contraction of (u_A − u_B)⁺.
    Contraction(Common),
    /// Residual and kinetic-measure diagnostics of a stored run.
    Diagnose(Common),
    /// Self-convergence over `experiment.cells_list`.
    Convergence(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `experiment.output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "FSCL_THREADS")]
    threads: Option<usize>,
}

impl Command {
    fn split(&self) -> (ExperimentKind, &Common) {
        match self {
            Self::Run(c) => (ExperimentKind::Run, c),
            Self::Sweep(c) => (ExperimentKind::Sweep, c),
            Self::Ensemble(c) => (ExperimentKind::Ensemble, c),
            Self::Contraction(c) => (ExperimentKind::Contraction, c),
            Self::Diagnose(c) => (ExperimentKind::Diagnose, c),
            Self::Convergence(c) => (ExperimentKind::Convergence, c),
        }
    }
}

fn main_inner(cli: &Cli) -> CliResult<bool> {
    let (kind, args) = cli.command.split();
    let cfg = parse_config(&args.config)?;
    if cfg.kind != kind {
        return Err(CliError::Config(vec![format!(
            "`experiment.kind` is \"{}\" but the subcommand is \"{}\"",
            cfg.kind.name(),
            kind.name()
        )]));
    }
    let out = args.output.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let verdict = fscl::execute(&cfg, &out, args.threads)?;
    for c in &verdict.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} -> {}", kind.name(), out.display());
    Ok(verdict.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match main_inner(&cli) {
        Ok(true) => exit::OK,
        Ok(false) => exit::VERDICT_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
