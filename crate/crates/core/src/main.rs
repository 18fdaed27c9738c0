use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stark_nls::harness::{execute, parse_config_as, ExperimentKind};

#[derive(Parser)]
#[command(
    name = "stark-nls",
    version,
    about = "Split-step experiments for the Stark NLS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write its diagnostics.
    Run(Common),
    /// Stark run vs free run pulled through the Avron-Herbst map.
    Compare(Common),
    /// Transform identities and the pseudo-conformal law.
    LemmaCheck(Common),
    /// Blow-up timing and location, forward and backward.
    Blowup(Common),
    /// Convergence of the pulled-back solution.
    Scatter(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for relative output paths.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Print nothing but errors.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Run(a) => (ExperimentKind::Run, a),
        Command::Compare(a) => (ExperimentKind::Compare, a),
        Command::LemmaCheck(a) => (ExperimentKind::LemmaCheck, a),
        Command::Blowup(a) => (ExperimentKind::Blowup, a),
        Command::Scatter(a) => (ExperimentKind::Scatter, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config_as(&text, Some(kind)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    match execute(&cfg, &args.out_dir) {
        Ok(ex) => {
            if !args.quiet {
                println!("{}", ex.report);
                for f in &ex.files {
                    println!("wrote {}", f.display());
                }
                println!("{kind}: {}", ex.verdict);
            }
            ExitCode::from(ex.verdict.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
