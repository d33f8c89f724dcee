use std::path::PathBuf;
use std::process::ExitCode;

use num_complex::Complex64;
use clap::{Args, Parser, Subcommand as ClapSubcommand, ValueEnum};
use sideband_ob::cli::{exit_code, parse_config, run_subcommand, Format, RunFlags, Subcommand};
use sideband_ob::Result;

#[derive(Parser)]
#[command(name = "sideband-ob", version, about = "Bistable output modes of two-level atoms in a detuned squeezed vacuum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Stationary output versus input at epsilon = 0, with folds and stability.
    ResonantSweep(Common),
    /// Central and first sideband modes over a sweep of the central amplitude.
    SidebandSweep {
        #[command(flatten)]
        common: Common,
        /// Append up- and down-sweep hysteresis jumps.
        #[arg(long)]
        hysteresis: bool,
    },
    /// Time-integrate to the settled orbit at `e_in` and report its harmonics.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Input field `re` or `re,im` (overrides the configuration).
        #[arg(long, allow_hyphen_values = true)]
        e_in: Option<String>,
    },
    /// Compare the continued-fraction triplet with the integrated orbit.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    config: PathBuf,
    /// Output path (overrides the configuration).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format (overrides the configuration).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn run(cli: Cli) -> Result<()> {
    let mut e_in = None;
    let (cmd, common, flags) = match cli.command {
        Command::ResonantSweep(c) => (Subcommand::ResonantSweep, c, RunFlags::default()),
        Command::SidebandSweep { common, hysteresis } => (Subcommand::SidebandSweep, common, RunFlags { hysteresis }),
        Command::Oracle { common, e_in: field } => {
            e_in = field;
            (Subcommand::Oracle, common, RunFlags::default())
        }
        Command::Compare(c) => (Subcommand::Compare, c, RunFlags::default()),
    };
    let text = std::fs::read_to_string(&common.config).map_err(|e| sideband_ob::Error::Config {
        key: "<config>".into(),
        reason: format!("cannot read {}: {e}", common.config.display()),
    })?;
    let mut config = parse_config(&text)?;
    if let Some(p) = common.output {
        config.output.path = Some(p);
    }
    if let Some(f) = common.format {
        config.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(text) = e_in {
        config.e_in = parse_field(&text)?;
    }
    run_subcommand(cmd, &config, flags)
}

fn parse_field(text: &str) -> Result<Complex64> {
    let bad = || sideband_ob::Error::Config { key: "--e-in".into(), reason: format!("expected `re` or `re,im`, got {text:?}") };
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(bad()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
