use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tfloc::fredholm::Side;
use tfloc::locop::Direction;
use tfloc::symbol::SymbolExpr;
use tfloc::WeightSpec;
use tfloc_cli::config::{parse_list, parse_symbol_flag, Config, Experiment, SymbolSlot, UsageError};
use tfloc_cli::experiments::RunError;
use tfloc_cli::report::output_root;
use tfloc_cli::{execute, summary_lines};

#[derive(Parser)]
#[command(name = "tfloc", version, about = "Time-frequency localization operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output root (default: $TFLOC_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GridFlags {
    /// Config file; a built-in reference configuration is used without it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the experiment named in the config.
        #[arg(long)]
        experiment: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Norm, mapping bound and singular-value profile of one localization operator.
    Locop {
        #[command(flatten)]
        grid: GridFlags,
        #[command(flatten)]
        common: Common,
        /// `constant:C`, `japanese:S`, `csv:PATH` or an inline TOML table.
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long, value_parser = parse_direction)]
        direction: Option<Direction>,
        /// Size of the random calibration family.
        #[arg(long)]
        random_symbols: Option<usize>,
    },
    /// Symbolic-calculus expansion of A_a A_b with remainder.
    Calculus {
        #[command(flatten)]
        grid: GridFlags,
        #[command(flatten)]
        common: Common,
        /// Expansion order.
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        symmetric: bool,
        /// Also write the LHS and remainder matrices as CSV.
        #[arg(long)]
        matrices: bool,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        /// Skip the kernel-path remainder.
        #[arg(long)]
        no_kernel: bool,
    },
    /// Parametrix residual, spectrum clustering and optional sweep.
    Fredholm {
        #[command(flatten)]
        grid: GridFlags,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long, value_parser = parse_side)]
        side: Option<Side>,
        /// Comma-separated exponents s for a = <z>^s.
        #[arg(long)]
        sweep: Option<String>,
    },
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "i" | "I" => Ok(Direction::I),
        "ii" | "II" => Ok(Direction::Ii),
        _ => Err(format!("expected `i` or `ii`, got `{s}`")),
    }
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        _ => Err(format!("expected `left` or `right`, got `{s}`")),
    }
}

fn base_config(flags: &GridFlags, width: f64, points: usize) -> Result<(Config, bool), UsageError> {
    let (mut cfg, from_file) = match &flags.config {
        Some(p) => (Config::load(p)?, true),
        None => (Config::with_grid(width, points), false),
    };
    if let Some(w) = flags.width {
        cfg.grid.width = w;
    }
    if let Some(m) = flags.points {
        cfg.grid.points = m;
    }
    cfg.grid()?;
    Ok((cfg, from_file))
}

fn prepare(command: Command) -> Result<(Config, Experiment, Common, bool), UsageError> {
    match command {
        Command::Run { config, experiment, common } => {
            let cfg = Config::load(&config)?;
            let exp = match experiment {
                Some(name) => Experiment::parse(&name)?,
                None => cfg
                    .experiment
                    .ok_or_else(|| UsageError(format!("{}: no `experiment` given", config.display())))?,
            };
            Ok((cfg, exp, common, false))
        }
        Command::Locop { grid, common, symbol, direction, random_symbols } => {
            let (mut cfg, from_file) = base_config(&grid, 12.0, 128)?;
            if !from_file {
                // direction (i) reference: a = <z>^2 in L^inf_{1/m}, m = <z>^2
                cfg.symbol.a = SymbolSlot::Expr(SymbolExpr::japanese(2.0));
                cfg.weights.m = WeightSpec::polynomial(2.0);
                cfg.locop.random_symbols = 0;
            }
            if let Some(s) = symbol {
                cfg.symbol.a = parse_symbol_flag(&s)?;
            }
            if let Some(d) = direction {
                cfg.locop.direction = d;
            }
            if let Some(k) = random_symbols {
                cfg.locop.random_symbols = k;
            }
            Ok((cfg, Experiment::LocopBounds, common, true))
        }
        Command::Calculus { grid, common, n, symmetric, matrices, a, b, no_kernel } => {
            let (mut cfg, _) = base_config(&grid, 8.0, 64)?;
            if let Some(n) = n {
                cfg.calculus.n = n;
            }
            cfg.calculus.symmetric |= symmetric;
            cfg.calculus.matrices |= matrices;
            if no_kernel {
                cfg.calculus.kernel = false;
            }
            if let Some(s) = a {
                cfg.symbol.a = parse_symbol_flag(&s)?;
            }
            if let Some(s) = b {
                cfg.symbol.b = parse_symbol_flag(&s)?;
            }
            Ok((cfg, Experiment::CalculusExpand, common, true))
        }
        Command::Fredholm { grid, common, symbol, side, sweep } => {
            let (mut cfg, from_file) = base_config(&grid, 12.0, 128)?;
            if !from_file {
                cfg.symbol.a = SymbolSlot::Expr(SymbolExpr::japanese(1.0));
                cfg.weights.m = WeightSpec::polynomial(-1.0);
                cfg.weights.v = WeightSpec::polynomial(1.0);
            }
            if let Some(s) = symbol {
                cfg.symbol.a = parse_symbol_flag(&s)?;
            }
            if let Some(s) = side {
                cfg.fredholm.side = s;
            }
            if let Some(s) = sweep {
                cfg.fredholm.sweep = parse_list(&s)?;
            }
            Ok((cfg, Experiment::FredholmCheck, common, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut cfg, exp, common, print_summary) = match prepare(cli.command) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let root = output_root(common.out.as_deref());
    match execute(&cfg, exp, &root) {
        Ok((report, dir)) => {
            if print_summary {
                let summary = report.details.get("summary").cloned().unwrap_or_default();
                println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            } else {
                for line in summary_lines(&report) {
                    println!("{line}");
                }
            }
            eprintln!("report: {}", dir.join("report.json").display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("FAIL: {}", report.failed.join("; "));
                ExitCode::from(1)
            }
        }
        Err(RunError::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Compute(e)) => {
            eprintln!("FAIL: {} aborted: {e}", exp.name());
            ExitCode::from(1)
        }
    }
}
