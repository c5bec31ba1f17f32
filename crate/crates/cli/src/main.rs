use std::path::PathBuf;
use std::process::ExitCode;

use capplan_cli::report::RunReport;
use capplan_cli::{commands, diagnostic, output, CliError, Exit};
use capplan_core::analysis::DEFAULT_EQUIVALENCE_THRESHOLD;
use capplan_core::{DiscountRate, Lifetime, ObjectiveVariant, SolverOptions};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

/// Capacity-expansion planning: cost conversions, milestone weights, LP solves
/// and objective comparisons.
#[derive(Debug, Parser)]
#[command(name = "capplan", version)]
struct Cli {
    /// Output format. With --out the file gets this format and stdout gets text.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report here (atomically) plus a `.meta.json` sidecar.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Relative tolerance for the equivalence check in `compare`.
    #[arg(long, global = true, value_parser = parse_tolerance, default_value_t = DEFAULT_EQUIVALENCE_THRESHOLD)]
    tolerance: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Constant annual payment repaying a total cost over the lifetime.
    Annuity {
        #[arg(value_parser = parse_cost)]
        total_cost: f64,
        /// Rate as a fraction (0.05) or a percentage (5%).
        wacc: DiscountRate,
        #[arg(value_parser = parse_lifetime)]
        lifetime: Lifetime,
    },
    /// Present value of an annuity paid over the lifetime.
    Totalise {
        #[arg(value_parser = parse_cost)]
        annualised_cost: f64,
        wacc: DiscountRate,
        #[arg(value_parser = parse_lifetime)]
        lifetime: Lifetime,
    },
    /// Value of the annuities falling after the last modelled year.
    Salvage {
        #[arg(value_parser = parse_cost)]
        total_cost: f64,
        wacc: DiscountRate,
        #[arg(value_parser = parse_lifetime)]
        lifetime: Lifetime,
        invest_year: u32,
        last_year: u32,
    },
    /// Number of years each milestone represents.
    Weights {
        /// Last modelled year.
        #[arg(long)]
        end: u32,
        #[arg(required = true)]
        milestones: Vec<u32>,
    },
    /// Build and solve the planning program.
    Solve {
        scenario: PathBuf,
        /// Repeat to solve several variants.
        #[arg(long = "variant", default_value = "annualised-milestone")]
        variants: Vec<ObjectiveVariant>,
    },
    /// Check two objective variants for equivalence and report milestone bias.
    Compare {
        scenario: PathBuf,
        #[arg(default_value = "annualised-milestone")]
        variant_a: ObjectiveVariant,
        #[arg(default_value = "total-salvage-milestone")]
        variant_b: ObjectiveVariant,
    },
    /// Milestone bias against the exact yearly counterpart.
    Bias { scenario: PathBuf },
}

fn parse_cost(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a finite non-negative number, got {s}"))
    }
}

fn parse_lifetime(s: &str) -> Result<Lifetime, String> {
    let years: u32 = s.parse().map_err(|e| format!("{e}"))?;
    Lifetime::new(years).map_err(|e| e.to_string())
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

fn execute(cli: &Cli) -> Result<RunReport, CliError> {
    let options = SolverOptions::default();
    match &cli.command {
        Command::Annuity {
            total_cost,
            wacc,
            lifetime,
        } => Ok(commands::annuity(*total_cost, *wacc, *lifetime)),
        Command::Totalise {
            annualised_cost,
            wacc,
            lifetime,
        } => Ok(commands::totalise_cost(*annualised_cost, *wacc, *lifetime)),
        Command::Salvage {
            total_cost,
            wacc,
            lifetime,
            invest_year,
            last_year,
        } => commands::salvage(*total_cost, *wacc, *lifetime, *invest_year, *last_year),
        Command::Weights { end, milestones } => commands::weights(milestones, *end),
        Command::Solve { scenario, variants } => {
            commands::solve(&commands::load_scenario(scenario)?, variants, &options)
        }
        Command::Compare {
            scenario,
            variant_a,
            variant_b,
        } => commands::compare(
            &commands::load_scenario(scenario)?,
            *variant_a,
            *variant_b,
            cli.tolerance,
            &options,
        ),
        Command::Bias { scenario } => commands::bias(&commands::load_scenario(scenario)?, &options),
    }
}

fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

fn emit(cli: &Cli, report: &RunReport) -> Result<(), CliError> {
    let body = render(report, cli.format);
    match &cli.out {
        None => print!("{body}"),
        Some(path) => {
            let io = |e: std::io::Error| CliError::new(Exit::Io, format!("cannot write {}: {e}", path.display()));
            output::write_atomic(path, body.as_bytes()).map_err(io)?;
            let args: Vec<String> = std::env::args().skip(1).collect();
            output::write_sidecar(path, &args).map_err(io)?;
            print!("{}", report.to_text());
        }
    }
    Ok(())
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", diagnostic(err.exit, &err.message));
    ExitCode::from(err.exit.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::new(Exit::Usage, e.to_string())),
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if let Err(e) = emit(&cli, &report) {
        return fail(&e);
    }
    match commands::outcome(&report) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
