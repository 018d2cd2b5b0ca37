use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paramreal::dyadic::Dyadic;
use paramreal_cli::commands::{self, CmdError, Outcome, EXIT_USAGE};
use paramreal_cli::expr::Strategy;

#[derive(Parser)]
#[command(name = "pr", about = "Exact real computation with metered translations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression to an enclosure of diameter at most 2^-N.
    Eval {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        prec: u64,
        #[arg(long, default_value = "dag")]
        strategy: Strategy,
        /// `name=value` bindings for free variables.
        #[arg(long)]
        bind: Vec<String>,
    },
    /// Translate a tabulated real name between representations.
    Translate {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        depth: u64,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<String>,
    },
    /// Measure the parameter of a tabulated real name.
    Measure {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        repr: String,
        /// Precisions `A..B`.
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = 1 << 12)]
        fuel: u64,
    },
    /// Run a benchmark and report fitted constants.
    Bench {
        #[command(subcommand)]
        kind: Bench,
    },
    /// Check a JSON cost trace against a second-order polynomial bound.
    CheckBound {
        #[arg(long)]
        trace: String,
        #[arg(long)]
        sop: String,
        /// Whitespace-separated values of the parameter table.
        #[arg(long)]
        table: String,
        /// Check only queries of size at most N.
        #[arg(long)]
        n: Option<u64>,
    },
}

#[derive(Subcommand)]
enum Bench {
    Logistic {
        #[arg(long, default_value = "7/2^1", value_parser = parse_dyadic)]
        r: Dyadic,
        #[arg(long, default_value = "1/2^1", value_parser = parse_dyadic)]
        x0: Dyadic,
        #[arg(long, default_value_t = 20)]
        iterations: u64,
        #[arg(long, default_value_t = 40)]
        prec: u64,
    },
    Modulus {
        /// Family range `K=A..B`.
        #[arg(long, default_value = "K=4..12")]
        family: String,
        #[arg(long, default_value_t = 1 << 22)]
        fuel: u64,
    },
    Strategies {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        prec: Vec<u64>,
    },
    Translations {
        #[arg(long, default_value_t = 32)]
        n_max: u64,
        #[arg(long, default_value_t = 1 << 12)]
        fuel: u64,
    },
}

fn parse_dyadic(s: &str) -> Result<Dyadic, String> {
    Dyadic::parse_ratio(s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<Outcome, CmdError> {
    match cli.command {
        Command::Eval {
            expr,
            prec,
            strategy,
            bind,
        } => commands::cmd_eval(&expr, prec, strategy, &bind),
        Command::Translate {
            input,
            from,
            to,
            depth,
            out,
        } => {
            let outcome = commands::cmd_translate(&input, &from, &to, depth)?;
            match out {
                None => Ok(outcome),
                Some(path) => {
                    fs::write(&path, &outcome.report).map_err(|e| CmdError {
                        code: EXIT_USAGE,
                        message: format!("{path}: {e}"),
                    })?;
                    Ok(Outcome {
                        report: String::new(),
                        code: outcome.code,
                    })
                }
            }
        }
        Command::Measure { input, repr, n, fuel } => {
            commands::cmd_measure(&input, &repr, commands::parse_range(&n)?, fuel)
        }
        Command::Bench { kind } => match kind {
            Bench::Logistic {
                r,
                x0,
                iterations,
                prec,
            } => Ok(commands::bench_logistic(&r, &x0, iterations, prec)),
            Bench::Modulus { family, fuel } => {
                let range = family.strip_prefix("K=").unwrap_or(&family);
                commands::bench_modulus(commands::parse_range(range)?, fuel)
            }
            Bench::Strategies { prec } => commands::bench_strategies(&prec),
            Bench::Translations { n_max, fuel } => commands::bench_translations(n_max, fuel),
        },
        Command::CheckBound { trace, sop, table, n } => commands::cmd_check_bound(&trace, &sop, &table, n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
