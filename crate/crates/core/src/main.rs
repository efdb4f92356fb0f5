use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use onebit::exact::{self, SearchOptions};
use onebit::lowerbound::{self, DiscreteDistribution};
use onebit::montecarlo;
use onebit::protocols::{parse_number, ProtocolSpec};
use onebit::randomness::SeedStream;
use onebit::{report, Error, Protocol};

const EXIT_VALIDATION: u8 = 1;
const EXIT_ACCEPTANCE: u8 = 2;

/// One-bit real-number transmission protocols: exact costs, simulation and lower bounds.
#[derive(Parser)]
#[command(name = "onebit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProtocolArgs {
    /// Protocol id, optionally with inline parameters, e.g. `biased-shared(l=3)`.
    #[arg(long)]
    protocol: String,
    /// Protocol parameter `key=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
}

impl ProtocolArgs {
    fn build(&self) -> Result<Protocol, Error> {
        ProtocolSpec::from_cli(&self.protocol, &self.params)?.build()
    }
}

#[derive(Args)]
struct Output {
    /// Output path; `-` is standard output.
    #[arg(long, default_value = "-")]
    out: String,
}

impl Output {
    fn open(&self) -> io::Result<Box<dyn Write>> {
        if self.out == "-" {
            Ok(Box::new(BufWriter::new(io::stdout().lock())))
        } else {
            Ok(Box::new(BufWriter::new(File::create(&self.out)?)))
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact mse, bias and variance at one input.
    Eval {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Input value; fractions such as `1/3` are accepted.
        #[arg(long)]
        x: String,
        #[command(flatten)]
        output: Output,
    },
    /// Cost profile on a uniform grid, as CSV.
    Sweep {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long, default_value_t = exact::DEFAULT_GRID_POINTS)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Worst-case expected squared error and its maximizers.
    Worst {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Search grid size; defaults to a size based on the shared budget.
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo estimate of the mse at one input.
    Mc {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Minimax lower bound from a discrete prior, as a JSON certificate.
    Lb {
        /// Distribution file of `point weight` lines.
        #[arg(long, conflicts_with = "named", required_unless_present = "named")]
        dist: Option<String>,
        /// One of uniform3, sqrt2-3, uniform4, golden4.
        #[arg(long)]
        named: Option<String>,
        /// Message bits.
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Run this many rounds of local search on the prior first.
        #[arg(long)]
        maximize: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Recompute the results summary table and check every cell.
    Table1 {
        /// Emit JSON instead of the text table.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Distributed mean estimation with independent sender channels.
    MeanDemo {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long, default_value_t = 1000)]
        senders: usize,
        #[arg(long)]
        seed: u64,
        /// Give every sender this value instead of uniform random values.
        #[arg(long)]
        x: Option<String>,
        /// Repeat the round this many times and report the mean squared error.
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Validation(String),
    Acceptance,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn number(s: &str) -> Result<f64, Failure> {
    Ok(parse_number(s)?)
}

fn write_json<T: Serialize>(output: &Output, value: &T) -> Result<(), Failure> {
    let mut w = output.open()?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EvalOut {
    protocol: String,
    x: f64,
    mse: f64,
    bias: f64,
    variance: f64,
}

#[derive(Serialize)]
struct WorstOut {
    protocol: String,
    cost: f64,
    argmax: Vec<f64>,
}

#[derive(Serialize)]
struct LbOut {
    distribution: DiscreteDistribution<f64>,
    certificate: lowerbound::BoundCertificate<f64>,
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Eval {
            protocol,
            x,
            output,
        } => {
            let p = protocol.build()?;
            let c = exact::evaluate(&p, number(&x)?)?;
            write_json(
                &output,
                &EvalOut {
                    protocol: p.to_string(),
                    x: c.x,
                    mse: c.mse,
                    bias: c.bias,
                    variance: c.variance,
                },
            )
        }
        Command::Sweep {
            protocol,
            points,
            output,
        } => {
            let p = protocol.build()?;
            let profile = exact::profile(&p, points)?;
            let mut w = output.open()?;
            profile.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Worst {
            protocol,
            points,
            output,
        } => {
            let p = protocol.build()?;
            let opts = SearchOptions {
                grid_points: points,
                ..SearchOptions::default()
            };
            let w = exact::worst_case_with(&p, &opts)?;
            write_json(
                &output,
                &WorstOut {
                    protocol: p.to_string(),
                    cost: w.cost,
                    argmax: w.argmax,
                },
            )
        }
        Command::Mc {
            protocol,
            x,
            trials,
            seed,
            output,
        } => {
            let p = protocol.build()?;
            write_json(
                &output,
                &montecarlo::simulate(&p, number(&x)?, trials, seed)?,
            )
        }
        Command::Lb {
            dist,
            named,
            k,
            maximize,
            output,
        } => {
            let q = match (dist, named) {
                (Some(path), _) => DiscreteDistribution::parse(&std::fs::read_to_string(&path)?)?,
                (None, Some(name)) => lowerbound::named_distribution(&name)?,
                (None, None) => {
                    return Err(Failure::Validation(
                        "one of --dist or --named is required".into(),
                    ))
                }
            };
            let out = match maximize {
                Some(iterations) => {
                    let m = lowerbound::maximize_bound(&q, k, iterations);
                    LbOut {
                        distribution: m.distribution,
                        certificate: m.certificate,
                    }
                }
                None => LbOut {
                    certificate: lowerbound::optimal_deterministic_cost(&q, k),
                    distribution: q,
                },
            };
            write_json(&output, &out)
        }
        Command::Table1 { json, output } => {
            let table = report::table1()?;
            if json {
                write_json(&output, &table)?;
            } else {
                let mut w = output.open()?;
                table.render(&mut w)?;
                w.flush()?;
            }
            if table.all_pass() {
                Ok(())
            } else {
                Err(Failure::Acceptance)
            }
        }
        Command::MeanDemo {
            protocol,
            senders,
            seed,
            x,
            repetitions,
            output,
        } => {
            let p = protocol.build()?;
            if senders == 0 {
                return Err(Failure::Validation("--senders must be at least 1".into()));
            }
            let xs: Vec<f64> = match x {
                Some(v) => vec![number(&v)?; senders],
                None => {
                    // sender values come from a stream id no sender channel uses
                    let mut values = SeedStream::fork(seed, u64::MAX);
                    (0..senders).map(|_| values.unit_f64()).collect()
                }
            };
            if repetitions > 1 {
                write_json(
                    &output,
                    &montecarlo::mean_estimation_repeated(&xs, &p, seed, repetitions)?,
                )
            } else {
                write_json(&output, &montecarlo::mean_estimation(&xs, &p, seed)?)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Acceptance) => {
            eprintln!("error: at least one table cell does not match");
            ExitCode::from(EXIT_ACCEPTANCE)
        }
    }
}
