//! `survinfo`: relative information lost to censoring, from the command line.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use survinfo::measures::{self, MeasureConfig, MeasureKind};
use survinfo::{
    complete_dataset, fixture, parse_csv, Dataset, FitOptions, FittedModel, SeededRng, TailRule, TieMethod,
};

use crate::output::{Format, TableFormat};

#[derive(Debug, Parser)]
#[command(
    name = "survinfo",
    version,
    about = "Fraction of information lost to censoring under the Cox model"
)]
struct Cli {
    /// Worker threads for Monte Carlo replicates; results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the Cox model and report coefficients, variance and log partial likelihood.
    Fit {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Breslow baseline cumulative hazard and the baseline survival it implies.
    Baseline {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Write one completed dataset, drawn as Monte Carlo replicate `--rep`.
    Impute {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Replicate index selecting the random stream.
        #[arg(long, default_value_t = 0)]
        rep: u64,
        #[arg(long, default_value_t = TailRule::default())]
        tail: TailRule,
    },
    /// Monte Carlo estimate of one or all relative-information measures.
    Measure {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        mc: MonteCarloArgs,
        #[arg(long, value_enum, default_value_t = Selector::All)]
        measure: Selector,
        /// Time at which the Kaplan–Meier survival is tested (riw-km only).
        #[arg(long, required_if_eq("measure", "riw-km"))]
        t0: Option<f64>,
        /// Null survival probability at `--t0` (riw-km only).
        #[arg(long, required_if_eq("measure", "riw-km"))]
        s0_null: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// RI1 and RI_W on the three leukemia fixtures.
    Table2 {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        mc: MonteCarloArgs,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
    },
    /// Write an embedded fixture as CSV.
    Export {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(survinfo::FIXTURE_NAMES))]
        fixture: String,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// CSV file with header `time,status,z1,...,zp`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Embedded dataset: aml-orig, aml-1 or aml-2.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = TieMethod::default())]
    ties: TieMethod,
    /// Null coefficients, comma separated; zeros by default.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    null_beta: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[arg(long, default_value_t = 5000)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Confidence level of the reported interval.
    #[arg(long, default_value_t = 0.99)]
    level: f64,
    /// How imputed draws beyond the last fitted death are recorded.
    #[arg(long, default_value_t = TailRule::default())]
    tail: TailRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Selector {
    Ri1,
    Riw,
    RiwAlt,
    RiwKm,
    All,
}

/// Failure of a command, mapped to the process exit status.
enum Failure {
    Usage(String, String),
    Numerical(survinfo::Error),
}

impl From<survinfo::Error> for Failure {
    fn from(e: survinfo::Error) -> Self {
        if e.is_input_error() {
            Failure::Usage(e.name().to_string(), e.to_string())
        } else {
            Failure::Numerical(e)
        }
    }
}

impl Input {
    fn load(&self) -> Result<Dataset, Failure> {
        match (&self.data, &self.fixture) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Usage("Io".into(), format!("{}: {e}", path.display())))?;
                Ok(parse_csv(&text)?)
            }
            (None, Some(name)) => Ok(fixture(name)?),
            _ => unreachable!("clap enforces exactly one input"),
        }
    }
}

impl ModelArgs {
    fn fit_options(&self) -> FitOptions {
        FitOptions { null_beta: self.null_beta.clone(), ..FitOptions::default() }
    }

    fn measure_config(&self, mc: &MonteCarloArgs) -> MeasureConfig {
        MeasureConfig {
            ties: self.ties,
            reps: mc.reps,
            seed: mc.seed,
            level: mc.level,
            beta0: self.null_beta.clone(),
            tail: mc.tail,
            ..MeasureConfig::default()
        }
    }
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Fit { input, model, format } => {
            let d = input.load()?;
            let fit = survinfo::fit(&d, model.ties, &model.fit_options())?;
            Ok(output::fit(&d, model.ties, &fit, format))
        }
        Command::Baseline { input, model, format } => {
            let d = input.load()?;
            let fitted = FittedModel::fit(&d, model.ties, &model.fit_options())?;
            Ok(output::baseline(&fitted.baseline, format))
        }
        Command::Impute { input, model, seed, rep, tail } => {
            let d = input.load()?;
            let fitted = FittedModel::fit(&d, model.ties, &model.fit_options())?;
            let completion = complete_dataset(&d, &fitted, tail, &SeededRng::new(seed, rep))?;
            Ok(completion.data.to_csv())
        }
        Command::Measure { input, model, mc, measure, t0, s0_null, format } => {
            let d = input.load()?;
            let cfg = model.measure_config(&mc);
            let results = match measure {
                Selector::RiwKm => {
                    let (t0, s0) = (t0.expect("required by clap"), s0_null.expect("required by clap"));
                    vec![measures::ri_w_km(&d.without_covariates(), t0, s0, &cfg)?]
                }
                Selector::All => [MeasureKind::Ri1, MeasureKind::RiW, MeasureKind::RiWAlt]
                    .into_iter()
                    .map(|kind| measures::estimate(kind, &d, &cfg))
                    .collect::<survinfo::Result<Vec<_>>>()?,
                single => vec![measures::estimate(single.kind(), &d, &cfg)?],
            };
            Ok(output::measures(&results, format))
        }
        Command::Table2 { model, mc, format } => {
            let cfg = model.measure_config(&mc);
            let rows = survinfo::FIXTURE_NAMES
                .iter()
                .map(|&name| {
                    let d = fixture(name)?;
                    Ok(output::Table2Row {
                        dataset: name,
                        ri1: measures::ri1(&d, &cfg)?,
                        riw: measures::ri_w(&d, &cfg)?,
                    })
                })
                .collect::<survinfo::Result<Vec<_>>>()?;
            Ok(output::table2(&rows, &cfg, format))
        }
        Command::Export { fixture: name } => Ok(fixture(&name)?.to_csv()),
    }
}

impl Selector {
    fn kind(self) -> MeasureKind {
        match self {
            Selector::Ri1 => MeasureKind::Ri1,
            Selector::Riw => MeasureKind::RiW,
            Selector::RiwAlt => MeasureKind::RiWAlt,
            Selector::RiwKm => MeasureKind::RiWKm,
            Selector::All => unreachable!("expanded by the caller"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.into()).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Failure::Usage("ThreadPool".into(), e.to_string())),
        },
        None => run(cli.command),
    };
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(name, message)) => {
            eprintln!("error: {name}: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(2)
        }
    }
}
