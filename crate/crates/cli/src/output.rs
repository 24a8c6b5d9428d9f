//! Rendering of command results. Floats are written in shortest round-trip
//! form in both CSV and JSON, so the two encodings carry identical numbers.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use survinfo::{CoxFit, Dataset, MeasureConfig, MeasureResult, StepFunction, TieMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Text,
    Json,
    Csv,
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct FitReport<'a> {
    ties: TieMethod,
    n: usize,
    events: usize,
    beta_hat: &'a [f64],
    se: Vec<f64>,
    var_hat: Vec<Vec<f64>>,
    loglik: f64,
    loglik_null: f64,
    iterations: usize,
    converged: bool,
}

pub fn fit(d: &Dataset, ties: TieMethod, fit: &CoxFit, format: Format) -> String {
    let p = fit.beta_hat.len();
    let report = FitReport {
        ties,
        n: d.len(),
        events: d.events(),
        beta_hat: fit.beta_hat.as_slice(),
        se: fit.standard_errors(),
        var_hat: (0..p).map(|i| (0..p).map(|j| fit.var_hat[(i, j)]).collect()).collect(),
        loglik: fit.loglik_at_beta_hat,
        loglik_null: fit.loglik_at_null,
        iterations: fit.iterations,
        converged: fit.converged,
    };
    match format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut out = String::from("coef,beta_hat,se,loglik,loglik_null,iterations,converged\n");
            for (i, (b, se)) in report.beta_hat.iter().zip(&report.se).enumerate() {
                let _ = writeln!(
                    out,
                    "z{},{b},{se},{},{},{},{}",
                    i + 1,
                    report.loglik,
                    report.loglik_null,
                    report.iterations,
                    report.converged
                );
            }
            out
        }
    }
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct BaselineRow {
    time: f64,
    dLambda: f64,
    Lambda: f64,
    S0: f64,
}

pub fn baseline(h: &StepFunction, format: Format) -> String {
    let mut cumulative = 0.0;
    let mut survival = 1.0;
    let rows: Vec<BaselineRow> = h
        .jump_times()
        .iter()
        .zip(h.jump_sizes())
        .map(|(&time, &jump)| {
            cumulative += jump;
            survival *= 1.0 - jump;
            BaselineRow { time, dLambda: jump, Lambda: cumulative, S0: survival }
        })
        .collect();
    match format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut out = String::from("time,dLambda,Lambda,S0\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{}", r.time, r.dLambda, r.Lambda, r.S0);
            }
            out
        }
    }
}

const MEASURE_HEADER: &str = "measure,estimate,ci_low,ci_high,level,reps,seed,numerator,\
denominator_mean,denominator_se,failures,degenerate_imputations";

fn measure_row(r: &MeasureResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.measure,
        r.estimate,
        r.ci_low,
        r.ci_high,
        r.level,
        r.reps,
        r.seed,
        r.numerator,
        r.denominator_mean,
        r.denominator_se,
        r.failures,
        r.degenerate_imputations
    )
}

/// A single result prints as an object, several as an array.
pub fn measures(results: &[MeasureResult], format: Format) -> String {
    match (format, results) {
        (Format::Json, [single]) => json(single),
        (Format::Json, many) => json(many),
        (Format::Csv, rows) => {
            let mut out = format!("{MEASURE_HEADER}\n");
            for r in rows {
                let _ = writeln!(out, "{}", measure_row(r));
            }
            out
        }
    }
}

#[derive(Serialize)]
pub struct Table2Row {
    pub dataset: &'static str,
    pub ri1: MeasureResult,
    pub riw: MeasureResult,
}

pub fn table2(rows: &[Table2Row], cfg: &MeasureConfig, format: TableFormat) -> String {
    match format {
        TableFormat::Json => json(rows),
        TableFormat::Csv => {
            let mut out = format!("dataset,{MEASURE_HEADER}\n");
            for row in rows {
                for r in [&row.ri1, &row.riw] {
                    let _ = writeln!(out, "{},{}", row.dataset, measure_row(r));
                }
            }
            out
        }
        TableFormat::Text => {
            let mut out = format!(
                "Monte Carlo estimates of RI1 and RI_W ({} replicates, seed {}, ties {}, tail {})\n\
                 with {} confidence intervals\n\n",
                cfg.reps, cfg.seed, cfg.ties, cfg.tail, cfg.level
            );
            let _ = write!(out, "{:<6}", "");
            for row in rows {
                let _ = write!(out, "{:<24}", row.dataset);
            }
            out = out.trim_end().to_string();
            out.push('\n');
            for (label, pick) in [("RI1", 0), ("RI_W", 1)] {
                let mut line = format!("{label:<6}");
                for row in rows {
                    let r = if pick == 0 { &row.ri1 } else { &row.riw };
                    let cell = format!("{:.3} ({:.3}, {:.3})", r.estimate, r.ci_low, r.ci_high);
                    let _ = write!(line, "{cell:<24}");
                }
                out.push_str(line.trim_end());
                out.push('\n');
            }
            out
        }
    }
}
