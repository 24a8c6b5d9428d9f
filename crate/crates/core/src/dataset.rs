//! Survival data model, CSV ingestion and the embedded leukemia fixtures.
//!
//! A [`Dataset`] keeps observations in input order. Sorting happens inside
//! the fitting routines, never here, so that ingestion is lossless.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// One subject: observed time, event indicator and covariate vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub time: f64,
    /// `true` when the death was observed, `false` when censored.
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Self {
        Self { time, event, covariates }
    }
}

/// Ordered collection of observations sharing covariate dimension `p`.
///
/// `p = 0` is allowed and denotes a single homogeneous sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub events: usize,
    pub censored: usize,
    pub uncensored_fraction: f64,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, p: usize) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidDataset("dataset is empty".into()));
        }
        for (i, obs) in observations.iter().enumerate() {
            if !(obs.time >= 0.0) || !obs.time.is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "observation {i}: time must be finite and nonnegative, got {}",
                    obs.time
                )));
            }
            if obs.covariates.len() != p {
                return Err(Error::InvalidDataset(format!(
                    "observation {i}: expected {p} covariates, got {}",
                    obs.covariates.len()
                )));
            }
            if obs.covariates.iter().any(|z| !z.is_finite()) {
                return Err(Error::InvalidDataset(format!("observation {i}: covariates must be finite")));
            }
        }
        Ok(Self { observations, p })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn events(&self) -> usize {
        self.observations.iter().filter(|o| o.event).count()
    }

    pub fn censored(&self) -> usize {
        self.len() - self.events()
    }

    pub fn has_censoring(&self) -> bool {
        self.observations.iter().any(|o| !o.event)
    }

    pub fn max_time(&self) -> f64 {
        self.observations.iter().map(|o| o.time).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> Summary {
        let n = self.len();
        let events = self.events();
        Summary { n, events, censored: n - events, uncensored_fraction: events as f64 / n as f64 }
    }

    /// Replacement observations for the same subjects; times and statuses
    /// are assumed valid.
    pub(crate) fn with_observations(&self, observations: Vec<Observation>) -> Dataset {
        debug_assert_eq!(observations.len(), self.len());
        Dataset { observations, p: self.p }
    }

    /// Same observations with the covariates dropped.
    pub fn without_covariates(&self) -> Dataset {
        let observations =
            self.observations.iter().map(|o| Observation::new(o.time, o.event, Vec::new())).collect();
        Dataset { observations, p: 0 }
    }

    /// Dataset without the observations rejected by `keep`.
    pub fn filtered(&self, keep: impl Fn(&Observation) -> bool) -> Result<Dataset> {
        let observations = self.observations.iter().filter(|o| keep(o)).cloned().collect();
        Dataset::new(observations, self.p)
    }

    /// Serialize as `time,status,z1,...,zp` CSV. Numbers use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,status");
        for k in 1..=self.p {
            write!(out, ",z{k}").unwrap();
        }
        out.push('\n');
        for obs in &self.observations {
            write!(out, "{},{}", obs.time, u8::from(obs.event)).unwrap();
            for z in &obs.covariates {
                write!(out, ",{z}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Parse `time,status,z1,...,zp` CSV text. Errors carry 1-based line numbers.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| Error::Parse { line: 1, message: "missing header".into() })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 2
        || !columns[0].eq_ignore_ascii_case("time")
        || !columns[1].eq_ignore_ascii_case("status")
    {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must start with `time,status`, got `{header}`"),
        });
    }
    if let Some(k) = columns[2..].iter().position(|c| c.is_empty()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("covariate column {} has an empty name", k + 1),
        });
    }
    let p = columns.len() - 2;

    let mut observations = Vec::new();
    for (line, row) in lines {
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != p + 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", p + 2, fields.len()),
            });
        }
        let number = |idx: usize| -> Result<f64> {
            let v: f64 = fields[idx].parse().map_err(|_| Error::Parse {
                line,
                message: format!("non-numeric field `{}` in column {}", fields[idx], columns[idx]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value in column {}", columns[idx]),
                });
            }
            Ok(v)
        };
        let time = number(0)?;
        if time < 0.0 {
            return Err(Error::Parse { line, message: format!("negative time {time}") });
        }
        let event = match fields[1] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Parse { line, message: format!("status must be 0 or 1, got `{other}`") })
            }
        };
        let covariates = (2..p + 2).map(number).collect::<Result<Vec<_>>>()?;
        observations.push(Observation::new(time, event, covariates));
    }
    if observations.is_empty() {
        return Err(Error::Parse { line: 2, message: "no data rows".into() });
    }
    Dataset::new(observations, p)
}

pub const FIXTURE_NAMES: [&str; 3] = ["aml-orig", "aml-1", "aml-2"];

// Acute myelogenous leukemia data: maintained group (Z = 0) and
// non-maintained group (Z = 1).
const AML_MAINTAINED: [(f64, bool); 11] = [
    (9.0, true),
    (13.0, true),
    (13.0, false),
    (18.0, true),
    (23.0, true),
    (28.0, false),
    (31.0, true),
    (34.0, true),
    (45.0, false),
    (48.0, true),
    (161.0, false),
];
const AML_NONMAINTAINED: [(f64, bool); 12] = [
    (5.0, true),
    (5.0, true),
    (8.0, true),
    (8.0, true),
    (12.0, true),
    (16.0, false),
    (23.0, true),
    (27.0, true),
    (30.0, true),
    (33.0, true),
    (43.0, true),
    (45.0, true),
];

/// One of the three versions of the leukemia data.
///
/// * `aml-orig`: the original 23 subjects.
/// * `aml-1`: every censored status flipped to an event, plus 11 (Z = 0)
///   and 12 (Z = 1) subjects censored at time 0.
/// * `aml-2`: the original data plus the same 23 subjects censored at 0.
pub fn fixture(name: &str) -> Result<Dataset> {
    let (flip_censored, pad_zero_censored) = match name {
        "aml-orig" => (false, false),
        "aml-1" => (true, true),
        "aml-2" => (false, true),
        other => return Err(Error::UnknownFixture(other.to_string())),
    };
    let mut observations: Vec<Observation> = AML_MAINTAINED
        .iter()
        .map(|&(t, e)| Observation::new(t, e || flip_censored, vec![0.0]))
        .chain(AML_NONMAINTAINED.iter().map(|&(t, e)| Observation::new(t, e || flip_censored, vec![1.0])))
        .collect();
    if pad_zero_censored {
        observations.extend((0..AML_MAINTAINED.len()).map(|_| Observation::new(0.0, false, vec![0.0])));
        observations.extend((0..AML_NONMAINTAINED.len()).map(|_| Observation::new(0.0, false, vec![1.0])));
    }
    Dataset::new(observations, 1)
}
