//! Completion of censored datasets by conditional imputation.
//!
//! Each censored time `T_i` is replaced by a draw from the fitted
//! distribution of subject `i`, conditioned on exceeding `T_i`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{DiscreteSurvival, FittedModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Named random stream: identical `(seed, stream_id)` pairs produce
/// identical sequences on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent child stream, e.g. one per subject within a replicate.
    pub fn derive(&self, index: u64) -> SeededRng {
        SeededRng { seed: splitmix64(self.seed ^ splitmix64(self.stream_id)), stream_id: index }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub time: f64,
    /// The draw landed on the tail atom (mass beyond the last fitted death).
    pub in_tail: bool,
    /// No fitted mass lies beyond the censoring time; `time` was set
    /// deterministically to `max(t_cens, tail_time)`.
    pub degenerate: bool,
}

/// How a completed dataset records a subject whose draw fell on the tail atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailRule {
    /// Keep the original censored observation: the fitted distribution
    /// says nothing about where beyond the last death the subject dies.
    #[default]
    Censored,
    /// Record a death at the tail time.
    Event,
}

impl fmt::Display for TailRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailRule::Censored => f.write_str("censored"),
            TailRule::Event => f.write_str("event"),
        }
    }
}

impl FromStr for TailRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "censored" => Ok(TailRule::Censored),
            "event" => Ok(TailRule::Event),
            other => Err(Error::InvalidArgument(format!("unknown tail rule `{other}`"))),
        }
    }
}

/// Draw from `s` conditional on `X > t_cens`.
pub fn conditional_sample<R: Rng + ?Sized>(s: &DiscreteSurvival, t_cens: f64, rng: &mut R) -> Draw {
    let degenerate = Draw { time: t_cens.max(s.tail_time()), in_tail: true, degenerate: true };
    if t_cens >= s.tail_time() {
        return degenerate;
    }
    let times = s.atom_times();
    let probs = s.atom_probs();
    let start = times.partition_point(|&a| a <= t_cens);
    let remaining: f64 = probs[start..].iter().sum::<f64>() + s.tail_prob();
    if !(remaining > 0.0) {
        return degenerate;
    }
    let target = rng.random::<f64>() * remaining;
    let mut cumulative = 0.0;
    for (&time, &mass) in times[start..].iter().zip(&probs[start..]) {
        cumulative += mass;
        if target < cumulative {
            return Draw { time, in_tail: false, degenerate: false };
        }
    }
    if s.tail_prob() > 0.0 {
        Draw { time: s.tail_time(), in_tail: true, degenerate: false }
    } else {
        // rounding pushed the target past the last atom
        let time = *times.last().expect("positive mass beyond t_cens");
        Draw { time, in_tail: false, degenerate: false }
    }
}

/// A completed dataset with counts of the draws that fell on the tail atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub data: Dataset,
    pub tail_draws: usize,
    pub degenerate: usize,
}

/// Conditional survival distributions of the censored subjects of one
/// dataset under one fitted model, built once and sampled repeatedly.
#[derive(Debug, Clone)]
pub struct Imputer<'a> {
    data: &'a Dataset,
    censored: Vec<(usize, DiscreteSurvival)>,
    tail_rule: TailRule,
}

impl<'a> Imputer<'a> {
    pub fn new(data: &'a Dataset, model: &FittedModel, tail_rule: TailRule) -> Result<Self> {
        let censored = data
            .observations()
            .iter()
            .enumerate()
            .filter(|(_, o)| !o.event)
            .map(|(i, o)| Ok((i, model.survival_for(&o.covariates)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { data, censored, tail_rule })
    }

    /// Like [`Imputer::new`] with explicit per-subject distributions.
    pub(crate) fn with_distribution(data: &'a Dataset, s: &DiscreteSurvival, tail_rule: TailRule) -> Self {
        let censored = data
            .observations()
            .iter()
            .enumerate()
            .filter(|(_, o)| !o.event)
            .map(|(i, _)| (i, s.clone()))
            .collect();
        Self { data, censored, tail_rule }
    }

    /// Subject `i` draws from the stream `rng.derive(i)`.
    pub fn complete(&self, rng: &SeededRng) -> Completion {
        if self.censored.is_empty() {
            return Completion { data: self.data.clone(), tail_draws: 0, degenerate: 0 };
        }
        let mut observations = self.data.observations().to_vec();
        let mut tail_draws = 0;
        let mut degenerate = 0;
        for (i, s) in &self.censored {
            let mut stream = rng.derive(*i as u64).generator();
            let draw = conditional_sample(s, observations[*i].time, &mut stream);
            tail_draws += usize::from(draw.in_tail);
            degenerate += usize::from(draw.degenerate);
            if draw.in_tail && self.tail_rule == TailRule::Censored {
                continue;
            }
            observations[*i].time = draw.time;
            observations[*i].event = true;
        }
        Completion { data: self.data.with_observations(observations), tail_draws, degenerate }
    }
}

/// Replace every censored time in `d` by a conditional draw from `model`;
/// draws on the tail atom are recorded according to `tail_rule`.
pub fn complete_dataset(
    d: &Dataset,
    model: &FittedModel,
    tail_rule: TailRule,
    rng: &SeededRng,
) -> Result<Completion> {
    Ok(Imputer::new(d, model, tail_rule)?.complete(rng))
}
