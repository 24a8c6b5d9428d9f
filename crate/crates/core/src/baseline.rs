//! Breslow baseline cumulative hazard and the per-subject discrete survival
//! distributions it induces.
//!
//! The model is defined on the survival scale, `S(t | z) = S0(t)^exp(beta'z)`,
//! with `S0` the product integral `prod_{s <= t} (1 - dL0(s))` of the
//! baseline cumulative hazard. For a step-function hazard this gives a
//! finite atomic distribution; whatever mass survives past the last jump is
//! placed on a single tail atom.

use serde::Serialize;

use crate::coxph::{CoxFit, FitOptions, RiskSets, TieMethod};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-12;

/// Right-continuous nondecreasing step function given by its jumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
}

impl StepFunction {
    pub fn new(jump_times: Vec<f64>, jump_sizes: Vec<f64>) -> Result<Self> {
        if jump_times.len() != jump_sizes.len() {
            return Err(Error::InvalidArgument("jump times and sizes differ in length".into()));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("jump times must be strictly increasing".into()));
        }
        if jump_times.iter().any(|t| !(*t >= 0.0)) || jump_sizes.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("jump times must be nonnegative and sizes positive".into()));
        }
        Ok(Self { jump_times, jump_sizes })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.jump_sizes
    }

    pub fn last_jump_time(&self) -> Option<f64> {
        self.jump_times.last().copied()
    }

    /// Sum of the jumps at times `<= t`.
    pub fn value(&self, t: f64) -> f64 {
        self.jump_times.iter().zip(&self.jump_sizes).take_while(|(s, _)| **s <= t).map(|(_, d)| d).sum()
    }
}

/// Finite atomic distribution on death times plus one tail atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSurvival {
    atom_times: Vec<f64>,
    atom_probs: Vec<f64>,
    tail_time: f64,
    tail_prob: f64,
}

impl DiscreteSurvival {
    pub fn new(atom_times: Vec<f64>, atom_probs: Vec<f64>, tail_time: f64, tail_prob: f64) -> Result<Self> {
        if atom_times.len() != atom_probs.len() {
            return Err(Error::InvalidArgument("atom times and masses differ in length".into()));
        }
        if atom_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("atom times must be strictly increasing".into()));
        }
        if atom_probs.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) || !(0.0..1.0).contains(&tail_prob) {
            return Err(Error::InvalidArgument("atom masses out of range".into()));
        }
        if atom_times.last().is_some_and(|&t| tail_time < t) || !tail_time.is_finite() {
            return Err(Error::InvalidArgument("tail time precedes the last atom".into()));
        }
        let total: f64 = atom_probs.iter().sum::<f64>() + tail_prob;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { atom_times, atom_probs, tail_time, tail_prob })
    }

    pub fn atom_times(&self) -> &[f64] {
        &self.atom_times
    }

    pub fn atom_probs(&self) -> &[f64] {
        &self.atom_probs
    }

    pub fn tail_time(&self) -> f64 {
        self.tail_time
    }

    pub fn tail_prob(&self) -> f64 {
        self.tail_prob
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_probs.iter().sum::<f64>() + self.tail_prob
    }

    /// `P(X > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        let atoms: f64 =
            self.atom_times.iter().zip(&self.atom_probs).filter(|(a, _)| **a > t).map(|(_, m)| m).sum();
        if t < self.tail_time {
            atoms + self.tail_prob
        } else {
            atoms
        }
    }
}

/// Breslow estimate of the baseline cumulative hazard: at each distinct
/// event time `t` a jump of `d(t) / sum_{T_j >= t} exp(beta'Z_j)`.
///
/// Tied deaths always enter a single jump, whichever tie method fitted `beta`.
pub fn breslow_cumhaz(d: &Dataset, beta: &[f64]) -> Result<StepFunction> {
    if beta.len() != d.p() {
        return Err(Error::InvalidArgument(format!("beta has length {}, expected {}", beta.len(), d.p())));
    }
    let risk = RiskSets::new(d)?;
    let mut jumps = risk.breslow_jumps(beta);
    jumps.reverse();
    let (jump_times, jump_sizes) = jumps.into_iter().unzip();
    StepFunction::new(jump_times, jump_sizes)
}

impl RiskSets<'_> {
    /// Breslow jumps in decreasing time order.
    fn breslow_jumps(&self, beta: &[f64]) -> Vec<(f64, f64)> {
        let obs = self.data().observations();
        let eta = |i: usize| -> f64 { obs[i].covariates.iter().zip(beta).map(|(z, b)| z * b).sum() };
        let offset = self.risk_offset(beta);
        let mut s0 = 0.0;
        let mut jumps = Vec::new();
        for (time, members) in self.grouped() {
            let mut deaths = 0usize;
            for &i in members {
                s0 += (eta(i) - offset).exp();
                deaths += usize::from(obs[i].event);
            }
            if deaths > 0 {
                jumps.push((time, deaths as f64 / s0 * (-offset).exp()));
            }
        }
        jumps
    }
}

/// Fitted survival distribution `S(t | z) = S0(t)^exp(beta'z)` with
/// `S0(t) = prod_{s <= t} (1 - dL0(s))`. The residual mass `S(t_last | z)`
/// sits on `tail_time`.
pub fn survival_given_z(
    baseline: &StepFunction,
    beta: &[f64],
    z: &[f64],
    tail_time: f64,
) -> Result<DiscreteSurvival> {
    if beta.len() != z.len() {
        return Err(Error::InvalidArgument(format!(
            "beta has length {}, covariates {}",
            beta.len(),
            z.len()
        )));
    }
    if baseline.last_jump_time().is_some_and(|t| tail_time < t) {
        return Err(Error::InvalidArgument(format!("tail time {tail_time} precedes the last jump")));
    }
    let relative_risk = beta.iter().zip(z).map(|(b, x)| b * x).sum::<f64>().exp();
    let mut s0 = 1.0;
    let mut prev = 1.0;
    let mut atom_times = Vec::with_capacity(baseline.jump_times.len());
    let mut atom_probs = Vec::with_capacity(baseline.jump_times.len());
    for (&time, &increment) in baseline.jump_times.iter().zip(&baseline.jump_sizes) {
        let factor = 1.0 - increment;
        if factor < 0.0 {
            return Err(Error::FactorOutOfRange { time, increment });
        }
        s0 *= factor;
        let s = s0.powf(relative_risk);
        let mass = prev - s;
        if mass > 0.0 {
            atom_times.push(time);
            atom_probs.push(mass);
        }
        prev = s;
    }
    DiscreteSurvival::new(atom_times, atom_probs, tail_time, prev)
}

/// Fitted `(L0, beta)` pair used to generate complete data.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub cox: CoxFit,
    pub baseline: StepFunction,
    pub ties: TieMethod,
    /// Location of the tail atom: the larger of the last observed time and
    /// the last baseline jump.
    pub tail_time: f64,
}

impl FittedModel {
    pub fn fit(d: &Dataset, ties: TieMethod, opts: &FitOptions) -> Result<Self> {
        let cox = crate::coxph::fit(d, ties, opts)?;
        let baseline = breslow_cumhaz(d, cox.beta_hat.as_slice())?;
        Ok(Self::from_parts(d, cox, baseline, ties))
    }

    pub(crate) fn from_parts(d: &Dataset, cox: CoxFit, baseline: StepFunction, ties: TieMethod) -> Self {
        let tail_time = d.max_time().max(baseline.last_jump_time().unwrap_or(0.0));
        Self { cox, baseline, ties, tail_time }
    }

    pub fn survival_for(&self, z: &[f64]) -> Result<DiscreteSurvival> {
        survival_given_z(&self.baseline, self.cox.beta_hat.as_slice(), z, self.tail_time)
    }
}
