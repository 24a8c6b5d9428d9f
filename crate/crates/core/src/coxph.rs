//! Cox partial likelihood and maximum partial likelihood estimation.
//!
//! The risk set at an event time `t` is `{j : T_j >= t}`: subjects censored
//! at `t` are still at risk for the deaths at `t`. Ties among deaths are
//! handled by the Efron or Breslow approximation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, spd_inverse, spd_solve, symmetrize};

/// `‖beta‖∞` beyond which the partial likelihood is treated as monotone.
pub const DIVERGENCE_BOUND: f64 = 50.0;
const MAX_HALVINGS: usize = 30;
// A Newton step this small (relative to `1 + ‖beta‖∞`) marks an interior maximum.
const STEP_TOL: f64 = 1e-6;
const LOGLIK_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMethod {
    Efron,
    #[default]
    Breslow,
}

impl fmt::Display for TieMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TieMethod::Efron => f.write_str("efron"),
            TieMethod::Breslow => f.write_str("breslow"),
        }
    }
}

impl FromStr for TieMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "efron" => Ok(TieMethod::Efron),
            "breslow" => Ok(TieMethod::Breslow),
            other => Err(Error::InvalidArgument(format!("unknown tie method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Coefficient vector at which `loglik_at_null` is reported; zeros when `None`.
    pub null_beta: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-9, null_beta: None }
    }
}

/// Result of maximizing the partial likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    pub beta_hat: DVector<f64>,
    /// Inverse of the observed information at `beta_hat`.
    pub var_hat: DMatrix<f64>,
    /// Observed information `-∇²ℓ` at `beta_hat`.
    pub information: DMatrix<f64>,
    pub loglik_at_beta_hat: f64,
    pub loglik_at_null: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CoxFit {
    pub fn standard_errors(&self) -> Vec<f64> {
        self.var_hat.diagonal().iter().map(|v| v.sqrt()).collect()
    }
}

/// Log partial likelihood with its gradient and observed information.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loglik: f64,
    pub gradient: DVector<f64>,
    pub neg_hessian: DMatrix<f64>,
}

/// Subjects ordered by decreasing time and grouped by tied time. Reused
/// across evaluations of the same dataset.
#[derive(Debug, Clone)]
pub(crate) struct RiskSets<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    // (start, end) ranges into `order`, one per distinct time, decreasing
    groups: Vec<(usize, usize)>,
    // smallest event time; subjects with earlier times are in no risk set
    first_event_time: f64,
}

impl<'a> RiskSets<'a> {
    pub(crate) fn new(data: &'a Dataset) -> Result<Self> {
        let obs = data.observations();
        if !obs.iter().any(|o| o.event && o.time > 0.0) {
            return Err(Error::NoEvents);
        }
        let first_event_time = obs.iter().filter(|o| o.event).map(|o| o.time).fold(f64::INFINITY, f64::min);
        let mut order: Vec<usize> = (0..obs.len()).collect();
        order.sort_by(|&a, &b| obs[b].time.total_cmp(&obs[a].time));
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=order.len() {
            if i == order.len() || obs[order[i]].time != obs[order[start]].time {
                groups.push((start, i));
                start = i;
            }
        }
        Ok(Self { data, order, groups, first_event_time })
    }

    pub(crate) fn data(&self) -> &'a Dataset {
        self.data
    }

    /// `(time, subject indices)` per distinct time, in decreasing time order.
    pub(crate) fn grouped(&self) -> impl Iterator<Item = (f64, &[usize])> + '_ {
        let obs = self.data.observations();
        self.groups.iter().map(move |&(start, end)| {
            let members = &self.order[start..end];
            (obs[members[0]].time, members)
        })
    }

    /// Weights are scaled by `exp(-offset)`. The offset ranges only over
    /// subjects that enter some risk set.
    pub(crate) fn risk_offset(&self, beta: &[f64]) -> f64 {
        self.data
            .observations()
            .iter()
            .filter(|o| o.time >= self.first_event_time)
            .map(|o| o.covariates.iter().zip(beta).map(|(z, b)| z * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn eval(&self, beta: &[f64], ties: TieMethod, derivatives: bool) -> Evaluation {
        let obs = self.data.observations();
        let p = self.data.p();
        let eta = |i: usize| -> f64 { obs[i].covariates.iter().zip(beta).map(|(z, b)| z * b).sum() };
        let offset = self.risk_offset(beta);

        let mut loglik = 0.0;
        let mut grad = vec![0.0; p];
        let mut info = vec![0.0; p * p];

        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; p * p];
        let mut d1 = vec![0.0; p];
        let mut d2 = vec![0.0; p * p];
        let mut mean = vec![0.0; p];

        for &(start, end) in &self.groups {
            let mut deaths = 0usize;
            let mut d0 = 0.0;
            if derivatives {
                d1.iter_mut().for_each(|x| *x = 0.0);
                d2.iter_mut().for_each(|x| *x = 0.0);
            }
            for &i in &self.order[start..end] {
                let e = eta(i) - offset;
                let w = e.exp();
                let z = &obs[i].covariates;
                s0 += w;
                if derivatives {
                    for a in 0..p {
                        s1[a] += w * z[a];
                        for b in 0..p {
                            s2[a * p + b] += w * z[a] * z[b];
                        }
                    }
                }
                if obs[i].event {
                    deaths += 1;
                    d0 += w;
                    loglik += e;
                    if derivatives {
                        for a in 0..p {
                            grad[a] += z[a];
                            d1[a] += w * z[a];
                            for b in 0..p {
                                d2[a * p + b] += w * z[a] * z[b];
                            }
                        }
                    }
                }
            }
            if deaths == 0 {
                continue;
            }
            for k in 0..deaths {
                let frac = match ties {
                    TieMethod::Efron => k as f64 / deaths as f64,
                    TieMethod::Breslow => 0.0,
                };
                let denom = s0 - frac * d0;
                loglik -= denom.ln();
                if derivatives {
                    for a in 0..p {
                        mean[a] = (s1[a] - frac * d1[a]) / denom;
                        grad[a] -= mean[a];
                    }
                    for a in 0..p {
                        for b in 0..p {
                            let second = (s2[a * p + b] - frac * d2[a * p + b]) / denom;
                            info[a * p + b] += second - mean[a] * mean[b];
                        }
                    }
                }
            }
        }

        Evaluation {
            loglik,
            gradient: DVector::from_vec(grad),
            neg_hessian: symmetrize(DMatrix::from_row_slice(p, p, &info)),
        }
    }

    pub(crate) fn loglik(&self, beta: &[f64], ties: TieMethod) -> f64 {
        self.eval(beta, ties, false).loglik
    }

    pub(crate) fn evaluate(&self, beta: &[f64], ties: TieMethod) -> Evaluation {
        self.eval(beta, ties, true)
    }

    /// Newton–Raphson with step halving, started at zero.
    pub(crate) fn fit(&self, ties: TieMethod, opts: &FitOptions) -> Result<CoxFit> {
        let p = self.data.p();
        if p == 0 {
            return Err(Error::InvalidArgument("fitting requires at least one covariate".into()));
        }
        let null_beta = match &opts.null_beta {
            Some(b) if b.len() != p => {
                return Err(Error::InvalidArgument(format!("null beta has length {}, expected {p}", b.len())))
            }
            Some(b) => b.clone(),
            None => vec![0.0; p],
        };

        let mut beta = DVector::<f64>::zeros(p);
        let mut current = self.evaluate(beta.as_slice(), ties);
        let mut iterations = 0;
        loop {
            if !current.loglik.is_finite() {
                return Err(Error::NonConvergence(iterations));
            }
            let step = match spd_solve(&current.neg_hessian, &current.gradient) {
                Some(step) => step,
                None if iterations == 0 => {
                    return Err(Error::SingularInformation(beta.iter().copied().collect()))
                }
                None => return Err(Error::MonotoneLikelihood { iterations, norm: max_abs(&beta) }),
            };
            let gradient_small = max_abs(&current.gradient) <= opts.tol * (1.0 + current.loglik.abs());
            let step_small = max_abs(&step) <= STEP_TOL * (1.0 + max_abs(&beta));
            if gradient_small && step_small {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::NonConvergence(iterations));
            }
            iterations += 1;

            // ℓ differences below this are rounding noise
            let floor = current.loglik - LOGLIK_SLACK * (1.0 + current.loglik.abs());
            let mut scale = 1.0;
            let mut candidate = &beta + &step;
            let mut candidate_ll = self.loglik(candidate.as_slice(), ties);
            let mut halvings = 0;
            while !(candidate_ll >= floor) && halvings < MAX_HALVINGS {
                scale *= 0.5;
                candidate = &beta + &step * scale;
                candidate_ll = self.loglik(candidate.as_slice(), ties);
                halvings += 1;
            }
            if !(candidate_ll >= floor) || candidate == beta {
                // no ascent possible along the Newton direction
                if gradient_small {
                    break;
                }
                return Err(Error::NonConvergence(iterations));
            }
            beta = candidate;
            if max_abs(&beta) > DIVERGENCE_BOUND {
                return Err(Error::MonotoneLikelihood { iterations, norm: max_abs(&beta) });
            }
            current = self.evaluate(beta.as_slice(), ties);
        }

        let var_hat = spd_inverse(&current.neg_hessian)
            .ok_or_else(|| Error::SingularInformation(beta.iter().copied().collect()))?;
        let loglik_at_null = self.loglik(&null_beta, ties);
        Ok(CoxFit {
            beta_hat: beta,
            var_hat,
            information: current.neg_hessian,
            loglik_at_beta_hat: current.loglik,
            loglik_at_null,
            iterations,
            converged: true,
        })
    }
}

fn check_beta(d: &Dataset, beta: &[f64]) -> Result<()> {
    if beta.len() != d.p() {
        return Err(Error::InvalidArgument(format!("beta has length {}, expected {}", beta.len(), d.p())));
    }
    Ok(())
}

/// Log partial likelihood `ℓ_d(beta)`.
pub fn log_partial_likelihood(d: &Dataset, beta: &[f64], ties: TieMethod) -> Result<f64> {
    check_beta(d, beta)?;
    Ok(RiskSets::new(d)?.loglik(beta, ties))
}

/// Gradient `∇ℓ` and observed information `-∇²ℓ` at `beta`.
pub fn score_and_information(
    d: &Dataset,
    beta: &[f64],
    ties: TieMethod,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_beta(d, beta)?;
    let ev = RiskSets::new(d)?.evaluate(beta, ties);
    Ok((ev.gradient, ev.neg_hessian))
}

/// Maximum partial likelihood estimate with variance from the inverse
/// observed information.
pub fn fit(d: &Dataset, ties: TieMethod, opts: &FitOptions) -> Result<CoxFit> {
    RiskSets::new(d)?.fit(ties, opts)
}
