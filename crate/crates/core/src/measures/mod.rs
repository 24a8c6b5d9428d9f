//! Monte Carlo estimates of the relative information in a censored sample.
//!
//! Every measure is a ratio `numerator / E[q(D_co) | D_ob]`: the numerator
//! is a deterministic function of the observed data, the denominator is the
//! mean of `q` over complete datasets generated by [`crate::imputer`] under
//! the observed-data fit. Replicate `r` draws from stream `(seed, r)`, and
//! replicates are aggregated in index order, so results do not depend on
//! how many threads evaluate them.
//!
//! The confidence interval is a normal interval on the denominator mean
//! mapped through `x -> numerator / x`.

pub mod km;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::baseline::{breslow_cumhaz, survival_given_z, FittedModel};
use crate::coxph::{CoxFit, FitOptions, RiskSets, TieMethod};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::imputer::{Imputer, SeededRng, TailRule};
use crate::linalg::{quadratic_form, spd_inverse};

pub use km::KaplanMeier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    /// Likelihood-ratio measure on the partial likelihood.
    Ri1,
    /// Wald measure with the completed-data inverse variance averaged.
    RiW,
    /// Wald measure using the observed information at each replicate's own maximum.
    RiWAlt,
    /// Wald measure for the Kaplan–Meier estimate at a fixed time.
    RiWKm,
}

impl MeasureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureKind::Ri1 => "ri1",
            MeasureKind::RiW => "riw",
            MeasureKind::RiWAlt => "riw-alt",
            MeasureKind::RiWKm => "riw-km",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ri1" => Ok(MeasureKind::Ri1),
            "riw" => Ok(MeasureKind::RiW),
            "riw-alt" => Ok(MeasureKind::RiWAlt),
            "riw-km" => Ok(MeasureKind::RiWKm),
            other => Err(Error::InvalidArgument(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureConfig {
    pub ties: TieMethod,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
    /// Null coefficient vector; zeros when `None`.
    pub beta0: Option<Vec<f64>>,
    /// Coefficients under test for the Wald measure; the rest are nuisance
    /// parameters. All coefficients when `None`.
    pub tested: Option<Vec<usize>>,
    /// Newton settings shared by the observed fit and every replicate refit.
    pub fit: FitOptions,
    /// Treatment of imputed draws beyond the last fitted death.
    pub tail: TailRule,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            ties: TieMethod::default(),
            reps: 5000,
            seed: 42,
            level: 0.99,
            beta0: None,
            tested: None,
            fit: FitOptions::default(),
            tail: TailRule::default(),
        }
    }
}

impl MeasureConfig {
    fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::InvalidArgument(format!("reps must be at least 2, got {}", self.reps)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }

    fn null_beta(&self, p: usize) -> Result<Vec<f64>> {
        match &self.beta0 {
            Some(b) if b.len() != p => {
                Err(Error::InvalidArgument(format!("null beta has length {}, expected {p}", b.len())))
            }
            Some(b) => Ok(b.clone()),
            None => Ok(vec![0.0; p]),
        }
    }

    fn tested_indices(&self, p: usize) -> Result<Vec<usize>> {
        match &self.tested {
            None => Ok((0..p).collect()),
            Some(idx) if idx.is_empty() || idx.iter().any(|&i| i >= p) => {
                Err(Error::InvalidArgument(format!("tested coefficients {idx:?} out of range for p = {p}")))
            }
            Some(idx) => Ok(idx.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureResult {
    pub measure: MeasureKind,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub reps: usize,
    pub seed: u64,
    pub numerator: f64,
    pub denominator_mean: f64,
    pub denominator_se: f64,
    /// Replicates whose statistic could not be computed (failed refit).
    pub failures: usize,
    /// Imputations with no fitted mass beyond the censoring time, summed
    /// over replicates.
    pub degenerate_imputations: usize,
}

impl Serialize for MeasureResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("MeasureResult", 11)?;
        s.serialize_field("measure", self.measure.as_str())?;
        s.serialize_field("estimate", &self.estimate)?;
        s.serialize_field("ci", &[self.ci_low, self.ci_high])?;
        s.serialize_field("level", &self.level)?;
        s.serialize_field("reps", &self.reps)?;
        s.serialize_field("seed", &self.seed)?;
        s.serialize_field("numerator", &self.numerator)?;
        s.serialize_field("denominator_mean", &self.denominator_mean)?;
        s.serialize_field("denominator_se", &self.denominator_se)?;
        s.serialize_field("failures", &self.failures)?;
        s.serialize_field("degenerate_imputations", &self.degenerate_imputations)?;
        s.end()
    }
}

/// What one replicate contributes: its statistic (`None` when the refit
/// failed) and its count of degenerate imputations.
struct Replicate {
    value: Option<f64>,
    degenerate: usize,
}

fn run_replicates<F>(reps: usize, seed: u64, replicate: F) -> Vec<Replicate>
where
    F: Fn(SeededRng) -> Replicate + Sync,
{
    (0..reps as u64).into_par_iter().map(|r| replicate(SeededRng::new(seed, r))).collect()
}

fn summarize(
    measure: MeasureKind,
    numerator: f64,
    replicates: &[Replicate],
    cfg: &MeasureConfig,
) -> Result<MeasureResult> {
    let values: Vec<f64> = replicates.iter().filter_map(|r| r.value).collect();
    let reps = replicates.len();
    let failures = reps - values.len();
    if failures * 100 > reps || values.len() < 2 {
        return Err(Error::ExcessiveRefitFailures { failures, reps });
    }
    let n = values.len() as f64;
    // shifted by the first value: exact when all replicates agree
    let first = values[0];
    let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let se = (ss / (n - 1.0) / n).sqrt();

    let z = Normal::standard().inverse_cdf(0.5 + cfg.level / 2.0);
    let (low, high) = (mean - z * se, mean + z * se);
    if low <= 0.0 && high >= 0.0 {
        return Err(Error::DegenerateDenominator { low, high });
    }
    let (a, b) = (numerator / high, numerator / low);
    Ok(MeasureResult {
        measure,
        estimate: numerator / mean,
        ci_low: a.min(b),
        ci_high: a.max(b),
        level: cfg.level,
        reps,
        seed: cfg.seed,
        numerator,
        denominator_mean: mean,
        denominator_se: se,
        failures,
        degenerate_imputations: replicates.iter().map(|r| r.degenerate).sum(),
    })
}

fn observed_model(d: &Dataset, cfg: &MeasureConfig) -> Result<(FittedModel, Vec<f64>)> {
    cfg.validate()?;
    let beta0 = cfg.null_beta(d.p())?;
    let opts = FitOptions { null_beta: Some(beta0.clone()), ..cfg.fit.clone() };
    Ok((FittedModel::fit(d, cfg.ties, &opts)?, beta0))
}

/// Likelihood-ratio measure `[ℓ_ob(β̂) - ℓ_ob(β0)] / E[ℓ_co(β̂) - ℓ_co(β0)]`
/// with `β̂` the observed-data estimate throughout. Not bounded by 1.
pub fn ri1(d: &Dataset, cfg: &MeasureConfig) -> Result<MeasureResult> {
    let (model, beta0) = observed_model(d, cfg)?;
    let beta_hat = model.cox.beta_hat.as_slice().to_vec();
    let drop = |data: &Dataset| -> Result<f64> {
        let risk = RiskSets::new(data)?;
        Ok(risk.loglik(&beta_hat, cfg.ties) - risk.loglik(&beta0, cfg.ties))
    };
    let numerator = drop(d)?;
    let imputer = Imputer::new(d, &model, cfg.tail)?;
    let replicates = run_replicates(cfg.reps, cfg.seed, |rng| {
        let completion = imputer.complete(&rng);
        Replicate { value: drop(&completion.data).ok(), degenerate: completion.degenerate }
    });
    summarize(MeasureKind::Ri1, numerator, &replicates, cfg)
}

/// `(w_I' [V[I, I]]^-1 w_I)` for the tested block `I`.
fn wald_quadratic(var: &DMatrix<f64>, w: &DVector<f64>, tested: &[usize]) -> Option<f64> {
    let block = DMatrix::from_fn(tested.len(), tested.len(), |i, j| var[(tested[i], tested[j])]);
    let w_block = DVector::from_fn(tested.len(), |i, _| w[tested[i]]);
    Some(quadratic_form(&spd_inverse(&block)?, &w_block))
}

fn wald_measure(
    d: &Dataset,
    cfg: &MeasureConfig,
    measure: MeasureKind,
    statistic: impl Fn(&CoxFit, &DVector<f64>, &[usize]) -> Option<f64> + Sync,
) -> Result<MeasureResult> {
    let (model, beta0) = observed_model(d, cfg)?;
    let tested = cfg.tested_indices(d.p())?;
    let w = &model.cox.beta_hat - DVector::from_vec(beta0);
    let numerator = statistic(&model.cox, &w, &tested)
        .ok_or_else(|| Error::SingularInformation(model.cox.beta_hat.iter().copied().collect()))?;
    let imputer = Imputer::new(d, &model, cfg.tail)?;
    let replicates = run_replicates(cfg.reps, cfg.seed, |rng| {
        let completion = imputer.complete(&rng);
        let value = crate::coxph::fit(&completion.data, cfg.ties, &cfg.fit)
            .ok()
            .and_then(|refit| statistic(&refit, &w, &tested));
        Replicate { value, degenerate: completion.degenerate }
    });
    summarize(measure, numerator, &replicates, cfg)
}

/// Wald measure: `w' V_ob^-1 w / E[w' V̂(D_co)^-1 w]`, `w = β̂_ob - β0`,
/// with `V̂` the inverse observed information of each fit.
pub fn ri_w(d: &Dataset, cfg: &MeasureConfig) -> Result<MeasureResult> {
    wald_measure(d, cfg, MeasureKind::RiW, |fit, w, tested| wald_quadratic(&fit.var_hat, w, tested))
}

/// As [`ri_w`] but with `-ℓ̈` evaluated at each replicate's own maximum in
/// place of the inverse variance. Always tests the full coefficient vector.
pub fn ri_w_alt(d: &Dataset, cfg: &MeasureConfig) -> Result<MeasureResult> {
    let cfg = MeasureConfig { tested: None, ..cfg.clone() };
    wald_measure(d, &cfg, MeasureKind::RiWAlt, |fit, w, _| Some(quadratic_form(&fit.information, w)))
}

/// Wald measure for `θ = S(t0)` estimated by Kaplan–Meier with Greenwood
/// variance, against the null value `s0_null`. Covariates must be absent.
pub fn ri_w_km(d: &Dataset, t0: f64, s0_null: f64, cfg: &MeasureConfig) -> Result<MeasureResult> {
    cfg.validate()?;
    if d.p() != 0 {
        return Err(Error::InvalidArgument(format!(
            "Kaplan–Meier measure needs a covariate-free dataset, got p = {}",
            d.p()
        )));
    }
    if !(t0 > 0.0 && t0 <= d.max_time()) {
        return Err(Error::InvalidArgument(format!("t0 must lie in (0, {}], got {t0}", d.max_time())));
    }
    if !(0.0..=1.0).contains(&s0_null) {
        return Err(Error::InvalidArgument(format!("null survival {s0_null} outside [0, 1]")));
    }
    let km = KaplanMeier::new(d);
    if !km.event_times().first().is_some_and(|&t| t <= t0) {
        return Err(Error::InvalidArgument(format!("no event at or before t0 = {t0}")));
    }
    let s_hat = km.survival(t0);
    let var_ob = km.greenwood_variance(t0);
    if !(var_ob > 0.0) {
        return Err(Error::DegenerateVariance(s_hat));
    }
    let w = s_hat - s0_null;
    let numerator = w * w / var_ob;

    // Nelson–Aalen increments give the Kaplan–Meier masses through the product integral.
    let hazard = breslow_cumhaz(d, &[])?;
    let tail_time = d.max_time().max(hazard.last_jump_time().unwrap_or(0.0));
    let fitted = survival_given_z(&hazard, &[], &[], tail_time)?;
    let imputer = Imputer::with_distribution(d, &fitted, cfg.tail);
    let replicates = run_replicates(cfg.reps, cfg.seed, |rng| {
        let completion = imputer.complete(&rng);
        let var = KaplanMeier::new(&completion.data).greenwood_variance(t0);
        let value = (var > 0.0).then(|| w * w / var);
        Replicate { value, degenerate: completion.degenerate }
    });
    summarize(MeasureKind::RiWKm, numerator, &replicates, cfg)
}

/// Dispatch for the Cox-model measures.
pub fn estimate(kind: MeasureKind, d: &Dataset, cfg: &MeasureConfig) -> Result<MeasureResult> {
    match kind {
        MeasureKind::Ri1 => ri1(d, cfg),
        MeasureKind::RiW => ri_w(d, cfg),
        MeasureKind::RiWAlt => ri_w_alt(d, cfg),
        MeasureKind::RiWKm => Err(Error::InvalidArgument(
            "the Kaplan–Meier measure needs t0 and a null survival value; call ri_w_km".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{fixture, parse_csv};

    fn quick(reps: usize) -> MeasureConfig {
        MeasureConfig { reps, ..MeasureConfig::default() }
    }

    fn uncensored() -> Dataset {
        parse_csv("time,status,z1\n1,1,1\n2,1,0\n3,1,1\n4,1,1\n5,1,0\n6,1,0\n7,1,1\n8,1,0\n9,1,0\n").unwrap()
    }

    #[test]
    fn uncensored_data_gives_exactly_one() {
        let d = uncensored();
        for kind in [MeasureKind::Ri1, MeasureKind::RiW, MeasureKind::RiWAlt] {
            let r = estimate(kind, &d, &quick(50)).unwrap();
            assert_eq!((r.estimate, r.ci_low, r.ci_high), (1.0, 1.0, 1.0), "{kind}");
            assert_eq!(r.denominator_se, 0.0);
            assert_eq!((r.failures, r.degenerate_imputations), (0, 0));
        }
        let km = ri_w_km(&d.without_covariates(), 4.0, 0.3, &quick(50)).unwrap();
        assert_eq!((km.estimate, km.ci_low, km.ci_high), (1.0, 1.0, 1.0));
    }

    #[test]
    fn alternative_wald_matches_wald_for_one_coefficient() {
        let d = fixture("aml-orig").unwrap();
        let cfg = MeasureConfig { ties: TieMethod::Efron, ..quick(300) };
        let a = ri_w(&d, &cfg).unwrap();
        let b = ri_w_alt(&d, &cfg).unwrap();
        assert!((a.estimate - b.estimate).abs() < 1e-12);
        assert!((a.numerator - b.numerator).abs() < 1e-12 * a.numerator);
        assert!((a.denominator_mean - b.denominator_mean).abs() < 1e-12 * a.denominator_mean);
    }

    #[test]
    fn km_measure_halves_with_half_the_sample_censored_at_zero() {
        let mut text = String::from("time,status\n");
        for t in 1..=20 {
            text.push_str(&format!("{t},1\n0,0\n"));
        }
        let d = parse_csv(&text).unwrap();
        let r = ri_w_km(&d, 10.0, 0.8, &quick(5000)).unwrap();
        assert!(r.estimate > 0.4 && r.estimate < 0.6, "{}", r.estimate);
        assert!(r.ci_low <= r.estimate && r.estimate <= r.ci_high);
    }

    #[test]
    fn km_measure_rejects_bad_inputs() {
        let d = fixture("aml-orig").unwrap();
        assert!(matches!(ri_w_km(&d, 10.0, 0.5, &quick(10)), Err(Error::InvalidArgument(_))));
        let d = d.without_covariates();
        assert!(matches!(ri_w_km(&d, 1.0, 0.5, &quick(10)), Err(Error::InvalidArgument(_))));
        assert!(matches!(ri_w_km(&d, 500.0, 0.5, &quick(10)), Err(Error::InvalidArgument(_))));
        assert!(matches!(ri_w_km(&d, 10.0, 1.5, &quick(10)), Err(Error::InvalidArgument(_))));
        let all_die = parse_csv("time,status\n1,1\n1,1\n").unwrap();
        assert!(matches!(ri_w_km(&all_die, 1.0, 0.5, &quick(10)), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn configuration_is_validated() {
        let d = fixture("aml-orig").unwrap();
        assert!(matches!(ri1(&d, &quick(1)), Err(Error::InvalidArgument(_))));
        let bad_level = MeasureConfig { level: 1.0, ..quick(10) };
        assert!(matches!(ri_w(&d, &bad_level), Err(Error::InvalidArgument(_))));
        let bad_null = MeasureConfig { beta0: Some(vec![0.0, 0.0]), ..quick(10) };
        assert!(matches!(ri1(&d, &bad_null), Err(Error::InvalidArgument(_))));
        let bad_block = MeasureConfig { tested: Some(vec![1]), ..quick(10) };
        assert!(matches!(ri_w(&d, &bad_block), Err(Error::InvalidArgument(_))));
        assert!(matches!(estimate(MeasureKind::RiWKm, &d, &quick(10)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn interval_brackets_estimate() {
        let d = fixture("aml-2").unwrap();
        for kind in [MeasureKind::Ri1, MeasureKind::RiW] {
            let r = estimate(kind, &d, &quick(400)).unwrap();
            assert!(r.ci_low < r.estimate && r.estimate < r.ci_high);
            assert_eq!(r.reps, 400);
            assert_eq!(r.failures, 0);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let d = fixture("aml-1").unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| (ri1(&d, &quick(200)).unwrap(), ri_w(&d, &quick(200)).unwrap()))
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn sub_vector_null_uses_the_block() {
        let base = fixture("aml-orig").unwrap();
        let rows: Vec<_> = base
            .observations()
            .iter()
            .enumerate()
            .map(|(i, o)| crate::Observation::new(o.time, o.event, vec![o.covariates[0], (i % 3) as f64]))
            .collect();
        let d = Dataset::new(rows, 2).unwrap();
        let first = ri_w(&d, &MeasureConfig { tested: Some(vec![0]), ..quick(200) }).unwrap();
        let both = ri_w(&d, &quick(200)).unwrap();
        assert!(first.estimate > 0.0 && first.estimate.is_finite());
        assert_ne!(first.numerator, both.numerator);
    }

    #[test]
    fn json_has_the_documented_fields() {
        let r = ri_w(&uncensored(), &quick(10)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in [
            "measure",
            "estimate",
            "ci",
            "level",
            "reps",
            "seed",
            "numerator",
            "denominator_mean",
            "denominator_se",
            "failures",
            "degenerate_imputations",
        ] {
            assert!(keys.contains(&k), "{k}");
        }
        assert_eq!(v["measure"], "riw");
        assert_eq!(v["ci"].as_array().unwrap().len(), 2);
    }
}
