mod common;

use common::*;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use survinfo::measures::KaplanMeier;
use survinfo::{
    breslow_cumhaz, conditional_sample, fixture, survival_given_z, DiscreteSurvival, FitOptions, FittedModel,
    SeededRng, StepFunction, TieMethod,
};

fn assert_mass_conserved(s: &DiscreteSurvival) {
    assert!((s.total_mass() - 1.0).abs() <= 1e-12, "mass {}", s.total_mass());
}

#[test]
fn unconditional_draws_pass_a_chi_square_test() {
    let s = DiscreteSurvival::new(vec![1.0, 2.0, 4.0], vec![0.2, 0.45, 0.05], 6.0, 0.3).unwrap();
    let n = 100_000;
    let law = conditional_law(&s, 0.0);
    let mut counts = vec![0usize; law.len()];
    let mut rng = SeededRng::new(11, 0).generator();
    for _ in 0..n {
        let t = conditional_sample(&s, 0.0, &mut rng).time;
        counts[law.iter().position(|(x, _)| *x == t).unwrap()] += 1;
    }
    let stat: f64 = law
        .iter()
        .zip(&counts)
        .map(|((_, p), &c)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new((law.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 0.001, "chi-square {stat}, p = {p_value}");
}

#[test]
fn conditional_frequencies_match_enumeration() {
    for (i, (s, t_cens)) in sampling_cases().iter().enumerate() {
        let z = worst_deviation(s, *t_cens, 100_000, 100 + i as u64);
        assert!(z <= 3.0, "case {i}: {z:.2} standard errors");
    }
}

#[test]
fn draws_always_exceed_the_censoring_time() {
    let mut rng = SeededRng::new(5, 5).generator();
    for (s, _) in sampling_cases() {
        for t_cens in [0.0, 0.75, 1.0, 2.0, 3.5, 10.0, 11.5] {
            for _ in 0..500 {
                let draw = conditional_sample(&s, t_cens, &mut rng);
                if draw.degenerate {
                    assert_eq!(draw.time, t_cens.max(s.tail_time()));
                } else {
                    assert!(draw.time > t_cens);
                }
            }
        }
    }
}

#[test]
fn fitted_survivals_conserve_mass() {
    for (_, d) in fixtures() {
        for ties in [TieMethod::Efron, TieMethod::Breslow] {
            let m = FittedModel::fit(&d, ties, &FitOptions::default()).unwrap();
            for o in d.observations() {
                assert_mass_conserved(&m.survival_for(&o.covariates).unwrap());
            }
            for z in [-3.0, -0.5, 0.25, 2.0, 6.0] {
                assert_mass_conserved(&m.survival_for(&[z]).unwrap());
            }
        }
    }
}

#[test]
fn higher_risk_means_stochastically_earlier_death() {
    let d = fixture("aml-orig").unwrap();
    let m = FittedModel::fit(&d, TieMethod::Breslow, &FitOptions::default()).unwrap();
    assert!(m.cox.beta_hat[0] > 0.0);
    let low = m.survival_for(&[0.0]).unwrap();
    let high = m.survival_for(&[1.0]).unwrap();
    for t in (0..=170).map(f64::from) {
        assert!(high.survival(t) <= low.survival(t) + 1e-15, "t = {t}");
    }
}

#[test]
fn covariate_free_product_integral_is_kaplan_meier() {
    for (_, d) in fixtures() {
        let d = d.without_covariates();
        let s = survival_given_z(&breslow_cumhaz(&d, &[]).unwrap(), &[], &[], d.max_time()).unwrap();
        let km = KaplanMeier::new(&d);
        for t in (0..=170).map(|t| f64::from(t) * 0.5) {
            assert!((s.survival(t) - km.survival(t)).abs() < 1e-12, "t = {t}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_integral_conserves_mass(
        jumps in proptest::collection::vec(0.0f64..1.0, 1..12),
        beta in -3.0f64..3.0,
        z in -2.0f64..2.0,
    ) {
        let times: Vec<f64> = (1..=jumps.len()).map(|t| t as f64).collect();
        let tail = times.len() as f64 + 1.0;
        let h = StepFunction::new(times, jumps).unwrap();
        let s = survival_given_z(&h, &[beta], &[z], tail).unwrap();
        prop_assert!((s.total_mass() - 1.0).abs() <= 1e-12);
        let mut prev = 1.0;
        for t in 0..=(tail as usize) {
            let cur = s.survival(t as f64);
            prop_assert!(cur <= prev + 1e-15);
            prev = cur;
        }
    }
}
