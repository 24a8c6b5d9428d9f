//! Independent oracles: brute-force enumeration, finite differences,
//! bisection and frequency checks. Shared by the integration suites.
#![allow(dead_code)]

use survinfo::{
    conditional_sample, fixture, log_partial_likelihood, score_and_information, Dataset, DiscreteSurvival,
    SeededRng, TieMethod, FIXTURE_NAMES,
};

pub fn fixtures() -> Vec<(&'static str, Dataset)> {
    FIXTURE_NAMES.iter().map(|&n| (n, fixture(n).unwrap())).collect()
}

fn eta(z: &[f64], beta: &[f64]) -> f64 {
    z.iter().zip(beta).map(|(a, b)| a * b).sum()
}

/// Distinct event times in increasing order.
pub fn event_times(d: &Dataset) -> Vec<f64> {
    let mut t: Vec<f64> =
        d.observations().iter().filter(|o| o.event && o.time > 0.0).map(|o| o.time).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Log partial likelihood by scanning the whole sample at every event time.
pub fn naive_loglik(d: &Dataset, beta: &[f64], ties: TieMethod) -> f64 {
    let obs = d.observations();
    let mut ll = 0.0;
    for t in event_times(d) {
        let risk: f64 = obs.iter().filter(|o| o.time >= t).map(|o| eta(&o.covariates, beta).exp()).sum();
        let deaths: Vec<_> = obs.iter().filter(|o| o.event && o.time == t).collect();
        let dead: f64 = deaths.iter().map(|o| eta(&o.covariates, beta).exp()).sum();
        let m = deaths.len() as f64;
        for (k, o) in deaths.iter().enumerate() {
            ll += eta(&o.covariates, beta);
            ll -= match ties {
                TieMethod::Breslow => risk.ln(),
                TieMethod::Efron => (risk - k as f64 / m * dead).ln(),
            };
        }
    }
    ll
}

/// Breslow cumulative hazard at `t` by scanning the whole sample.
pub fn naive_cumhaz(d: &Dataset, beta: &[f64], t: f64) -> f64 {
    let obs = d.observations();
    event_times(d)
        .into_iter()
        .filter(|&s| s <= t)
        .map(|s| {
            let deaths = obs.iter().filter(|o| o.event && o.time == s).count() as f64;
            let risk: f64 = obs.iter().filter(|o| o.time >= s).map(|o| eta(&o.covariates, beta).exp()).sum();
            deaths / risk
        })
        .sum()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Largest relative error between the analytic score and central
/// differences of the log partial likelihood with step `h`.
pub fn score_fd_error(d: &Dataset, beta: &[f64], ties: TieMethod, h: f64) -> f64 {
    let (g, _) = score_and_information(d, beta, ties).unwrap();
    (0..beta.len())
        .map(|k| {
            let mut up = beta.to_vec();
            let mut dn = beta.to_vec();
            up[k] += h;
            dn[k] -= h;
            let fd = (log_partial_likelihood(d, &up, ties).unwrap()
                - log_partial_likelihood(d, &dn, ties).unwrap())
                / (2.0 * h);
            relative_error(g[k], fd)
        })
        .fold(0.0, f64::max)
}

/// Largest relative error between the analytic information and central
/// differences of the analytic score.
pub fn hessian_fd_error(d: &Dataset, beta: &[f64], ties: TieMethod, h: f64) -> f64 {
    let (_, info) = score_and_information(d, beta, ties).unwrap();
    let p = beta.len();
    let mut worst: f64 = 0.0;
    for k in 0..p {
        let mut up = beta.to_vec();
        let mut dn = beta.to_vec();
        up[k] += h;
        dn[k] -= h;
        let (gu, _) = score_and_information(d, &up, ties).unwrap();
        let (gd, _) = score_and_information(d, &dn, ties).unwrap();
        for j in 0..p {
            let fd = -(gu[j] - gd[j]) / (2.0 * h);
            worst = worst.max(relative_error(info[(j, k)], fd));
        }
    }
    worst
}

/// Root of the (decreasing) one-dimensional score by bisection.
pub fn bisect_score(d: &Dataset, ties: TieMethod, mut lo: f64, mut hi: f64) -> f64 {
    let score = |b: f64| score_and_information(d, &[b], ties).unwrap().0[0];
    assert!(score(lo) > 0.0 && score(hi) < 0.0, "bracket does not contain the root");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact conditional law of `X | X > t_cens` by enumeration: (time, probability).
pub fn conditional_law(s: &DiscreteSurvival, t_cens: f64) -> Vec<(f64, f64)> {
    let mut law: Vec<(f64, f64)> = s
        .atom_times()
        .iter()
        .zip(s.atom_probs())
        .filter(|(t, _)| **t > t_cens)
        .map(|(t, p)| (*t, *p))
        .collect();
    if s.tail_prob() > 0.0 {
        law.push((s.tail_time(), s.tail_prob()));
    }
    let total: f64 = law.iter().map(|(_, p)| p).sum();
    law.into_iter().map(|(t, p)| (t, p / total)).collect()
}

/// Worst standardized deviation `|f - p| / sqrt(p (1 - p) / n)` of empirical
/// frequencies of `n` conditional draws from the enumerated law.
pub fn worst_deviation(s: &DiscreteSurvival, t_cens: f64, n: usize, seed: u64) -> f64 {
    let law = conditional_law(s, t_cens);
    let mut counts = vec![0usize; law.len()];
    let mut rng = SeededRng::new(seed, 0).generator();
    for _ in 0..n {
        let x = conditional_sample(s, t_cens, &mut rng).time;
        let k = law.iter().position(|(t, _)| *t == x).expect("draw outside the support");
        counts[k] += 1;
    }
    law.iter()
        .zip(&counts)
        .map(|((_, p), &c)| {
            let f = c as f64 / n as f64;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            if sd == 0.0 {
                if f == *p {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (f - p).abs() / sd
            }
        })
        .fold(0.0, f64::max)
}

/// Three hand-built distributions with a censoring time each.
pub fn sampling_cases() -> Vec<(DiscreteSurvival, f64)> {
    vec![
        (DiscreteSurvival::new(vec![1.0, 2.0], vec![1.0 / 3.0, 1.0 / 3.0], 5.0, 1.0 / 3.0).unwrap(), 1.0),
        (
            DiscreteSurvival::new(vec![2.0, 3.0, 7.0, 11.0], vec![0.1, 0.25, 0.3, 0.15], 12.0, 0.2).unwrap(),
            2.5,
        ),
        (DiscreteSurvival::new(vec![0.5, 1.5, 4.0], vec![0.6, 0.3, 0.1], 4.0, 0.0).unwrap(), 0.0),
    ]
}
