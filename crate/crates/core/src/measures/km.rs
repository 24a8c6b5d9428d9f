//! Kaplan–Meier estimator with Greenwood variance.

use crate::dataset::Dataset;

/// Product-limit estimate evaluated at the distinct event times.
#[derive(Debug, Clone, PartialEq)]
pub struct KaplanMeier {
    times: Vec<f64>,
    survival: Vec<f64>,
    // running sum of d / (n (n - d))
    greenwood_sums: Vec<f64>,
}

impl KaplanMeier {
    /// Risk set at `t` is `{T_j >= t}`; covariates are ignored.
    pub fn new(d: &Dataset) -> Self {
        let mut pairs: Vec<(f64, bool)> = d.observations().iter().map(|o| (o.time, o.event)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut times = Vec::new();
        let mut survival = Vec::new();
        let mut greenwood_sums = Vec::new();
        let mut s = 1.0;
        let mut sum = 0.0;
        let mut at_risk = pairs.len();
        let mut i = 0;
        while i < pairs.len() {
            let t = pairs[i].0;
            let mut deaths = 0usize;
            let mut leaving = 0usize;
            while i < pairs.len() && pairs[i].0 == t {
                deaths += usize::from(pairs[i].1);
                leaving += 1;
                i += 1;
            }
            if deaths > 0 {
                let n = at_risk as f64;
                let dd = deaths as f64;
                s *= 1.0 - dd / n;
                if deaths < at_risk {
                    sum += dd / (n * (n - dd));
                }
                times.push(t);
                survival.push(s);
                greenwood_sums.push(sum);
            }
            at_risk -= leaving;
        }
        Self { times, survival, greenwood_sums }
    }

    fn index_at(&self, t: f64) -> Option<usize> {
        self.times.partition_point(|&s| s <= t).checked_sub(1)
    }

    pub fn survival(&self, t: f64) -> f64 {
        self.index_at(t).map_or(1.0, |i| self.survival[i])
    }

    /// Greenwood variance `S(t)^2 sum_{t_i <= t} d_i / (n_i (n_i - d_i))`;
    /// zero once the estimate reaches zero.
    pub fn greenwood_variance(&self, t: f64) -> f64 {
        match self.index_at(t) {
            None => 0.0,
            Some(i) if self.survival[i] == 0.0 => 0.0,
            Some(i) => self.survival[i] * self.survival[i] * self.greenwood_sums[i],
        }
    }

    pub fn event_times(&self) -> &[f64] {
        &self.times
    }
}
