use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Sample mean with a normal-approximation 95% half-width.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let ci95 = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            ci95,
            samples: n,
        }
    }
}

/// Per-trial values. A metric absent from a trial (e.g. a conditional
/// distortion whose condition failed) does not enter its average.
#[derive(Clone, Debug, Default)]
pub struct TrialOutcome {
    pub metrics: Vec<(String, f64)>,
    pub events: Vec<(String, u64)>,
}

impl TrialOutcome {
    pub fn metric(&mut self, name: impl Into<String>, v: f64) {
        self.metrics.push((name.into(), v));
    }

    pub fn event(&mut self, name: impl Into<String>, count: u64) {
        self.events.push((name.into(), count));
    }

    /// Records a terminal's block outcome both as a rate and a count.
    pub fn block(&mut self, tag: &str, error: bool) {
        self.metric(format!("block_error_{tag}"), error as u8 as f64);
        self.event(format!("block_errors_{tag}"), error as u64);
    }
}

pub struct Aggregate {
    pub metrics: BTreeMap<String, Estimate>,
    pub events: BTreeMap<String, u64>,
}

/// Reduces outcomes in trial order.
pub fn aggregate(outcomes: &[TrialOutcome]) -> Aggregate {
    let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut events: BTreeMap<String, u64> = BTreeMap::new();
    for o in outcomes {
        for (k, v) in &o.metrics {
            samples.entry(k.clone()).or_default().push(*v);
        }
        for (k, c) in &o.events {
            *events.entry(k.clone()).or_default() += c;
        }
    }
    Aggregate {
        metrics: samples
            .into_iter()
            .map(|(k, v)| (k, Estimate::from_samples(&v)))
            .collect(),
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_has_no_spread() {
        let e = Estimate::from_samples(&[0.25; 10]);
        assert_eq!((e.mean, e.ci95, e.samples), (0.25, 0.0, 10));
        assert_eq!(Estimate::from_samples(&[]).samples, 0);
    }

    #[test]
    fn conditional_metrics_skip_absent_trials() {
        let mut a = TrialOutcome::default();
        a.metric("d", 1.0);
        a.block("X", true);
        let mut b = TrialOutcome::default();
        b.block("X", false);
        let agg = aggregate(&[a, b]);
        assert_eq!(agg.metrics["d"].samples, 1);
        assert_eq!(agg.metrics["block_error_X"].mean, 0.5);
        assert_eq!(agg.events["block_errors_X"], 1);
    }
}
