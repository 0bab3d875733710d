use serde::Serialize;

use super::{SimCondition, SimConfig, SimRecord};

/// Count, mean and standard deviation (denominator `count - 1`) of the
/// finite values in a subset; NaN where undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
        let count = v.len();
        if count == 0 {
            return Moments { count, mean: f64::NAN, sd: f64::NAN };
        }
        let mean = v.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        Moments { count, mean, sd }
    }

    /// Monte Carlo standard error of the mean.
    pub fn se(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub label: String,
    pub all: Moments,
    pub converged: Moments,
    pub nonconverged: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: SimCondition,
    pub nsim: usize,
    pub prop_converged: f64,
    pub se_converged: f64,
    pub prop_admissible: f64,
    pub se_admissible: f64,
    pub params: Vec<ParamSummary>,
}

impl ConditionSummary {
    pub fn param(&self, label: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub experiment: &'static str,
    pub seed: u64,
    pub labels: Vec<String>,
    pub conditions: Vec<ConditionSummary>,
}

impl SimSummary {
    pub fn condition(&self, n: usize, delta: f64) -> Option<&ConditionSummary> {
        self.conditions
            .iter()
            .find(|c| c.condition.n == n && c.condition.delta == delta)
    }
}

fn proportion(hits: usize, total: usize) -> (f64, f64) {
    let p = hits as f64 / total.max(1) as f64;
    (p, (p * (1.0 - p) / total.max(1) as f64).sqrt())
}

/// Per-condition proportions (binomial SE `sqrt(p(1-p)/nsim)`) and parameter
/// moments over all, converged and nonconverged replicates.
pub fn summarize(config: &SimConfig, records: &[SimRecord]) -> SimSummary {
    let labels = config.labels();
    let conditions = config
        .conditions()
        .into_iter()
        .enumerate()
        .map(|(ci, condition)| {
            let recs: Vec<&SimRecord> = records.iter().filter(|r| r.condition_index == ci).collect();
            let nsim = recs.len();
            let (prop_converged, se_converged) = proportion(recs.iter().filter(|r| r.converged).count(), nsim);
            let (prop_admissible, se_admissible) = proportion(recs.iter().filter(|r| r.admissible).count(), nsim);
            let params = labels
                .iter()
                .enumerate()
                .map(|(k, label)| {
                    let col = |keep: fn(&SimRecord) -> bool| Moments::of(recs.iter().filter(|r| keep(r)).map(|r| r.theta[k]));
                    ParamSummary {
                        label: label.clone(),
                        all: col(|_| true),
                        converged: col(|r| r.converged),
                        nonconverged: col(|r| !r.converged),
                    }
                })
                .collect();
            ConditionSummary {
                condition,
                nsim,
                prop_converged,
                se_converged,
                prop_admissible,
                se_admissible,
                params,
            }
        })
        .collect();
    SimSummary {
        experiment: config.experiment.as_str(),
        seed: config.seed,
        labels,
        conditions,
    }
}
