use serde::{Deserialize, Serialize};

use super::estimators::ic;
use super::Method;

/// Mean and standard deviation over replications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub mean: f64,
    /// Sample standard deviation; NaN with a single replication.
    pub sd: f64,
    pub count: usize,
}

impl ReplicationStats {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count < 2 {
            f64::NAN
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64).sqrt()
        };
        Self { mean, sd, count }
    }
}

/// One criterion for one model over repeated runs: each run keeps its
/// per-unit log predictive densities and the IC is derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub model: String,
    pub method: Method,
    pub runs: Vec<Vec<f64>>,
}

impl CriterionReport {
    pub fn new(model: impl Into<String>, method: Method) -> Self {
        Self {
            model: model.into(),
            method,
            runs: Vec::new(),
        }
    }

    pub fn push(&mut self, per_unit: Vec<f64>) {
        self.runs.push(per_unit);
    }

    pub fn ics(&self) -> Vec<f64> {
        self.runs.iter().map(|r| ic(r)).collect()
    }

    pub fn stats(&self) -> ReplicationStats {
        ReplicationStats::from_values(&self.ics())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ic_is_minus_twice_the_sum() {
        let mut r = CriterionReport::new("galaxy-k2", Method::Nis);
        r.push(vec![0.0; 5]);
        r.push(vec![-1.0]);
        assert_eq!(r.ics(), vec![0.0, 2.0]);
        let s = r.stats();
        assert_eq!(s.mean, 1.0);
        assert!((s.sd - 2f64.sqrt()).abs() < 1e-15);
        assert!(ReplicationStats::from_values(&[3.0]).sd.is_nan());
    }
}
