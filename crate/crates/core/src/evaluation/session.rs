use serde::{Deserialize, Serialize};

use super::EvalError;

/// RMSE of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseSample {
    pub t: f64,
    pub value: f64,
}

/// Streaming accumulator of a session's RMSE series.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    n_rmse: usize,
    samples: Vec<RmseSample>,
    best: Option<RmseSample>,
}

impl SessionState {
    pub fn new(n_rmse: usize) -> Self {
        Self { n_rmse, samples: Vec::new(), best: None }
    }

    pub fn samples(&self) -> &[RmseSample] {
        &self.samples
    }

    pub fn n_rmse(&self) -> usize {
        self.n_rmse
    }

    pub fn rmse_0(&self) -> Option<f64> {
        self.samples.first().map(|s| s.value)
    }

    /// Lowest RMSE so far and the earliest time it was reached.
    pub fn best(&self) -> Option<RmseSample> {
        self.best
    }

    pub fn update(&mut self, sample: RmseSample) -> Result<(), EvalError> {
        if !sample.t.is_finite() || !sample.value.is_finite() || sample.value < 0.0 {
            return Err(EvalError::InvalidSample(sample));
        }
        if let Some(last) = self.samples.last() {
            if sample.t < last.t {
                return Err(EvalError::TimestampRegression { previous: last.t, found: sample.t });
            }
        }
        // Strict comparison keeps the earliest time on ties.
        if self.best.is_none_or(|b| sample.value < b.value) {
            self.best = Some(sample);
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn finalize(&self) -> Result<SessionMetrics, EvalError> {
        let first = self.samples.first().ok_or(EvalError::EmptySession)?;
        let best = self.best.expect("non-empty session has a best sample");
        let rmse_0 = first.value;
        let degenerate = rmse_0 == 0.0;
        let accuracy_r = if degenerate { 0.0 } else { (rmse_0 - best.value) / rmse_0 * 100.0 };
        Ok(SessionMetrics {
            rmse_0,
            rmse_min: best.value,
            t_min: best.t,
            accuracy_r,
            sample_count: self.samples.len(),
            n_rmse: self.n_rmse,
            degenerate,
        })
    }
}

/// Functional form of [`SessionState::update`].
pub fn update_session(mut state: SessionState, sample: RmseSample) -> Result<SessionState, EvalError> {
    state.update(sample)?;
    Ok(state)
}

pub fn finalize_metrics(state: &SessionState) -> Result<SessionMetrics, EvalError> {
    state.finalize()
}

/// Summary of a finished session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub rmse_0: f64,
    pub rmse_min: f64,
    pub t_min: f64,
    /// Relative improvement from the first to the best RMSE, in percent.
    pub accuracy_r: f64,
    pub sample_count: usize,
    pub n_rmse: usize,
    /// Set when the first RMSE was zero; accuracy is then reported as 0.
    pub degenerate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(values: &[f64], times: &[f64]) -> SessionMetrics {
        let mut s = SessionState::new(100);
        for (v, t) in values.iter().zip(times) {
            s.update(RmseSample { t: *t, value: *v }).unwrap();
        }
        s.finalize().unwrap()
    }

    #[test]
    fn earliest_tie_wins() {
        let m = run(&[2.0, 1.0, 1.0], &[0.0, 1.0, 2.0]);
        assert_eq!((m.rmse_0, m.rmse_min, m.t_min, m.accuracy_r), (2.0, 1.0, 1.0, 50.0));
        assert_eq!(m.sample_count, 3);
    }

    #[test]
    fn single_sample() {
        let m = run(&[0.7], &[3.5]);
        assert_eq!((m.rmse_0, m.rmse_min, m.t_min, m.accuracy_r), (0.7, 0.7, 3.5, 0.0));
    }

    #[test]
    fn constant_series_has_zero_accuracy() {
        let m = run(&[0.4; 5], &[0.0, 0.1, 0.2, 0.3, 0.4]);
        assert_eq!(m.accuracy_r, 0.0);
        assert_eq!(m.t_min, 0.0);
    }

    #[test]
    fn zero_initial_rmse_is_degenerate() {
        let m = run(&[0.0, 0.0], &[0.0, 1.0]);
        assert!(m.degenerate);
        assert_eq!(m.accuracy_r, 0.0);
    }

    #[test]
    fn empty_session_and_regressions() {
        assert!(matches!(SessionState::new(1).finalize(), Err(EvalError::EmptySession)));
        let mut s = SessionState::new(1);
        s.update(RmseSample { t: 1.0, value: 1.0 }).unwrap();
        assert!(matches!(s.update(RmseSample { t: 0.5, value: 1.0 }), Err(EvalError::TimestampRegression { .. })));
        assert!(s.update(RmseSample { t: 2.0, value: -1.0 }).is_err());
        assert_eq!(s.samples().len(), 1);
    }
}
