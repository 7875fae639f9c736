//! Cross-trial aggregation of work traces.
//!
//! [`TraceAccumulator`] is a commutative monoid over traces: trials may be
//! produced in parallel and merged in any grouping, and the result is
//! independent of the merge tree up to float reassociation (the experiment
//! harness additionally folds in a fixed order to get byte-identical output).
//! [`TrialStats`] is the finished summary: moments of the totals, per-step
//! mean T_k and mean T_k² (the variance-budget proxy Δ² = Σ_k mean T_k²),
//! quantiles, and the empirical tail CDF at requested thresholds.

use crate::trace::WorkTrace;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot aggregate an empty collection of traces")]
    Empty,
    #[error("trace length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Streaming aggregator over equal-length traces.
#[derive(Debug, Clone)]
pub struct TraceAccumulator {
    n: usize,
    count: usize,
    totals: Vec<f64>,
    max_steps: Vec<f64>,
    sq_sum_sum: f64,
    step_sum: Option<Vec<f64>>,
    step_sq_sum: Option<Vec<f64>>,
}

impl TraceAccumulator {
    /// `keep_per_step` retains the per-step mean arrays (size n); turn it off
    /// when n·trials would hurt, the scalar aggregates survive either way.
    pub fn new(n: usize, keep_per_step: bool) -> Self {
        Self {
            n,
            count: 0,
            totals: Vec::new(),
            max_steps: Vec::new(),
            sq_sum_sum: 0.0,
            step_sum: keep_per_step.then(|| vec![0.0; n]),
            step_sq_sum: keep_per_step.then(|| vec![0.0; n]),
        }
    }

    pub fn push(&mut self, trace: &WorkTrace) -> Result<(), StatsError> {
        if trace.len() != self.n {
            return Err(StatsError::LengthMismatch {
                expected: self.n,
                got: trace.len(),
            });
        }
        self.count += 1;
        self.totals.push(trace.total());
        self.max_steps.push(trace.max_step());
        self.sq_sum_sum += trace.sq_sum();
        if let Some(sum) = &mut self.step_sum {
            for (s, &t) in sum.iter_mut().zip(trace.per_step()) {
                *s += t;
            }
        }
        if let Some(sq) = &mut self.step_sq_sum {
            for (s, &t) in sq.iter_mut().zip(trace.per_step()) {
                *s += t * t;
            }
        }
        Ok(())
    }

    /// Associative merge; sample vectors concatenate (they are re-sorted for
    /// quantiles, so grouping does not matter).
    pub fn merge(mut self, other: Self) -> Result<Self, StatsError> {
        if self.n != other.n {
            return Err(StatsError::LengthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        self.count += other.count;
        self.totals.extend(other.totals);
        self.max_steps.extend(other.max_steps);
        self.sq_sum_sum += other.sq_sum_sum;
        match (&mut self.step_sum, other.step_sum) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            (a, _) => *a = None,
        }
        match (&mut self.step_sq_sum, other.step_sq_sum) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            (a, _) => *a = None,
        }
        Ok(self)
    }

    pub fn finish(
        self,
        quantile_levels: &[f64],
        tail_thresholds: &[f64],
    ) -> Result<TrialStats, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        let count = self.count as f64;
        let mean = self.totals.iter().sum::<f64>() / count;
        let var = self
            .totals
            .iter()
            .map(|&t| (t - mean) * (t - mean))
            .sum::<f64>()
            / count;

        let mut sorted = self.totals.clone();
        sorted.sort_by(f64::total_cmp);
        let quantiles = quantile_levels
            .iter()
            .map(|&q| (q, quantile_of_sorted(&sorted, q)))
            .collect();
        let tail_cdf = tail_thresholds
            .iter()
            .map(|&thr| {
                // Fraction of totals >= thr, via the first index reaching thr.
                let idx = sorted.partition_point(|&t| t < thr);
                (thr, (sorted.len() - idx) as f64 / count)
            })
            .collect();

        let max_step_mean = self.max_steps.iter().sum::<f64>() / count;
        let max_step_max = self.max_steps.iter().cloned().fold(0.0, f64::max);

        let per_step_mean = self
            .step_sum
            .map(|s| s.into_iter().map(|x| x / count).collect::<Vec<_>>());
        let per_step_sq_mean = self
            .step_sq_sum
            .map(|s| s.into_iter().map(|x| x / count).collect::<Vec<_>>());
        let delta_sq_proxy = per_step_sq_mean
            .as_ref()
            .map(|v| v.iter().sum())
            .unwrap_or(self.sq_sum_sum / count);

        Ok(TrialStats {
            n: self.n,
            count: self.count,
            total_mean: mean,
            total_var: var,
            total_min: *sorted.first().unwrap(),
            total_max: *sorted.last().unwrap(),
            max_step_mean,
            max_step_max,
            delta_sq_proxy,
            per_step_mean,
            per_step_sq_mean,
            quantiles,
            tail_cdf,
        })
    }
}

/// Aggregated statistics over a collection of equal-n traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub n: usize,
    pub count: usize,
    pub total_mean: f64,
    /// Population variance of the totals.
    pub total_var: f64,
    pub total_min: f64,
    pub total_max: f64,
    /// Mean and max of the empirical M_n across trials.
    pub max_step_mean: f64,
    pub max_step_max: f64,
    /// Σ_k mean(T_k²): the empirical variance-budget proxy fed to Freedman.
    pub delta_sq_proxy: f64,
    pub per_step_mean: Option<Vec<f64>>,
    pub per_step_sq_mean: Option<Vec<f64>>,
    /// (level, value) pairs, monotone in level.
    pub quantiles: Vec<(f64, f64)>,
    /// (threshold, fraction of totals >= threshold), nonincreasing.
    pub tail_cdf: Vec<(f64, f64)>,
}

impl TrialStats {
    /// Standard error of the mean total.
    pub fn total_se(&self) -> f64 {
        (self.total_var / self.count as f64).sqrt()
    }

    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(q, _)| (*q - level).abs() < 1e-12)
            .map(|&(_, v)| v)
    }
}

/// Empirical quantile: the smallest sample v with at least `ceil(q·count)`
/// samples <= v (lower empirical quantile; q = 0 gives the minimum).
fn quantile_of_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&q), "quantile level {q} out of range");
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.saturating_sub(1).min(sorted.len() - 1)]
}

/// One-shot aggregation of a batch of traces.
pub fn trace_aggregate(
    traces: &[WorkTrace],
    quantile_levels: &[f64],
    tail_thresholds: &[f64],
    keep_per_step: bool,
) -> Result<TrialStats, StatsError> {
    let n = traces.first().ok_or(StatsError::Empty)?.len();
    let mut acc = TraceAccumulator::new(n, keep_per_step);
    for t in traces {
        acc.push(t)?;
    }
    acc.finish(quantile_levels, tail_thresholds)
}
