//! Per-run structural-change traces.
//!
//! A [`WorkTrace`] records the cost T_k of each incremental step of one RIC
//! run, together with the derived aggregates the martingale analysis needs:
//! the total, the empirical increment bound M_n (max step), and Σ T_k² (the
//! empirical variance-budget proxy).

/// Per-step costs of a single RIC run.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkTrace {
    per_step: Vec<f64>,
    total: f64,
    max_step: f64,
    sq_sum: f64,
}

impl WorkTrace {
    pub fn new(per_step: Vec<f64>) -> Self {
        debug_assert!(per_step.iter().all(|&t| t >= 0.0));
        let total = per_step.iter().sum();
        let max_step = per_step.iter().cloned().fold(0.0, f64::max);
        let sq_sum = per_step.iter().map(|&t| t * t).sum();
        Self {
            per_step,
            total,
            max_step,
            sq_sum,
        }
    }

    pub fn from_counts(counts: &[usize]) -> Self {
        Self::new(counts.iter().map(|&c| c as f64).collect())
    }

    /// Number of steps n.
    pub fn len(&self) -> usize {
        self.per_step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_step.is_empty()
    }

    /// T_k for step k (1-based to match the analysis; panics out of range).
    pub fn step(&self, k: usize) -> f64 {
        self.per_step[k - 1]
    }

    pub fn per_step(&self) -> &[f64] {
        &self.per_step
    }

    /// Σ T_k.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Empirical M_n = max_k T_k.
    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    /// Σ T_k².
    pub fn sq_sum(&self) -> f64 {
        self.sq_sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_recompute() {
        let t = WorkTrace::new(vec![3.0, 0.0, 4.0, 1.0]);
        assert_eq!(t.total(), 8.0);
        assert_eq!(t.max_step(), 4.0);
        assert_eq!(t.sq_sum(), 26.0);
        assert_eq!(t.step(3), 4.0);
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn empty_trace() {
        let t = WorkTrace::new(vec![]);
        assert_eq!(t.total(), 0.0);
        assert_eq!(t.max_step(), 0.0);
        assert!(t.is_empty());
    }
}
