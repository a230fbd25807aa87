//! CPU–accelerator timing model for a sequence of filter executions.
//!
//! Each filter costs a selection phase on the CPU, its effective execution
//! time on the accelerator and a coordination overhead. In pipelined mode the
//! selection of filter k+1 overlaps the execution of filter k whenever the
//! CPU predicted the next filter correctly.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    Sequential,
    Pipelined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub mode: TimingMode,
    /// CPU seconds to choose and prepare a filter.
    pub select_time: f64,
    /// CPU–accelerator coordination seconds per filter.
    pub comm_overhead: f64,
    /// Probability that the prefetched filter is the one actually chosen.
    pub prefetch_hit_prob: f64,
}

impl TimingModel {
    pub fn sequential(select_time: f64, comm_overhead: f64) -> Self {
        TimingModel {
            mode: TimingMode::Sequential,
            select_time,
            comm_overhead,
            prefetch_hit_prob: 0.0,
        }
    }

    pub fn pipelined(select_time: f64, comm_overhead: f64, prefetch_hit_prob: f64) -> Self {
        TimingModel { mode: TimingMode::Pipelined, select_time, comm_overhead, prefetch_hit_prob }
    }

    pub fn is_valid(&self) -> bool {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        ok(self.select_time)
            && ok(self.comm_overhead)
            && (0.0..=1.0).contains(&self.prefetch_hit_prob)
    }
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel::sequential(0.0, 0.0)
    }
}

/// Wall time of executing filters whose effective accelerator times are
/// `exec_times`, in order.
///
/// Prefetch hits are drawn from `rng` only when the hit probability is
/// strictly between 0 and 1.
pub fn sequence_time(exec_times: &[f64], timing: &TimingModel, rng: &mut dyn RngCore) -> f64 {
    let per_filter = timing.select_time + timing.comm_overhead;
    let sequential: f64 = exec_times.iter().map(|e| e + per_filter).sum();
    if timing.mode == TimingMode::Sequential || exec_times.len() < 2 {
        return sequential;
    }
    let mut hidden = 0.0;
    for prev in &exec_times[..exec_times.len() - 1] {
        let hit = match timing.prefetch_hit_prob {
            p if p >= 1.0 => true,
            p if p <= 0.0 => false,
            p => rng.gen::<f64>() < p,
        };
        if hit {
            hidden += timing.select_time.min(*prev);
        }
    }
    sequential - hidden
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_filter_has_nothing_to_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in [TimingModel::sequential(0.1, 0.05), TimingModel::pipelined(0.1, 0.05, 1.0)] {
            assert!((sequence_time(&[1.0], &t, &mut rng) - 1.15).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_prefetch_hides_second_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq = sequence_time(&[1.0, 1.0], &TimingModel::sequential(0.1, 0.05), &mut rng);
        let pip = sequence_time(&[1.0, 1.0], &TimingModel::pipelined(0.1, 0.05, 1.0), &mut rng);
        assert!((seq - 2.30).abs() < 1e-12);
        assert!((pip - 2.20).abs() < 1e-12);
    }

    #[test]
    fn misprediction_pays_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq = sequence_time(&[1.0, 1.0], &TimingModel::sequential(0.1, 0.05), &mut rng);
        let pip = sequence_time(&[1.0, 1.0], &TimingModel::pipelined(0.1, 0.05, 0.0), &mut rng);
        assert_eq!(seq, pip);
    }

    #[test]
    fn overlap_bounded_by_previous_execution() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pip = sequence_time(&[0.02, 1.0], &TimingModel::pipelined(0.1, 0.0, 1.0), &mut rng);
        assert!((pip - (1.02 + 0.2 - 0.02)).abs() < 1e-12);
    }
}
