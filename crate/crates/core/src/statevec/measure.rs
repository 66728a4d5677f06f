use serde::{Deserialize, Serialize};

use super::state::StateVector;
use super::EXTERNAL_NORM_TOL;
use crate::error::{Error, Result};
use crate::rng::{seeded, SimRngExt};

/// One projective measurement in the computational basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub outcome: usize,
    /// `|amp|^2` of `outcome` in the pre-measurement state.
    pub probability: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    /// Per-basis-index counts, length `dim`.
    pub counts: Vec<usize>,
    pub records: Vec<MeasurementRecord>,
}

/// Index drawn from cumulative probabilities for a uniform `u ∈ [0, 1)`.
///
/// Only indices with strictly positive probability can be returned.
pub fn born_index(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().expect("non-empty distribution");
    let target = u * total;
    let idx = cumulative.partition_point(|&c| c <= target);
    if idx < cumulative.len() {
        return idx;
    }
    // rounding put target at the very top: fall back to the last index with mass
    let mut k = cumulative.len() - 1;
    while k > 0 && cumulative[k] == cumulative[k - 1] {
        k -= 1;
    }
    k
}

pub(crate) fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Draws `count` independent Born-rule samples from `psi`.
pub fn sample_measurement(psi: &StateVector, count: usize, seed: u64) -> Result<Sampling> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if !psi.is_normalized_within(EXTERNAL_NORM_TOL) {
        return Err(Error::NotNormalized { norm: psi.norm() });
    }
    let probs = psi.probabilities();
    let cum = cumulative(&probs);
    let mut rng = seeded(seed);
    let mut counts = vec![0usize; psi.dim()];
    let records = (0..count)
        .map(|_| {
            let outcome = born_index(&cum, rng.unit());
            counts[outcome] += 1;
            MeasurementRecord { outcome, probability: probs[outcome], seed }
        })
        .collect();
    Ok(Sampling { counts, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{basis_state, superpose};
    use num_complex::Complex64;

    #[test]
    fn basis_state_is_deterministic() {
        let s = sample_measurement(&basis_state(8, 3).unwrap(), 100, 5).unwrap();
        assert_eq!(s.counts[3], 100);
        assert!(s.records.iter().all(|r| r.outcome == 3 && r.probability == 1.0));
    }

    #[test]
    fn zero_amplitude_never_sampled() {
        let psi = superpose(
            4,
            &[(0, Complex64::new(1., 0.)), (2, Complex64::new(0., 1.)), (3, Complex64::new(0.5, 0.))],
        )
        .unwrap();
        let s = sample_measurement(&psi, 20_000, 77).unwrap();
        assert_eq!(s.counts[1], 0);
    }

    #[test]
    fn rejects_unnormalized() {
        let psi = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(sample_measurement(&psi, 1, 0), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn born_index_skips_empty_bins() {
        let cum = cumulative(&[0.5, 0.0, 0.5, 0.0]);
        assert_eq!(born_index(&cum, 0.0), 0);
        assert_eq!(born_index(&cum, 0.5), 2);
        assert_eq!(born_index(&cum, 0.999_999_999), 2);
        assert_eq!(born_index(&cum, 1.0), 2);
    }

    #[test]
    fn same_seed_same_samples() {
        let psi = superpose(3, &[(0, Complex64::new(1., 0.)), (1, Complex64::new(1., 0.)), (2, Complex64::new(1., 0.))]).unwrap();
        assert_eq!(sample_measurement(&psi, 50, 9).unwrap(), sample_measurement(&psi, 50, 9).unwrap());
    }
}
