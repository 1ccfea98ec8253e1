//! Stochastic representativeness: the recursive diffusion from a subset
//! over the similarity graph, and its Monte-Carlo average.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{NormalizedSimilarityMatrix, SelectionError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadEstimate {
    pub mean: f64,
    pub runs: u64,
    pub std_error: f64,
    pub seed: u64,
}

/// Checks indices and returns them sorted and deduplicated.
pub(crate) fn canonical_subset(
    subset: &[usize],
    mn: &NormalizedSimilarityMatrix,
) -> Result<Vec<usize>, SelectionError> {
    if subset.is_empty() {
        return Err(SelectionError::EmptySubset);
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= mn.len()) {
        return Err(SelectionError::UnknownId(format!("index {bad}")));
    }
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// One diffusion realization. Every newly reached sample gets one attempt at
/// each not-yet-reached sample; attempt `u -> v` succeeds when `M_N[u][v] > rand`
/// for a fresh uniform `rand` in [0, 1). Returns the number of reached samples.
fn diffuse_with(subset: &[usize], mn: &NormalizedSimilarityMatrix, rng: &mut impl Rng) -> usize {
    let n = mn.len();
    let mut spread = vec![false; n];
    let mut current = Vec::with_capacity(n);
    for &s in subset {
        if !spread[s] {
            spread[s] = true;
            current.push(s);
        }
    }
    let mut reached = current.len();
    let mut next = Vec::new();
    while !current.is_empty() {
        for &u in &current {
            let row = mn.row(u);
            for v in 0..n {
                if spread[v] {
                    continue;
                }
                let draw: f64 = rng.gen();
                if row[v] > draw {
                    spread[v] = true;
                    next.push(v);
                }
            }
        }
        reached += next.len();
        std::mem::swap(&mut current, &mut next);
        next.clear();
    }
    reached
}

pub fn diffuse_once(subset: &[usize], mn: &NormalizedSimilarityMatrix, seed: u64) -> Result<usize, SelectionError> {
    let subset = canonical_subset(subset, mn)?;
    Ok(diffuse_with(&subset, mn, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// 256-bit key for a family of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct StreamKey([u8; 32]);

impl StreamKey {
    pub(crate) fn for_subset(seed: u64, subset: &[usize], mn: &NormalizedSimilarityMatrix) -> Self {
        let mut h = Sha256::new();
        h.update(b"estimate-spread");
        h.update(seed.to_le_bytes());
        let mut ids: Vec<&str> = subset.iter().map(|&i| mn.ids()[i].as_str()).collect();
        ids.sort_unstable();
        for id in ids {
            h.update((id.len() as u64).to_le_bytes());
            h.update(id.as_bytes());
        }
        StreamKey(h.finalize().into())
    }

    pub(crate) fn for_greedy_round(seed: u64, round: usize) -> Self {
        let mut h = Sha256::new();
        h.update(b"greedy-round");
        h.update(seed.to_le_bytes());
        h.update((round as u64).to_le_bytes());
        StreamKey(h.finalize().into())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(stream);
        rng
    }
}

/// Mean spread over `runs` streams drawn from `key`. Per-run counts are
/// integers, so the reduction is exact and order-independent.
pub(crate) fn estimate_with_key(
    subset: &[usize],
    mn: &NormalizedSimilarityMatrix,
    runs: u64,
    key: StreamKey,
    seed: u64,
) -> SpreadEstimate {
    let (sum, sum_sq) = (0..runs)
        .into_par_iter()
        .map(|i| {
            let c = diffuse_with(subset, mn, &mut key.rng(i)) as u128;
            (c, c * c)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let r = runs as u128;
    let mean = sum as f64 / runs as f64;
    let std_error = if runs > 1 {
        // Sample variance from exact integer moments.
        let numer = r * sum_sq - sum * sum;
        let variance = numer as f64 / (r * (r - 1)) as f64;
        (variance / runs as f64).sqrt()
    } else {
        0.0
    };
    SpreadEstimate {
        mean,
        runs,
        std_error,
        seed,
    }
}

/// Monte-Carlo mean of [`diffuse_once`]. Stream `i` is derived from the seed,
/// a hash of the subset's ids, and `i`.
pub fn estimate_spread(
    subset: &[usize],
    mn: &NormalizedSimilarityMatrix,
    runs: u64,
    seed: u64,
) -> Result<SpreadEstimate, SelectionError> {
    if runs == 0 {
        return Err(SelectionError::ZeroRuns);
    }
    let subset = canonical_subset(subset, mn)?;
    let key = StreamKey::for_subset(seed, &subset, mn);
    Ok(estimate_with_key(&subset, mn, runs, key, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_edge() -> NormalizedSimilarityMatrix {
        NormalizedSimilarityMatrix::from_rows(vec![vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn whole_set_spreads_to_everything() {
        let mn =
            NormalizedSimilarityMatrix::from_rows(vec![vec![0.0, 0.3, 0.7], vec![0.5, 0.0, 0.5], vec![1.0, 0.0, 0.0]])
                .unwrap();
        for seed in 0..20 {
            assert_eq!(diffuse_once(&[0, 1, 2], &mn, seed).unwrap(), 3);
        }
        let est = estimate_spread(&[2, 0, 1], &mn, 50, 3).unwrap();
        assert_eq!(est.mean, 3.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn probability_one_edge_always_fires() {
        let mn = NormalizedSimilarityMatrix::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        for seed in 0..200 {
            assert_eq!(diffuse_once(&[0], &mn, seed).unwrap(), 2);
        }
    }

    #[test]
    fn probability_zero_edge_never_fires() {
        let mn = NormalizedSimilarityMatrix::from_rows(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        for seed in 0..200 {
            assert_eq!(diffuse_once(&[0], &mn, seed).unwrap(), 1);
        }
    }

    #[test]
    fn half_edge_mean_over_seeds() {
        let mn = half_edge();
        let total: usize = (0..4000).map(|s| diffuse_once(&[0], &mn, s).unwrap()).sum();
        let mean = total as f64 / 4000.0;
        assert!((mean - 1.5).abs() < 0.05, "{mean}");
    }

    #[test]
    fn half_edge_estimate() {
        let est = estimate_spread(&[0], &half_edge(), 10_000, 42).unwrap();
        assert!((est.mean - 1.5).abs() < 0.05);
        assert!((est.mean - 1.5).abs() <= 3.0 * est.std_error);
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn deterministic_chain_estimate_is_reachable_set() {
        let mn = NormalizedSimilarityMatrix::from_rows(vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(estimate_spread(&[1], &mn, 10, 0).unwrap().mean, 2.0);
        assert_eq!(estimate_spread(&[3], &mn, 10, 0).unwrap().mean, 4.0);
        assert_eq!(estimate_spread(&[3], &mn, 10, 0).unwrap().std_error, 0.0);
    }

    #[test]
    fn errors() {
        let mn = half_edge();
        assert_eq!(diffuse_once(&[], &mn, 0), Err(SelectionError::EmptySubset));
        assert!(matches!(diffuse_once(&[5], &mn, 0), Err(SelectionError::UnknownId(_))));
        assert_eq!(estimate_spread(&[0], &mn, 0, 0), Err(SelectionError::ZeroRuns));
    }

    #[test]
    fn estimate_is_deterministic_and_order_free() {
        let mn =
            NormalizedSimilarityMatrix::from_rows(vec![vec![0.0, 0.4, 0.6], vec![0.2, 0.0, 0.8], vec![0.5, 0.5, 0.0]])
                .unwrap();
        let a = estimate_spread(&[0, 1], &mn, 500, 9).unwrap();
        let b = estimate_spread(&[1, 0], &mn, 500, 9).unwrap();
        assert_eq!(a, b);
        let c = estimate_spread(&[0, 1], &mn, 500, 10).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }
}
