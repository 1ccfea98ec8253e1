use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diffusion::{estimate_spread, estimate_with_key, StreamKey};
use super::{NormalizedSimilarityMatrix, SelectionError, SpreadEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen_ids: Vec<String>,
    pub marginal_gains: Vec<f64>,
    #[serde(flatten)]
    pub final_estimate: SpreadEstimate,
}

/// Index of the largest value; ties go to the earliest position.
pub(crate) fn argmax_first<T: PartialOrd>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if v.partial_cmp(&values[b]) != Some(std::cmp::Ordering::Greater) => {}
            _ => best = Some(i),
        }
    }
    best
}

pub(crate) fn check_p(p: usize, mn: &NormalizedSimilarityMatrix) -> Result<Vec<usize>, SelectionError> {
    let eligible = mn.eligible();
    if p == 0 || p > eligible.len() {
        return Err(SelectionError::BadSubsetSize {
            p,
            available: eligible.len(),
        });
    }
    Ok(eligible)
}

/// Greedy subset selection on the Monte-Carlo spread estimate.
///
/// Round `t` scores the current subset and every remaining candidate on the
/// same stream family (common random numbers), so candidate comparisons and
/// marginal gains see identical randomness. Candidates are scanned in index
/// order, which is id order, and the first maximum wins.
pub fn greedy_select(
    p: usize,
    mn: &NormalizedSimilarityMatrix,
    runs: u64,
    seed: u64,
) -> Result<SelectionResult, SelectionError> {
    if runs == 0 {
        return Err(SelectionError::ZeroRuns);
    }
    let mut remaining = check_p(p, mn)?;
    let mut chosen: Vec<usize> = Vec::with_capacity(p);
    let mut gains = Vec::with_capacity(p);

    for round in 0..p {
        let key = StreamKey::for_greedy_round(seed, round);
        let current = if chosen.is_empty() {
            0.0
        } else {
            estimate_with_key(&sorted(&chosen), mn, runs, key, seed).mean
        };
        let scores: Vec<f64> = remaining
            .par_iter()
            .map(|&c| {
                let mut trial = chosen.clone();
                trial.push(c);
                estimate_with_key(&sorted(&trial), mn, runs, key, seed).mean
            })
            .collect();
        let best = argmax_first(&scores).expect("at least one candidate remains");
        gains.push(scores[best] - current);
        chosen.push(remaining.remove(best));
    }

    let final_estimate = estimate_spread(&chosen, mn, runs, seed)?;
    Ok(SelectionResult {
        chosen_ids: chosen.iter().map(|&i| mn.ids()[i].clone()).collect(),
        marginal_gains: gains,
        final_estimate,
    })
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax_first::<f64>(&[]), None);
    }

    #[test]
    fn single_pick_is_largest_reachable_set() {
        // 0 -> 1 -> 2, 3 -> 0 with certain edges: node 3 reaches everything.
        let mn = NormalizedSimilarityMatrix::from_rows(vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        let r = greedy_select(1, &mn, 20, 1).unwrap();
        assert_eq!(r.chosen_ids, vec!["3"]);
        assert_eq!(r.final_estimate.mean, 4.0);
        assert_eq!(r.marginal_gains, vec![4.0]);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let mn = NormalizedSimilarityMatrix::from_rows(vec![vec![0.0; 3]; 3]).unwrap();
        let r = greedy_select(2, &mn, 5, 0).unwrap();
        assert_eq!(r.chosen_ids, vec!["0", "1"]);
        assert_eq!(r.marginal_gains, vec![1.0, 1.0]);
    }

    #[test]
    fn full_selection_covers_everything() {
        let mn =
            NormalizedSimilarityMatrix::from_rows(vec![vec![0.0, 0.2, 0.8], vec![0.5, 0.0, 0.5], vec![0.9, 0.1, 0.0]])
                .unwrap();
        let r = greedy_select(3, &mn, 64, 7).unwrap();
        assert_eq!(r.final_estimate.mean, 3.0);
        let mut ids = r.chosen_ids.clone();
        ids.sort();
        assert_eq!(ids, vec!["0", "1", "2"]);
        assert_eq!(r.marginal_gains.len(), 3);
    }

    #[test]
    fn p_out_of_range() {
        let mn = NormalizedSimilarityMatrix::from_rows(vec![vec![0.0; 2]; 2]).unwrap();
        assert!(matches!(
            greedy_select(0, &mn, 5, 0),
            Err(SelectionError::BadSubsetSize { .. })
        ));
        assert!(matches!(
            greedy_select(3, &mn, 5, 0),
            Err(SelectionError::BadSubsetSize { .. })
        ));
    }

    #[test]
    fn serializes_with_flat_estimate() {
        let mn = NormalizedSimilarityMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = greedy_select(1, &mn, 4, 11).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["chosen_ids", "marginal_gains", "mean", "runs", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: SelectionResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
