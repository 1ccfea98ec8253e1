use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SelectionError;
use crate::data::SampleCollection;
use crate::metrics::{sample_distance_with, DistanceOptions};
use crate::skeleton::SkeletonSpec;

/// Inverse-distance similarities over the base set. Row and column order
/// follow `ids`; excluded (duplicate) samples have all-zero rows and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    pub entries: Vec<Vec<f64>>,
    pub excluded: Vec<bool>,
}

/// Row-normalized similarities, read as independent-cascade edge probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSimilarityMatrix {
    ids: Vec<String>,
    entries: Vec<Vec<f64>>,
    excluded: Vec<bool>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn normalized(&self) -> NormalizedSimilarityMatrix {
        let entries = self
            .entries
            .iter()
            .map(|row| {
                let sum: f64 = row.iter().sum();
                if sum > 0.0 {
                    row.iter().map(|v| v / sum).collect()
                } else {
                    vec![0.0; row.len()]
                }
            })
            .collect();
        NormalizedSimilarityMatrix {
            ids: self.ids.clone(),
            entries,
            excluded: self.excluded.clone(),
        }
    }
}

impl NormalizedSimilarityMatrix {
    /// Builds a matrix from explicit edge probabilities. Entries must lie in
    /// [0, 1] with a zero diagonal; rows need not sum to one.
    pub fn from_probabilities(ids: Vec<String>, entries: Vec<Vec<f64>>) -> Result<Self, SelectionError> {
        let n = ids.len();
        if n == 0 {
            return Err(SelectionError::InvalidMatrix("matrix is empty".into()));
        }
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(SelectionError::InvalidMatrix("duplicate ids".into()));
        }
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(SelectionError::InvalidMatrix(format!("matrix must be {n}x{n}")));
        }
        for (i, row) in entries.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(SelectionError::InvalidMatrix(format!("diagonal entry {i} is not zero")));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(SelectionError::InvalidMatrix(format!(
                    "entry {v} in row {i} is not a probability"
                )));
            }
        }
        Ok(NormalizedSimilarityMatrix {
            ids,
            entries,
            excluded: vec![false; n],
        })
    }

    /// Shorthand with ids `"0"`, `"1"`, ... (zero-padded so that id order matches index order).
    pub fn from_rows(entries: Vec<Vec<f64>>) -> Result<Self, SelectionError> {
        let width = entries.len().saturating_sub(1).to_string().len();
        let ids = (0..entries.len()).map(|i| format!("{i:0width$}")).collect();
        Self::from_probabilities(ids, entries)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded[i]
    }

    /// Indices that may be selected.
    pub fn eligible(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.excluded[i]).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn indices_of<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>, SelectionError> {
        ids.iter()
            .map(|id| {
                self.index_of(id.as_ref())
                    .ok_or_else(|| SelectionError::UnknownId(id.as_ref().to_string()))
            })
            .collect()
    }
}

/// Pairwise distances, the inverse-distance matrix and its row normalization.
///
/// An exact duplicate (distance zero to an earlier, non-excluded sample) is
/// excluded: its row and column stay zero and it can never be selected.
pub fn build_matrices(
    base: &SampleCollection,
    skeleton: &SkeletonSpec,
    options: DistanceOptions,
) -> Result<(SimilarityMatrix, NormalizedSimilarityMatrix), SelectionError> {
    let n = base.len();
    if n < 2 {
        return Err(SelectionError::TooFewSamples(n));
    }
    let samples = base.samples();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let distances = pairs
        .par_iter()
        .map(|&(i, j)| sample_distance_with(&samples[i], &samples[j], skeleton, options).map(|d| d.combined))
        .collect::<Result<Vec<f64>, _>>()?;

    let mut dist = vec![vec![0.0; n]; n];
    for (&(i, j), &d) in pairs.iter().zip(&distances) {
        dist[i][j] = d;
        dist[j][i] = d;
    }

    let mut excluded = vec![false; n];
    for j in 0..n {
        if (0..j).any(|i| !excluded[i] && dist[i][j] == 0.0) {
            excluded[j] = true;
        }
    }
    if excluded.iter().filter(|e| !**e).count() < 2 {
        return Err(SelectionError::AllDuplicates);
    }

    let mut entries = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && !excluded[i] && !excluded[j] {
                entries[i][j] = 1.0 / dist[i][j];
            }
        }
    }
    let m = SimilarityMatrix {
        ids: base.ids(),
        entries,
        excluded,
    };
    let mn = m.normalized();
    Ok((m, mn))
}
