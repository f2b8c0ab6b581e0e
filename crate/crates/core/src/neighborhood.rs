//! Brute-force K-nearest-neighbor lists and the mean nearest-neighbor
//! overlap (mNNO) between two paired vector sets.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::data::vector_set::VectorSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::similarity::{similarity, SimilarityMeasure};

/// Per-item neighbor lists. Row i never contains i, every row has
/// `min(k, N-1)` entries, and each row is ordered by descending similarity
/// with ties broken by ascending item index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborIndex {
    rows: Vec<Vec<usize>>,
    k: usize,
    measure: SimilarityMeasure,
}

impl NeighborIndex {
    pub fn n_items(&self) -> usize {
        self.rows.len()
    }

    /// Requested K.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Per-row neighbor count, `min(k, N-1)`.
    pub fn effective_k(&self) -> usize {
        self.k.min(self.n_items().saturating_sub(1))
    }

    pub fn measure(&self) -> SimilarityMeasure {
        self.measure
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Debug dump: one line per item, `item TAB n1,n2,...`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            let joined = row
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!("{i}\t{joined}\n"));
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_tsv().as_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Exact K-nearest-neighbor lists for every item, self excluded.
///
/// Rows are computed independently (in parallel) but the result is identical
/// to a sequential scan: same similarities, same tie-breaking.
pub fn top_k_neighbors<S: Scalar>(
    v: &VectorSet<S>,
    k: usize,
    measure: SimilarityMeasure,
) -> Result<NeighborIndex> {
    let n = v.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "neighbor search needs at least 2 items, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("neighbor search needs k >= 1".into()));
    }
    if measure == SimilarityMeasure::Cosine {
        for (key, row) in v.iter() {
            if row.iter().all(|&c| c == S::zero()) {
                return Err(Error::ZeroVector {
                    key: Some(key.to_string()),
                });
            }
        }
    }
    let k_eff = k.min(n - 1);
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let vi = v.vector(i);
            let mut scored: Vec<(S, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let s = similarity(vi, v.vector(j), measure)
                        .expect("zero vectors were screened above");
                    (s, j)
                })
                .collect();
            scored.sort_unstable_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .expect("similarities are finite")
                    .then(a.1.cmp(&b.1))
            });
            scored.truncate(k_eff);
            scored.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(NeighborIndex { rows, k, measure })
}

/// Size of the set intersection of two neighbor lists.
pub fn nn_overlap(nn_v: &[usize], nn_z: &[usize]) -> usize {
    nn_v.iter().filter(|i| nn_z.contains(i)).count()
}

/// Mean per-item overlap between two neighbor indexes over the same items,
/// normalized by the effective K so the result lies in [0, 1].
pub fn mean_overlap(a: &NeighborIndex, b: &NeighborIndex) -> Result<f64> {
    let items: Vec<usize> = (0..a.n_items()).collect();
    mean_overlap_over(a, b, &items)
}

/// Like [`mean_overlap`] but averaged over a subset of item indices, e.g.
/// test items inside a pooled index.
pub fn mean_overlap_over(a: &NeighborIndex, b: &NeighborIndex, items: &[usize]) -> Result<f64> {
    if a.n_items() != b.n_items() {
        return Err(Error::DimensionMismatch {
            expected: a.n_items(),
            got: b.n_items(),
            context: "neighbor index sizes".into(),
        });
    }
    if a.effective_k() != b.effective_k() {
        return Err(Error::DimensionMismatch {
            expected: a.effective_k(),
            got: b.effective_k(),
            context: "effective neighbor counts".into(),
        });
    }
    if items.is_empty() {
        return Err(Error::InvalidArgument(
            "overlap needs at least one item".into(),
        ));
    }
    let mut total = 0usize;
    for &i in items {
        if i >= a.n_items() {
            return Err(Error::InvalidArgument(format!(
                "item index {i} out of range for {} items",
                a.n_items()
            )));
        }
        total += nn_overlap(a.row(i), b.row(i));
    }
    Ok(total as f64 / (a.effective_k() * items.len()) as f64)
}

/// mNNO: mean fraction of shared K-nearest neighbors between paired vector
/// sets V and Z. 1.0 means identical neighborhood structure everywhere.
pub fn mean_nn_overlap<S: Scalar>(
    v: &VectorSet<S>,
    z: &VectorSet<S>,
    k: usize,
    measure: SimilarityMeasure,
) -> Result<f64> {
    if v.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: z.len(),
            context: "paired set sizes".into(),
        });
    }
    if v.keys() != z.keys() {
        return Err(Error::NotPaired(
            "mNNO arguments must share key order".to_string(),
        ));
    }
    let nn_v = top_k_neighbors(v, k, measure)?;
    let nn_z = top_k_neighbors(z, k, measure)?;
    mean_overlap(&nn_v, &nn_z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(pts: &[[f64; 2]]) -> VectorSet<f64> {
        let keys = (0..pts.len()).map(|i| format!("p{i}")).collect();
        let rows = pts.iter().map(|p| p.to_vec()).collect();
        VectorSet::from_rows(keys, rows).unwrap()
    }

    #[test]
    fn four_point_neighbor_table() {
        let v = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [10.0, 10.0]]);
        let idx = top_k_neighbors(&v, 2, SimilarityMeasure::Euclidean).unwrap();
        assert_eq!(idx.row(0), &[1, 2]);
        assert_eq!(idx.row(1), &[0, 2]);
        assert_eq!(idx.row(2), &[0, 1]);
        // (10,10) is equidistant from (1,0) and (0,1); the tie resolves by index.
        assert_eq!(idx.row(3), &[1, 2]);
    }

    #[test]
    fn large_k_clamps_to_n_minus_one() {
        let v = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [10.0, 10.0]]);
        let idx = top_k_neighbors(&v, 10, SimilarityMeasure::Euclidean).unwrap();
        assert_eq!(idx.effective_k(), 3);
        for i in 0..4 {
            assert_eq!(idx.row(i).len(), 3);
            assert!(!idx.row(i).contains(&i));
        }
    }

    #[test]
    fn duplicate_point_is_a_neighbor_but_self_is_not() {
        let v = points(&[[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]]);
        let idx = top_k_neighbors(&v, 1, SimilarityMeasure::Euclidean).unwrap();
        assert_eq!(idx.row(0), &[1]);
        assert_eq!(idx.row(1), &[0]);
    }

    #[test]
    fn overlap_counts_shared_members() {
        // {dog, tiger, lion} vs {mouse, tiger, lion} as indices.
        assert_eq!(nn_overlap(&[0, 1, 2], &[3, 1, 2]), 2);
        assert_eq!(nn_overlap(&[4, 5, 6], &[4, 5, 6]), 3);
        assert_eq!(nn_overlap(&[0, 1], &[2, 3]), 0);
    }

    #[test]
    fn identical_sets_have_full_overlap() {
        let v = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        assert_eq!(
            mean_nn_overlap(&v, &v, 2, SimilarityMeasure::Euclidean).unwrap(),
            1.0
        );
    }

    #[test]
    fn five_pair_case_matches_exhaustive_oracle() {
        let v = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        let z = points(&[[0.0, 0.1], [1.0, 0.0], [0.0, 1.0], [3.0, 2.0], [2.0, 3.0]]);
        let m = mean_nn_overlap(&v, &z, 2, SimilarityMeasure::Euclidean).unwrap();
        assert_eq!(m, 9.0 / 10.0);
    }

    #[test]
    fn full_k_means_full_overlap() {
        let v = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        let z = points(&[[9.0, 0.0], [1.0, 7.0], [0.0, 1.0], [3.0, 2.0], [2.0, 3.0]]);
        let m = mean_nn_overlap(&v, &z, 4, SimilarityMeasure::Euclidean).unwrap();
        assert_eq!(m, 1.0);
    }

    #[test]
    fn cosine_zero_vector_names_the_key() {
        let keys = vec!["ok".to_string(), "zero".to_string(), "b".to_string()];
        let rows = vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 2.0]];
        let v = VectorSet::from_rows(keys, rows).unwrap();
        let err = top_k_neighbors(&v, 1, SimilarityMeasure::Cosine).unwrap_err();
        assert!(matches!(err, Error::ZeroVector { key: Some(k) } if k == "zero"));
    }

    #[test]
    fn tiny_sets_and_zero_k_rejected() {
        let v = points(&[[0.0, 0.0]]);
        assert!(top_k_neighbors(&v, 1, SimilarityMeasure::Euclidean).is_err());
        let v = points(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(top_k_neighbors(&v, 0, SimilarityMeasure::Euclidean).is_err());
    }

    #[test]
    fn tsv_dump_lists_rows_in_order() {
        let v = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let idx = top_k_neighbors(&v, 2, SimilarityMeasure::Euclidean).unwrap();
        assert_eq!(idx.to_tsv(), "0\t1,2\n1\t0,2\n2\t0,1\n");
    }
}
