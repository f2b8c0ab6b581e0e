//! Key-aligned (X, Y) datasets, pairing with drop diagnostics, and seeded
//! k-fold splitting.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::vector_set::VectorSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two vector sets with identical key order; index i pairs x_i with y_i.
/// Labels, when present, give one class identifier per item.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedDataset<S> {
    x: VectorSet<S>,
    y: VectorSet<S>,
    labels: Option<Vec<String>>,
}

impl<S: Scalar> PairedDataset<S> {
    pub fn new(x: VectorSet<S>, y: VectorSet<S>, labels: Option<Vec<String>>) -> Result<Self> {
        if x.keys() != y.keys() {
            return Err(Error::NotPaired(
                "x and y key sequences differ".to_string(),
            ));
        }
        if let Some(labels) = &labels {
            if labels.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    got: labels.len(),
                    context: "labels per item".into(),
                });
            }
        }
        Ok(PairedDataset { x, y, labels })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &VectorSet<S> {
        &self.x
    }

    pub fn y(&self) -> &VectorSet<S> {
        &self.y
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn keys(&self) -> &[String] {
        self.x.keys()
    }

    /// Label of item i, when labels are present.
    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    /// Restriction to `indices`, preserving their order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let labels = match &self.labels {
            Some(labels) => {
                let mut out = Vec::with_capacity(indices.len());
                for &i in indices {
                    if i >= labels.len() {
                        return Err(Error::InvalidArgument(format!(
                            "subset index {i} out of range for {} items",
                            labels.len()
                        )));
                    }
                    out.push(labels[i].clone());
                }
                Some(out)
            }
            None => None,
        };
        PairedDataset::new(self.x.subset(indices)?, self.y.subset(indices)?, labels)
    }
}

/// Counts from [`pair_by_keys`]: how many keys matched and how many were
/// dropped from each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairingDiagnostics {
    pub matched: usize,
    pub dropped_from_x: usize,
    pub dropped_from_y: usize,
}

impl fmt::Display for PairingDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "paired {} keys (dropped {} from x, {} from y)",
            self.matched, self.dropped_from_x, self.dropped_from_y
        )
    }
}

/// Restricts both sets to their key intersection, sorted lexicographically so
/// runs are byte-reproducible, and reports what was dropped.
pub fn pair_by_keys<S: Scalar>(
    x: &VectorSet<S>,
    y: &VectorSet<S>,
) -> Result<(PairedDataset<S>, PairingDiagnostics)> {
    let y_index: HashMap<&str, usize> = y
        .keys()
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let mut shared: Vec<(&str, usize, usize)> = x
        .keys()
        .iter()
        .enumerate()
        .filter_map(|(xi, k)| y_index.get(k.as_str()).map(|&yi| (k.as_str(), xi, yi)))
        .collect();
    if shared.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    shared.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let x_indices: Vec<usize> = shared.iter().map(|&(_, xi, _)| xi).collect();
    let y_indices: Vec<usize> = shared.iter().map(|&(_, _, yi)| yi).collect();
    let diagnostics = PairingDiagnostics {
        matched: shared.len(),
        dropped_from_x: x.len() - shared.len(),
        dropped_from_y: y.len() - shared.len(),
    };
    let dataset = PairedDataset::new(x.subset(&x_indices)?, y.subset(&y_indices)?, None)?;
    Ok((dataset, diagnostics))
}

/// Seeded k-fold split. Test folds are disjoint, their union is the dataset,
/// and fold sizes differ by at most one.
pub fn k_fold_split<S: Scalar>(
    dataset: &PairedDataset<S>,
    k: usize,
    seed: u64,
) -> Result<Vec<(PairedDataset<S>, PairedDataset<S>)>> {
    let n = dataset.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k-fold split needs k >= 2, got {k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k-fold split needs k <= N, got k={k} for N={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    // First (n % k) folds take one extra item.
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let test_idx = &order[start..start + size];
        let train_idx: Vec<usize> = order[..start]
            .iter()
            .chain(order[start + size..].iter())
            .copied()
            .collect();
        folds.push((dataset.subset(&train_idx)?, dataset.subset(test_idx)?));
        start += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> VectorSet<f64> {
        let keys: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<f64>> = (0..names.len()).map(|i| vec![i as f64, 1.0]).collect();
        VectorSet::from_rows(keys, rows).unwrap()
    }

    #[test]
    fn pairing_keeps_sorted_intersection() {
        let x = set(&["a", "b", "c"]);
        let y = set(&["b", "c", "d"]);
        let (ds, diag) = pair_by_keys(&x, &y).unwrap();
        assert_eq!(ds.keys(), &["b".to_string(), "c".to_string()]);
        assert_eq!(diag.matched, 2);
        assert_eq!(diag.dropped_from_x, 1);
        assert_eq!(diag.dropped_from_y, 1);
        // Rows follow each side's own vectors.
        assert_eq!(ds.x().vector(0), x.vector(1));
        assert_eq!(ds.y().vector(0), y.vector(0));
    }

    #[test]
    fn pairing_identical_key_lists_keeps_everything() {
        let x = set(&["b", "a"]);
        let y = set(&["b", "a"]);
        let (ds, diag) = pair_by_keys(&x, &y).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(diag.dropped_from_x, 0);
        // Output order is lexicographic regardless of input order.
        assert_eq!(ds.keys(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn pairing_disjoint_keys_is_an_error() {
        let x = set(&["a", "b"]);
        let y = set(&["c", "d"]);
        assert!(matches!(
            pair_by_keys(&x, &y).unwrap_err(),
            Error::EmptyIntersection
        ));
    }

    #[test]
    fn mismatched_key_order_rejected_by_constructor() {
        let x = set(&["a", "b"]);
        let y = set(&["b", "a"]);
        assert!(matches!(
            PairedDataset::new(x, y, None).unwrap_err(),
            Error::NotPaired(_)
        ));
    }

    #[test]
    fn five_folds_of_ten_items_partition_evenly() {
        let x = set(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
        let ds = PairedDataset::new(x.clone(), x, None).unwrap();
        let folds = k_fold_split(&ds, 5, 7).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen: Vec<String> = Vec::new();
        for (train, test) in &folds {
            assert_eq!(test.len(), 2);
            assert_eq!(train.len(), 8);
            seen.extend(test.keys().iter().cloned());
        }
        seen.sort();
        assert_eq!(seen, ds.keys());
    }

    #[test]
    fn same_seed_gives_identical_split() {
        let x = set(&["a", "b", "c", "d", "e"]);
        let ds = PairedDataset::new(x.clone(), x, None).unwrap();
        let a = k_fold_split(&ds, 2, 13).unwrap();
        let b = k_fold_split(&ds, 2, 13).unwrap();
        for ((tr_a, te_a), (tr_b, te_b)) in a.iter().zip(&b) {
            assert_eq!(tr_a.keys(), tr_b.keys());
            assert_eq!(te_a.keys(), te_b.keys());
        }
    }

    #[test]
    fn too_many_folds_rejected() {
        let x = set(&["a", "b", "c"]);
        let ds = PairedDataset::new(x.clone(), x, None).unwrap();
        assert!(k_fold_split(&ds, 5, 0).is_err());
        assert!(k_fold_split(&ds, 1, 0).is_err());
    }

    #[test]
    fn labels_travel_with_subsets() {
        let x = set(&["a", "b", "c"]);
        let labels = Some(vec!["u".to_string(), "v".to_string(), "w".to_string()]);
        let ds = PairedDataset::new(x.clone(), x, labels).unwrap();
        let sub = ds.subset(&[2, 0]).unwrap();
        assert_eq!(sub.labels().unwrap(), &["w".to_string(), "u".to_string()]);
        assert_eq!(sub.label(0), Some("w"));
    }
}
