//! A named collection of fixed-dimension vectors: the basic value passed
//! between loaders, models, and overlap scoring.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cast_usize, Scalar};

/// N named rows of dimension d. Keys are unique, every entry is finite,
/// and N >= 1, d >= 1.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet<S> {
    keys: Vec<String>,
    values: Matrix<S>,
}

impl<S: Scalar> VectorSet<S> {
    /// Builds a set from a key list and a matching matrix, validating every
    /// invariant.
    pub fn new(keys: Vec<String>, values: Matrix<S>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::InvalidArgument("vector set must be non-empty".into()));
        }
        if keys.len() != values.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: keys.len(),
                got: values.n_rows(),
                context: "vector set rows vs keys".into(),
            });
        }
        if values.n_cols() == 0 {
            return Err(Error::InvalidArgument(
                "vector set dimension must be positive".into(),
            ));
        }
        let mut seen: HashSet<&str> = HashSet::with_capacity(keys.len());
        for key in &keys {
            if !seen.insert(key.as_str()) {
                return Err(Error::DuplicateKey(key.clone()));
            }
        }
        for (key, row) in keys.iter().zip(values.rows()) {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        key: key.clone(),
                        component: j,
                    });
                }
            }
        }
        Ok(VectorSet { keys, values })
    }

    /// Convenience constructor from per-row vectors.
    pub fn from_rows(keys: Vec<String>, rows: Vec<Vec<S>>) -> Result<Self> {
        let values = Matrix::from_rows(rows)?;
        VectorSet::new(keys, values)
    }

    /// Number of items N.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Vector dimension d.
    pub fn dim(&self) -> usize {
        self.values.n_cols()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn key(&self, i: usize) -> &str {
        &self.keys[i]
    }

    /// Index of `key`, or None when absent. Linear scan; callers that look up
    /// many keys should build their own map.
    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    pub fn vector(&self, i: usize) -> &[S] {
        self.values.row(i)
    }

    pub fn values(&self) -> &Matrix<S> {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[S])> {
        self.keys
            .iter()
            .map(|k| k.as_str())
            .zip(self.values.rows())
    }

    /// New set holding rows `indices`, in that order. Indices must be in
    /// range and distinct (duplicates would break key uniqueness).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut keys = Vec::with_capacity(indices.len());
        let mut rows = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidArgument(format!(
                    "subset index {i} out of range for {} items",
                    self.len()
                )));
            }
            keys.push(self.keys[i].clone());
            rows.push(self.values.row(i).to_vec());
        }
        VectorSet::from_rows(keys, rows)
    }

    /// Replaces the matrix while keeping the keys, e.g. for a mapped f(X).
    pub fn with_values(&self, values: Matrix<S>) -> Result<Self> {
        VectorSet::new(self.keys.clone(), values)
    }

    /// Stacks two sets with the same dimension; keys must stay unique.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
                context: "concatenated vector sets".into(),
            });
        }
        let mut keys = self.keys.clone();
        keys.extend(other.keys.iter().cloned());
        let mut rows: Vec<Vec<S>> = self.values.rows().map(<[S]>::to_vec).collect();
        rows.extend(other.values.rows().map(<[S]>::to_vec));
        VectorSet::from_rows(keys, rows)
    }
}

/// Collapses each group to its arithmetic mean, one output row per key.
/// Output rows follow the map's (lexicographic) key order.
pub fn aggregate_centroids<S: Scalar>(
    groups: &BTreeMap<String, Vec<Vec<S>>>,
) -> Result<VectorSet<S>> {
    let mut keys = Vec::with_capacity(groups.len());
    let mut rows = Vec::with_capacity(groups.len());
    for (key, members) in groups {
        let first = members
            .first()
            .ok_or_else(|| Error::EmptyGroup(key.clone()))?;
        let dim = first.len();
        let mut mean = vec![S::zero(); dim];
        for member in members {
            if member.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: member.len(),
                    context: format!("group `{key}`"),
                });
            }
            for (m, &v) in mean.iter_mut().zip(member) {
                *m += v;
            }
        }
        let count = cast_usize::<S>(members.len());
        for m in &mut mean {
            *m /= count;
        }
        keys.push(key.clone());
        rows.push(mean);
    }
    VectorSet::from_rows(keys, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn construction_and_accessors() {
        let v = VectorSet::from_rows(keys(&["a", "b"]), vec![vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.dim(), 2);
        assert_eq!(v.key(1), "b");
        assert_eq!(v.vector(0), &[1.0, 0.0]);
        assert_eq!(v.index_of("b"), Some(1));
        assert_eq!(v.index_of("z"), None);
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = VectorSet::from_rows(keys(&["a", "a"]), vec![vec![1.0], vec![2.0]]).unwrap_err();
        assert!(matches!(err, Error::DuplicateKey(k) if k == "a"));
    }

    #[test]
    fn non_finite_entries_rejected() {
        let err =
            VectorSet::from_rows(keys(&["a", "b"]), vec![vec![1.0], vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { key, component: 0 } if key == "b"));
    }

    #[test]
    fn subset_preserves_order() {
        let v = VectorSet::from_rows(
            keys(&["a", "b", "c"]),
            vec![vec![1.0], vec![2.0], vec![3.0]],
        )
        .unwrap();
        let s = v.subset(&[2, 0]).unwrap();
        assert_eq!(s.keys(), &["c".to_string(), "a".to_string()]);
        assert_eq!(s.vector(0), &[3.0]);
        assert!(v.subset(&[5]).is_err());
    }

    #[test]
    fn concat_stacks_rows_and_checks_keys() {
        let a = VectorSet::from_rows(keys(&["a"]), vec![vec![1.0, 2.0]]).unwrap();
        let b = VectorSet::from_rows(keys(&["b"]), vec![vec![3.0, 4.0]]).unwrap();
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.len(), 2);
        assert_eq!(ab.vector(1), &[3.0, 4.0]);
        assert!(a.concat(&a).is_err());
    }

    #[test]
    fn centroid_of_singleton_is_the_vector() {
        let mut groups = BTreeMap::new();
        groups.insert("cat".to_string(), vec![vec![2.0, 2.0]]);
        let v = aggregate_centroids(&groups).unwrap();
        assert_eq!(v.vector(0), &[2.0, 2.0]);
    }

    #[test]
    fn centroid_averages_members() {
        let mut groups = BTreeMap::new();
        groups.insert("cat".to_string(), vec![vec![0.0, 0.0], vec![2.0, 2.0]]);
        let v = aggregate_centroids(&groups).unwrap();
        assert_eq!(v.vector(0), &[1.0, 1.0]);
    }

    #[test]
    fn empty_group_rejected() {
        let mut groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        groups.insert("cat".to_string(), vec![]);
        let err = aggregate_centroids(&groups).unwrap_err();
        assert!(matches!(err, Error::EmptyGroup(k) if k == "cat"));
    }

    #[test]
    fn mixed_dimension_group_rejected() {
        let mut groups = BTreeMap::new();
        groups.insert("cat".to_string(), vec![vec![0.0, 0.0], vec![2.0]]);
        assert!(matches!(
            aggregate_centroids(&groups).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn centroid_keys_sorted() {
        let mut groups = BTreeMap::new();
        groups.insert("dog".to_string(), vec![vec![1.0]]);
        groups.insert("cat".to_string(), vec![vec![2.0]]);
        let v = aggregate_centroids(&groups).unwrap();
        assert_eq!(v.keys(), &["cat".to_string(), "dog".to_string()]);
    }
}
