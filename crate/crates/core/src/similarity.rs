//! The two similarity measures used throughout: cosine and the
//! distance-derived Euclidean similarity `1 / (1 + ||a - b||)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMeasure {
    #[default]
    Cosine,
    Euclidean,
}

impl fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityMeasure::Cosine => write!(f, "cosine"),
            SimilarityMeasure::Euclidean => write!(f, "euclidean"),
        }
    }
}

impl FromStr for SimilarityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" | "cos" => Ok(SimilarityMeasure::Cosine),
            "euclidean" | "eucl" => Ok(SimilarityMeasure::Euclidean),
            other => Err(Error::InvalidArgument(format!(
                "unknown similarity measure `{other}` (expected cosine or euclidean)"
            ))),
        }
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

#[inline]
pub fn euclidean_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        .sqrt()
}

/// Similarity between two vectors of equal dimension.
///
/// Cosine is clamped into `[-1, 1]` to absorb rounding; it is an error for a
/// zero vector. Euclidean similarity is `1 / (1 + distance)`, always in
/// `(0, 1]`.
pub fn similarity<S: Scalar>(a: &[S], b: &[S], measure: SimilarityMeasure) -> Result<S> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
            context: "similarity arguments".into(),
        });
    }
    match measure {
        SimilarityMeasure::Cosine => {
            let na = norm(a);
            let nb = norm(b);
            if na == S::zero() || nb == S::zero() {
                return Err(Error::ZeroVector { key: None });
            }
            let c = dot(a, b) / (na * nb);
            Ok(c.min(S::one()).max(-S::one()))
        }
        SimilarityMeasure::Euclidean => Ok(S::one() / (S::one() + euclidean_distance(a, b))),
    }
}
