//! The three training losses (MSE, cosine, max-margin) with their exact
//! gradients with respect to the prediction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::similarity::{dot, euclidean_distance, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    Cosine,
    MaxMargin,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Mse => write!(f, "mse"),
            LossKind::Cosine => write!(f, "cosine"),
            LossKind::MaxMargin => write!(f, "max_margin"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "cosine" => Ok(LossKind::Cosine),
            "max_margin" | "max-margin" | "hinge" => Ok(LossKind::MaxMargin),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss `{other}` (expected mse, cosine, or max_margin)"
            ))),
        }
    }
}

/// Extra inputs the max-margin loss needs: the already-computed prediction
/// for the negative example x̃ and the margin γ.
#[derive(Clone, Copy, Debug)]
pub struct MarginContext<'a, S> {
    pub neg_pred: &'a [S],
    pub margin: f64,
}

/// Loss value plus gradients. `upstream` is ∂loss/∂pred; `neg_upstream`
/// (max-margin only) is ∂loss/∂neg_pred.
#[derive(Clone, Debug)]
pub struct LossEval<S> {
    pub value: S,
    pub upstream: Vec<S>,
    pub neg_upstream: Option<Vec<S>>,
}

/// Gradient of `||v||` with respect to v: `v / ||v||`, taken as 0 at v = 0.
fn norm_gradient<S: Scalar>(v: &[S]) -> Vec<S> {
    let n = norm(v);
    if n == S::zero() {
        vec![S::zero(); v.len()]
    } else {
        v.iter().map(|&x| x / n).collect()
    }
}

/// One item's loss and gradient.
///
/// MSE is `½‖pred−target‖²`; cosine is `1 − cos(pred, target)` (error on a
/// zero vector); max-margin is `max{0, γ + ‖pred−target‖ − ‖neg−target‖}`
/// and requires `context`.
pub fn evaluate_loss<S: Scalar>(
    kind: LossKind,
    pred: &[S],
    target: &[S],
    context: Option<MarginContext<'_, S>>,
) -> Result<LossEval<S>> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: pred.len(),
            context: "loss prediction vs target".into(),
        });
    }
    match kind {
        LossKind::Mse => {
            let upstream: Vec<S> = pred.iter().zip(target).map(|(&p, &t)| p - t).collect();
            let half = cast::<S>(0.5);
            let value = half * dot(&upstream, &upstream);
            Ok(LossEval {
                value,
                upstream,
                neg_upstream: None,
            })
        }
        LossKind::Cosine => {
            let np = norm(pred);
            let nt = norm(target);
            if np == S::zero() || nt == S::zero() {
                return Err(Error::ZeroVector { key: None });
            }
            let cos = dot(pred, target) / (np * nt);
            let value = S::one() - cos.min(S::one()).max(-S::one());
            // ∂(1−cos)/∂pred = cos·pred/|pred|² − target/(|pred||target|)
            let upstream: Vec<S> = pred
                .iter()
                .zip(target)
                .map(|(&p, &t)| cos * p / (np * np) - t / (np * nt))
                .collect();
            Ok(LossEval {
                value,
                upstream,
                neg_upstream: None,
            })
        }
        LossKind::MaxMargin => {
            let ctx = context.ok_or_else(|| {
                Error::InvalidArgument("max_margin loss requires a negative example".into())
            })?;
            if ctx.neg_pred.len() != target.len() {
                return Err(Error::DimensionMismatch {
                    expected: target.len(),
                    got: ctx.neg_pred.len(),
                    context: "negative prediction vs target".into(),
                });
            }
            if ctx.margin < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "margin must be non-negative, got {}",
                    ctx.margin
                )));
            }
            let pos_dist = euclidean_distance(pred, target);
            let neg_dist = euclidean_distance(ctx.neg_pred, target);
            let raw = cast::<S>(ctx.margin) + pos_dist - neg_dist;
            if raw > S::zero() {
                let diff_pos: Vec<S> =
                    pred.iter().zip(target).map(|(&p, &t)| p - t).collect();
                let diff_neg: Vec<S> = ctx
                    .neg_pred
                    .iter()
                    .zip(target)
                    .map(|(&p, &t)| p - t)
                    .collect();
                let mut neg_upstream = norm_gradient(&diff_neg);
                for g in &mut neg_upstream {
                    *g = -*g;
                }
                Ok(LossEval {
                    value: raw,
                    upstream: norm_gradient(&diff_pos),
                    neg_upstream: Some(neg_upstream),
                })
            } else {
                Ok(LossEval {
                    value: S::zero(),
                    upstream: vec![S::zero(); pred.len()],
                    neg_upstream: Some(vec![S::zero(); pred.len()]),
                })
            }
        }
    }
}
