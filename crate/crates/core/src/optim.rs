//! RMSprop parameter updates.

use crate::error::{Error, Result};
use crate::model::{Gradients, Layer, MappingModel};
use crate::scalar::{cast, Scalar};

/// Per-parameter squared-gradient accumulators, mirroring the model layers.
/// All entries stay non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct RmspropState<S> {
    pub layers: Vec<Layer<S>>,
}

impl<S: Scalar> RmspropState<S> {
    pub fn zeros_like(model: &MappingModel<S>) -> Self {
        RmspropState {
            layers: model
                .layers()
                .iter()
                .map(|l| Layer::zeros(l.d_out(), l.d_in()))
                .collect(),
        }
    }
}

#[inline]
fn update_slice<S: Scalar>(params: &mut [S], grads: &[S], acc: &mut [S], lr: S, rho: S, eps: S) {
    let one_minus_rho = S::one() - rho;
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(acc) {
        *a = rho * *a + one_minus_rho * g * g;
        *p -= lr * g / (a.sqrt() + eps);
    }
}

/// One RMSprop step, element-wise over every weight and bias:
/// `acc ← ρ·acc + (1−ρ)·g²`, then `param ← param − lr·g/(√acc + ε)`.
pub fn rmsprop_update<S: Scalar>(
    model: &mut MappingModel<S>,
    grads: &Gradients<S>,
    state: &mut RmspropState<S>,
    lr: f64,
    rho: f64,
    eps: f64,
) -> Result<()> {
    if grads.layers.len() != model.layers().len() || state.layers.len() != model.layers().len() {
        return Err(Error::DimensionMismatch {
            expected: model.layers().len(),
            got: grads.layers.len().min(state.layers.len()),
            context: "optimizer layer counts".into(),
        });
    }
    for ((layer, g), a) in model
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.layers)
    {
        if !layer.weights.same_shape(&g.weights) || !layer.weights.same_shape(&a.weights) {
            return Err(Error::DimensionMismatch {
                expected: layer.weights.n_rows() * layer.weights.n_cols(),
                got: g.weights.n_rows() * g.weights.n_cols(),
                context: "optimizer weight shapes".into(),
            });
        }
        update_slice(
            layer.weights.as_mut_slice(),
            g.weights.as_slice(),
            a.weights.as_mut_slice(),
            cast(lr),
            cast(rho),
            cast(eps),
        );
        update_slice(
            &mut layer.biases,
            &g.biases,
            &mut a.biases,
            cast(lr),
            cast(rho),
            cast(eps),
        );
    }
    Ok(())
}
