//! Linear and feed-forward mapping models: initialization, forward
//! evaluation, and exact analytic gradients via backpropagation.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::vector_set::VectorSet;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cast, cast_usize, Scalar};

/// Activation applied to hidden layers; the output layer is always affine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            // The subgradient at exactly 0 is taken as 0.
            Activation::Relu => {
                if z > S::zero() {
                    z
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => S::one() / (S::one() + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `h = σ(z)`.
    #[inline]
    pub fn derivative_from_output<S: Scalar>(self, h: S) -> S {
        match self {
            Activation::Relu => {
                if h > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => S::one() - h * h,
            Activation::Sigmoid => h * (S::one() - h),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::Tanh => write!(f, "tanh"),
            Activation::Sigmoid => write!(f, "sigmoid"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation `{other}` (expected relu, tanh, or sigmoid)"
            ))),
        }
    }
}

/// Weight initialization scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum InitScheme {
    /// Weights uniform in `[lo, hi)`, biases exactly zero.
    Uniform { lo: f64, hi: f64 },
    /// Weights uniform in `±sqrt(6 / (d_in + d_out))`, biases zero.
    #[default]
    FanInScaled,
}

/// One affine layer `z = W a + b` with `W: d_out × d_in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer<S> {
    pub weights: Matrix<S>,
    pub biases: Vec<S>,
}

impl<S: Scalar> Layer<S> {
    pub fn zeros(d_out: usize, d_in: usize) -> Self {
        Layer {
            weights: Matrix::zeros(d_out, d_in),
            biases: vec![S::zero(); d_out],
        }
    }

    pub fn d_in(&self) -> usize {
        self.weights.n_cols()
    }

    pub fn d_out(&self) -> usize {
        self.weights.n_rows()
    }

    fn affine(&self, a: &[S]) -> Vec<S> {
        let mut z = self.weights.matvec(a);
        for (zi, &bi) in z.iter_mut().zip(&self.biases) {
            *zi += bi;
        }
        z
    }
}

/// A stack of affine layers with a shared hidden activation. One layer is
/// the linear model; L+1 layers give L hidden layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingModel<S> {
    layers: Vec<Layer<S>>,
    hidden_activation: Activation,
}

impl<S: Scalar> MappingModel<S> {
    /// Builds a model from explicit layers, validating shape chaining and
    /// finiteness.
    pub fn from_layers(layers: Vec<Layer<S>>, hidden_activation: Activation) -> Result<Self> {
        let model = MappingModel {
            layers,
            hidden_activation,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidArgument(
                "model must have at least one layer".into(),
            ));
        }
        let mut prev_out: Option<usize> = None;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.d_in() == 0 || layer.d_out() == 0 {
                return Err(Error::InvalidArgument(format!(
                    "layer {l} has a zero dimension"
                )));
            }
            if let Some(prev) = prev_out {
                if layer.d_in() != prev {
                    return Err(Error::DimensionMismatch {
                        expected: prev,
                        got: layer.d_in(),
                        context: format!("layer {l} input"),
                    });
                }
            }
            if layer.biases.len() != layer.d_out() {
                return Err(Error::DimensionMismatch {
                    expected: layer.d_out(),
                    got: layer.biases.len(),
                    context: format!("layer {l} biases"),
                });
            }
            let finite = layer.weights.as_slice().iter().all(|w| w.is_finite())
                && layer.biases.iter().all(|b| b.is_finite());
            if !finite {
                return Err(Error::NonFinite {
                    key: format!("layer {l}"),
                    component: 0,
                });
            }
            prev_out = Some(layer.d_out());
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    /// Mutable parameter access for optimizers. Callers must preserve the
    /// layer shapes.
    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn d_out(&self) -> usize {
        self.layers[self.layers.len() - 1].d_out()
    }

    pub fn n_hidden(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::d_out)
            .collect()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    /// Evaluation-mode forward pass for one item (no dropout).
    pub fn forward_item(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch {
                expected: self.d_in(),
                got: x.len(),
                context: "forward input".into(),
            });
        }
        let last = self.layers.len() - 1;
        let mut a = self.layers[0].affine(x);
        if last > 0 {
            for v in &mut a {
                *v = self.hidden_activation.apply(*v);
            }
            for (l, layer) in self.layers.iter().enumerate().skip(1) {
                a = layer.affine(&a);
                if l < last {
                    for v in &mut a {
                        *v = self.hidden_activation.apply(*v);
                    }
                }
            }
        }
        Ok(a)
    }

    /// Forward pass that records everything backprop needs. `masks`, when
    /// present, holds one inverted-dropout mask per hidden layer (entries 0
    /// or 1/(1-p)) applied to that layer's activations.
    pub fn forward_trace(&self, x: &[S], masks: Option<&[Vec<S>]>) -> Result<ForwardTrace<S>> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch {
                expected: self.d_in(),
                got: x.len(),
                context: "forward input".into(),
            });
        }
        let n_hidden = self.n_hidden();
        if let Some(masks) = masks {
            if masks.len() != n_hidden {
                return Err(Error::DimensionMismatch {
                    expected: n_hidden,
                    got: masks.len(),
                    context: "dropout masks per hidden layer".into(),
                });
            }
        }
        let mut layer_inputs: Vec<Vec<S>> = Vec::with_capacity(self.layers.len());
        let mut hidden_outputs: Vec<Vec<S>> = Vec::with_capacity(n_hidden);
        layer_inputs.push(x.to_vec());
        for l in 0..n_hidden {
            let mut h = self.layers[l].affine(&layer_inputs[l]);
            for v in &mut h {
                *v = self.hidden_activation.apply(*v);
            }
            let mut a = h.clone();
            if let Some(masks) = masks {
                if masks[l].len() != a.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        got: masks[l].len(),
                        context: format!("dropout mask for hidden layer {l}"),
                    });
                }
                for (v, &m) in a.iter_mut().zip(&masks[l]) {
                    *v *= m;
                }
            }
            hidden_outputs.push(h);
            layer_inputs.push(a);
        }
        let output = self.layers[n_hidden].affine(&layer_inputs[n_hidden]);
        Ok(ForwardTrace {
            layer_inputs,
            hidden_outputs,
            output,
        })
    }

    /// JSON checkpoint listing dims, activation, and all parameters.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()>
    where
        S: Serialize,
    {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self>
    where
        S: DeserializeOwned,
    {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let model: MappingModel<S> = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Intermediate values from one traced forward pass.
///
/// `layer_inputs[l]` is the (post-dropout) input to layer l; `layer_inputs[0]`
/// is x itself. `hidden_outputs[l]` is hidden layer l's activation before
/// dropout, used for the activation derivative.
#[derive(Clone, Debug)]
pub struct ForwardTrace<S> {
    pub layer_inputs: Vec<Vec<S>>,
    pub hidden_outputs: Vec<Vec<S>>,
    pub output: Vec<S>,
}

/// Per-parameter gradients, one entry per model layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<S> {
    pub layers: Vec<Layer<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn zeros_like(model: &MappingModel<S>) -> Self {
        Gradients {
            layers: model
                .layers()
                .iter()
                .map(|l| Layer::zeros(l.d_out(), l.d_in()))
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: S) {
        for layer in &mut self.layers {
            for w in layer.weights.as_mut_slice() {
                *w *= factor;
            }
            for b in &mut layer.biases {
                *b *= factor;
            }
        }
    }
}

/// Deterministic model construction. Weight draw order: layer by layer,
/// row-major within each weight matrix. Biases start at zero.
pub fn init_model<S: Scalar>(
    d_x: usize,
    d_y: usize,
    hidden_dims: &[usize],
    activation: Activation,
    scheme: InitScheme,
    seed: u64,
) -> Result<MappingModel<S>> {
    if d_x == 0 || d_y == 0 || hidden_dims.contains(&0) {
        return Err(Error::InvalidArgument(
            "model dimensions must be positive".into(),
        ));
    }
    if let InitScheme::Uniform { lo, hi } = scheme {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "uniform init needs finite lo < hi, got [{lo}, {hi})"
            )));
        }
    }
    let mut dims = Vec::with_capacity(hidden_dims.len() + 2);
    dims.push(d_x);
    dims.extend_from_slice(hidden_dims);
    dims.push(d_y);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (d_in, d_out) = (w[0], w[1]);
        let (lo, hi) = match scheme {
            InitScheme::Uniform { lo, hi } => (lo, hi),
            InitScheme::FanInScaled => {
                let limit = (6.0 / (d_in + d_out) as f64).sqrt();
                (-limit, limit)
            }
        };
        let mut weights = Matrix::zeros(d_out, d_in);
        for v in weights.as_mut_slice() {
            let u: f64 = rng.random();
            *v = cast(lo + u * (hi - lo));
        }
        layers.push(Layer {
            weights,
            biases: vec![S::zero(); d_out],
        });
    }
    MappingModel::from_layers(layers, activation)
}

/// Maps every row of `x` through the model, preserving keys.
pub fn forward<S: Scalar>(model: &MappingModel<S>, x: &VectorSet<S>) -> Result<VectorSet<S>> {
    let mut rows = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        rows.push(model.forward_item(x.vector(i))?);
    }
    x.with_values(Matrix::from_rows(rows)?)
}

/// Adds one item's un-averaged gradient contribution to `grads`, given the
/// item's forward trace and `upstream = ∂loss/∂output`.
pub fn backprop_into<S: Scalar>(
    model: &MappingModel<S>,
    trace: &ForwardTrace<S>,
    masks: Option<&[Vec<S>]>,
    upstream: &[S],
    grads: &mut Gradients<S>,
) -> Result<()> {
    if upstream.len() != model.d_out() {
        return Err(Error::DimensionMismatch {
            expected: model.d_out(),
            got: upstream.len(),
            context: "upstream gradient".into(),
        });
    }
    let n_hidden = model.n_hidden();
    let mut delta = upstream.to_vec();
    for l in (0..model.layers().len()).rev() {
        // Accumulate this layer's parameter gradients: δ ⊗ a_l and δ.
        let a = &trace.layer_inputs[l];
        let g = &mut grads.layers[l];
        for (r, &d) in delta.iter().enumerate() {
            let row = g.weights.row_mut(r);
            for (gw, &ai) in row.iter_mut().zip(a) {
                *gw += d * ai;
            }
            g.biases[r] += d;
        }
        if l == 0 {
            break;
        }
        // Propagate to the previous hidden layer: Wᵀδ, then dropout mask,
        // then the activation derivative.
        let mut prev = model.layers()[l].weights.matvec_transposed(&delta);
        let hid = l - 1;
        if let Some(masks) = masks {
            for (p, &m) in prev.iter_mut().zip(&masks[hid]) {
                *p *= m;
            }
        }
        debug_assert!(hid < n_hidden);
        for (p, &h) in prev.iter_mut().zip(&trace.hidden_outputs[hid]) {
            *p *= model.hidden_activation().derivative_from_output(h);
        }
        delta = prev;
    }
    Ok(())
}

/// Batch-averaged analytic gradients: each slot is forwarded (with its own
/// dropout masks when given), backpropagated with its upstream, and the sum
/// is divided by the slot count.
pub fn gradients<S: Scalar>(
    model: &MappingModel<S>,
    inputs: &[&[S]],
    upstreams: &[Vec<S>],
    masks: Option<&[Vec<Vec<S>>]>,
) -> Result<Gradients<S>> {
    if inputs.len() != upstreams.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: upstreams.len(),
            context: "inputs vs upstreams".into(),
        });
    }
    if let Some(masks) = masks {
        if masks.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: masks.len(),
                context: "inputs vs mask sets".into(),
            });
        }
    }
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("gradient batch is empty".into()));
    }
    let mut grads = Gradients::zeros_like(model);
    for (slot, (&x, upstream)) in inputs.iter().zip(upstreams).enumerate() {
        if upstream.iter().all(|&u| u == S::zero()) {
            continue;
        }
        let slot_masks = masks.map(|m| m[slot].as_slice());
        let trace = model.forward_trace(x, slot_masks)?;
        backprop_into(model, &trace, slot_masks, upstream, &mut grads)?;
    }
    grads.scale(S::one() / cast_usize(inputs.len()));
    Ok(grads)
}
