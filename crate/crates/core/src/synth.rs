//! Synthetic paired-modality data with controllable cluster structure: class
//! centers in X-space, a fixed random cross-modal map T, and independent
//! per-modality noise. The noise_y knob controls how much of X's
//! neighborhood structure survives in Y.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::paired::PairedDataset;
use crate::data::vector_set::VectorSet;
use crate::error::{Error, Result};
use crate::eval::BenchmarkPairs;
use crate::model::{init_model, Activation, InitScheme, MappingModel};
use crate::scalar::{cast, to_f64, Scalar};
use crate::seeds::derive_seed;
use crate::similarity::{similarity, SimilarityMeasure};

/// Functional form of the fixed cross-modal map T.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossMap {
    Linear,
    TanhMlp,
}

impl fmt::Display for CrossMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossMap::Linear => write!(f, "linear"),
            CrossMap::TanhMlp => write!(f, "tanh_mlp"),
        }
    }
}

impl FromStr for CrossMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CrossMap::Linear),
            "tanh_mlp" => Ok(CrossMap::TanhMlp),
            other => Err(Error::InvalidArgument(format!(
                "unknown cross map `{other}` (expected linear or tanh_mlp)"
            ))),
        }
    }
}

/// Recipe for one synthetic paired dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub items_per_class: usize,
    pub d_x: usize,
    pub d_y: usize,
    pub cross_map: CrossMap,
    /// Isotropic Gaussian noise std added to each x around its class center.
    pub noise_x: f64,
    /// Isotropic Gaussian noise std added to each y around T(center).
    pub noise_y: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 20,
            items_per_class: 25,
            d_x: 32,
            d_y: 32,
            cross_map: CrossMap::Linear,
            noise_x: 0.5,
            noise_y: 0.5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.items_per_class == 0 {
            return Err(Error::InvalidArgument(
                "synthetic data needs at least one class and one item per class".into(),
            ));
        }
        if self.d_x == 0 || self.d_y == 0 {
            return Err(Error::InvalidArgument(
                "synthetic dimensions must be positive".into(),
            ));
        }
        for (name, v) in [("noise_x", self.noise_x), ("noise_y", self.noise_y)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a finite non-negative number, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.n_classes * self.items_per_class
    }
}

fn normal_vec<S: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<S> {
    (0..dim)
        .map(|_| cast(rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Generates a labeled paired dataset:
/// `x_i = c_k + noise_x·ε`, `y_i = T(c_k) + noise_y·ε'` with class centers
/// `c_k ~ N(0, I)` and T a fixed random map with uniform[-1,1) parameters.
///
/// Deterministic given the seed. The unit noise draws do not depend on the
/// noise scales, so regenerating with a larger noise_y perturbs the same
/// directions further.
pub fn generate_synthetic_paired<S: Scalar>(spec: &SynthSpec) -> Result<PairedDataset<S>> {
    spec.validate()?;

    let mut center_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[0]));
    let centers: Vec<Vec<S>> = (0..spec.n_classes)
        .map(|_| normal_vec(&mut center_rng, spec.d_x))
        .collect();

    let hidden: &[usize] = match spec.cross_map {
        CrossMap::Linear => &[],
        CrossMap::TanhMlp => &[spec.d_x],
    };
    let t_map: MappingModel<S> = init_model(
        spec.d_x,
        spec.d_y,
        hidden,
        Activation::Tanh,
        InitScheme::Uniform { lo: -1.0, hi: 1.0 },
        derive_seed(spec.seed, &[1]),
    )?;
    let mapped_centers: Vec<Vec<S>> = centers
        .iter()
        .map(|c| t_map.forward_item(c))
        .collect::<Result<_>>()?;

    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[2]));
    let sx = cast::<S>(spec.noise_x);
    let sy = cast::<S>(spec.noise_y);
    let n = spec.n_items();
    let mut keys = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..spec.n_classes {
        for j in 0..spec.items_per_class {
            keys.push(format!("c{k:03}_i{j:03}"));
            labels.push(format!("c{k:03}"));
            let ex = normal_vec::<S>(&mut noise_rng, spec.d_x);
            let ey = normal_vec::<S>(&mut noise_rng, spec.d_y);
            xs.push(
                centers[k]
                    .iter()
                    .zip(&ex)
                    .map(|(&c, &e)| c + sx * e)
                    .collect(),
            );
            ys.push(
                mapped_centers[k]
                    .iter()
                    .zip(&ey)
                    .map(|(&c, &e)| c + sy * e)
                    .collect(),
            );
        }
    }
    let x = VectorSet::from_rows(keys.clone(), xs)?;
    let y = VectorSet::from_rows(keys, ys)?;
    PairedDataset::new(x, y, Some(labels))
}

/// Benchmark whose gold ratings are the actual similarities of randomly
/// drawn item pairs in `v`: a similarity-prediction task with a known
/// perfect answer.
pub fn planted_benchmark<S: Scalar>(
    v: &VectorSet<S>,
    n_pairs: usize,
    measure: SimilarityMeasure,
    seed: u64,
) -> Result<BenchmarkPairs> {
    if v.len() < 2 {
        return Err(Error::InvalidArgument(
            "planted benchmark needs at least two items".into(),
        ));
    }
    if n_pairs == 0 {
        return Err(Error::InvalidArgument(
            "planted benchmark needs at least one pair".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let i = rng.random_range(0..v.len());
        let j = loop {
            let j = rng.random_range(0..v.len());
            if j != i {
                break j;
            }
        };
        let rating = to_f64(similarity(v.vector(i), v.vector(j), measure)?);
        rows.push((v.key(i).to_string(), v.key(j).to_string(), rating));
    }
    BenchmarkPairs::new("planted", rows)
}
