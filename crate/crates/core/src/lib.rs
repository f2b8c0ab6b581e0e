//! Numerical toolkit for studying whether learned cross-modal vector
//! mappings preserve the neighborhood structure of their input space or of
//! their target space.
//!
//! The central quantity is the mean nearest-neighbor overlap (mNNO) between
//! two paired vector sets: the average fraction of K-nearest neighbors an
//! item shares across the two spaces. Around it sit linear and feed-forward
//! mapping models with exact analytic gradients, three training losses,
//! RMSprop mini-batch training with per-epoch overlap traces,
//! cross-validated grid search, rank statistics, and a synthetic paired-data
//! generator.
//!
//! All numeric code is generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); the `*64` aliases at the crate root fix the default
//! `f64` instantiation.

pub mod data;
pub mod error;
pub mod eval;
pub mod grid;
pub mod loss;
pub mod matrix;
pub mod model;
pub mod neighborhood;
pub mod optim;
pub mod scalar;
pub mod seeds;
pub mod similarity;
pub mod stats;
pub mod synth;
pub mod train;

pub use data::{
    aggregate_centroids, k_fold_split, load_paired_tsv, load_vector_set, pair_by_keys,
    write_paired_tsv, PairedDataset, PairingDiagnostics, VectorFormat, VectorSet,
};
pub use error::{Error, Result};
pub use eval::{
    load_benchmark_pairs, run_untrained_probe, score_word_pairs, BenchmarkPairs, ProbeMapping,
    ProbeRow, ScoredPairs,
};
pub use grid::{
    grid_search_cv, CellConfig, CellOutcome, CellStatus, GridSearchResult, GridSpace,
};
pub use loss::{evaluate_loss, LossEval, LossKind, MarginContext};
pub use matrix::Matrix;
pub use model::{
    backprop_into, forward, gradients, init_model, Activation, ForwardTrace, Gradients,
    InitScheme, Layer, MappingModel,
};
pub use neighborhood::{
    mean_nn_overlap, mean_overlap, mean_overlap_over, nn_overlap, top_k_neighbors, NeighborIndex,
};
pub use optim::{rmsprop_update, RmspropState};
pub use scalar::Scalar;
pub use seeds::derive_seed;
pub use similarity::{similarity, SimilarityMeasure};
pub use stats::{
    bonferroni_adjust, spearman_rho, wilcoxon_rank_sum_p, wilcoxon_rank_sum_p_approx,
    wilcoxon_rank_sum_p_exact,
};
pub use synth::{generate_synthetic_paired, planted_benchmark, CrossMap, SynthSpec};
pub use train::{
    evaluate_dataset_loss, select_negative, train, EpochRecord, OverlapScope, TrainConfig,
    TrainHistory, DIVERGENCE_LIMIT,
};

/// Default `f64` instantiations of the generic types.
pub type VectorSet64 = data::VectorSet<f64>;
pub type PairedDataset64 = data::PairedDataset<f64>;
pub type Matrix64 = matrix::Matrix<f64>;
pub type MappingModel64 = model::MappingModel<f64>;
pub type Layer64 = model::Layer<f64>;
pub type Gradients64 = model::Gradients<f64>;
pub type RmspropState64 = optim::RmspropState<f64>;
