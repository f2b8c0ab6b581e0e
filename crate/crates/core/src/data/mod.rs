//! Vector storage, pairing, fold splitting, and text ingestion.

pub mod io;
pub mod paired;
pub mod vector_set;

pub use io::{load_paired_tsv, load_vector_set, write_paired_tsv, VectorFormat};
pub use paired::{k_fold_split, pair_by_keys, PairedDataset, PairingDiagnostics};
pub use vector_set::{aggregate_centroids, VectorSet};
