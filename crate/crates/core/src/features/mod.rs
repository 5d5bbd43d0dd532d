//! Feature ingestion and preprocessing.

mod io;
mod matrix;
mod pairs;
mod pca;
mod synth;

pub use io::{
    load_features, load_labels, load_pairs, read_binary, read_csv, read_pairs, save_features,
    save_labels, save_pairs, write_binary, write_csv, write_pairs, FeatureFormat,
};
pub use matrix::{zero_pad, FeatureMatrix};
pub use pairs::{sample_pairs, Pair, PairSet};
pub use pca::{apply_pca, fit_pca, PcaModel};
pub use synth::{gen_synthetic, SyntheticParams};
