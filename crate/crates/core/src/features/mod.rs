//! Feature construction: property matrices with log + PCA, and bag-of-words.

mod bow;
mod matrix;
mod pca;
mod porter;
mod stopwords;

pub use bow::{bow_matrix, bow_preprocess, read_bow_triplets, split_identifier, write_bow_triplets, Vocabulary};
pub use matrix::{log_transform, FeatureMatrix};
pub use pca::{pca_fit, pca_transform, PcaModel, DEFAULT_VARIANCE_TARGET};
pub use porter::porter_stem;
pub use stopwords::{is_stop_word, STOP_WORDS};
