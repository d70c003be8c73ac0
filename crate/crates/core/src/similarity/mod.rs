//! Similarity measures over sentence embeddings.
//!
//! Predefined measures ([`cosine`], [`euclidean_sim`], [`csls`]) need nothing but the
//! vectors (plus the two embedding sets for CSLS); the MLP classifier is trained on
//! labelled pairs with [`mlp_train`]. [`score_pairs`] and [`score_cross`] run any
//! measure, including the Levenshtein and NMT-posterior baselines, over whole
//! corpora.

mod embfile;
mod knn;
mod measures;
mod mlp;
mod scoring;

pub use embfile::{read_embeddings, read_scores_tsv, write_embeddings, write_scores_tsv, EMB_MAGIC};
pub use knn::{
    cosine_block, csls, csls_block, knn_penalties, top_k_mean, CslsConfig, EmbeddingMatrix,
};
pub use measures::{cosine, euclidean_sim, levenshtein, levenshtein_sim, Cosine, DEGENERATE_NORM};
pub use mlp::{
    load_mlp, mlp_forward, mlp_loss_and_grads, mlp_train, save_mlp, LabeledPairs, MlpParams, MlpTrainConfig, MLP_MAGIC,
};
pub use scoring::{
    score_cross, score_cross_matrix, score_pairs, Measure, PosteriorCombine, PosteriorResources,
    ScoringResources,
};
