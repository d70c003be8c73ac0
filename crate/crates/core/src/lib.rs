//! # bisent
//!
//! Bilingual sentence embeddings learned by a source-to-target translation model
//! and a target autoencoder that share one decoder, plus the similarity measures
//! and corpus pipelines built on top of them.
//!
//! The shared decoder only sees a sentence through its initial state, the
//! element-wise max-pool of the encoder states. Training both encoders against
//! the same decoder pushes source and target sentences into one space, so a
//! source embedding `a` and a target embedding `b` can be compared directly.
//!
//! Modules, bottom-up:
//!
//! - [`numerics`]: GRU cell, softmax cross-entropy, max-pooling, SGD schedule and a
//!   finite-difference gradient checker.
//! - [`textprep`]: lowercasing and length filtering, joint BPE, the shared
//!   [`textprep::Vocabulary`], word2vec text embedding files.
//! - [`model`]: the encoder/decoder model, batching, training, posterior scoring and
//!   the `BSE1` checkpoint container.
//! - [`similarity`]: cosine, negated Euclidean, CSLS, the MLP classifier, Levenshtein,
//!   batched scoring and the `EMB1` embedding files.
//! - [`pipeline`]: alignment recovery, word-budget filtering, negative-set construction,
//!   score distributions and hubness reports.
//! - [`toy`]: synthetic bilingual corpora for smoke runs and tests.
//! - [`cli`]: the `bse` command-line tool.
//!
//! ```
//! use bisent::similarity::{cosine, euclidean_sim};
//!
//! assert!((cosine(&[1.0, 2.0], &[2.0, 1.0]).value - 0.8).abs() < 1e-12);
//! assert_eq!(euclidean_sim(&[0.0, 0.0], &[3.0, 4.0]), -5.0);
//! ```

pub mod cli;
pub mod container;
pub mod error;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod similarity;
pub mod textprep;
pub mod toy;

pub use error::{Error, Result};
