//! Text preprocessing: joint BPE, the shared vocabulary, corpus loading, and
//! pre-trained word embedding files.

mod bpe;
mod corpus;
mod vocab;
mod wordemb;

pub use bpe::{bpe_decode, BpeModel, END_OF_WORD};
pub use corpus::{
    load_mono_corpus, load_parallel_corpus, mono_from_lines, normalize_whitespace,
    parallel_from_lines, read_lines, token_slices, ParallelCorpus, Preprocess, Sentence,
};
pub use vocab::{Vocabulary, BOS, EOS, PAD, RESERVED, UNK};
pub use wordemb::{load_word_embeddings, parse_word_embeddings, WordEmbeddingTable};
