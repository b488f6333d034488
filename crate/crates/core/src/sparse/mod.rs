//! Stage 1: tokenization, in-memory inverted index, Okapi BM25 and RM3 feedback.

mod bm25;
mod index;
mod rm3;
mod tokenizer;

pub use bm25::{bm25_retrieve, idf, retrieve_weighted, tf_component, Bm25Params, STAGE_TAG};
pub use index::{IndexStats, InvertedIndex};
pub use rm3::{
    relevance_model, rm3_expand, rm3_retrieve, ExpandedQuery, ExpansionTerm, Rm3Config,
    STAGE_TAG as RM3_STAGE_TAG,
};
pub use tokenizer::{Stemmer, TokenizerConfig};
