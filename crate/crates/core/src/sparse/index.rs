use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::tokenizer::TokenizerConfig;
use crate::error::{Error, Result};
use crate::model::Document;

/// In-memory inverted index with a forward (doc → term counts) view for
/// feedback. Immutable after build.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    tokenizer: TokenizerConfig,
    vocab: Vec<String>,
    term_ids: HashMap<String, u32>,
    /// Per term id, `(internal doc id, tf)` in ascending doc order.
    postings: Vec<Vec<(u32, u32)>>,
    /// Per internal doc id, `(term id, tf)` in first-occurrence order.
    forward: Vec<Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    doc_index: HashMap<String, u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexStats {
    pub doc_count: usize,
    pub vocabulary: usize,
    pub avg_doc_length: f64,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    tokenizer: TokenizerConfig,
    vocab: Vec<String>,
    doc_ids: Vec<String>,
    forward: Vec<Vec<(u32, u32)>>,
}

impl InvertedIndex {
    /// Title and body are concatenated, title first, before tokenization.
    pub fn build(docs: &[Document], tokenizer: TokenizerConfig) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut vocab = Vec::new();
        let mut term_ids: HashMap<String, u32> = HashMap::new();
        let mut forward = Vec::with_capacity(docs.len());
        let mut doc_ids = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut counts: Vec<(u32, u32)> = Vec::new();
            let mut slot: HashMap<u32, usize> = HashMap::new();
            for tok in tokenizer.tokenize(&doc.full_text()) {
                let id = *term_ids.entry(tok).or_insert_with_key(|k| {
                    vocab.push(k.clone());
                    (vocab.len() - 1) as u32
                });
                match slot.get(&id) {
                    Some(&i) => counts[i].1 += 1,
                    None => {
                        slot.insert(id, counts.len());
                        counts.push((id, 1));
                    }
                }
            }
            forward.push(counts);
            doc_ids.push(doc.doc_id.clone());
        }
        Self::assemble(tokenizer, vocab, doc_ids, forward)
    }

    fn assemble(
        tokenizer: TokenizerConfig,
        vocab: Vec<String>,
        doc_ids: Vec<String>,
        forward: Vec<Vec<(u32, u32)>>,
    ) -> Result<Self> {
        let mut doc_index = HashMap::with_capacity(doc_ids.len());
        for (i, id) in doc_ids.iter().enumerate() {
            if doc_index.insert(id.clone(), i as u32).is_some() {
                return Err(Error::Duplicate {
                    what: "doc_id",
                    id: id.clone(),
                });
            }
        }
        let term_ids = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let mut postings = vec![Vec::new(); vocab.len()];
        let mut doc_lengths = Vec::with_capacity(forward.len());
        for (d, terms) in forward.iter().enumerate() {
            let mut len = 0u32;
            for &(t, tf) in terms {
                let list: &mut Vec<(u32, u32)> = postings
                    .get_mut(t as usize)
                    .ok_or_else(|| Error::invalid(format!("term id {t} out of range")))?;
                list.push((d as u32, tf));
                len += tf;
            }
            doc_lengths.push(len);
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Ok(Self {
            tokenizer,
            vocab,
            term_ids,
            postings,
            forward,
            doc_lengths,
            avg_doc_length,
            doc_ids,
            doc_index,
        })
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            doc_count: self.doc_count(),
            vocabulary: self.vocabulary_size(),
            avg_doc_length: self.avg_doc_length,
        }
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.vocab[id as usize]
    }

    /// Document frequency of an (already normalized) term; 0 if unseen.
    pub fn doc_frequency(&self, term: &str) -> usize {
        self.term_id(term)
            .map_or(0, |t| self.postings[t as usize].len())
    }

    pub fn postings(&self, term_id: u32) -> &[(u32, u32)] {
        &self.postings[term_id as usize]
    }

    /// Term frequency of `term` in the document with external id `doc_id`.
    pub fn term_frequency(&self, term: &str, doc_id: &str) -> u32 {
        let (Some(t), Some(&d)) = (self.term_id(term), self.doc_index.get(doc_id)) else {
            return 0;
        };
        self.forward[d as usize]
            .iter()
            .find(|(id, _)| *id == t)
            .map_or(0, |&(_, tf)| tf)
    }

    pub fn doc_length(&self, internal: u32) -> u32 {
        self.doc_lengths[internal as usize]
    }

    pub fn doc_terms(&self, internal: u32) -> &[(u32, u32)] {
        &self.forward[internal as usize]
    }

    pub fn external_id(&self, internal: u32) -> &str {
        &self.doc_ids[internal as usize]
    }

    pub fn internal_id(&self, external: &str) -> Option<u32> {
        self.doc_index.get(external).copied()
    }

    /// Writes a JSON snapshot from which the index can be reassembled.
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let snap = Snapshot {
            tokenizer: self.tokenizer.clone(),
            vocab: self.vocab.clone(),
            doc_ids: self.doc_ids.clone(),
            forward: self.forward.clone(),
        };
        serde_json::to_writer(w, &snap)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let snap: Snapshot = serde_json::from_reader(r)?;
        if snap.doc_ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Self::assemble(snap.tokenizer, snap.vocab, snap.doc_ids, snap.forward)
    }
}
