//! Seeded toy collections for tests, examples and offline demos.
//!
//! Filler text is drawn from a small pseudo-word vocabulary. Each query has
//! one target document carrying three signature words that occur nowhere
//! else, and the query repeats them inside conversational filler, so the
//! target is always reachable by BM25.

use std::io::Write;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::model::{write_qrels, write_queries, Document, Qrels, Query};

const COMMON: &[&str] = &["ba", "ko", "mi", "tu", "re", "na", "lo", "pi", "ga", "mo"];
const SIGNATURE: &[&str] = &["zu", "qi", "xo", "vy", "ja", "wu", "ke", "fo"];
const FILLER: &[&str] = &[
    "i remember a story about",
    "it might have been something with",
    "i think there was",
    "not sure but maybe",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub docs: usize,
    pub queries: usize,
    pub body_words: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            docs: 200,
            queries: 20,
            body_words: 40,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCollection {
    pub docs: Vec<Document>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[(rng.next_u32() as usize) % items.len()]
}

fn common_word(rng: &mut ChaCha8Rng) -> String {
    format!("{}{}", pick(rng, COMMON), pick(rng, COMMON))
}

/// Three-syllable word encoding `code` in base 8; distinct codes give distinct words.
fn signature_word(code: usize) -> String {
    let n = SIGNATURE.len();
    [code / (n * n), (code / n) % n, code % n]
        .iter()
        .map(|&i| SIGNATURE[i % n])
        .collect()
}

pub fn doc_id(i: usize) -> String {
    format!("doc-{i:04}")
}

pub fn generate(spec: SyntheticSpec) -> Result<SyntheticCollection> {
    let capacity = SIGNATURE.len().pow(3) / 3;
    if spec.queries == 0 || spec.queries > spec.docs || spec.queries > capacity {
        return Err(Error::invalid(format!(
            "need 1 <= queries <= min(docs, {capacity})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let stride = spec.docs / spec.queries;
    let mut docs = Vec::with_capacity(spec.docs);
    let mut queries = Vec::with_capacity(spec.queries);
    let mut qrels = Qrels::default();
    for i in 0..spec.docs {
        let title = format!("{} {}", common_word(&mut rng), common_word(&mut rng));
        let mut body: Vec<String> = (0..spec.body_words).map(|_| common_word(&mut rng)).collect();
        if i % stride == stride / 2 && i / stride < spec.queries {
            let t = i / stride;
            let sig: Vec<String> = (0..3).map(|j| signature_word(t * 3 + j)).collect();
            for (j, w) in sig.iter().enumerate() {
                let at = (rng.next_u32() as usize) % body.len();
                body.insert(at, w.clone());
                body.insert((at + j + 1) % body.len(), w.clone());
            }
            let text = format!(
                "{} {} {} {} {}",
                pick(&mut rng, FILLER),
                sig.join(" "),
                common_word(&mut rng),
                common_word(&mut rng),
                common_word(&mut rng)
            );
            let qid = format!("q-{:03}", t + 1);
            qrels.insert(&qid, doc_id(i), 1);
            queries.push(Query::new(qid, text)?);
        }
        docs.push(Document::new(doc_id(i), title, body.join(" ")));
    }
    Ok(SyntheticCollection {
        docs,
        queries,
        qrels,
    })
}

impl SyntheticCollection {
    /// Writes `corpus.jsonl`, `queries.jsonl` and `qrels.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::path(dir, e))?;
        let mut corpus = Vec::new();
        for d in &self.docs {
            serde_json::to_writer(&mut corpus, d)?;
            corpus.write_all(b"\n")?;
        }
        let write = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| Error::path(&p, e))
        };
        write("corpus.jsonl", &corpus)?;
        let mut buf = Vec::new();
        write_queries(&mut buf, &self.queries)?;
        write("queries.jsonl", &buf)?;
        buf.clear();
        write_qrels(&mut buf, &self.qrels)?;
        write("qrels.txt", &buf)
    }
}
