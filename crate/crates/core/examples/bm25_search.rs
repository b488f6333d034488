//! Builds an inverted index over a small corpus and runs BM25 with and
//! without RM3 expansion.
//!
//! cargo run --example bm25_search -- "query text"

use tot_cascade::model::{Document, Query};
use tot_cascade::sparse::{bm25_retrieve, rm3_expand, Bm25Params, InvertedIndex, Rm3Config, TokenizerConfig};

fn main() -> tot_cascade::Result<()> {
    let docs = vec![
        Document::new("martian", "The Martian", "An astronaut stranded on Mars grows potatoes to survive."),
        Document::new("gravity", "Gravity", "Two astronauts drift through orbit after debris destroys their shuttle."),
        Document::new("moon", "Moon", "A lone worker on a lunar base nears the end of his contract."),
        Document::new("interstellar", "Interstellar", "Astronauts travel through a wormhole searching for a new home."),
        Document::new("cast-away", "Cast Away", "A courier stranded on an island learns to survive alone."),
    ];
    let index = InvertedIndex::build(&docs, TokenizerConfig::default().with_english_stopwords())?;
    let stats = index.stats();
    println!("N={} vocabulary={} avgdl={:.2}", stats.doc_count, stats.vocabulary, stats.avg_doc_length);

    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "movie where a guy is stranded and grows potatoes".into());
    let query = Query::new("q1", text)?;
    let params = Bm25Params::default();

    println!("\nBM25 k1={} b={}", params.k1, params.b);
    for e in &bm25_retrieve(&index, &query, params, 10)?.entries {
        println!("{:>2}. {:<13} {:.4}", e.rank, e.doc_id, e.score);
    }

    let expanded = rm3_expand(&index, &query, params, Rm3Config::default())?;
    println!("\nRM3 expansion terms");
    for t in &expanded.terms {
        println!("  {:<12} {:.4}", t.term, t.weight);
    }
    Ok(())
}
