//! Renders a listwise re-ranking prompt and shows how model output is parsed
//! back into a permutation of the shown candidates.

use tot_cascade::listwise::{build_listwise_prompt, parse_ranking, LlmRerankConfig};
use tot_cascade::model::{Corpus, Document, Query, RankedList};

fn main() -> tot_cascade::Result<()> {
    let corpus = Corpus::new(vec![
        Document::new("d1", "Moon", "A lone worker on a lunar base nears the end of his contract."),
        Document::new("d2", "The Martian", "An astronaut stranded on Mars grows potatoes."),
        Document::new("d3", "Gravity", "Two astronauts drift through orbit."),
    ])?;
    let candidates = RankedList::from_ordered(
        "q1",
        "cross",
        vec![("d1".into(), 0.9), ("d2".into(), 0.8), ("d3".into(), 0.1)],
    );
    let query = Query::new("q1", "astronaut potatoes mars stranded")?;
    let request = build_listwise_prompt(&query, &candidates, &corpus, &LlmRerankConfig::default())?;
    println!("{}\n", request.user_text().unwrap_or_default());

    let shown: Vec<String> = candidates.doc_ids().map(String::from).collect();
    for output in [
        "[d2] > [d1] > [d3]",
        "[d2] > [d2] > [d9]",
        "Ranking: d3, d2",
        "I think the answer is...",
    ] {
        let parsed = parse_ranking(output, &shown);
        println!("{output:<28} -> {:?} degenerate={}", parsed.order, parsed.degenerate);
    }
    Ok(())
}
