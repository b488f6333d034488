//! Stage 4: listwise LLM re-ranking.
//!
//! The top `k_cross` candidates of the cross-encoder list are shown to the
//! model in a single prompt as `[doc_id] snippet` lines, with each snippet
//! cut to the first 500 characters of title + body. The model answers with a
//! permutation `[ID] > [ID] > ...`, which is parsed leniently: unknown and
//! repeated ids are dropped and anything never mentioned is appended in its
//! original order, so the result is always a permutation of what was shown.
//!
//! The final list is that permutation followed by the unshown tail of the
//! input, untouched. Its first `k_llm` positions are the ones the model is
//! credited with deciding. Scores are `1/rank`; the model emits none.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{truncate_snippet, Corpus, Query, RankedList};
use crate::services::{ChatClient, ChatMessage, ChatRequest, DecodingConfig};

pub const STAGE_TAG: &str = "llm";

pub const LISTWISE_TEMPLATE: &str = "You are an expert search relevance ranker.
Your task is to re-rank the following candidate documents based on their relevance to the user query.
The goal is to place the true relevant document at the very top (Rank 1).

Query: {query}

Candidates:
{candidates}

Instructions:
1. Analyze the query and the candidates carefully.
2. Output the ranking as a list of IDs in order of relevance, from most relevant to least relevant.
3. Use the format: [ID] > [ID] > [ID] ...
4. Only output the ranking, no explanation.

Ranking:";

const QUERY_SLOT: &str = "{query}";
const CANDIDATES_SLOT: &str = "{candidates}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmRerankConfig {
    pub model: String,
    /// Candidates shown to the model.
    pub k_cross: usize,
    /// Leading positions attributed to the model's decision.
    pub k_llm: usize,
    pub snippet_chars: usize,
    pub decoding: DecodingConfig,
}

impl Default for LlmRerankConfig {
    fn default() -> Self {
        Self {
            model: "Qwen2.5-72B-Instruct-AWQ".into(),
            k_cross: 30,
            k_llm: 10,
            snippet_chars: 500,
            decoding: DecodingConfig::default(),
        }
    }
}

impl LlmRerankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_cross == 0 || self.k_llm == 0 {
            return Err(Error::invalid("k_cross and k_llm must be >= 1"));
        }
        if self.k_llm > self.k_cross {
            return Err(Error::invalid(format!(
                "k_llm ({}) must not exceed k_cross ({})",
                self.k_llm, self.k_cross
            )));
        }
        if self.snippet_chars == 0 {
            return Err(Error::invalid("snippet_chars must be >= 1"));
        }
        Ok(())
    }
}

/// Renders the template with both slots filled in one pass, so slot-like text
/// inside the query or snippets is never substituted again.
pub fn render_listwise(query: &str, candidates: &str) -> String {
    let (head, rest) = LISTWISE_TEMPLATE
        .split_once(QUERY_SLOT)
        .expect("template has a query slot");
    let (mid, tail) = rest
        .split_once(CANDIDATES_SLOT)
        .expect("template has a candidates slot");
    let mut out = String::with_capacity(LISTWISE_TEMPLATE.len() + query.len() + candidates.len());
    out.push_str(head);
    out.push_str(query);
    out.push_str(mid);
    out.push_str(candidates);
    out.push_str(tail);
    out
}

/// `[doc_id] snippet` with line breaks flattened so each candidate stays on one line.
pub fn candidate_line(doc_id: &str, text: &str, snippet_chars: usize) -> String {
    let snippet: String = truncate_snippet(text, snippet_chars)
        .chars()
        .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
        .collect();
    format!("[{doc_id}] {snippet}")
}

/// One user message carrying the rendered prompt; candidates in input order.
pub fn build_listwise_prompt(
    query: &Query,
    candidates: &RankedList,
    corpus: &Corpus,
    cfg: &LlmRerankConfig,
) -> Result<ChatRequest> {
    if candidates.is_empty() || candidates.len() > cfg.k_cross {
        return Err(Error::invalid(format!(
            "listwise prompt needs 1..={} candidates, got {}",
            cfg.k_cross,
            candidates.len()
        )));
    }
    let lines = candidates
        .entries
        .iter()
        .map(|e| {
            let doc = corpus.lookup(&e.doc_id)?;
            Ok(candidate_line(&e.doc_id, &doc.full_text(), cfg.snippet_chars))
        })
        .collect::<Result<Vec<_>>>()?;
    let prompt = render_listwise(&query.text, &lines.join("\n"));
    Ok(ChatRequest::new(
        &cfg.model,
        vec![ChatMessage::user(prompt)],
        cfg.decoding,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRanking {
    pub order: Vec<String>,
    /// No shown id could be recovered from the response.
    pub degenerate: bool,
}

const SEPARATORS: &[char] = &['>', ',', ';', '|'];
const EDGE_PUNCT: &[char] = &['.', ',', ':', ';', '(', ')', '"', '\'', '`', '*', '<', '>'];

fn bare_tokens<'a>(text: &'a str, out: &mut Vec<&'a str>) {
    for raw in text.split(|c: char| c.is_whitespace() || SEPARATORS.contains(&c)) {
        if !raw.is_empty() {
            out.push(raw);
        }
    }
}

/// Mentions in order of appearance: bracketed contents and bare words.
fn mentions(output: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = output;
    while let Some(open) = rest.find('[') {
        bare_tokens(&rest[..open], &mut out);
        let after = &rest[open + 1..];
        match after.find(']') {
            Some(close) => {
                out.push(after[..close].trim());
                rest = &after[close + 1..];
            }
            None => {
                bare_tokens(after, &mut out);
                rest = "";
            }
        }
    }
    bare_tokens(rest, &mut out);
    out
}

/// Total parse of a model ranking into a permutation of `shown_ids`.
pub fn parse_ranking(output: &str, shown_ids: &[String]) -> ParsedRanking {
    let shown: HashSet<&str> = shown_ids.iter().map(String::as_str).collect();
    let mut taken: HashSet<&str> = HashSet::with_capacity(shown_ids.len());
    let mut order = Vec::with_capacity(shown_ids.len());
    for m in mentions(output) {
        let id = if shown.contains(m) {
            m
        } else {
            let trimmed = m.trim_matches(EDGE_PUNCT);
            if !shown.contains(trimmed) {
                continue;
            }
            trimmed
        };
        if taken.insert(id) {
            order.push(id.to_string());
        }
    }
    let degenerate = order.is_empty();
    for id in shown_ids {
        if taken.insert(id.as_str()) {
            order.push(id.clone());
        }
    }
    ParsedRanking { order, degenerate }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "kebab-case")]
pub enum RerankFlag {
    /// Service failed; the input order was kept.
    Fallback { error: String },
    /// The response named no shown id; the input order was kept.
    ParseDegenerate { response: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListwiseOutcome {
    pub list: RankedList,
    /// Number of leading positions decided by the model.
    pub llm_decided: usize,
    pub flag: Option<RerankFlag>,
}

fn with_reciprocal_scores(query_id: &str, ids: Vec<String>) -> RankedList {
    let scored = ids
        .into_iter()
        .enumerate()
        .map(|(i, d)| (d, 1.0 / (i + 1) as f64))
        .collect();
    RankedList::from_ordered(query_id, STAGE_TAG, scored)
}

pub fn llm_rerank(
    query: &Query,
    stage3: &RankedList,
    corpus: &Corpus,
    client: &dyn ChatClient,
    cfg: &LlmRerankConfig,
) -> Result<ListwiseOutcome> {
    cfg.validate()?;
    let all: Vec<String> = stage3.doc_ids().map(String::from).collect();
    if all.len() <= 1 {
        return Ok(ListwiseOutcome {
            list: with_reciprocal_scores(&query.query_id, all),
            llm_decided: 0,
            flag: None,
        });
    }
    let shown_n = cfg.k_cross.min(all.len());
    let shown = stage3.truncated(shown_n);
    let request = build_listwise_prompt(query, &shown, corpus, cfg)?;
    let (perm, flag) = match client.complete(&request) {
        Ok(text) => {
            let parsed = parse_ranking(&text, &all[..shown_n]);
            let flag = parsed
                .degenerate
                .then(|| RerankFlag::ParseDegenerate { response: text });
            (parsed.order, flag)
        }
        Err(e) => {
            tracing::warn!(query_id = %query.query_id, error = %e, "listwise re-ranking fell back to input order");
            (
                all[..shown_n].to_vec(),
                Some(RerankFlag::Fallback {
                    error: e.to_string(),
                }),
            )
        }
    };
    let llm_decided = if flag.is_some() { 0 } else { cfg.k_llm.min(shown_n) };
    let ids = perm.into_iter().chain(all[shown_n..].iter().cloned()).collect();
    Ok(ListwiseOutcome {
        list: with_reciprocal_scores(&query.query_id, ids),
        llm_decided,
        flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Document;
    use crate::services::mock::{FixedChat, ListwiseMock, UnreachableChat};

    fn shown(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn clean_parse() {
        let p = parse_ranking("[d2] > [d1] > [d3]", &shown(&["d1", "d2", "d3"]));
        assert_eq!(p.order, ["d2", "d1", "d3"]);
        assert!(!p.degenerate);
    }

    #[test]
    fn repair_duplicates_and_foreign() {
        let p = parse_ranking("[d2] > [d2] > [d9]", &shown(&["d1", "d2", "d3"]));
        assert_eq!(p.order, ["d2", "d1", "d3"]);
    }

    #[test]
    fn no_ids_is_degenerate() {
        let p = parse_ranking("I think the answer is...", &shown(&["d1", "d2", "d3"]));
        assert_eq!(p.order, ["d1", "d2", "d3"]);
        assert!(p.degenerate);
    }

    #[test]
    fn bare_and_punctuated_ids() {
        let p = parse_ranking("Ranking: d3, d1.", &shown(&["d1", "d2", "d3"]));
        assert_eq!(p.order, ["d3", "d1", "d2"]);
        let p = parse_ranking("[ d2 ] > [d1", &shown(&["d1", "d2"]));
        assert_eq!(p.order, ["d2", "d1"]);
    }

    fn fixture(n: usize) -> (Corpus, RankedList) {
        let docs: Vec<Document> = (1..=n)
            .map(|i| Document::new(format!("d{i}"), format!("Title {i}"), "x".repeat(600)))
            .collect();
        let list = RankedList::from_ordered(
            "q",
            "cross",
            (1..=n).map(|i| (format!("d{i}"), 1.0 - i as f64 / 100.0)).collect(),
        );
        (Corpus::new(docs).unwrap(), list)
    }

    #[test]
    fn prompt_lists_each_candidate_once() {
        let (corpus, list) = fixture(2);
        let q = Query::new("q", "some query").unwrap();
        let req = build_listwise_prompt(&q, &list, &corpus, &LlmRerankConfig::default()).unwrap();
        let text = req.user_text().unwrap();
        assert_eq!(text.matches("\n[d").count(), 2);
        assert!(text.lines().any(|l| l.ends_with("Only output the ranking, no explanation.")));
        let line = text.lines().find(|l| l.starts_with("[d1] ")).unwrap();
        assert_eq!(line["[d1] ".len()..].chars().count(), 500);
    }

    #[test]
    fn prompt_unknown_doc() {
        let (corpus, _) = fixture(1);
        let list = RankedList::from_ordered("q", "t", vec![("zz".into(), 1.0)]);
        let q = Query::new("q", "x").unwrap();
        assert!(matches!(
            build_listwise_prompt(&q, &list, &corpus, &LlmRerankConfig::default()),
            Err(Error::UnknownDocument(id)) if id == "zz"
        ));
    }

    #[test]
    fn reverse_mock_reverses_window_only() {
        let (corpus, list) = fixture(40);
        let q = Query::new("q", "x").unwrap();
        let out = llm_rerank(&q, &list, &corpus, &ListwiseMock::reverse(), &LlmRerankConfig::default())
            .unwrap();
        let ids: Vec<&str> = out.list.doc_ids().collect();
        assert_eq!(ids[0], "d30");
        assert_eq!(ids[29], "d1");
        assert_eq!(ids[30..], list.doc_ids().collect::<Vec<_>>()[30..]);
        assert_eq!(out.llm_decided, 10);
        out.list.validate().unwrap();
    }

    #[test]
    fn identity_mock_keeps_order() {
        let (corpus, list) = fixture(12);
        let q = Query::new("q", "x").unwrap();
        let out = llm_rerank(&q, &list, &corpus, &ListwiseMock::identity(), &LlmRerankConfig::default())
            .unwrap();
        assert!(out.list.doc_ids().eq(list.doc_ids()));
        assert!(out.flag.is_none());
    }

    #[test]
    fn transport_failure_falls_back() {
        let (corpus, list) = fixture(5);
        let q = Query::new("q", "x").unwrap();
        let out = llm_rerank(&q, &list, &corpus, &UnreachableChat, &LlmRerankConfig::default()).unwrap();
        assert!(out.list.doc_ids().eq(list.doc_ids()));
        assert!(matches!(out.flag, Some(RerankFlag::Fallback { .. })));
    }

    #[test]
    fn degenerate_response_flagged() {
        let (corpus, list) = fixture(3);
        let q = Query::new("q", "x").unwrap();
        let chat = FixedChat("no idea".into());
        let out = llm_rerank(&q, &list, &corpus, &chat, &LlmRerankConfig::default()).unwrap();
        assert!(matches!(out.flag, Some(RerankFlag::ParseDegenerate { .. })));
    }

    #[test]
    fn single_candidate_unchanged() {
        let (corpus, list) = fixture(1);
        let q = Query::new("q", "x").unwrap();
        let out = llm_rerank(&q, &list, &corpus, &UnreachableChat, &LlmRerankConfig::default()).unwrap();
        assert_eq!(out.list.doc_ids().collect::<Vec<_>>(), ["d1"]);
    }

    #[test]
    fn config_validation() {
        let bad = LlmRerankConfig {
            k_cross: 5,
            k_llm: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
