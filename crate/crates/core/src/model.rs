//! Domain types shared by every stage, TREC-format run/qrels I/O and
//! line-delimited JSON corpus and query ingestion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-query ranked lists keyed by query id. Ordered so written run files are stable.
pub type Runs = BTreeMap<String, RankedList>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            text: text.into(),
        }
    }

    /// Title followed by body, separated by a single space. Used wherever a
    /// model sees the document.
    pub fn full_text(&self) -> String {
        match (self.title.is_empty(), self.text.is_empty()) {
            (true, _) => self.text.clone(),
            (false, true) => self.title.clone(),
            (false, false) => format!("{} {}", self.title, self.text),
        }
    }
}

/// A corpus with id lookup. Document ids are unique.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if d.doc_id.is_empty() {
                return Err(Error::invalid(format!("document {} has an empty id", i + 1)));
            }
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::Duplicate {
                    what: "doc_id",
                    id: d.doc_id.clone(),
                });
            }
        }
        Ok(Self { docs, by_id })
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn lookup(&self, doc_id: &str) -> Result<&Document> {
        self.get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum QueryVariant {
    Original,
    Rewritten(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
    pub variant: QueryVariant,
}

impl Query {
    pub fn new(query_id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let query_id = query_id.into();
        let text = text.into();
        if query_id.is_empty() {
            return Err(Error::invalid("query id must be non-empty"));
        }
        if text.trim().is_empty() {
            return Err(Error::invalid(format!("query `{query_id}` has empty text")));
        }
        Ok(Self {
            query_id,
            text,
            variant: QueryVariant::Original,
        })
    }

    pub fn rewritten(&self, text: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            query_id: self.query_id.clone(),
            text: text.into(),
            variant: QueryVariant::Rewritten(model.into()),
        }
    }
}

/// Relevance judgments: query id → (doc id → grade). Grade 0 means judged non-relevant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    pub fn judgments(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(query_id)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    /// Docs judged with grade > 0.
    pub fn relevant(&self, query_id: &str) -> BTreeSet<&str> {
        self.judgments
            .get(query_id)
            .map(|m| {
                m.iter()
                    .filter(|(_, &g)| g > 0)
                    .map(|(d, _)| d.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    /// Restrict to the given query ids.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Qrels {
        let mut out = Qrels::default();
        for id in ids {
            if let Some(m) = self.judgments.get(id) {
                out.judgments.insert(id.to_string(), m.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<ScoredDoc>,
    pub stage_tag: String,
}

impl RankedList {
    pub fn empty(query_id: impl Into<String>, stage_tag: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            entries: Vec::new(),
            stage_tag: stage_tag.into(),
        }
    }

    /// Sorts by score descending, doc id ascending on ties, and assigns ranks.
    /// Scores must not be NaN.
    pub fn from_scores(
        query_id: impl Into<String>,
        stage_tag: impl Into<String>,
        mut scored: Vec<(String, f64)>,
    ) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(query_id, stage_tag, scored)
    }

    /// Takes the given order as-is and assigns ranks 1..n.
    pub fn from_ordered(
        query_id: impl Into<String>,
        stage_tag: impl Into<String>,
        ordered: Vec<(String, f64)>,
    ) -> Self {
        let entries = ordered
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| ScoredDoc {
                doc_id,
                score,
                rank: i + 1,
            })
            .collect();
        Self {
            query_id: query_id.into(),
            entries,
            stage_tag: stage_tag.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// The first `depth` entries.
    pub fn truncated(&self, depth: usize) -> RankedList {
        RankedList {
            query_id: self.query_id.clone(),
            entries: self.entries.iter().take(depth).cloned().collect(),
            stage_tag: self.stage_tag.clone(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.stage_tag = tag.into();
        self
    }

    /// Checks consecutive 1-based ranks, non-increasing scores and unique doc ids.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut prev = f64::INFINITY;
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(Error::invalid(format!(
                    "query `{}`: rank {} at position {}",
                    self.query_id,
                    e.rank,
                    i + 1
                )));
            }
            if e.score.is_nan() || e.score > prev {
                return Err(Error::invalid(format!(
                    "query `{}`: score increases at rank {}",
                    self.query_id, e.rank
                )));
            }
            prev = e.score;
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::Duplicate {
                    what: "doc_id in ranked list",
                    id: e.doc_id.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct DocRecord {
    #[serde(alias = "doc_id", alias = "docid")]
    id: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(alias = "body", alias = "contents")]
    text: Option<String>,
}

#[derive(Deserialize)]
struct QueryRecord {
    #[serde(alias = "id", alias = "qid")]
    query_id: Option<String>,
    #[serde(alias = "text")]
    query: Option<String>,
}

fn numbered_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(Error::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

/// Reads one JSON object per line: `{"id", "title"?, "text"}`.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    for item in numbered_lines(reader) {
        let (line, raw) = item?;
        let rec: DocRecord =
            serde_json::from_str(&raw).map_err(|e| Error::parse(line, e.to_string()))?;
        let doc_id = rec.id.ok_or(Error::MissingField { line, field: "id" })?;
        let text = rec.text.ok_or(Error::MissingField { line, field: "text" })?;
        if doc_id.is_empty() {
            return Err(Error::parse(line, "empty id"));
        }
        if !seen.insert(doc_id.clone()) {
            return Err(Error::Duplicate {
                what: "doc_id",
                id: doc_id,
            });
        }
        docs.push(Document {
            doc_id,
            title: rec.title.unwrap_or_default(),
            text,
        });
    }
    Ok(docs)
}

/// Reads one JSON object per line: `{"query_id", "query"}` (`id`/`text` accepted).
pub fn parse_queries<R: BufRead>(reader: R) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for item in numbered_lines(reader) {
        let (line, raw) = item?;
        let rec: QueryRecord =
            serde_json::from_str(&raw).map_err(|e| Error::parse(line, e.to_string()))?;
        let id = rec.query_id.ok_or(Error::MissingField {
            line,
            field: "query_id",
        })?;
        let text = rec.query.ok_or(Error::MissingField {
            line,
            field: "query",
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::Duplicate {
                what: "query_id",
                id,
            });
        }
        out.push(Query::new(id, text).map_err(|e| Error::parse(line, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_queries<W: Write>(mut w: W, queries: &[Query]) -> Result<()> {
    for q in queries {
        let rec = serde_json::json!({ "query_id": q.query_id, "query": q.text });
        writeln!(w, "{rec}")?;
    }
    Ok(())
}

/// Reads a TREC run (`qid Q0 docid rank score tag`). Entries are ordered by rank;
/// equal ranks keep file order.
pub fn read_run_file<R: BufRead>(reader: R) -> Result<Runs> {
    let mut runs = Runs::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for item in numbered_lines(reader) {
        let (line, raw) = item?;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                line,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid rank `{}`", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid score `{}`", fields[4])))?;
        if score.is_nan() {
            return Err(Error::parse(line, "score is NaN"));
        }
        let (qid, docid) = (fields[0].to_string(), fields[2].to_string());
        if !seen.insert((qid.clone(), docid.clone())) {
            return Err(Error::Duplicate {
                what: "(qid, docid) pair",
                id: format!("{qid} {docid}"),
            });
        }
        runs.entry(qid.clone())
            .or_insert_with(|| RankedList::empty(qid, fields[5]))
            .entries
            .push(ScoredDoc {
                doc_id: docid,
                score,
                rank,
            });
    }
    for list in runs.values_mut() {
        list.entries.sort_by_key(|e| e.rank);
    }
    Ok(runs)
}

/// Writes every list with the given run tag, queries in id order.
pub fn write_run_file<W: Write>(mut w: W, runs: &Runs, tag: &str) -> Result<()> {
    for list in runs.values() {
        for e in &list.entries {
            writeln!(w, "{} Q0 {} {} {} {}", list.query_id, e.doc_id, e.rank, e.score, tag)?;
        }
    }
    Ok(())
}

pub fn run_to_string(runs: &Runs, tag: &str) -> String {
    let mut buf = Vec::new();
    write_run_file(&mut buf, runs, tag).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("run files are UTF-8")
}

/// Reads TREC qrels (`qid 0 docid grade`).
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for item in numbered_lines(reader) {
        let (line, raw) = item?;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let grade: u32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid grade `{}`", fields[3])))?;
        if qrels.judgments(fields[0]).is_some_and(|m| m.contains_key(fields[2])) {
            return Err(Error::Duplicate {
                what: "qrels judgment",
                id: format!("{} {}", fields[0], fields[2]),
            });
        }
        qrels.insert(fields[0], fields[2], grade);
    }
    Ok(qrels)
}

pub fn write_qrels<W: Write>(mut w: W, qrels: &Qrels) -> Result<()> {
    for (qid, docs) in &qrels.judgments {
        for (doc, grade) in docs {
            writeln!(w, "{qid} 0 {doc} {grade}")?;
        }
    }
    Ok(())
}

/// First `limit` characters (Unicode scalar values) of `text`.
pub fn truncate_snippet(text: &str, limit: usize) -> &str {
    match text.char_indices().nth(limit) {
        Some((byte, _)) => &text[..byte],
        None => text,
    }
}

impl fmt::Display for QueryVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryVariant::Original => f.write_str("original"),
            QueryVariant::Rewritten(m) => write!(f, "rewritten({m})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_record_maps_fields() {
        let docs = parse_corpus(r#"{"id":"d1","title":"T","text":"body"}"#.as_bytes()).unwrap();
        assert_eq!(docs, vec![Document::new("d1", "T", "body")]);
    }

    #[test]
    fn corpus_title_is_optional() {
        let docs = parse_corpus(r#"{"id":"d1","text":"body"}"#.as_bytes()).unwrap();
        assert_eq!(docs[0].title, "");
    }

    #[test]
    fn corpus_duplicate_id() {
        let input = "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d1\",\"text\":\"b\"}\n";
        assert!(matches!(
            parse_corpus(input.as_bytes()),
            Err(Error::Duplicate { id, .. }) if id == "d1"
        ));
    }

    #[test]
    fn corpus_missing_text_names_field() {
        let input = "{\"id\":\"d1\",\"text\":\"a\"}\n\n{\"id\":\"d2\"}\n";
        match parse_corpus(input.as_bytes()) {
            Err(Error::MissingField { line, field }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "text");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn corpus_malformed_json_reports_line() {
        let input = "{\"id\":\"d1\",\"text\":\"a\"}\nnot json\n";
        assert!(matches!(parse_corpus(input.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn queries_accept_aliases() {
        let input = "{\"query_id\":\"q1\",\"query\":\"a b\"}\n{\"id\":\"q2\",\"text\":\"c\"}\n";
        let qs = parse_queries(input.as_bytes()).unwrap();
        assert_eq!(qs[1].query_id, "q2");
        assert_eq!(qs[1].text, "c");
        assert!(parse_queries("{\"query_id\":\"q1\",\"query\":\" \"}".as_bytes()).is_err());
    }

    #[test]
    fn run_single_line() {
        let runs = read_run_file("q1 Q0 d9 1 12.5 bm25\n".as_bytes()).unwrap();
        let l = &runs["q1"];
        assert_eq!(
            l.entries,
            vec![ScoredDoc {
                doc_id: "d9".into(),
                score: 12.5,
                rank: 1
            }]
        );
    }

    #[test]
    fn run_sorted_by_rank() {
        let runs = read_run_file("q1 Q0 b 2 1.0 t\nq1\tQ0  a 1 2.0 t\n".as_bytes()).unwrap();
        let ids: Vec<_> = runs["q1"].doc_ids().collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn run_malformed_rank() {
        assert!(matches!(
            read_run_file("q1 Q0 d9 one 12.5 t".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(read_run_file("q1 Q0 d9 1 x t".as_bytes()).is_err());
    }

    #[test]
    fn run_duplicate_pair() {
        assert!(matches!(
            read_run_file("q1 Q0 d9 1 2 t\nq1 Q0 d9 2 1 t\n".as_bytes()),
            Err(Error::Duplicate { .. })
        ));
    }

    #[test]
    fn run_write_format() {
        let mut runs = Runs::new();
        runs.insert(
            "q1".into(),
            RankedList::from_ordered("q1", "bm25", vec![("d9".into(), 12.5)]),
        );
        assert_eq!(run_to_string(&runs, "bm25"), "q1 Q0 d9 1 12.5 bm25\n");
        assert_eq!(run_to_string(&Runs::new(), "x"), "");
    }

    #[test]
    fn qrels_lines() {
        let q = parse_qrels("q1 0 d9 1\nq1 0 d8 0\n".as_bytes()).unwrap();
        assert_eq!(q.grade("q1", "d9"), 1);
        assert_eq!(q.judgments("q1").unwrap().get("d8"), Some(&0));
        assert_eq!(q.relevant("q1").into_iter().collect::<Vec<_>>(), ["d9"]);
        assert!(matches!(parse_qrels("q1 0 d9".as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn snippet_under_and_over_limit() {
        let short = "x".repeat(400);
        assert_eq!(truncate_snippet(&short, 500), short);
        let long: String = (0..600).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        let cut = truncate_snippet(&long, 500);
        assert_eq!(cut.chars().count(), 500);
        assert!(long.starts_with(cut));
    }

    #[test]
    fn snippet_multibyte_boundary() {
        // 499 ASCII chars, then a 4-byte scalar occupying character 500, then more.
        let s = format!("{}{}{}", "a".repeat(499), '\u{1F600}', "bc");
        let cut = truncate_snippet(&s, 500);
        assert_eq!(cut.chars().count(), 500);
        assert!(cut.ends_with('\u{1F600}'));
        let cut = truncate_snippet(&s, 499);
        assert_eq!(cut, "a".repeat(499));
    }

    #[test]
    fn ranked_list_validation() {
        let l = RankedList::from_scores(
            "q",
            "t",
            vec![("b".into(), 1.0), ("a".into(), 1.0), ("c".into(), 2.0)],
        );
        assert_eq!(l.doc_ids().collect::<Vec<_>>(), ["c", "a", "b"]);
        l.validate().unwrap();
        let bad = RankedList::from_ordered("q", "t", vec![("a".into(), 1.0), ("b".into(), 2.0)]);
        assert!(bad.validate().is_err());
    }
}
