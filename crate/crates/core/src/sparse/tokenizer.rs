use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stemmer {
    None,
    #[default]
    EnglishSuffix,
}

/// Splits text into maximal alphanumeric runs, lowercases, drops stopwords
/// and applies an optional light suffix stemmer. Deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stopwords: Option<BTreeSet<String>>,
    pub stemmer: Stemmer,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stopwords: None,
            stemmer: Stemmer::EnglishSuffix,
        }
    }
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

impl TokenizerConfig {
    pub fn with_english_stopwords(mut self) -> Self {
        self.stopwords = Some(ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .filter_map(|raw| {
                let tok = if self.lowercase {
                    raw.to_lowercase()
                } else {
                    raw.to_string()
                };
                if self.stopwords.as_ref().is_some_and(|s| s.contains(&tok)) {
                    return None;
                }
                Some(match self.stemmer {
                    Stemmer::None => tok,
                    Stemmer::EnglishSuffix => stem(&tok),
                })
            })
            .collect()
    }
}

/// Plural folding followed by a few inflectional suffixes. Only fires when the
/// remaining stem keeps at least three characters.
fn stem(token: &str) -> String {
    if !token.is_ascii() {
        return token.to_string();
    }
    let mut t = token.to_string();
    let n = t.len();
    if n > 4 && t.ends_with("ies") && !t.ends_with("eies") && !t.ends_with("aies") {
        t.truncate(n - 3);
        t.push('y');
    } else if n > 3
        && t.ends_with("es")
        && !t.ends_with("aes")
        && !t.ends_with("ees")
        && !t.ends_with("oes")
    {
        t.truncate(n - 1);
    } else if n > 3 && t.ends_with('s') && !t.ends_with("us") && !t.ends_with("ss") {
        t.truncate(n - 1);
    }
    for suffix in ["ing", "ed", "ly"] {
        if t.len() >= suffix.len() + 3 && t.ends_with(suffix) {
            t.truncate(t.len() - suffix.len());
            break;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_non_alphanumerics() {
        let cfg = TokenizerConfig {
            stemmer: Stemmer::None,
            ..Default::default()
        };
        assert_eq!(cfg.tokenize("Mars, potatoes & 2015!"), ["mars", "potatoes", "2015"]);
        assert!(cfg.tokenize("  ...  ").is_empty());
    }

    #[test]
    fn stemmer_folds_plurals_and_suffixes() {
        assert_eq!(stem("potatoes"), "potatoe");
        assert_eq!(stem("movies"), "movy");
        assert_eq!(stem("films"), "film");
        assert_eq!(stem("glass"), "glass");
        assert_eq!(stem("stranded"), "strand");
        assert_eq!(stem("growing"), "grow");
        assert_eq!(stem("sing"), "sing");
        assert_eq!(stem("is"), "is");
    }

    #[test]
    fn stopwords_removed() {
        let cfg = TokenizerConfig::default().with_english_stopwords();
        assert_eq!(cfg.tokenize("The man on the moon"), ["man", "moon"]);
    }
}
