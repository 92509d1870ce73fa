use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::Serialize;

use super::Membership;
use crate::error::{Error, Result};
use crate::model::DomainBlockRecord;

pub const TOP_KEYWORDS: usize = 5;

const BUILTIN_STOPWORDS: &[&str] = &[
    "about", "after", "all", "also", "and", "any", "are", "because", "been", "but", "can", "did",
    "does", "domain", "for", "from", "had", "has", "have", "her", "his", "how", "instance", "into",
    "its", "just", "more", "most", "not", "other", "our", "out", "over", "server", "she", "should",
    "some", "such", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "too", "very", "was", "were", "what", "when", "which", "who", "will", "with",
    "you", "your",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Stopwords {
    /// A short English list plus federation boilerplate.
    pub fn builtin() -> Self {
        Self::from_words(BUILTIN_STOPWORDS.iter().copied())
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Stopwords(words.into_iter().map(|w| w.trim().to_lowercase()).filter(|w| !w.is_empty()).collect())
    }

    /// One word per line; `#` starts a comment.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_words(text.lines().map(|l| l.split('#').next().unwrap_or(""))))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

/// Lowercased alphanumeric runs of at least three characters that are not
/// stopwords.
pub fn tokenize<'a>(text: &'a str, stop: &'a Stopwords) -> impl Iterator<Item = String> + 'a {
    text.split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .filter(move |t| t.chars().count() >= 3 && !stop.contains(t))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordRanking {
    pub group: usize,
    /// At most [`TOP_KEYWORDS`] entries, counts non-increasing, ties in
    /// lexicographic order.
    pub keywords: Vec<(String, u64)>,
}

/// Most frequent words in the comments of blocks targeting each group.
/// Every block record counts, also repeated ones.
pub fn ban_keywords(blocks: &[DomainBlockRecord], m: &Membership, stop: &Stopwords) -> Vec<KeywordRanking> {
    let mut counts: Vec<HashMap<String, u64>> = vec![HashMap::new(); m.group_count()];
    for b in blocks {
        let Some(group) = m.get(&b.blocked_domain) else {
            continue;
        };
        for t in tokenize(&b.comment, stop) {
            *counts[group].entry(t).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(group, c)| {
            let mut ranked: Vec<(String, u64)> = c.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(TOP_KEYWORDS);
            KeywordRanking { group, keywords: ranked }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;
    use crate::polarize::partition::Partition;
    use chrono::Utc;

    fn block(target: &str, comment: &str) -> DomainBlockRecord {
        DomainBlockRecord {
            blocker: Domain::literal("mod.example"),
            blocked_domain: Domain::literal(target),
            severity: "suspend".into(),
            comment: comment.into(),
            obfuscated: false,
            observed_at: Utc::now(),
        }
    }

    fn membership() -> Membership {
        let mut p = Partition::new(2);
        p.assign(Domain::literal("bad.example"), 1).unwrap();
        p.assign(Domain::literal("worse.example"), 1).unwrap();
        let universe = ["bad.example", "worse.example", "fine.example"].map(Domain::literal);
        Membership::new(&universe, &p)
    }

    #[test]
    fn tokenizer_rule() {
        let stop = Stopwords::builtin();
        let toks: BTreeSet<String> = tokenize("Federates with Meta/Facebook", &stop).collect();
        assert_eq!(toks, ["facebook", "federates", "meta"].map(String::from).into_iter().collect());
        assert_eq!(tokenize("a an of TOS", &stop).collect::<Vec<_>>(), vec!["tos"]);
    }

    #[test]
    fn empty_comments_give_empty_rankings() {
        let r = ban_keywords(&[block("bad.example", "")], &membership(), &Stopwords::builtin());
        assert!(r.iter().all(|k| k.keywords.is_empty()));
    }

    #[test]
    fn reasons_ranked() {
        let blocks = [
            block("bad.example", "hate speech, racism"),
            block("worse.example", "Harassment; hate speech"),
            block("bad.example", "racism and harassment"),
            block("fine.example", "spam"),
            block("unknown.example", "speech"),
        ];
        let r = ban_keywords(&blocks, &membership(), &Stopwords::builtin());
        let words: Vec<&str> = r[1].keywords.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, vec!["harassment", "hate", "racism", "speech"]);
        assert!(r[1].keywords.iter().all(|(_, c)| *c == 2));
        assert_eq!(r[0].keywords, vec![("spam".to_string(), 1)]);
    }

    #[test]
    fn top_five_with_lexicographic_ties() {
        let blocks = [block("bad.example", "zeta zeta eta theta iota kappa alpha beta")];
        let r = ban_keywords(&blocks, &membership(), &Stopwords::builtin());
        let words: Vec<&str> = r[1].keywords.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, vec!["zeta", "alpha", "beta", "eta", "iota"]);
    }

    #[test]
    fn stopwords_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        std::fs::write(&path, "# custom\nSpam\n\nfoo # trailing\n").unwrap();
        let stop = Stopwords::from_file(&path).unwrap();
        assert!(stop.contains("spam") && stop.contains("foo") && !stop.contains("with"));
    }
}
