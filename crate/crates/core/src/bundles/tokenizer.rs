use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ArticleSet;
use crate::io::IoError;

pub const UNK: &str = "⟨UNK⟩";
pub const OUTCOME: &str = "⟨OUTCOME⟩";

pub fn violation_marker(label: &str) -> String {
    format!("⟨VIOL_{label}⟩")
}

/// Lowercases and splits text into word runs and single punctuation marks.
///
/// Yields `(token, byte offset just past the token)`.
pub fn pre_tokenize(text: &str) -> impl Iterator<Item = (String, usize)> + '_ {
    let mut chars = text.char_indices().peekable();
    std::iter::from_fn(move || {
        while let Some(&(_, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else {
                break;
            }
        }
        let (start, c) = chars.next()?;
        if !c.is_alphanumeric() {
            return Some((c.to_lowercase().collect(), start + c.len_utf8()));
        }
        let mut end = start + c.len_utf8();
        while let Some(&(i, c)) = chars.peek() {
            if !c.is_alphanumeric() {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        Some((text[start..end].to_lowercase(), end))
    })
}

/// Word-level vocabulary with reserved ids for unknown words and outcome markers.
///
/// Ids are dense: `0` is the unknown token, `1` the outcome delimiter,
/// `2..2+K` the per-article violation markers, then corpus words by
/// descending frequency (ties broken lexicographically).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "TokenizerFile", into = "TokenizerFile")]
pub struct Tokenizer {
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    n_articles: usize,
    min_freq: usize,
}

#[derive(Serialize, Deserialize)]
struct TokenizerFile {
    min_freq: usize,
    n_articles: usize,
    vocab: Vec<String>,
}

impl From<TokenizerFile> for Tokenizer {
    fn from(f: TokenizerFile) -> Self {
        Tokenizer::from_vocab(f.vocab, f.n_articles, f.min_freq)
    }
}

impl From<Tokenizer> for TokenizerFile {
    fn from(t: Tokenizer) -> Self {
        TokenizerFile {
            min_freq: t.min_freq,
            n_articles: t.n_articles,
            vocab: t.vocab,
        }
    }
}

impl Tokenizer {
    pub const DEFAULT_MIN_FREQ: usize = 5;

    fn from_vocab(vocab: Vec<String>, n_articles: usize, min_freq: usize) -> Self {
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Tokenizer {
            vocab,
            index,
            n_articles,
            min_freq,
        }
    }

    /// Builds the vocabulary from `texts`, keeping words seen at least `min_freq` times.
    pub fn fit<'a, I>(texts: I, articles: &ArticleSet, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for t in texts {
            for (w, _) in pre_tokenize(t) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> =
            counts.into_iter().filter(|(_, n)| *n >= min_freq).collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut vocab = vec![UNK.to_string(), OUTCOME.to_string()];
        vocab.extend(articles.labels().iter().map(|l| violation_marker(l)));
        vocab.extend(words.into_iter().map(|(w, _)| w));
        Self::from_vocab(vocab, articles.len(), min_freq)
    }

    pub fn unk_id(&self) -> u32 {
        0
    }

    pub fn outcome_id(&self) -> u32 {
        1
    }

    pub fn violation_id(&self, article: usize) -> u32 {
        assert!(article < self.n_articles, "article index out of range");
        2 + article as u32
    }

    pub fn n_articles(&self) -> usize {
        self.n_articles
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    fn lookup(&self, word: &str) -> u32 {
        // Marker strings cannot come out of pre_tokenize, so they never collide.
        self.index.get(word).copied().unwrap_or(0)
    }

    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        pre_tokenize(text).map(|(w, _)| self.lookup(&w)).collect()
    }

    /// At most `max` ids, plus the byte offset in `text` where the last kept token ends.
    pub fn tokenize_prefix(&self, text: &str, max: usize) -> (Vec<u32>, usize) {
        let mut ids = Vec::new();
        let mut end = 0;
        for (w, e) in pre_tokenize(text).take(max) {
            ids.push(self.lookup(&w));
            end = e;
        }
        (ids, end)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        crate::io::read_json(path)
    }
}
