use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::domain::PublicSuffixList;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("lexicon `{0}` has no entries")]
    Empty(String),
}

/// Word lists and allowlists the extractors consult.
///
/// Files hold one entry per line; `#` starts a comment and blank lines are
/// ignored. Entries are lowercased on load.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub stopwords: HashSet<String>,
    /// Each phrase is pre-split into words.
    pub call_to_action: Vec<Vec<String>>,
    pub authoritative_tlds: HashSet<String>,
    pub top_sites: HashSet<String>,
    /// Plain substrings of attribute values.
    pub ad_substrings: Vec<String>,
    /// Whole class/id tokens (entries written as `=token`).
    pub ad_tokens: HashSet<String>,
    pub suffixes: PublicSuffixList,
}

const FILES: [&str; 6] = [
    "stopwords.txt",
    "call_to_action.txt",
    "authoritative_tlds.txt",
    "top_sites.txt",
    "ad_markers.txt",
    "public_suffix.txt",
];

const BUNDLED: [&str; 6] = [
    include_str!("../../data/stopwords.txt"),
    include_str!("../../data/call_to_action.txt"),
    include_str!("../../data/authoritative_tlds.txt"),
    include_str!("../../data/top_sites.txt"),
    include_str!("../../data/ad_markers.txt"),
    include_str!("../../data/public_suffix.txt"),
];

pub(crate) fn entries(text: &str) -> Vec<String> {
    text.lines().map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase()).filter(|l| !l.is_empty()).collect()
}

impl Lexicons {
    /// Lexicons compiled into the crate from `data/`.
    pub fn bundled() -> Self {
        Self::from_texts(BUNDLED).expect("bundled lexicons are non-empty")
    }

    /// Loads the six lexicon files from `dir`, using the bundled copy for any
    /// file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        let mut texts: [String; 6] = Default::default();
        for (i, name) in FILES.iter().enumerate() {
            let path = dir.join(name);
            texts[i] = if path.exists() {
                fs::read_to_string(&path).map_err(|source| LexiconError::Io { path, source })?
            } else {
                BUNDLED[i].to_string()
            };
        }
        Self::from_texts(texts.each_ref().map(String::as_str))
    }

    fn from_texts(texts: [&str; 6]) -> Result<Self, LexiconError> {
        let lists: Vec<Vec<String>> = texts.iter().map(|t| entries(t)).collect();
        for (list, name) in lists.iter().zip(FILES) {
            if list.is_empty() {
                return Err(LexiconError::Empty(name.to_string()));
            }
        }
        let mut it = lists.into_iter();
        let stopwords = it.next().unwrap().into_iter().collect();
        let call_to_action =
            it.next().unwrap().into_iter().map(|p| p.split_whitespace().map(str::to_string).collect()).collect();
        let authoritative_tlds = it.next().unwrap().into_iter().collect();
        let top_sites = it.next().unwrap().into_iter().collect();
        let (tokens, substrings): (Vec<_>, Vec<_>) = it.next().unwrap().into_iter().partition(|m| m.starts_with('='));
        let suffixes = PublicSuffixList::from_entries(it.next().unwrap());
        Ok(Lexicons {
            stopwords,
            call_to_action,
            authoritative_tlds,
            top_sites,
            ad_substrings: substrings,
            ad_tokens: tokens.into_iter().map(|t| t[1..].to_string()).collect(),
            suffixes,
        })
    }
}
