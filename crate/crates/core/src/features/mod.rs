//! The 31 low-cost page quality features, grouped as URL (10), content (16)
//! and links (5).
//!
//! Feature order is part of the on-disk contract (corpus CSV header, model
//! files). [`FEATURE_SCHEMA_VERSION`] is bumped whenever it changes.

mod content;
mod domain;
mod lexicons;
mod links;
mod url_features;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use content::{extract_content_features, ParsedPage};
pub use domain::{registrable_domain, HostParts, PublicSuffixList};
pub use lexicons::{LexiconError, Lexicons};
pub use links::extract_link_features;
pub use url_features::extract_url_features;

pub const FEATURE_SCHEMA_VERSION: u32 = 1;
pub const URL_FEATURES: usize = 10;
pub const CONTENT_FEATURES: usize = 16;
pub const LINK_FEATURES: usize = 5;
pub const FEATURE_COUNT: usize = URL_FEATURES + CONTENT_FEATURES + LINK_FEATURES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Boolean,
    Fraction,
    Count,
}

pub struct FeatureInfo {
    pub name: &'static str,
    pub kind: FeatureKind,
}

const fn info(name: &'static str, kind: FeatureKind) -> FeatureInfo {
    FeatureInfo { name, kind }
}

use FeatureKind::{Boolean, Count, Fraction};

pub const FEATURES: [FeatureInfo; FEATURE_COUNT] = [
    // url
    info("has_ssl", Boolean),
    info("url_length", Count),
    info("not_subdomain", Boolean),
    info("authoritative_tld", Boolean),
    info("repeated_alpha", Boolean),
    info("subdomain_depth_gt3", Boolean),
    info("digit_symbol_heavy", Boolean),
    info("ip_host", Boolean),
    info("top_site", Boolean),
    info("domain_length", Count),
    // content
    info("html_length", Count),
    info("word_count", Count),
    info("text_length", Count),
    info("image_count", Count),
    info("description_length", Count),
    info("has_h2", Boolean),
    info("has_h1", Boolean),
    info("has_video", Boolean),
    info("ad_count", Count),
    info("title_length", Count),
    info("compression_ratio", Fraction),
    info("text_html_ratio", Fraction),
    info("image_alt_fraction", Fraction),
    info("obfuscated_js", Boolean),
    info("call_to_action_pct", Fraction),
    info("stopword_pct", Fraction),
    // links
    info("internal_links", Count),
    info("self_referential_fraction", Fraction),
    info("external_links", Count),
    info("anchor_text_fraction", Fraction),
    info("anchor_word_count", Count),
];

pub fn feature_names() -> impl Iterator<Item = &'static str> {
    FEATURES.iter().map(|f| f.name)
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURES.iter().position(|f| f.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureGroup {
    Url,
    Content,
    Links,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [FeatureGroup::Url, FeatureGroup::Content, FeatureGroup::Links];

    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            FeatureGroup::Url => 0..URL_FEATURES,
            FeatureGroup::Content => URL_FEATURES..URL_FEATURES + CONTENT_FEATURES,
            FeatureGroup::Links => URL_FEATURES + CONTENT_FEATURES..FEATURE_COUNT,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Url => "url",
            FeatureGroup::Content => "content",
            FeatureGroup::Links => "links",
        }
    }
}

/// A non-empty subset of the three feature groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureGroups(u8);

#[derive(Debug, Error, PartialEq)]
pub enum GroupParseError {
    #[error("unknown feature group `{0}` (expected url, content, links or all)")]
    Unknown(String),
    #[error("empty feature group list")]
    Empty,
}

impl FeatureGroups {
    pub const URL: FeatureGroups = FeatureGroups(1);
    pub const CONTENT: FeatureGroups = FeatureGroups(2);
    pub const LINKS: FeatureGroups = FeatureGroups(4);
    pub const ALL: FeatureGroups = FeatureGroups(7);

    /// The seven subsets of the experiment grid, in table order.
    pub const GRID: [FeatureGroups; 7] = [
        FeatureGroups(1),
        FeatureGroups(2),
        FeatureGroups(4),
        FeatureGroups(1 | 4),
        FeatureGroups(1 | 2),
        FeatureGroups(2 | 4),
        FeatureGroups(7),
    ];

    pub fn from_groups(groups: &[FeatureGroup]) -> Option<Self> {
        let bits = groups.iter().fold(0u8, |acc, g| acc | Self::bit(*g));
        (bits != 0).then_some(FeatureGroups(bits))
    }

    fn bit(group: FeatureGroup) -> u8 {
        match group {
            FeatureGroup::Url => 1,
            FeatureGroup::Content => 2,
            FeatureGroup::Links => 4,
        }
    }

    pub fn contains(self, group: FeatureGroup) -> bool {
        self.0 & Self::bit(group) != 0
    }

    pub fn is_subset_of(self, other: FeatureGroups) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: FeatureGroups) -> FeatureGroups {
        FeatureGroups(self.0 | other.0)
    }

    pub fn groups(self) -> impl Iterator<Item = FeatureGroup> {
        FeatureGroup::ALL.into_iter().filter(move |g| self.contains(*g))
    }

    /// Canonical indices of the populated features, ascending.
    pub fn indices(self) -> Vec<usize> {
        self.groups().flat_map(FeatureGroup::range).collect()
    }

    pub fn feature_count(self) -> usize {
        self.groups().map(|g| g.range().len()).sum()
    }

    /// Human label used in table captions, e.g. "URL + Links".
    pub fn title(self) -> String {
        self.groups()
            .map(|g| match g {
                FeatureGroup::Url => "URL",
                FeatureGroup::Content => "Content",
                FeatureGroup::Links => "Links",
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Display for FeatureGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.groups().map(FeatureGroup::name).collect();
        f.write_str(&names.join("+"))
    }
}

impl serde::Serialize for FeatureGroups {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for FeatureGroups {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for FeatureGroups {
    type Err = GroupParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = 0u8;
        for part in s.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            bits |= match part.to_ascii_lowercase().as_str() {
                "url" => 1,
                "content" => 2,
                "links" | "link" => 4,
                "all" => 7,
                _ => return Err(GroupParseError::Unknown(part.to_string())),
            };
        }
        if bits == 0 {
            return Err(GroupParseError::Empty);
        }
        Ok(FeatureGroups(bits))
    }
}

/// All 31 feature slots plus the mask of groups that were actually computed.
/// Slots of unpopulated groups hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub groups: FeatureGroups,
}

impl FeatureVector {
    pub fn new(groups: FeatureGroups) -> Self {
        FeatureVector { values: [0.0; FEATURE_COUNT], groups }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let i = feature_index(name)?;
        FeatureGroup::ALL.iter().any(|g| self.groups.contains(*g) && g.range().contains(&i)).then(|| self.values[i])
    }

    /// Values of the populated features in canonical order.
    pub fn selected(&self, groups: FeatureGroups) -> Vec<f64> {
        groups.indices().into_iter().map(|i| self.values[i]).collect()
    }

    /// Index of the first populated feature violating its kind's bounds.
    pub fn first_out_of_bounds(&self) -> Option<usize> {
        self.groups.indices().into_iter().find(|&i| {
            let v = self.values[i];
            !v.is_finite()
                || match FEATURES[i].kind {
                    Boolean => v != 0.0 && v != 1.0,
                    Fraction => !(0.0..=1.0).contains(&v),
                    Count => v < 0.0,
                }
        })
    }
}

/// A stored page: URL, raw HTML and optionally the response headers it was
/// fetched with.
#[derive(Debug, Clone, PartialEq)]
pub struct PageRecord {
    pub id: String,
    pub url: String,
    pub html: Vec<u8>,
    pub headers: Vec<(String, String)>,
    pub label: Option<crate::metrics::Label>,
}

impl PageRecord {
    pub fn new(id: impl Into<String>, url: impl Into<String>, html: impl Into<Vec<u8>>) -> Self {
        PageRecord { id: id.into(), url: url.into(), html: html.into(), headers: Vec::new(), label: None }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("record `{id}`: cannot parse URL `{url}`: {reason}")]
    BadUrl { id: String, url: String, reason: String },
}

/// Extracts the requested groups from one page record.
pub fn extract(record: &PageRecord, groups: FeatureGroups, lexicons: &Lexicons) -> Result<FeatureVector, ExtractError> {
    let mut fv = FeatureVector::new(groups);
    let url = url::Url::parse(record.url.trim()).map_err(|e| ExtractError::BadUrl {
        id: record.id.clone(),
        url: record.url.clone(),
        reason: e.to_string(),
    })?;
    if groups.contains(FeatureGroup::Url) {
        let v = extract_url_features(&record.url, &url, &record.headers, lexicons);
        fv.values[FeatureGroup::Url.range()].copy_from_slice(&v);
    }
    let needs_html = groups.contains(FeatureGroup::Content) || groups.contains(FeatureGroup::Links);
    if needs_html {
        let page = ParsedPage::parse(&record.html);
        if groups.contains(FeatureGroup::Content) {
            let v = extract_content_features(&page, lexicons);
            fv.values[FeatureGroup::Content.range()].copy_from_slice(&v);
        }
        if groups.contains(FeatureGroup::Links) {
            let v = extract_link_features(&page, &url, lexicons);
            fv.values[FeatureGroup::Links.range()].copy_from_slice(&v);
        }
    }
    Ok(fv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_sizes_are_fixed() {
        assert_eq!(FeatureGroups::URL.feature_count(), 10);
        assert_eq!(FeatureGroups::CONTENT.feature_count(), 16);
        assert_eq!(FeatureGroups::LINKS.feature_count(), 5);
        let counts: Vec<_> = FeatureGroups::GRID.iter().map(|g| g.feature_count()).collect();
        assert_eq!(counts, vec![10, 16, 5, 15, 26, 21, 31]);
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = feature_names().collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), FEATURE_COUNT);
    }

    #[test]
    fn parse_and_display_groups() {
        assert_eq!("url+links".parse::<FeatureGroups>().unwrap(), FeatureGroups::GRID[3]);
        assert_eq!("links,url".parse::<FeatureGroups>().unwrap().to_string(), "url+links");
        assert_eq!("all".parse::<FeatureGroups>().unwrap(), FeatureGroups::ALL);
        assert!(matches!("pagerank".parse::<FeatureGroups>(), Err(GroupParseError::Unknown(_))));
        assert_eq!("".parse::<FeatureGroups>(), Err(GroupParseError::Empty));
        assert_eq!(FeatureGroups::GRID[4].title(), "URL + Content");
        assert!(FeatureGroups::URL.is_subset_of(FeatureGroups::GRID[3]));
        assert!(!FeatureGroups::CONTENT.is_subset_of(FeatureGroups::GRID[3]));
    }

    #[test]
    fn selected_follows_canonical_order() {
        let mut fv = FeatureVector::new(FeatureGroups::ALL);
        for (i, v) in fv.values.iter_mut().enumerate() {
            *v = i as f64;
        }
        let sel = fv.selected(FeatureGroups::GRID[3]);
        assert_eq!(sel.len(), 15);
        assert_eq!(sel[9], 9.0);
        assert_eq!(sel[10], 26.0);
    }
}
