use std::io::Write;
use std::sync::LazyLock;

use ego_tree::iter::Edge;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use regex::Regex;
use scraper::{ElementRef, Html, Node, Selector};

use super::lexicons::Lexicons;
use super::CONTENT_FEATURES;

/// Elements whose text is never shown to a reader.
const HIDDEN: [&str; 6] = ["script", "style", "noscript", "template", "head", "title"];

const VIDEO_HOSTS: [&str; 7] = [
    "youtube.com/embed",
    "youtube-nocookie.com",
    "player.vimeo.com",
    "dailymotion.com/embed",
    "vimeo.com/video",
    "facebook.com/plugins/video",
    "twitch.tv",
];

macro_rules! selector {
    ($name:ident, $css:expr) => {
        static $name: LazyLock<Selector> = LazyLock::new(|| Selector::parse($css).unwrap());
    };
}

selector!(IMG, "img");
selector!(VIDEO, "video");
selector!(H1, "h1");
selector!(H2, "h2");
selector!(TITLE, "title");
selector!(META, "meta");
selector!(SCRIPT, "script");
selector!(VIDEO_EMBEDS, "iframe, embed, object");
selector!(AD_CANDIDATES, "iframe, script, div, ins");

static OBFUSCATION: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        r"\beval\s*\(",
        r"\bunescape\s*\(",
        r"fromcharcode\s*\(",
        r"\batob\s*\(",
        r"document\.write\s*\(\s*(unescape|decodeuricomponent|atob)",
        r"(\\x[0-9a-f]{2}){8,}",
        r"(\\u[0-9a-f]{4}){8,}",
        r"(%[0-9a-f]{2}){16,}",
        r"\bwindow\.open\s*\(",
        r"\b(window|document|top|self)\.location(\.href)?\s*=[^=]",
        r"\blocation\.(replace|assign)\s*\(",
    ]
    .iter()
    .map(|p| Regex::new(p).unwrap())
    .collect()
});

/// An anchor with its resolved-later target and visible text.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub href: String,
    pub text: String,
}

/// HTML parsed once and shared by the content and link extractors.
pub struct ParsedPage {
    pub html_len: usize,
    pub document: Html,
    /// Visible body text, whitespace-normalized to single spaces.
    pub text: String,
    pub anchors: Vec<Anchor>,
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl ParsedPage {
    /// Lenient: invalid UTF-8 is replaced and malformed markup is repaired by
    /// the HTML5 tree builder.
    pub fn parse(html: &[u8]) -> Self {
        let source = String::from_utf8_lossy(html);
        let document = Html::parse_document(&source);
        let (text, anchors) = collect_text(&document);
        ParsedPage { html_len: html.len(), document, text, anchors }
    }
}

fn collect_text(document: &Html) -> (String, Vec<Anchor>) {
    let mut text = String::new();
    let mut anchors: Vec<Anchor> = Vec::new();
    let mut hidden_depth = 0usize;
    // indices into `anchors` of the <a> elements currently open
    let mut open_anchors: Vec<usize> = Vec::new();
    for edge in document.tree.root().traverse() {
        match edge {
            Edge::Open(node) => match node.value() {
                Node::Element(el) => {
                    let name = el.name();
                    if HIDDEN.contains(&name) {
                        hidden_depth += 1;
                    } else if name == "a" && hidden_depth == 0 {
                        if let Some(href) = el.attr("href") {
                            open_anchors.push(anchors.len());
                            anchors.push(Anchor { href: href.trim().to_string(), text: String::new() });
                        }
                    }
                }
                Node::Text(t) if hidden_depth == 0 => {
                    text.push(' ');
                    text.push_str(t);
                    for &i in &open_anchors {
                        anchors[i].text.push(' ');
                        anchors[i].text.push_str(t);
                    }
                }
                _ => {}
            },
            Edge::Close(node) => {
                if let Node::Element(el) = node.value() {
                    let name = el.name();
                    if HIDDEN.contains(&name) {
                        hidden_depth = hidden_depth.saturating_sub(1);
                    } else if name == "a" && el.attr("href").is_some() && hidden_depth == 0 {
                        open_anchors.pop();
                    }
                }
            }
        }
    }
    for a in &mut anchors {
        a.text = normalize_ws(&a.text);
    }
    (normalize_ws(&text), anchors)
}

/// Lowercased word with leading/trailing punctuation removed.
pub(crate) fn normalize_token(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'').trim_matches('\'').to_lowercase()
}

pub(crate) fn compression_ratio(text: &str) -> f64 {
    if text.is_empty() {
        return 1.0;
    }
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
    enc.write_all(text.as_bytes()).expect("writing to a Vec cannot fail");
    let compressed = enc.finish().expect("writing to a Vec cannot fail");
    (compressed.len() as f64 / text.len() as f64).min(1.0)
}

/// Non-overlapping phrase hits, longest phrase first at each position.
pub(crate) fn count_phrases(tokens: &[String], phrases: &[Vec<String>]) -> usize {
    let mut hits = 0;
    let mut i = 0;
    while i < tokens.len() {
        let best = phrases.iter().filter(|p| !p.is_empty() && tokens[i..].starts_with(p)).map(Vec::len).max();
        match best {
            Some(len) => {
                hits += 1;
                i += len;
            }
            None => i += 1,
        }
    }
    hits
}

fn is_ad_element(el: &ElementRef<'_>, lexicons: &Lexicons) -> bool {
    ["src", "id", "class"].iter().filter_map(|a| el.value().attr(a)).any(|value| {
        let value = value.to_lowercase();
        lexicons.ad_substrings.iter().any(|s| value.contains(s.as_str()))
            || value
                .split(|c: char| c.is_whitespace() || c == '-' || c == '_')
                .any(|tok| lexicons.ad_tokens.contains(tok))
    })
}

fn has_obfuscated_script(page: &ParsedPage) -> bool {
    let scripted = page.document.select(&SCRIPT).any(|s| {
        let body = s.text().collect::<String>().to_lowercase();
        OBFUSCATION.iter().any(|re| re.is_match(&body))
    });
    let refresh = page
        .document
        .select(&META)
        .any(|m| m.value().attr("http-equiv").is_some_and(|v| v.trim().eq_ignore_ascii_case("refresh")));
    scripted || refresh
}

fn ratio(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        (num as f64 / den as f64).min(1.0)
    }
}

/// Content group, in canonical order.
pub fn extract_content_features(page: &ParsedPage, lexicons: &Lexicons) -> [f64; CONTENT_FEATURES] {
    let doc = &page.document;
    let words: Vec<&str> = page.text.split_whitespace().collect();
    let tokens: Vec<String> = words.iter().map(|w| normalize_token(w)).collect();
    let text_chars = page.text.chars().count();

    let images: Vec<_> = doc.select(&IMG).collect();
    let with_alt = images.iter().filter(|i| i.value().attr("alt").is_some_and(|a| !a.trim().is_empty())).count();
    let description = doc
        .select(&META)
        .find(|m| m.value().attr("name").is_some_and(|n| n.trim().eq_ignore_ascii_case("description")))
        .and_then(|m| m.value().attr("content"))
        .map(|c| c.trim().chars().count())
        .unwrap_or(0);
    let title =
        doc.select(&TITLE).next().map(|t| normalize_ws(&t.text().collect::<String>()).chars().count()).unwrap_or(0);
    let video = doc.select(&VIDEO).next().is_some()
        || doc.select(&VIDEO_EMBEDS).any(|e| {
            ["src", "data"].iter().filter_map(|a| e.value().attr(a)).any(|src| {
                let src = src.to_lowercase();
                VIDEO_HOSTS.iter().any(|h| src.contains(h))
            })
        });
    let ads = doc.select(&AD_CANDIDATES).filter(|e| is_ad_element(e, lexicons)).count();
    let stopwords = tokens.iter().filter(|t| lexicons.stopwords.contains(t.as_str())).count();
    let cta = count_phrases(&tokens, &lexicons.call_to_action);

    [
        page.html_len as f64,
        words.len() as f64,
        text_chars as f64,
        images.len() as f64,
        description as f64,
        flag(doc.select(&H2).next().is_some()),
        flag(doc.select(&H1).next().is_some()),
        flag(video),
        ads as f64,
        title as f64,
        compression_ratio(&page.text),
        ratio(page.text.len(), page.html_len, 0.0),
        ratio(with_alt, images.len(), 1.0),
        flag(has_obfuscated_script(page)),
        ratio(cta, words.len(), 0.0),
        ratio(stopwords, words.len(), 0.0),
    ]
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
