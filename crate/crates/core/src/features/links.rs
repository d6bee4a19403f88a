use url::Url;

use super::content::ParsedPage;
use super::domain::registrable_domain;
use super::lexicons::Lexicons;
use super::LINK_FEATURES;

fn site_of(url: &Url, lexicons: &Lexicons) -> Option<String> {
    match url.host()? {
        url::Host::Domain(d) => Some(registrable_domain(d, &lexicons.suffixes).registrable),
        ip => Some(ip.to_string()),
    }
}

fn without_fragment(url: &Url) -> Url {
    let mut u = url.clone();
    u.set_fragment(None);
    u
}

/// Links group, in canonical order. Only http(s) targets are counted;
/// `mailto:`, `javascript:` and unparseable hrefs are ignored.
pub fn extract_link_features(page: &ParsedPage, base: &Url, lexicons: &Lexicons) -> [f64; LINK_FEATURES] {
    let base_site = site_of(base, lexicons);
    let base_page = without_fragment(base);
    let (mut internal, mut external, mut self_refs) = (0usize, 0usize, 0usize);
    let mut anchor_chars = 0usize;
    let mut anchor_words = 0usize;
    for anchor in &page.anchors {
        anchor_chars += anchor.text.chars().count();
        anchor_words += anchor.text.split_whitespace().count();
        let Ok(target) = base.join(&anchor.href) else { continue };
        if !matches!(target.scheme(), "http" | "https") {
            continue;
        }
        if base_site.is_some() && site_of(&target, lexicons) == base_site {
            internal += 1;
            if without_fragment(&target) == base_page {
                self_refs += 1;
            }
        } else {
            external += 1;
        }
    }
    let text_chars = page.text.chars().count();
    let fraction = |num: usize, den: usize| if den == 0 { 0.0 } else { (num as f64 / den as f64).min(1.0) };
    [
        internal as f64,
        fraction(self_refs, internal),
        external as f64,
        fraction(anchor_chars, text_chars),
        anchor_words as f64,
    ]
}
