use url::{Host, Url};

use super::domain::registrable_domain;
use super::lexicons::Lexicons;
use super::URL_FEATURES;

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Three identical consecutive letters.
pub(crate) fn has_letter_run(label: &str) -> bool {
    let chars: Vec<char> = label.chars().collect();
    chars.windows(3).any(|w| w[0].is_alphabetic() && w[0] == w[1] && w[1] == w[2])
}

/// URL group, in canonical order. `raw` is the URL as stored, used for the
/// length feature; `url` its parsed form.
pub fn extract_url_features(
    raw: &str,
    url: &Url,
    headers: &[(String, String)],
    lexicons: &Lexicons,
) -> [f64; URL_FEATURES] {
    let ssl = url.scheme().eq_ignore_ascii_case("https")
        || headers.iter().any(|(k, _)| k.trim().eq_ignore_ascii_case("strict-transport-security"));
    let url_length = raw.trim().chars().count() as f64;

    let mut out = [0.0; URL_FEATURES];
    out[0] = flag(ssl);
    out[1] = url_length;
    match url.host() {
        Some(Host::Domain(host)) => {
            let parts = registrable_domain(host, &lexicons.suffixes);
            let authoritative = parts.suffix.split('.').any(|l| lexicons.authoritative_tlds.contains(l));
            let repeated = std::iter::once(parts.name.as_str())
                .chain(parts.subdomains.iter().map(String::as_str).filter(|l| *l != "www"))
                .any(has_letter_run);
            let digit_symbols =
                parts.registrable.chars().filter(|c| c.is_ascii_digit() || *c == '-' || *c == '_').count();
            let top =
                lexicons.top_sites.contains(&parts.registrable) || lexicons.top_sites.contains(&host.to_lowercase());
            out[2] = flag(parts.subdomains.len() <= 1);
            out[3] = flag(authoritative);
            out[4] = flag(repeated);
            // registrable domain counts as level 2, each label to its left adds one
            out[5] = flag(2 + parts.subdomains.len() > 3);
            out[6] = flag(digit_symbols >= 3);
            out[7] = 0.0;
            out[8] = flag(top);
            out[9] = parts.registrable.chars().count() as f64;
        }
        Some(ip @ (Host::Ipv4(_) | Host::Ipv6(_))) => {
            let text = ip.to_string();
            out[2] = 1.0;
            out[6] = flag(text.chars().filter(char::is_ascii_digit).count() >= 3);
            out[7] = 1.0;
            out[9] = text.chars().count() as f64;
        }
        None => {
            out[2] = 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(raw: &str) -> [f64; URL_FEATURES] {
        let lex = Lexicons::bundled();
        extract_url_features(raw, &Url::parse(raw).unwrap(), &[], &lex)
    }

    #[test]
    fn gov_over_https() {
        let f = features("https://example.gov/page");
        assert_eq!(f[0], 1.0);
        assert_eq!(f[3], 1.0);
        assert_eq!(f[7], 0.0);
        assert_eq!(f[1], 24.0);
        assert_eq!(f[9], "example.gov".len() as f64);
    }

    #[test]
    fn ip_host() {
        let f = features("http://192.168.0.1/x");
        assert_eq!(f[7], 1.0);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[8], 0.0);
    }

    #[test]
    fn repeated_letters() {
        assert_eq!(features("http://aaab.com")[4], 1.0);
        assert_eq!(features("http://aab.com")[4], 0.0);
        assert_eq!(features("http://www.example.com")[4], 0.0);
        assert!(!has_letter_run("a111b"));
    }

    #[test]
    fn subdomain_levels() {
        let f = features("http://mocosoft.com.mydomain.net/");
        assert_eq!(f[5], 1.0);
        assert_eq!(f[2], 0.0);
        let f = features("http://www.example.co.uk/");
        assert_eq!(f[5], 0.0);
        assert_eq!(f[2], 1.0);
        assert_eq!(f[9], "example.co.uk".len() as f64);
    }

    #[test]
    fn digits_and_top_sites() {
        assert_eq!(features("http://cheap-pills-24.com")[6], 1.0);
        assert_eq!(features("http://example.com")[6], 0.0);
        assert_eq!(features("https://en.wikipedia.org/wiki/Spam")[8], 1.0);
        assert_eq!(features("http://ox.ac.uk")[3], 1.0);
    }

    #[test]
    fn hsts_header_counts_as_ssl() {
        let lex = Lexicons::bundled();
        let url = Url::parse("http://example.com").unwrap();
        let headers = vec![("Strict-Transport-Security".to_string(), "max-age=1".to_string())];
        assert_eq!(extract_url_features(url.as_str(), &url, &headers, &lex)[0], 1.0);
    }
}
