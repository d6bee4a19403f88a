use proptest::prelude::*;

use webspam::features::{extract, feature_index, FeatureGroups, FeatureKind, Lexicons, PageRecord, FEATURES};

fn extract_all(url: &str, html: &[u8]) -> Vec<f64> {
    let rec = PageRecord::new("t", url, html.to_vec());
    extract(&rec, FeatureGroups::ALL, &Lexicons::bundled()).unwrap().values.to_vec()
}

fn value(values: &[f64], name: &str) -> f64 {
    values[feature_index(name).unwrap()]
}

#[test]
fn stopword_fraction_of_known_text() {
    let mut words = vec!["the"; 40];
    words.extend(std::iter::repeat_n("zebra", 60));
    let html = format!("<html><body><p>{}</p></body></html>", words.join(" "));
    let v = extract_all("http://example.com/", html.as_bytes());
    assert_eq!(value(&v, "word_count"), 100.0);
    assert!((value(&v, "stopword_pct") - 0.4).abs() < 1e-12);
}

#[test]
fn url_flags() {
    let v = extract_all("https://192.168.0.1/a", b"");
    assert_eq!(value(&v, "ip_host"), 1.0);
    assert_eq!(value(&v, "has_ssl"), 1.0);
    let v = extract_all("http://a.b.c.d.example.com/", b"");
    assert_eq!(value(&v, "subdomain_depth_gt3"), 1.0);
    assert_eq!(value(&v, "not_subdomain"), 0.0);
    let v = extract_all("http://example.com/", b"");
    assert_eq!(value(&v, "not_subdomain"), 1.0);
    assert_eq!(value(&v, "url_length"), "http://example.com/".len() as f64);
}

#[test]
fn empty_page_is_all_neutral() {
    let v = extract_all("http://example.com/", b"");
    assert_eq!(value(&v, "word_count"), 0.0);
    assert_eq!(value(&v, "image_alt_fraction"), 1.0);
    assert_eq!(value(&v, "stopword_pct"), 0.0);
    assert_eq!(value(&v, "external_links"), 0.0);
}

fn in_bounds(values: &[f64]) -> bool {
    values.iter().zip(FEATURES.iter()).all(|(&v, info)| {
        v.is_finite()
            && match info.kind {
                FeatureKind::Boolean => v == 0.0 || v == 1.0,
                FeatureKind::Count => v >= 0.0 && v.fract() == 0.0,
                FeatureKind::Fraction => (0.0..=1.0).contains(&v),
            }
    })
}

const TAGS: &[&str] = &[
    "<a href=\"/x\">",
    "<a href=\"http://other.org/\">",
    "</a>",
    "<img src=a.png>",
    "<img alt=\"\">",
    "<script>",
    "</script>",
    "eval(unescape('%41'))",
    "<h1>",
    "<div class=ad-box>",
    "<iframe>",
    "<meta name=description content=",
    "<title>",
    "</title>",
    "<video>",
    "&amp;",
    "<!--",
    "-->",
    "<![CDATA[",
    "buy now",
    "the",
    "\u{fffd}",
    "<p",
    ">",
];

fn html_soup() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(
        prop_oneof![
            prop::sample::select(TAGS).prop_map(|s| s.as_bytes().to_vec()),
            prop::collection::vec(any::<u8>(), 0..12),
        ],
        0..40,
    )
    .prop_map(|chunks| chunks.concat())
}

proptest! {
    #[test]
    fn arbitrary_html_stays_in_bounds(html in html_soup()) {
        let v = extract_all("http://fuzz.example.com/page", &html);
        prop_assert!(in_bounds(&v), "{v:?}");
    }

    #[test]
    fn arbitrary_bytes_stay_in_bounds(html in prop::collection::vec(any::<u8>(), 0..512)) {
        let v = extract_all("https://fuzz.example.org/", &html);
        prop_assert!(in_bounds(&v));
    }

    #[test]
    fn arbitrary_host_labels(labels in prop::collection::vec("[a-z0-9]{1,12}", 1..7), tld in "[a-z]{2,4}") {
        let url = format!("http://{}.{tld}/", labels.join("."));
        let v = extract_all(&url, b"<p>hi</p>");
        prop_assert!(in_bounds(&v));
    }
}
