//! Extracts all 31 features from the bundled test pages.
//!
//! cargo run --example extract_pages -- [pages dir]

use std::path::PathBuf;

use webspam::features::{extract, FeatureGroups, Lexicons, PageRecord, FEATURES};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pages"));
    let lexicons = Lexicons::bundled();
    let mut ids: Vec<String> = std::fs::read_dir(&dir)
        .expect("pages dir")
        .filter_map(|e| e.ok()?.path().file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    ids.sort();
    ids.dedup();
    let mut rows = Vec::new();
    for id in &ids {
        let (Ok(url), Ok(html)) =
            (std::fs::read_to_string(dir.join(format!("{id}.url"))), std::fs::read(dir.join(format!("{id}.html"))))
        else {
            continue;
        };
        match extract(&PageRecord::new(id.clone(), url, html), FeatureGroups::ALL, &lexicons) {
            Ok(fv) => rows.push((id.clone(), fv)),
            Err(e) => eprintln!("{id}: {e}"),
        }
    }
    print!("{:<28}", "feature");
    rows.iter().for_each(|(id, _)| print!("{id:>14}"));
    println!();
    for (i, info) in FEATURES.iter().enumerate() {
        print!("{:<28}", info.name);
        rows.iter().for_each(|(_, fv)| print!("{:>14.4}", fv.values[i]));
        println!();
    }
}
