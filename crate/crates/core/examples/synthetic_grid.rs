//! A reduced experiment grid over a synthetic corpus, rendered as markdown.
//!
//! cargo run --release --example synthetic_grid -- [readings]

use webspam::dataset::generate_synthetic;
use webspam::experiment::{render_markdown, run_experiment, ExperimentPlan};
use webspam::features::FeatureGroups;

fn main() {
    let readings = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let plan = ExperimentPlan {
        subsets: vec![FeatureGroups::URL, FeatureGroups::ALL],
        wide_subsets: vec![FeatureGroups::ALL],
        readings,
        ..Default::default()
    };
    plan.validate().unwrap();
    let corpus = generate_synthetic(368, 0.3, 3.0, 0).unwrap();
    let tables = run_experiment(&plan, &corpus).unwrap();
    print!("{}", render_markdown(&tables));
}
