//! Synthetic corpus, stratified split and min-max normalization.

use webspam::dataset::{generate_synthetic, split, NormalizationStats, SplitSpec};
use webspam::features::FeatureGroups;

fn main() {
    let corpus = generate_synthetic(368, 0.3, 3.0, 0).unwrap();
    println!("corpus: {}", corpus.balance());
    let (train, test) = split(&corpus, &SplitSpec::with_seed(1)).unwrap();
    println!("train:  {}\ntest:   {}", train.balance(), test.balance());

    let train = train.project(FeatureGroups::LINKS).unwrap();
    let test = test.project(FeatureGroups::LINKS).unwrap();
    let stats = NormalizationStats::fit(&train).unwrap();
    let (_, clamped_train) = stats.apply(&train).unwrap();
    let (scaled, clamped_test) = stats.apply(&test).unwrap();
    for (j, (lo, hi)) in stats.min.iter().zip(&stats.max).enumerate() {
        println!("feature {j}: train range [{lo:+.3}, {hi:+.3}]");
    }
    println!("clamped values: train {clamped_train}, test {clamped_test}");
    println!("first test row scaled: {:.3?}", scaled.inputs()[0]);
}
