use std::collections::HashMap;

use proptest::prelude::*;

use webspam::cli::{cmd_evaluate, cmd_train, TrainOptions};
use webspam::dataset::{generate_synthetic, read_corpus, split, write_corpus, Corpus, NormalizationStats, SplitSpec};
use webspam::features::FeatureGroups;
use webspam::metrics::Label;

fn ids(c: &Corpus) -> Vec<String> {
    c.rows().iter().map(|r| r.source_id.clone()).collect()
}

fn count(c: &Corpus, label: Label) -> usize {
    c.rows().iter().filter(|r| r.label == label).count()
}

fn nearest_centroid_accuracy(train: &Corpus, test: &Corpus) -> f64 {
    let mut sums: HashMap<Label, (Vec<f64>, usize)> = HashMap::new();
    for (x, l) in train.inputs().into_iter().zip(train.labels()) {
        let e = sums.entry(l).or_insert_with(|| (vec![0.0; x.len()], 0));
        e.0.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
        e.1 += 1;
    }
    let centroid = |l: Label| -> Vec<f64> {
        let (s, n) = &sums[&l];
        s.iter().map(|v| v / *n as f64).collect()
    };
    let (cs, ch) = (centroid(Label::Spam), centroid(Label::Ham));
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let correct = test
        .inputs()
        .iter()
        .zip(test.labels())
        .filter(|(x, l)| (if dist(x, &cs) < dist(x, &ch) { Label::Spam } else { Label::Ham }) == *l)
        .count();
    correct as f64 / test.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (v[(n - 1) / 2] + v[n / 2]) / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_the_corpus(n in 20usize..200, frac in 0.1f64..0.6, seed in any::<u64>(),
                                   train_fraction in 0.3f64..0.9) {
        let corpus = generate_synthetic(n, frac, 2.0, seed).unwrap();
        let spec = SplitSpec { train_fraction, seed, stratified: true };
        let Ok((train, test)) = split(&corpus, &spec) else { return Ok(()) };
        let mut all = ids(&train);
        all.extend(ids(&test));
        all.sort();
        let mut expected = ids(&corpus);
        expected.sort();
        prop_assert_eq!(all, expected);
        for label in [Label::Spam, Label::Ham] {
            let want = count(&corpus, label) as f64 * train_fraction;
            prop_assert!((count(&train, label) as f64 - want).abs() <= 1.0);
        }
    }

    #[test]
    fn normalization_maps_train_onto_unit_box(seed in any::<u64>()) {
        let corpus = generate_synthetic(60, 0.3, 2.0, seed).unwrap().project(FeatureGroups::URL).unwrap();
        let stats = NormalizationStats::fit(&corpus).unwrap();
        let (scaled, clamped) = stats.apply(&corpus).unwrap();
        prop_assert_eq!(clamped, 0);
        let inputs = scaled.inputs();
        for j in 0..inputs[0].len() {
            let lo = inputs.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min);
            let hi = inputs.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_exact(seed in any::<u64>(), n in 10usize..40) {
        let corpus = generate_synthetic(n, 0.4, 1.0, seed).unwrap();
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        prop_assert_eq!(read_corpus(buf.as_slice()).unwrap(), corpus);
    }
}

#[test]
fn test_rows_do_not_leak_into_statistics() {
    let corpus = generate_synthetic(100, 0.3, 2.0, 4).unwrap();
    let (train, test) = split(&corpus, &SplitSpec::with_seed(4)).unwrap();
    let stats = NormalizationStats::fit(&train).unwrap();
    let test_ids = ids(&test);
    let poisoned: Vec<_> = corpus
        .rows()
        .iter()
        .cloned()
        .map(|mut r| {
            if test_ids.contains(&r.source_id) {
                r.features.values.iter_mut().for_each(|v| *v = 1e9);
            }
            r
        })
        .collect();
    let poisoned = Corpus::new(corpus.groups(), poisoned).unwrap();
    let (train2, _) = split(&poisoned, &SplitSpec::with_seed(4)).unwrap();
    assert_eq!(NormalizationStats::fit(&train2).unwrap(), stats);
}

#[test]
fn zero_separation_is_chance_level() {
    let mut effs = Vec::new();
    for seed in 0..10 {
        let corpus = generate_synthetic(368, 0.3, 0.0, seed).unwrap();
        let (train, test) = split(&corpus, &SplitSpec::with_seed(seed)).unwrap();
        let (model, _) = cmd_train(&train, &TrainOptions { seed, iterations: 50, ..Default::default() }).unwrap();
        effs.push(cmd_evaluate(&model, &test).unwrap().efficiency);
    }
    let m = median(effs);
    assert!((m - 0.5).abs() < 0.1, "median efficiency {m}");
}

#[test]
fn wide_separation_is_learnable() {
    let mut centroid = Vec::new();
    let mut network = Vec::new();
    for seed in 0..5 {
        let corpus = generate_synthetic(368, 0.3, 4.5, 50 + seed).unwrap();
        let (train, test) = split(&corpus, &SplitSpec::with_seed(seed)).unwrap();
        centroid.push(nearest_centroid_accuracy(&train, &test));
        let (model, _) = cmd_train(&train, &TrainOptions { seed, ..Default::default() }).unwrap();
        network.push(cmd_evaluate(&model, &test).unwrap().accuracy);
    }
    assert!(median(centroid.clone()) >= 0.95, "{centroid:?}");
    assert!(median(network.clone()) >= 0.95, "{network:?}");
}

#[test]
fn balance_reports_class_counts() {
    let corpus = generate_synthetic(368, 0.3, 1.0, 0).unwrap();
    let b = corpus.balance();
    assert_eq!(b.spam + b.ham, 368);
    assert_eq!(b.spam, 110);
}
