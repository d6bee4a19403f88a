//! Trains a model, writes it to disk, reads it back and classifies with it.

use webspam::cli::{cmd_evaluate, cmd_train, TrainOptions};
use webspam::dataset::{generate_synthetic, split, SplitSpec};
use webspam::model_file::{load_model, save_model};

fn main() {
    let corpus = generate_synthetic(368, 0.3, 3.0, 2).unwrap();
    let (train, test) = split(&corpus, &SplitSpec::with_seed(2)).unwrap();
    let (model, report) = cmd_train(&train, &TrainOptions::default()).unwrap();
    println!("trained {} for {} iterations, E {:.4e}", report.algorithm, report.iterations(), report.final_error);

    let dir = std::env::temp_dir().join("webspam-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.txt");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    let text = std::fs::read_to_string(&path).unwrap();
    println!("{} ({} lines), header:", path.display(), text.lines().count());
    text.lines().take(6).for_each(|l| println!("  {l}"));

    let m = cmd_evaluate(&loaded, &test).unwrap();
    println!("test accuracy {:.4}, efficiency {:.4}", m.accuracy, m.efficiency);
    let row = &test.rows()[0];
    println!(
        "row {}: output {:+.4} -> {}",
        row.source_id,
        loaded.output(&row.features).unwrap(),
        loaded.classify(&row.features).unwrap()
    );
}
