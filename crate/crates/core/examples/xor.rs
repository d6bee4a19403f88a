//! Trains a 2-3-1 network on XOR with each trainer and prints the outcome.
//!
//! cargo run --example xor -- [seeds]

use webspam::network::{Activation, Network};
use webspam::trainers::{train, Algorithm, Pattern, TrainerConfig, TrainingSet};

fn xor() -> TrainingSet {
    let rows = [([-1.0, -1.0], -1.0), ([-1.0, 1.0], 1.0), ([1.0, -1.0], 1.0), ([1.0, 1.0], -1.0)];
    TrainingSet::new(rows.iter().map(|(x, t)| Pattern::new(x.to_vec(), vec![*t])).collect()).unwrap()
}

fn main() {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let data = xor();
    for algorithm in [Algorithm::Cg, Algorithm::Rprop, Algorithm::Lm] {
        let config = TrainerConfig::new(algorithm).with_iterations(200).with_target(0.01);
        let mut solved = 0;
        for seed in 0..seeds {
            let mut net = Network::initialize(&[2, 3, 1], Activation::default(), seed).unwrap();
            let report = train(&mut net, &data, &config).unwrap();
            if report.final_error < 0.01 {
                solved += 1;
            }
            println!(
                "{:>5} seed {seed:>2}: E {:.3e} after {:>3} iterations ({:?})",
                algorithm.table_label(),
                report.final_error,
                report.iterations(),
                report.stop_reason
            );
        }
        println!("{}: {solved}/{seeds} seeds reached E < 0.01\n", algorithm.table_label());
    }
}
