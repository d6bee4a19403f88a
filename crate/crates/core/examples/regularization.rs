//! Plain LM against LM with Bayesian regularization on a noisy curve.
//!
//! cargo run --release --example regularization

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use webspam::network::{Activation, Network};
use webspam::trainers::{train, Algorithm, Pattern, TrainerConfig, TrainingSet};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let patterns = (0..40)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / 39.0;
            let t: f64 = 0.6 * (3.0 * x).sin() + rng.gen_range(-0.2..0.2);
            Pattern::new(vec![x], vec![t.clamp(-0.95, 0.95)])
        })
        .collect();
    let data = TrainingSet::new(patterns).unwrap();
    println!("seed  LM sum w^2  LM E      BR sum w^2  BR E      gamma / n");
    for seed in 0..5 {
        let init = Network::initialize(&[1, 20, 1], Activation::default(), seed).unwrap();
        let (mut lm, mut br) = (init.clone(), init);
        let rl = train(&mut lm, &data, &TrainerConfig::new(Algorithm::Lm).with_iterations(200)).unwrap();
        let rb = train(&mut br, &data, &TrainerConfig::new(Algorithm::LmBr).with_iterations(200)).unwrap();
        let sq = |n: &Network| n.params().iter().map(|w| w * w).sum::<f64>();
        let s = rb.br.unwrap();
        println!(
            "{seed:>4}  {:>10.3}  {:.2e}  {:>10.3}  {:.2e}  {:.1} / {}",
            sq(&lm),
            rl.final_error,
            sq(&br),
            rb.final_error,
            s.gamma,
            br.param_count()
        );
    }
}
