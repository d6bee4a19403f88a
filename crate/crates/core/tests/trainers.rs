use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use webspam::network::{Activation, Network};
use webspam::trainers::{
    global_error, train, train_cg, train_lm, train_lm_br, train_rprop, Algorithm, Pattern, RpropParams, RpropState,
    StopReason, TrainerConfig, TrainingSet,
};

fn smooth(points: usize) -> TrainingSet {
    let patterns = (0..points)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            Pattern::new(vec![x], vec![0.8 * (2.0 * x).sin()])
        })
        .collect();
    TrainingSet::new(patterns).unwrap()
}

fn noisy(points: usize, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = (0..points)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            let t = 0.6 * (3.0 * x).sin() + rng.gen_range(-0.25..0.25);
            Pattern::new(vec![x], vec![t.clamp(-0.95, 0.95)])
        })
        .collect();
    TrainingSet::new(patterns).unwrap()
}

fn net(hidden: usize, seed: u64) -> Network {
    Network::initialize(&[1, hidden, 1], Activation::default(), seed).unwrap()
}

#[test]
fn dispatcher_matches_direct_calls() {
    let data = smooth(15);
    for alg in Algorithm::ALL {
        let config = TrainerConfig::new(alg).with_iterations(12);
        let (mut a, mut b) = (net(4, 3), net(4, 3));
        let ra = train(&mut a, &data, &config).unwrap();
        let rb = match alg {
            Algorithm::Cg => train_cg(&mut b, &data, &config),
            Algorithm::Rprop => train_rprop(&mut b, &data, &config),
            Algorithm::Lm => train_lm(&mut b, &data, &config),
            Algorithm::LmBr => train_lm_br(&mut b, &data, &config),
        }
        .unwrap();
        assert_eq!(a, b, "{alg}");
        assert_eq!(ra.without_timing(), rb.without_timing());
    }
}

#[test]
fn zero_iterations_change_nothing() {
    let data = smooth(10);
    for alg in Algorithm::ALL {
        let mut n = net(3, 1);
        let before = n.clone();
        let r = train(&mut n, &data, &TrainerConfig::new(alg).with_iterations(0)).unwrap();
        assert_eq!(n, before);
        assert_eq!(r.iterations(), 0);
        assert_eq!(r.final_error, r.initial_error);
        assert_eq!(r.initial_error, global_error(&before, &data).unwrap());
    }
}

#[test]
fn training_is_deterministic() {
    let data = noisy(25, 2);
    for alg in Algorithm::ALL {
        let config = TrainerConfig { seed: 9, ..TrainerConfig::new(alg).with_iterations(30) };
        let (mut a, mut b) = (net(5, 8), net(5, 8));
        let ra = train(&mut a, &data, &config).unwrap().without_timing();
        let rb = train(&mut b, &data, &config).unwrap().without_timing();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }
}

#[test]
fn unreachable_target_uses_whole_budget() {
    // duplicate inputs with opposite targets: E can never reach 0
    let mut patterns = Vec::new();
    for i in 0..10 {
        let x = i as f64 / 10.0;
        patterns.push(Pattern::new(vec![x], vec![0.5]));
        patterns.push(Pattern::new(vec![x], vec![-0.5]));
    }
    let data = TrainingSet::new(patterns).unwrap();
    for alg in [Algorithm::Rprop, Algorithm::Cg, Algorithm::Lm] {
        let mut n = net(3, 4);
        let r = train(&mut n, &data, &TrainerConfig::new(alg).with_iterations(25).with_target(0.0)).unwrap();
        if r.stop_reason == StopReason::IterationsExhausted {
            assert_eq!(r.iterations(), 25, "{alg}");
        } else {
            assert_eq!(r.stop_reason, StopReason::Stalled, "{alg}");
        }
        assert!(r.final_error > 0.0);
    }
    let mut n = net(3, 4);
    let r = train(&mut n, &data, &TrainerConfig::new(Algorithm::Rprop).with_iterations(25).with_target(0.0)).unwrap();
    assert_eq!(r.iterations(), 25);
}

#[test]
fn reached_target_stops_early() {
    let data = smooth(10);
    let mut n = net(6, 2);
    let r = train(&mut n, &data, &TrainerConfig::new(Algorithm::Lm).with_iterations(500).with_target(1e-3)).unwrap();
    assert_eq!(r.stop_reason, StopReason::TargetReached);
    assert!(r.final_error <= 1e-3);
    assert!(r.iterations() < 500);
}

#[test]
fn lm_beats_cg_on_a_smooth_fit() {
    let data = smooth(20);
    let mut wins = 0;
    for seed in 0..10 {
        let (mut a, mut b) = (net(5, seed), net(5, seed));
        let lm = train(&mut a, &data, &TrainerConfig::new(Algorithm::Lm).with_iterations(100)).unwrap();
        let cg = train(&mut b, &data, &TrainerConfig::new(Algorithm::Cg).with_iterations(100)).unwrap();
        wins += usize::from(lm.final_error <= cg.final_error);
    }
    assert!(wins >= 8, "LM reached the lower error on {wins}/10 seeds");
}

#[test]
fn fixed_hyperparameters_reduce_to_plain_lm() {
    let data = noisy(20, 5);
    let mut config = TrainerConfig::new(Algorithm::LmBr).with_iterations(40);
    config.br.alpha0 = 0.0;
    config.br.beta0 = 1.0;
    config.br.reestimate_every = 0;
    let (mut a, mut b) = (net(4, 1), net(4, 1));
    let br = train(&mut a, &data, &config).unwrap();
    let lm = train(&mut b, &data, &TrainerConfig { algorithm: Algorithm::Lm, ..config }).unwrap();
    assert_eq!(a, b);
    assert_eq!(br.error_trace(), lm.error_trace());
    assert!(br.gamma_trace.is_empty());
}

#[test]
fn cg_and_lm_traces_never_increase() {
    let data = noisy(30, 7);
    for alg in [Algorithm::Cg, Algorithm::Lm] {
        for seed in 0..5 {
            let mut n = net(6, seed);
            let r = train(&mut n, &data, &TrainerConfig::new(alg).with_iterations(60)).unwrap();
            let mut prev = r.initial_error;
            for e in r.error_trace() {
                assert!(e <= prev, "{alg} seed {seed}: {e} > {prev}");
                prev = e;
            }
        }
    }
}

#[test]
fn br_reports_bounded_gamma() {
    let data = noisy(40, 3);
    let mut n = net(8, 2);
    let r = train(&mut n, &data, &TrainerConfig::new(Algorithm::LmBr).with_iterations(50)).unwrap();
    let count = n.param_count() as f64;
    let summary = r.br.unwrap();
    assert!(!r.gamma_trace.is_empty());
    assert!(r.gamma_trace.iter().all(|&g| (0.0..=count).contains(&g)), "{:?}", r.gamma_trace);
    assert!(summary.alpha > 0.0 && summary.beta > 0.0);
}

#[test]
fn lm_refuses_oversized_networks() {
    let data = TrainingSet::new(vec![Pattern::new(vec![0.0; 200], vec![0.0])]).unwrap();
    let mut n = Network::zeros(&[200, 101, 1], Activation::default()).unwrap();
    assert!(train(&mut n, &data, &TrainerConfig::new(Algorithm::Lm)).is_err());
    assert!(train(&mut n, &data, &TrainerConfig::new(Algorithm::LmBr)).is_err());
}

proptest! {
    #[test]
    fn rprop_steps_stay_in_bounds(grads in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 1..60)) {
        let params = RpropParams::default();
        let mut state = RpropState::new(6, params);
        for g in &grads {
            let delta = state.update(g);
            for (d, s) in delta.iter().zip(state.steps()) {
                prop_assert!(*s >= params.delta_min && *s <= params.delta_max);
                prop_assert!(d.abs() <= *s);
            }
        }
    }

    #[test]
    fn rprop_ignores_gradient_scale(grads in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..30),
                                    scale in 1e-6f64..1e6) {
        let mut a = RpropState::new(4, RpropParams::default());
        let mut b = a.clone();
        for g in &grads {
            let scaled: Vec<f64> = g.iter().map(|v| v * scale).collect();
            let (da, db) = (a.update(g), b.update(&scaled));
            prop_assert_eq!(da.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), db.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}
