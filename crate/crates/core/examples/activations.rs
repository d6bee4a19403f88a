//! Forward pass through a small hand-set network under both activations.

use webspam::network::{parameter_count, Activation, Network};

fn main() {
    let sizes = [2, 2, 1];
    // hidden: rows (w11 w12) (w21 w22), biases b1 b2; output: (v1 v2), c
    let params = vec![1.0, -1.0, 0.5, 0.5, 0.0, -0.25, 1.5, -2.0, 0.1];
    assert_eq!(params.len(), parameter_count(&sizes));
    for act in [Activation::default(), Activation::bipolar(0.5).unwrap(), Activation::Logistic] {
        let net = Network::from_params(&sizes, act, params.clone()).unwrap();
        println!("{act:?}");
        for x in [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]] {
            let trace = net.forward(&x).unwrap();
            println!("  {x:?} -> hidden {:.4?} output {:.4}", trace.activations[1], trace.output()[0]);
        }
    }
    let f = Activation::default();
    for x in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        println!("f({x:+.1}) = {:+.6}  f' = {:.6}", f.apply(x), f.derivative(x));
    }
}
