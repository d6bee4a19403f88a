//! Classification metrics from a confusion matrix and from raw predictions.

use webspam::metrics::{derive, tally, ConfusionMatrix, Label};

fn main() {
    let cm = ConfusionMatrix::new(20, 45, 4, 5);
    let m = derive(&cm).unwrap();
    println!("tp 20 tn 45 fp 4 fn 5");
    println!(
        "sensitivity {:.4}  specificity {:.4}  efficiency {:.4}  accuracy {:.4}",
        m.sensitivity, m.specificity, m.efficiency, m.accuracy
    );

    let truth = [Label::Spam, Label::Spam, Label::Ham, Label::Ham, Label::Ham];
    let outputs = [0.8, -0.1, -0.9, 0.0, -0.4];
    let predicted: Vec<Label> = outputs.iter().map(|&o| Label::from_output(o)).collect();
    let cm = tally(&predicted, &truth).unwrap();
    println!("\noutputs {outputs:?} -> {cm:?}");
    println!("{:?}", derive(&cm).unwrap());
}
