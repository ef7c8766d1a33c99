//! Shape column and exact cost accounting of the two built-in architectures.

use sleepnet::graph::{cost_report, CostOptions};
use sleepnet::zoo::{build_paper_cnn, build_paper_rnn, HeadConfig, WeightInit};

fn main() -> sleepnet::Result<()> {
    let cnn = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Zeros)?;
    println!("CNN inputs of conv / pool / dense layers:");
    for (kind, shape) in cnn.primary_layer_inputs() {
        println!("  {:<8} {shape}", kind.name());
    }

    for (g, label) in [
        (&cnn, "CNN"),
        (&build_paper_rnn(HeadConfig::SingleEpoch, 2, WeightInit::Zeros)?, "RNN"),
    ] {
        let r = cost_report(g, &CostOptions::default());
        println!("\n{label}: {} layers", r.layers.len());
        for l in r.layers.iter().filter(|l| l.params > 0 || l.macs > 0) {
            println!(
                "  #{:<2} {:<9} {:>9} -> {:<9} params {:>7} macs {:>10}",
                l.index,
                l.kind.name(),
                l.input.to_string(),
                l.output.to_string(),
                l.params,
                l.macs
            );
        }
        println!(
            "  total params {}  total MACs {}  peak activations {} B",
            r.total_params, r.total_macs, r.peak_activation_bytes
        );
    }
    Ok(())
}
