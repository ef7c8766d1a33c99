//! The recurrent model on a shortened sequence. Full 2048-step sequences
//! work the same way but take longer.

use sleepnet::graph::{count_macs, count_params, run};
use sleepnet::zoo::{build_paper_rnn_with_length, decode_head, HeadConfig, WeightInit};
use sleepnet::Series1D;

fn main() -> sleepnet::Result<()> {
    let len = 256;
    let g = build_paper_rnn_with_length(HeadConfig::SingleEpoch, 2, len, WeightInit::Uniform { seed: 3 })?;
    let data = (0..len).flat_map(|t| [((t as f32) / 20.0).sin(), 0.0]).collect();
    let x = Series1D::from_vec(len, 2, data)?;
    let y = run(&g, &x)?;
    println!("params {}  MACs at length {len}: {}", count_params(&g), count_macs(&g));
    println!("scores {y:?}");
    let logits = sleepnet::graph::run_logits(&g, &x)?;
    println!("decoded {:?}", decode_head(&logits, HeadConfig::SingleEpoch)?);
    Ok(())
}
