//! Calibrate the CNN on a few smooth inputs, quantize to q7 and q15 and
//! compare against float.

use sleepnet::quant::{agreement, calibrate, quantize_graph, TensorId};
use sleepnet::zoo::{build_paper_cnn, HeadConfig, WeightInit};
use sleepnet::{BitWidth, Series1D};

fn smooth(seed: usize) -> Series1D {
    let f = 0.002 + 0.001 * seed as f32;
    let data = (0..2048 * 3)
        .map(|i| ((i / 3) as f32 * f * (1 + i % 3) as f32).sin())
        .collect();
    Series1D::from_vec(2048, 3, data).unwrap()
}

fn main() -> sleepnet::Result<()> {
    let g = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 1 })?;
    let inputs: Vec<Series1D> = (0..12).map(smooth).collect();
    for bits in [BitWidth::W8, BitWidth::W16] {
        let schemes = calibrate(&g, &inputs[..4], bits)?;
        let q = quantize_graph(&g, &schemes)?;
        let a = agreement(&g, &q, &inputs)?;
        println!(
            "{}-bit: input shift {}, first conv weight shift {}, agreement {:.3}, max logit deviation {:.2e}",
            bits.bits(),
            schemes.get(TensorId::Input)?.shift,
            schemes.get(TensorId::Weight(0))?.shift,
            a.rate,
            a.max_abs_deviation
        );
    }
    Ok(())
}
