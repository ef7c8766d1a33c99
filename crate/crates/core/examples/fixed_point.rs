//! q7/q15 formats: quantize, saturate, dequantize and integer requantization.

use sleepnet::tensor::{dequantize, quantize, rounding_shift};
use sleepnet::{QuantScheme, Series1D};

fn main() -> sleepnet::Result<()> {
    let x = Series1D::from_vector(vec![0.5, -0.25, 0.0078125, 0.99, 1.5, -2.0])?;
    for scheme in [QuantScheme::q7(7), QuantScheme::q15(15), QuantScheme::q7(4)] {
        let q = quantize(&x, scheme);
        let back = dequantize(&q);
        println!("{scheme:?}");
        println!("  ints      {:?}", q.data());
        println!("  restored  {:?}", back.data());
        println!("  step      {}", scheme.step());
    }
    // accumulator at shift 14 brought down to shift 7, half away from zero
    for acc in [192i64, 64, -64, -192] {
        println!("rounding_shift({acc}, 7) = {}", rounding_shift(acc, 7));
    }
    Ok(())
}
