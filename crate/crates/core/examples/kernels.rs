//! Float kernels on a small hand-made signal: same-padded strided conv,
//! batch norm and its folding, max pooling, an LSTM pass and softmax.

use sleepnet::ops::{
    batchnorm, conv1d, fold_batchnorm, lstm_run, maxpool1d, relu, softmax, BatchNormParams, ConvParams, LstmParams,
    LstmState,
};
use sleepnet::Series1D;

fn main() -> sleepnet::Result<()> {
    let x = Series1D::from_vec(6, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])?;
    let conv = ConvParams::new(3, 1, 2, 2, vec![1.0, 1.0, 1.0, -1.0, 0.0, 1.0], Some(vec![0.0, 0.5]))?;
    let y = conv1d(&x, &conv)?;
    println!("conv (k=3, s=2): {:?}", y.data());

    let bn = BatchNormParams::new(vec![2.0, 0.5], vec![0.1, -0.1], vec![3.0, 1.0], vec![4.0, 1.0], 1e-5)?;
    let normed = batchnorm(&y, &bn)?;
    let folded = conv1d(&x, &fold_batchnorm(&conv, &bn)?)?;
    println!("conv+bn:         {:?}", normed.data());
    println!("folded conv:     {:?}", folded.data());

    println!("relu+pool:       {:?}", maxpool1d(&relu(&normed), 2, 2)?.data());

    let lstm = LstmParams::zeros(2, 3)?;
    let (seq, last) = lstm_run(&normed, &lstm, &LstmState::zeros(3))?;
    println!(
        "lstm outputs:    {} x {}, final h {:?}",
        seq.length(),
        seq.channels(),
        last.h
    );

    println!("softmax:         {:?}", softmax(&[1.0, 2.0, 3.0]));
    Ok(())
}
