mod common;
mod oracle;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepnet::graph::count_macs;
use sleepnet::ops::{conv1d, fully_connected, lstm_step, ConvParams, LstmState};
use sleepnet::zoo::{build_paper_cnn, build_paper_rnn_with_length, HeadConfig, WeightInit};
use sleepnet::Series1D;

#[test]
fn identity_kernel_matches_oracle_exactly() {
    let x = Series1D::from_vec(5, 2, vec![1.0, -2.0, 0.5, 3.0, -1.5, 0.25, 2.0, 4.0, -0.75, 1.0]).unwrap();
    let mut w = vec![0.0; 3 * 2 * 2];
    // out o reads in c == o at the center tap
    w[1] = 1.0;
    w[(2 + 1) * 3 + 1] = 1.0;
    let p = ConvParams::new(3, 2, 2, 1, w, None).unwrap();
    let y = conv1d(&x, &p).unwrap();
    let r = oracle::naive_conv1d(&oracle::rows(&x), &p);
    assert_eq!(y.data(), x.data());
    assert_eq!(oracle::to_series(&r), y);
}

#[test]
fn instrumented_counter_matches_cnn_accounting() {
    let g = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Zeros).unwrap();
    let (_, macs) = oracle::instrumented_run(&g, &Series1D::zeros(2048, 3).unwrap());
    assert_eq!(macs, 6_182_144);
    assert_eq!(count_macs(&g), macs);
}

#[test]
fn instrumented_counter_matches_rnn_accounting() {
    let g = build_paper_rnn_with_length(HeadConfig::SingleEpoch, 2, 16, WeightInit::Uniform { seed: 1 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = common::random_series(&mut rng, 16, 2, 1.0);
    let (y, macs) = oracle::instrumented_run(&g, &x);
    assert_eq!(count_macs(&g), macs);
    let got = sleepnet::graph::run(&g, &x).unwrap();
    for (a, b) in got.iter().zip(&y) {
        assert!((*a as f64 - b).abs() < 1e-5);
    }
}

#[test]
fn float_cnn_matches_oracle_execution() {
    let g = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 11 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = common::smooth_series(&mut rng, 2048, 3);
    let (want, _) = oracle::instrumented_run(&g, &x);
    let got = sleepnet::graph::run(&g, &x).unwrap();
    for (a, b) in got.iter().zip(&want) {
        assert!((*a as f64 - b).abs() < 1e-5, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_agrees_with_oracle(seed in any::<u64>(), l in 1usize..40, cin in 1usize..8, cout in 1usize..8, k in 1usize..9, s in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_conv(&mut rng, k, cin, cout, s, true);
        let x = common::random_series(&mut rng, l, cin, 1.0);
        let y = conv1d(&x, &p).unwrap();
        let r = oracle::naive_conv1d(&oracle::rows(&x), &p);
        prop_assert_eq!(y.length(), r.len());
        for (a, b) in y.data().iter().zip(r.concat()) {
            prop_assert!((*a as f64 - b).abs() < 1e-5);
        }
    }

    #[test]
    fn fc_and_lstm_agree_with_oracle(seed in any::<u64>(), n in 1usize..24, m in 1usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fc = common::random_fc(&mut rng, n, m);
        let x = common::uniform_vec(&mut rng, n, 1.0);
        let xd: Vec<f64> = x.iter().map(|v| *v as f64).collect();
        for (a, b) in fully_connected(&x, &fc).unwrap().iter().zip(oracle::naive_fc(&xd, &fc)) {
            prop_assert!((*a as f64 - b).abs() < 1e-5);
        }
        let p = common::random_lstm(&mut rng, n, m);
        let s = LstmState { h: common::uniform_vec(&mut rng, m, 1.0), c: common::uniform_vec(&mut rng, m, 2.0) };
        let y = lstm_step(&x, &s, &p).unwrap();
        let (h, c) = oracle::naive_lstm_step(&xd, &s, &p);
        for (a, b) in y.h.iter().zip(&h).chain(y.c.iter().zip(&c)) {
            prop_assert!((*a as f64 - b).abs() < 1e-5);
        }
    }
}
