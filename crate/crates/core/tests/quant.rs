mod common;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepnet::graph::{load_model, run, run_logits, save_model, LayerKind};
use sleepnet::quant::{agreement, calibrate, quantize_graph};
use sleepnet::zoo::{argmax_first, build_paper_cnn, HeadConfig, WeightInit};
use sleepnet::{BitWidth, Error, Series1D};

fn inputs(seed: u64, n: usize) -> Vec<Series1D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| common::smooth_series(&mut rng, 2048, 3)).collect()
}

#[test]
fn q15_cnn_saves_loads_and_runs() {
    let g = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 3 }).unwrap();
    let xs = inputs(31, 4);
    let q = quantize_graph(&g, &calibrate(&g, &xs, BitWidth::W16).unwrap()).unwrap();
    assert_eq!(q.census(LayerKind::QConv), 11);
    assert_eq!(q.census(LayerKind::QFullyConnected), 2);
    assert_eq!(q.census(LayerKind::BatchNorm), 0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q15.json");
    save_model(&q, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, q);
    let y = run(&back, &xs[0]).unwrap();
    assert_eq!(y.len(), 21);
    for triple in y.chunks(3) {
        assert!((triple.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn rnn_quantizes_dense_layers_only() {
    let g = sleepnet::zoo::build_paper_rnn_with_length(HeadConfig::SingleEpoch, 2, 32, WeightInit::Uniform { seed: 4 })
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let xs: Vec<Series1D> = (0..3).map(|_| common::smooth_series(&mut rng, 32, 2)).collect();
    let q = quantize_graph(&g, &calibrate(&g, &xs, BitWidth::W16).unwrap()).unwrap();
    assert_eq!(q.census(LayerKind::Lstm), 2);
    assert_eq!(q.census(LayerKind::QFullyConnected), 2);
    let a = agreement(&g, &q, &xs).unwrap();
    assert!(a.max_abs_deviation < 1e-3, "{a:?}");
}

#[test]
fn empty_calibration_set() {
    let g = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Zeros).unwrap();
    assert!(matches!(calibrate(&g, &[], BitWidth::W8), Err(Error::EmptyCalibration)));
}

/// With fan-in scaled weights the logits depend on the input, so argmax
/// agreement is a real test rather than a constant.
#[test]
fn agreement_on_input_sensitive_cnn() {
    let base = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 17 }).unwrap();
    let g = common::fan_in_scaled(&base, 171);
    let xs = inputs(172, 40);
    let distinct: BTreeSet<Vec<usize>> = xs
        .iter()
        .map(|x| run_logits(&g, x).unwrap().chunks(3).map(argmax_first).collect())
        .collect();
    assert!(distinct.len() > 1, "float predictions do not depend on the input");
    let mut dev = Vec::new();
    for bits in [BitWidth::W16, BitWidth::W8] {
        let q = quantize_graph(&g, &calibrate(&g, &xs[..10], bits).unwrap()).unwrap();
        let a = agreement(&g, &q, &xs).unwrap();
        eprintln!("fan-in scaled CNN, {} bits: {a:?}", bits.bits());
        dev.push(a);
    }
    assert!(dev[0].rate >= 0.95, "{:?}", dev[0]);
    assert!(dev[0].max_abs_deviation <= dev[1].max_abs_deviation);
}
