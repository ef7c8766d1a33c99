use crate::tensor::{QTensor1D, Series1D};

pub fn relu(x: &Series1D) -> Series1D {
    let mut y = x.clone();
    relu_in_place(y.data_mut());
    y
}

pub fn relu_in_place(v: &mut [f32]) {
    for e in v {
        // max(0, NaN) stays NaN
        if *e < 0.0 {
            *e = 0.0;
        }
    }
}

pub fn relu_q(x: &QTensor1D) -> QTensor1D {
    let data = x.data().iter().map(|q| (*q).max(0)).collect();
    QTensor1D::from_parts_unchecked(x.shape(), data, x.scheme())
}

/// Numerically stable softmax. An empty input yields an empty output.
pub fn softmax(x: &[f32]) -> Vec<f32> {
    let Some(max) = x.iter().copied().reduce(f32::max) else {
        return Vec::new();
    };
    let exps: Vec<f64> = x.iter().map(|v| ((*v - max) as f64).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| (e / sum) as f32).collect()
}

/// Softmax applied independently to consecutive groups of `classes` values.
pub fn grouped_softmax(x: &[f32], classes: usize) -> Vec<f32> {
    x.chunks(classes).flat_map(softmax).collect()
}
