use crate::error::{Error, Result};
use crate::tensor::{QTensor1D, Series1D, Shape};

pub fn pooled_length(input_length: usize, window: usize, stride: usize) -> Result<usize> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidParameter(format!(
            "pool window {window} and stride {stride} must be positive"
        )));
    }
    if window > input_length {
        return Err(Error::InvalidParameter(format!(
            "pool window {window} exceeds input length {input_length}"
        )));
    }
    Ok((input_length - window) / stride + 1)
}

/// Per-channel max over windows of `window` steps, advancing by `stride`.
pub fn maxpool1d(x: &Series1D, window: usize, stride: usize) -> Result<Series1D> {
    let out_len = pooled_length(x.length(), window, stride)?;
    let mut y = Series1D::zeros(out_len, x.channels())?;
    for t in 0..out_len {
        let dst = y.row_mut(t);
        dst.copy_from_slice(x.row(t * stride));
        for k in 1..window {
            for (d, v) in dst.iter_mut().zip(x.row(t * stride + k)) {
                if *v > *d {
                    *d = *v;
                }
            }
        }
    }
    Ok(y)
}

/// Integer max-pool; the scheme passes through unchanged.
pub fn maxpool1d_q(x: &QTensor1D, window: usize, stride: usize) -> Result<QTensor1D> {
    let out_len = pooled_length(x.length(), window, stride)?;
    let ch = x.channels();
    let mut data = Vec::with_capacity(out_len * ch);
    for t in 0..out_len {
        for c in 0..ch {
            let m = (0..window).map(|k| x.get(t * stride + k, c)).max().unwrap();
            data.push(m);
        }
    }
    Ok(QTensor1D::from_parts_unchecked(
        Shape::new(out_len, ch),
        data,
        x.scheme(),
    ))
}
