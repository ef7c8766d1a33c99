use crate::error::{Error, Result};

/// Dense layer, weights `[out_features][in_features]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FcParams {
    pub in_features: usize,
    pub out_features: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl FcParams {
    pub fn new(in_features: usize, out_features: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if in_features == 0 || out_features == 0 {
            return Err(Error::InvalidParameter(format!(
                "fc dimensions must be positive ({in_features} -> {out_features})"
            )));
        }
        if weights.len() != in_features * out_features {
            return Err(Error::DimensionMismatch {
                what: "fc weights",
                expected: in_features * out_features,
                found: weights.len(),
            });
        }
        if bias.len() != out_features {
            return Err(Error::DimensionMismatch {
                what: "fc bias",
                expected: out_features,
                found: bias.len(),
            });
        }
        Ok(FcParams {
            in_features,
            out_features,
            weights,
            bias,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        Self::new(n, n, w, vec![0.0; n])
    }

    pub fn row(&self, o: usize) -> &[f32] {
        &self.weights[o * self.in_features..(o + 1) * self.in_features]
    }
}

pub fn fully_connected(x: &[f32], p: &FcParams) -> Result<Vec<f32>> {
    if x.len() != p.in_features {
        return Err(Error::DimensionMismatch {
            what: "fc input",
            expected: p.in_features,
            found: x.len(),
        });
    }
    Ok(p.weights
        .chunks_exact(p.in_features)
        .zip(&p.bias)
        .map(|(w, b)| b + w.iter().zip(x).map(|(w, v)| w * v).sum::<f32>())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let p = FcParams::identity(4).unwrap();
        assert_eq!(
            fully_connected(&[1.0, -2.0, 3.5, 0.0], &p).unwrap(),
            vec![1.0, -2.0, 3.5, 0.0]
        );
    }

    #[test]
    fn zero_weights_give_bias() {
        let p = FcParams::new(3, 2, vec![0.0; 6], vec![0.5, -1.0]).unwrap();
        assert_eq!(fully_connected(&[9.0, 8.0, 7.0], &p).unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let p = FcParams::identity(3).unwrap();
        assert!(fully_connected(&[1.0, 2.0], &p).is_err());
        assert!(FcParams::new(2, 2, vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(FcParams::new(2, 2, vec![0.0; 4], vec![0.0; 3]).is_err());
    }
}
