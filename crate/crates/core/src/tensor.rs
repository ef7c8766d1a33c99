//! Fixed-shape 1-D signal tensors and the Q-format fixed-point representation.
//!
//! Every tensor is time-major: element `(t, c)` lives at `t * channels + c`.
//! Float tensors hold `f32`. Fixed-point tensors hold integers in an `i32`
//! store whose values always fit the scheme's bit width; the represented
//! value is `q * 2^-shift`, symmetric around zero with no zero point.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(length, channels)` of a time-major series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub length: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(length: usize, channels: usize) -> Self {
        Shape { length, channels }
    }

    pub fn elements(&self) -> usize {
        self.length * self.channels
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.length, self.channels)
    }
}

fn checked_elements(length: usize, channels: usize) -> Result<usize> {
    if length == 0 || channels == 0 {
        return Err(Error::InvalidDimensions {
            length,
            channels,
            reason: "dimensions must be positive",
        });
    }
    length
        .checked_mul(channels)
        .filter(|n| *n <= isize::MAX as usize / std::mem::size_of::<f32>())
        .ok_or(Error::InvalidDimensions {
            length,
            channels,
            reason: "element count overflows",
        })
}

/// A time-major multi-channel window of real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Series1D {
    shape: Shape,
    data: Vec<f32>,
}

impl Series1D {
    pub fn from_vec(length: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let expected = checked_elements(length, channels)?;
        if data.len() != expected {
            return Err(Error::DataLength {
                shape: Shape::new(length, channels),
                expected,
                found: data.len(),
            });
        }
        Ok(Series1D {
            shape: Shape::new(length, channels),
            data,
        })
    }

    /// A single-row series holding a feature vector.
    pub fn from_vector(v: Vec<f32>) -> Result<Self> {
        let n = v.len();
        Self::from_vec(1, n, v)
    }

    pub fn zeros(length: usize, channels: usize) -> Result<Self> {
        make_series(length, channels, 0.0)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn length(&self) -> usize {
        self.shape.length
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    #[inline]
    pub fn get(&self, t: usize, c: usize) -> f32 {
        debug_assert!(t < self.shape.length && c < self.shape.channels);
        self.data[t * self.shape.channels + c]
    }

    #[inline]
    pub fn set(&mut self, t: usize, c: usize, value: f32) {
        debug_assert!(t < self.shape.length && c < self.shape.channels);
        self.data[t * self.shape.channels + c] = value;
    }

    /// All channels at time step `t`.
    #[inline]
    pub fn row(&self, t: usize) -> &[f32] {
        let c = self.shape.channels;
        &self.data[t * c..(t + 1) * c]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f32] {
        let c = self.shape.channels;
        &mut self.data[t * c..(t + 1) * c]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Values of one channel, in time order.
    pub fn channel(&self, c: usize) -> Vec<f32> {
        (0..self.shape.length).map(|t| self.get(t, c)).collect()
    }

    /// Reinterpret as `1 x (length * channels)`, keeping time-major order.
    pub fn flatten(self) -> Series1D {
        let n = self.data.len();
        Series1D {
            shape: Shape::new(1, n),
            data: self.data,
        }
    }
}

/// Build a `length x channels` series with every element equal to `fill`.
pub fn make_series(length: usize, channels: usize, fill: f32) -> Result<Series1D> {
    let n = checked_elements(length, channels)?;
    Ok(Series1D {
        shape: Shape::new(length, channels),
        data: vec![fill; n],
    })
}

/// Signed integer width of a fixed-point tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BitWidth {
    /// q7 storage.
    W8,
    /// q15 storage.
    W16,
}

impl BitWidth {
    pub fn bits(self) -> u32 {
        match self {
            BitWidth::W8 => 8,
            BitWidth::W16 => 16,
        }
    }

    pub fn max_int(self) -> i32 {
        (1i32 << (self.bits() - 1)) - 1
    }

    pub fn min_int(self) -> i32 {
        -(1i32 << (self.bits() - 1))
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitWidth::W8),
            16 => Ok(BitWidth::W16),
            other => Err(Error::InvalidParameter(format!(
                "bit width must be 8 or 16, got {other}"
            ))),
        }
    }
}

impl TryFrom<u8> for BitWidth {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::from_bits(v as u32)
    }
}

impl From<BitWidth> for u8 {
    fn from(b: BitWidth) -> u8 {
        b.bits() as u8
    }
}

/// Symmetric power-of-two fixed-point format. Always saturating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantScheme {
    pub bits: BitWidth,
    /// Represented value is `q * 2^-shift`.
    pub shift: i32,
}

impl QuantScheme {
    pub const fn new(bits: BitWidth, shift: i32) -> Self {
        QuantScheme { bits, shift }
    }

    pub const fn q7(shift: i32) -> Self {
        Self::new(BitWidth::W8, shift)
    }

    pub const fn q15(shift: i32) -> Self {
        Self::new(BitWidth::W16, shift)
    }

    /// Size of one quantization step, `2^-shift`.
    pub fn step(&self) -> f64 {
        (-self.shift as f64).exp2()
    }

    pub fn saturate(&self, v: i64) -> i32 {
        v.clamp(self.bits.min_int() as i64, self.bits.max_int() as i64) as i32
    }

    /// `clamp(round(x * 2^shift))` with round half away from zero.
    pub fn quantize_value(&self, x: f32) -> i32 {
        let scaled = (x as f64) * (self.shift as f64).exp2();
        // f64::round is half-away-from-zero; NaN casts to 0.
        let r = scaled.round();
        let clamped = r.clamp(self.bits.min_int() as f64, self.bits.max_int() as f64);
        clamped as i32
    }

    pub fn dequantize_value(&self, q: i32) -> f32 {
        (q as f64 * self.step()) as f32
    }

    pub fn contains(&self, q: i32) -> bool {
        (self.bits.min_int()..=self.bits.max_int()).contains(&q)
    }
}

/// Fixed-point counterpart of [`Series1D`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTensor1D {
    shape: Shape,
    data: Vec<i32>,
    scheme: QuantScheme,
}

impl QTensor1D {
    pub fn from_vec(length: usize, channels: usize, data: Vec<i32>, scheme: QuantScheme) -> Result<Self> {
        let expected = checked_elements(length, channels)?;
        if data.len() != expected {
            return Err(Error::DataLength {
                shape: Shape::new(length, channels),
                expected,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|q| !scheme.contains(**q)) {
            return Err(Error::InvalidParameter(format!(
                "value {bad} outside {}-bit range",
                scheme.bits.bits()
            )));
        }
        Ok(QTensor1D {
            shape: Shape::new(length, channels),
            data,
            scheme,
        })
    }

    pub(crate) fn from_parts_unchecked(shape: Shape, data: Vec<i32>, scheme: QuantScheme) -> Self {
        debug_assert_eq!(shape.elements(), data.len());
        debug_assert!(data.iter().all(|q| scheme.contains(*q)));
        QTensor1D { shape, data, scheme }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn length(&self) -> usize {
        self.shape.length
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn scheme(&self) -> QuantScheme {
        self.scheme
    }

    #[inline]
    pub fn get(&self, t: usize, c: usize) -> i32 {
        self.data[t * self.shape.channels + c]
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[i32] {
        let c = self.shape.channels;
        &self.data[t * c..(t + 1) * c]
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<i32> {
        self.data
    }

    pub fn flatten(self) -> QTensor1D {
        let n = self.data.len();
        QTensor1D {
            shape: Shape::new(1, n),
            data: self.data,
            scheme: self.scheme,
        }
    }
}

/// Element-wise saturating quantization.
pub fn quantize(x: &Series1D, scheme: QuantScheme) -> QTensor1D {
    let data = x.data().iter().map(|v| scheme.quantize_value(*v)).collect();
    QTensor1D::from_parts_unchecked(x.shape(), data, scheme)
}

/// Exact inverse scaling `q * 2^-shift`.
pub fn dequantize(q: &QTensor1D) -> Series1D {
    let data = q.data().iter().map(|v| q.scheme.dequantize_value(*v)).collect();
    Series1D { shape: q.shape, data }
}

/// Arithmetic right shift of an accumulator with round half away from zero.
/// Negative `shift` multiplies instead.
#[inline]
pub fn rounding_shift(acc: i64, shift: i32) -> i64 {
    if shift <= 0 {
        return acc << (-shift) as u32;
    }
    let s = shift as u32;
    if s >= 63 {
        return 0;
    }
    let half = 1i64 << (s - 1);
    if acc >= 0 {
        (acc + half) >> s
    } else {
        -((-acc + half) >> s)
    }
}
