use alloc::vec;
use alloc::vec::Vec;

use super::CurvNetError;

/// Dense row-major tensor, `(channels, height, width)` for feature maps and
/// `(n,)` for vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, CurvNetError> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(CurvNetError::Shape("data length does not match shape"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CurvNetError::NonFinite);
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor { shape, data: vec![0.0; len] }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor { shape: vec![data.len()], data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(c, h, w)` of a feature map.
    pub fn chw(&self) -> Result<(usize, usize, usize), CurvNetError> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(CurvNetError::Shape("expected a (channels, height, width) tensor")),
        }
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        let (h, w) = (self.shape[1], self.shape[2]);
        self.data[(c * h + y) * w + x]
    }

    /// Same data viewed as a vector.
    pub fn flatten(&self) -> Tensor {
        Tensor::vector(self.data.clone())
    }
}
