//! Dense (channels, height, width) tensors used for images, probes and
//! intermediate activations.

use num_traits::Float;

/// Shape of a rank-3 tensor as (channels, height, width).
pub type Shape3 = (usize, usize, usize);

/// Row-major (channels, height, width) tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T = f32> {
    shape: Shape3,
    data: Vec<T>,
}

impl<T: Float> Tensor3<T> {
    pub fn zeros(shape: Shape3) -> Self {
        Self {
            shape,
            data: vec![T::zero(); shape.0 * shape.1 * shape.2],
        }
    }

    /// Builds a tensor from row-major data; panics if the length is wrong.
    pub fn from_vec(shape: Shape3, data: Vec<T>) -> Self {
        assert_eq!(
            data.len(),
            shape.0 * shape.1 * shape.2,
            "tensor data length does not match shape"
        );
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        self.data[(c * self.shape.1 + y) * self.shape.2 + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, value: T) {
        self.data[(c * self.shape.1 + y) * self.shape.2 + x] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

impl Tensor3<f32> {
    /// Widens to f64, used by the numeric test oracles.
    pub fn to_f64(&self) -> Tensor3<f64> {
        Tensor3 {
            shape: self.shape,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let mut t = Tensor3::<f32>::zeros((2, 2, 3));
        t.set(1, 0, 2, 5.0);
        assert_eq!(t.as_slice()[1 * 6 + 0 * 3 + 2], 5.0);
        assert_eq!(t.get(1, 0, 2), 5.0);
    }

    #[test]
    #[should_panic]
    fn from_vec_rejects_bad_length() {
        let _ = Tensor3::<f32>::from_vec((1, 2, 2), vec![0.0; 3]);
    }
}
