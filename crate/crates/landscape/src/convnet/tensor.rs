//! Dense rank-3 tensors in `(height, width, channels)` row-major layout.
//! Flat vectors are represented as `(1, 1, n)` so one activation type flows
//! through the whole layer stack.

use crate::sampling::LandscapeImage;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Tensor { h, w, c, data: vec![0.0; h * w * c] }
    }

    pub fn flat(data: Vec<f64>) -> Self {
        Tensor { h: 1, w: 1, c: data.len(), data }
    }

    /// Single-channel tensor from a landscape image.
    pub fn from_image(img: &LandscapeImage) -> Self {
        Tensor { h: img.side, w: img.side, c: 1, data: img.pixels.clone() }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, ch: usize) -> f64 {
        self.data[(y * self.w + x) * self.c + ch]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_count_matches_shape() {
        let t = Tensor::zeros(3, 4, 5);
        assert_eq!(t.len(), 60);
        assert_eq!(t.at(2, 3, 4), 0.0);
    }

    #[test]
    fn image_conversion_keeps_layout() {
        let img = LandscapeImage { side: 2, pixels: vec![0.1, 0.2, 0.3, 0.4] };
        let t = Tensor::from_image(&img);
        assert_eq!((t.h, t.w, t.c), (2, 2, 1));
        assert_eq!(t.at(1, 0, 0), 0.3);
    }
}
