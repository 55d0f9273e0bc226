//! Grayscale image patches.
//!
//! Pixels are `f64` in `[0, 1]`, row-major. Patches are the unit of
//! transmission: the codecs and the learned transceiver all consume and
//! produce `ImagePatch` values.

use alloc::vec;
use alloc::vec::Vec;

/// A row-major grayscale patch with pixels in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePatch {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl ImagePatch {
    /// Patch filled with a constant level.
    pub fn constant(width: usize, height: usize, level: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![level; width * height],
        }
    }

    /// Build from 8-bit pixels (0..=255 mapped onto [0, 1]).
    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            pixels: data.iter().map(|&b| b as f64 / 255.0).collect(),
        }
    }

    /// Quantize to 8-bit pixels (round half away from zero, clamped).
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| {
                let v = crate::math::round(p.clamp(0.0, 1.0) * 255.0);
                v as u8
            })
            .collect()
    }

    /// Pixel accessor (row `y`, column `x`).
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Mutable pixel accessor.
    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize) -> &mut f64 {
        &mut self.pixels[y * self.width + x]
    }

    /// Copy the `bs x bs` block with top-left corner at `(bx*bs, by*bs)`.
    pub fn block(&self, bx: usize, by: usize, bs: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(bs * bs);
        for y in 0..bs {
            for x in 0..bs {
                out.push(self.at(bx * bs + x, by * bs + y));
            }
        }
        out
    }

    /// Write a `bs x bs` block at block coordinates `(bx, by)`.
    pub fn set_block(&mut self, bx: usize, by: usize, bs: usize, data: &[f64]) {
        debug_assert_eq!(data.len(), bs * bs);
        for y in 0..bs {
            for x in 0..bs {
                *self.at_mut(bx * bs + x, by * bs + y) = data[y * bs + x];
            }
        }
    }

    /// Mean pixel value.
    pub fn mean(&self) -> f64 {
        if self.pixels.is_empty() {
            return 0.0;
        }
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u8_round_trip_is_exact_on_grid_values() {
        // [TRIVIAL] 8-bit levels survive the f64 round trip unchanged.
        let data: Vec<u8> = (0..=255).collect();
        let p = ImagePatch::from_u8(16, 16, &data);
        assert_eq!(p.to_u8(), data);
    }

    #[test]
    fn block_round_trip() {
        let mut p = ImagePatch::constant(16, 16, 0.0);
        let block: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        p.set_block(1, 1, 8, &block);
        assert_eq!(p.block(1, 1, 8), block);
        assert_eq!(p.at(0, 0), 0.0);
        assert_eq!(p.at(8, 8), block[0]);
    }

    #[test]
    fn mean_of_constant() {
        assert!((ImagePatch::constant(4, 4, 0.25).mean() - 0.25).abs() < 1e-15);
    }
}
