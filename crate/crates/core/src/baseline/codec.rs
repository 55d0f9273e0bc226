//! Block-transform image codec used by the separate-coding chain.
//!
//! Classical DCT design, deliberately small: 8x8 orthonormal DCT-II,
//! uniform quantization with a 32-entry geometric step table, zigzag scan,
//! differential DC across blocks in raster order, and exp-Golomb entropy
//! coding (run/level for ACs). A 40-bit header (width, height, step index)
//! makes the stream self-describing.
//!
//! Error handling is receiver-side concealment: any block whose bits are
//! exhausted or implausible is left mid-gray and decoding continues; a
//! corrupt header fails the whole patch (the transport layer decides what a
//! failed patch looks like). This is what produces the classic cliff: below
//! the channel-code threshold the bitstream is garbage, the header check
//! fails, and quality collapses all at once.

use alloc::vec::Vec;

use crate::image::ImagePatch;
use crate::math;

/// Zigzag scan order for an 8x8 coefficient block (row-major indices).
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Number of quantizer steps in the table.
pub const NUM_STEPS: usize = 32;

/// Quantizer step for index `i`: geometric from 0.004, doubling every 3.
pub fn quant_step(i: usize) -> f64 {
    debug_assert!(i < NUM_STEPS);
    0.004 * math::powf(2.0, i as f64 / 3.0)
}

/// Orthonormal 8x8 DCT-II matrix (row k = basis function k).
fn dct_matrix() -> [[f64; 8]; 8] {
    let mut d = [[0.0; 8]; 8];
    for (k, row) in d.iter_mut().enumerate() {
        let scale = if k == 0 {
            math::sqrt(1.0 / 8.0)
        } else {
            math::sqrt(2.0 / 8.0)
        };
        for (n, v) in row.iter_mut().enumerate() {
            *v = scale
                * math::cos(core::f64::consts::PI * (2.0 * n as f64 + 1.0) * k as f64 / 16.0);
        }
    }
    d
}

/// forward: D * blk * D^T  (blk row-major 64)
fn dct2(d: &[[f64; 8]; 8], blk: &[f64]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    for k in 0..8 {
        for n in 0..8 {
            let mut acc = 0.0;
            for m in 0..8 {
                acc += d[k][m] * blk[m * 8 + n];
            }
            tmp[k * 8 + n] = acc;
        }
    }
    let mut out = [0.0; 64];
    for k in 0..8 {
        for l in 0..8 {
            let mut acc = 0.0;
            for m in 0..8 {
                acc += tmp[k * 8 + m] * d[l][m];
            }
            out[k * 8 + l] = acc;
        }
    }
    out
}

/// inverse: D^T * co * D
fn idct2(d: &[[f64; 8]; 8], co: &[f64; 64]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    for n in 0..8 {
        for l in 0..8 {
            let mut acc = 0.0;
            for k in 0..8 {
                acc += d[k][n] * co[k * 8 + l];
            }
            tmp[n * 8 + l] = acc;
        }
    }
    let mut out = [0.0; 64];
    for n in 0..8 {
        for m in 0..8 {
            let mut acc = 0.0;
            for l in 0..8 {
                acc += tmp[n * 8 + l] * d[l][m];
            }
            out[n * 8 + m] = acc;
        }
    }
    out
}

/// Bit-vector writer (one byte per bit; streams here are tiny).
struct BitWriter {
    bits: Vec<u8>,
}

impl BitWriter {
    fn new() -> Self {
        Self { bits: Vec::new() }
    }

    /// Fixed-width unsigned, MSB first.
    fn put_u(&mut self, v: u64, n: usize) {
        for i in 0..n {
            self.bits.push(((v >> (n - 1 - i)) & 1) as u8);
        }
    }

    /// Exp-Golomb code for a non-negative integer: (len-1) zeros then the
    /// binary form of v+1.
    fn put_eg(&mut self, v: u64) {
        let nb = 64 - (v + 1).leading_zeros() as usize;
        for _ in 0..nb - 1 {
            self.bits.push(0);
        }
        for i in 0..nb {
            self.bits.push(((v + 1) >> (nb - 1 - i) & 1) as u8);
        }
    }

    /// Signed exp-Golomb via the zigzag map 0,-1,1,-2,2,... -> 0,1,2,3,4,...
    fn put_seg(&mut self, v: i64) {
        let m = if v >= 0 { 2 * v as u64 } else { (-2 * v - 1) as u64 };
        self.put_eg(m);
    }
}

struct Eof;

/// Bit-vector reader; every read can fail when bits run out (or a code is
/// implausibly long, which on random garbage is the common corruption mode).
struct BitReader<'a> {
    bits: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bits: &'a [u8]) -> Self {
        Self { bits, pos: 0 }
    }

    fn bit(&mut self) -> Result<u8, Eof> {
        if self.pos >= self.bits.len() {
            return Err(Eof);
        }
        let b = self.bits[self.pos] & 1;
        self.pos += 1;
        Ok(b)
    }

    fn get_u(&mut self, n: usize) -> Result<u64, Eof> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.bit()? as u64;
        }
        Ok(v)
    }

    fn get_eg(&mut self) -> Result<u64, Eof> {
        let mut zeros = 0usize;
        loop {
            if self.bit()? == 1 {
                break;
            }
            zeros += 1;
            if zeros > 40 {
                // no legitimate symbol is this long; treat as corruption
                return Err(Eof);
            }
        }
        let mut v = 1u64;
        for _ in 0..zeros {
            v = (v << 1) | self.bit()? as u64;
        }
        Ok(v - 1)
    }

    fn get_seg(&mut self) -> Result<i64, Eof> {
        let m = self.get_eg()?;
        Ok(if m % 2 == 0 {
            (m / 2) as i64
        } else {
            -((m + 1) as i64 / 2)
        })
    }
}

/// Header size in bits: width u16, height u16, step index u8.
pub const HEADER_BITS: usize = 40;

/// Encode a patch at a fixed quantizer step. Returns the bitstream as one
/// byte per bit (0/1), ready to feed a channel code.
///
/// Width and height must be multiples of 8.
pub fn encode(patch: &ImagePatch, step_idx: usize) -> Vec<u8> {
    debug_assert!(patch.width.is_multiple_of(8) && patch.height.is_multiple_of(8));
    let d = dct_matrix();
    let step = quant_step(step_idx);
    let mut bw = BitWriter::new();
    bw.put_u(patch.width as u64, 16);
    bw.put_u(patch.height as u64, 16);
    bw.put_u(step_idx as u64, 8);
    let mut prev_dc: i64 = 0;
    for by in 0..patch.height / 8 {
        for bx in 0..patch.width / 8 {
            let blk = patch.block(bx, by, 8);
            let co = dct2(&d, &blk);
            let mut zz = [0i64; 64];
            for (zi, &ci) in ZIGZAG.iter().enumerate() {
                zz[zi] = math::round(co[ci] / step) as i64;
            }
            bw.put_seg(zz[0] - prev_dc);
            prev_dc = zz[0];
            let nonzero: Vec<(usize, i64)> = zz[1..]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(i, &v)| (i, v))
                .collect();
            bw.put_eg(nonzero.len() as u64);
            let mut last: i64 = -1;
            for (i, v) in nonzero {
                bw.put_eg((i as i64 - last - 1) as u64);
                bw.put_eg((v.unsigned_abs()) - 1);
                bw.bits.push(if v > 0 { 0 } else { 1 });
                last = i as i64;
            }
        }
    }
    bw.bits
}

/// Decoded patch plus a whole-patch failure flag (header corrupt).
pub struct DecodeOutcome {
    pub patch: ImagePatch,
    pub failed: bool,
    /// Number of 8x8 blocks that had to be concealed mid-gray.
    pub concealed_blocks: usize,
}

/// Decode a (possibly corrupted) bitstream for an expected geometry.
///
/// The caller states what it expects (`width`, `height`, `step_idx`); a
/// header that disagrees — which after a failed channel decode it almost
/// always does — fails the patch. Block-level damage is concealed mid-gray.
pub fn decode(bits: &[u8], step_idx: usize, width: usize, height: usize) -> DecodeOutcome {
    let mid = ImagePatch::constant(width, height, 0.5);
    let mut br = BitReader::new(bits);
    let header = (|| -> Result<(u64, u64, u64), Eof> {
        Ok((br.get_u(16)?, br.get_u(16)?, br.get_u(8)?))
    })();
    match header {
        Ok((w, h, s))
            if w == width as u64 && h == height as u64 && s == step_idx as u64 => {}
        _ => {
            return DecodeOutcome {
                patch: mid,
                failed: true,
                concealed_blocks: width / 8 * (height / 8),
            }
        }
    }
    let d = dct_matrix();
    let step = quant_step(step_idx);
    let mut out = mid;
    let mut prev_dc: i64 = 0;
    let mut concealed = 0usize;
    for by in 0..height / 8 {
        for bx in 0..width / 8 {
            let blk = (|| -> Result<[f64; 64], Eof> {
                let dc = prev_dc + br.get_seg()?;
                prev_dc = dc;
                let mut zz = [0i64; 64];
                zz[0] = dc;
                let n = br.get_eg()?;
                if n > 63 {
                    return Err(Eof);
                }
                let mut last: i64 = -1;
                for _ in 0..n {
                    let run = br.get_eg()? as i64;
                    let level = br.get_eg()? as i64 + 1;
                    let sign = br.bit()?;
                    let idx = last + 1 + run;
                    if idx > 62 {
                        return Err(Eof);
                    }
                    zz[(idx + 1) as usize] = if sign == 1 { -level } else { level };
                    last = idx;
                }
                let mut co = [0.0; 64];
                for (zi, &ci) in ZIGZAG.iter().enumerate() {
                    co[ci] = zz[zi] as f64 * step;
                }
                Ok(idct2(&d, &co))
            })();
            match blk {
                Ok(pixels) => {
                    let clamped: Vec<f64> =
                        pixels.iter().map(|&p| p.clamp(0.0, 1.0)).collect();
                    out.set_block(bx, by, 8, &clamped);
                }
                Err(Eof) => concealed += 1, // leave the mid-gray initialization
            }
        }
    }
    DecodeOutcome {
        patch: out,
        failed: false,
        concealed_blocks: concealed,
    }
}

/// Pick the finest quantizer step whose bitstream fits `budget_bits`.
///
/// Scans from coarse to fine and keeps the last fitting stream; returns
/// `None` when even the coarsest step does not fit (pathologically small
/// budgets only).
pub fn encode_to_budget(patch: &ImagePatch, budget_bits: usize) -> Option<(Vec<u8>, usize)> {
    let mut best: Option<(Vec<u8>, usize)> = None;
    for step_idx in (0..NUM_STEPS).rev() {
        let bits = encode(patch, step_idx);
        if bits.len() <= budget_bits {
            best = Some((bits, step_idx));
        } else {
            break;
        }
    }
    best
}
