//! Image quality and bit-level metrics: SSIM, multi-scale SSIM, PSNR, BER.
//!
//! The SSIM family follows the standard construction: local statistics from
//! an 11-tap Gaussian window (sigma = 1.5) applied separably with symmetric
//! (edge-repeating) boundary reflection, stability constants c1 = 0.01^2 and
//! c2 = 0.03^2 for unit-range pixels. Multi-scale SSIM evaluates the
//! contrast-structure term at up to five dyadic scales (2x2 mean-pool
//! between scales), applies the luminance term only at the coarsest scale,
//! and weights scales by the usual {0.0448, 0.2856, 0.3001, 0.2363, 0.1333}
//! profile, truncated to the scales the image size supports and
//! renormalized. A 16x16 patch supports one scale, 128x128 supports four.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::ImagePatch;
use crate::math;

/// Canonical five-scale MS-SSIM weights.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

const WIN: usize = 11;
const HALF: isize = 5;

fn gaussian_window() -> [f64; WIN] {
    let mut g = [0.0; WIN];
    let mut sum = 0.0;
    for (i, gi) in g.iter_mut().enumerate() {
        let d = i as f64 - HALF as f64;
        *gi = math::exp(-(d * d) / (2.0 * 1.5 * 1.5));
        sum += *gi;
    }
    for gi in g.iter_mut() {
        *gi /= sum;
    }
    g
}

/// Symmetric boundary index: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    debug_assert!(n as isize > HALF, "image side too small for the window");
    if i < 0 {
        (-i - 1) as usize
    } else if i >= n as isize {
        2 * n - 1 - i as usize
    } else {
        i as usize
    }
}

/// Separable Gaussian filter with symmetric reflection, row-major image.
fn gauss_filter(a: &[f64], w: usize, h: usize, g: &[f64; WIN]) -> Vec<f64> {
    let mut tmp = vec![0.0; w * h];
    // along columns (vertical)
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &gt) in g.iter().enumerate() {
                let yy = reflect(y as isize + t as isize - HALF, h);
                acc += gt * a[yy * w + x];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    // along rows (horizontal)
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &gt) in g.iter().enumerate() {
                let xx = reflect(x as isize + t as isize - HALF, w);
                acc += gt * tmp[y * w + xx];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Mean contrast-structure term (clamped at zero) and mean luminance term
/// of SSIM between two equal-size images, default stability constants.
pub fn ssim_cs_l(a: &[f64], b: &[f64], w: usize, h: usize) -> (f64, f64) {
    ssim_cs_l_with(a, b, w, h, 0.01 * 0.01, 0.03 * 0.03)
}

fn ssim_cs_l_with(a: &[f64], b: &[f64], w: usize, h: usize, c1: f64, c2: f64) -> (f64, f64) {
    debug_assert_eq!(a.len(), w * h);
    debug_assert_eq!(b.len(), w * h);
    let g = gaussian_window();
    let mu_a = gauss_filter(a, w, h, &g);
    let mu_b = gauss_filter(b, w, h, &g);
    let aa: Vec<f64> = a.iter().map(|x| x * x).collect();
    let bb: Vec<f64> = b.iter().map(|x| x * x).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let saa = gauss_filter(&aa, w, h, &g);
    let sbb = gauss_filter(&bb, w, h, &g);
    let sab = gauss_filter(&ab, w, h, &g);
    let mut cs_sum = 0.0;
    let mut l_sum = 0.0;
    for i in 0..w * h {
        let va = saa[i] - mu_a[i] * mu_a[i];
        let vb = sbb[i] - mu_b[i] * mu_b[i];
        let cov = sab[i] - mu_a[i] * mu_b[i];
        let cs = (2.0 * cov + c2) / (va + vb + c2);
        let l = (2.0 * mu_a[i] * mu_b[i] + c1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1);
        cs_sum += if cs > 0.0 { cs } else { 0.0 };
        l_sum += l;
    }
    let n = (w * h) as f64;
    (cs_sum / n, l_sum / n)
}

/// Single-scale SSIM: mean luminance times mean contrast-structure.
pub fn ssim(a: &ImagePatch, b: &ImagePatch) -> f64 {
    debug_assert_eq!((a.width, a.height), (b.width, b.height));
    let (cs, l) = ssim_cs_l(&a.pixels, &b.pixels, a.width, a.height);
    let l = if l > 0.0 { l } else { 0.0 };
    (l * cs).clamp(0.0, 1.0)
}

fn downsample2(a: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let w2 = w / 2;
    let h2 = h / 2;
    let mut out = vec![0.0; w2 * h2];
    for y in 0..h2 {
        for x in 0..w2 {
            out[y * w2 + x] = 0.25
                * (a[(2 * y) * w + 2 * x]
                    + a[(2 * y) * w + 2 * x + 1]
                    + a[(2 * y + 1) * w + 2 * x]
                    + a[(2 * y + 1) * w + 2 * x + 1]);
        }
    }
    (out, w2, h2)
}

/// Number of dyadic scales MS-SSIM uses for a given minimum image side:
/// the largest `s <= 5` such that the image at scale `s` is still at least
/// as large as the 11-tap window.
pub fn ms_ssim_scales(min_side: usize) -> usize {
    let mut scales = 1;
    while scales < 5 && min_side / (1 << scales) >= WIN {
        scales += 1;
    }
    scales
}

/// Multi-scale SSIM in `[0, 1]`.
pub fn ms_ssim(a: &ImagePatch, b: &ImagePatch) -> f64 {
    debug_assert_eq!((a.width, a.height), (b.width, b.height));
    let scales = ms_ssim_scales(a.width.min(a.height));
    let wsum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    let mut av = a.pixels.clone();
    let mut bv = b.pixels.clone();
    let (mut w, mut h) = (a.width, a.height);
    let mut val = 1.0;
    for (s, &w_raw) in MS_SSIM_WEIGHTS.iter().enumerate().take(scales) {
        let (cs, l) = ssim_cs_l(&av, &bv, w, h);
        let wgt = w_raw / wsum;
        if s + 1 == scales {
            let l = if l > 0.0 { l } else { 0.0 };
            val *= math::powf(l, wgt) * math::powf(cs, wgt);
        } else {
            val *= math::powf(cs, wgt);
            let (na, nw, nh) = downsample2(&av, w, h);
            let (nb, _, _) = downsample2(&bv, w, h);
            av = na;
            bv = nb;
            w = nw;
            h = nh;
        }
    }
    val.clamp(0.0, 1.0)
}

/// Configuration errors and dimension violations raised by the
/// config-driven MS-SSIM entry point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricsError {
    /// The two images differ in width or height.
    DimensionMismatch,
    /// The image cannot support the requested scale count: every dimension
    /// must be at least `2^(scales-1) * 11`.
    TooSmallForScales { min_side: usize, scales: usize },
    /// Weights do not match the scale count or do not sum to 1 within
    /// 1e-9, or the scale count is zero.
    InvalidConfig,
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::DimensionMismatch => write!(f, "images differ in size"),
            Self::TooSmallForScales { min_side, scales } => write!(
                f,
                "minimum side {min_side} cannot support {scales} scales (needs 2^(scales-1)*11)"
            ),
            Self::InvalidConfig => write!(f, "invalid MS-SSIM configuration"),
        }
    }
}

/// Explicit MS-SSIM configuration. The default commits to the full
/// five-scale evaluation with the published weight profile renormalized to
/// sum exactly to one (the raw constants in [`MS_SSIM_WEIGHTS`] sum to
/// 1.0001) and stability constants from a dynamic range of 1.0.
#[derive(Clone, Debug)]
pub struct MsSsimConfig {
    pub scales: usize,
    /// One weight per scale; must sum to 1 within 1e-9.
    pub weights: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
}

impl Default for MsSsimConfig {
    fn default() -> Self {
        Self::for_scales(5)
    }
}

impl MsSsimConfig {
    /// The published weight profile truncated to `scales` entries and
    /// renormalized.
    pub fn for_scales(scales: usize) -> Self {
        assert!((1..=5).contains(&scales), "published weights cover 1..=5 scales");
        let sum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
        Self {
            scales,
            weights: MS_SSIM_WEIGHTS[..scales].iter().map(|w| w / sum).collect(),
            c1: 0.01 * 0.01,
            c2: 0.03 * 0.03,
        }
    }

    /// Check the structural invariants: `scales >= 1`, one weight per
    /// scale, weights summing to 1 within 1e-9.
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.scales == 0 || self.weights.len() != self.scales {
            return Err(MetricsError::InvalidConfig);
        }
        let sum: f64 = self.weights.iter().sum();
        if math::abs(sum - 1.0) > 1e-9 || self.c1 <= 0.0 || self.c2 <= 0.0 {
            return Err(MetricsError::InvalidConfig);
        }
        Ok(())
    }
}

/// Multi-scale SSIM under an explicit configuration. Unlike [`ms_ssim`]
/// (which adapts its scale count to the image), this variant demands that
/// the images support the configured scales: every dimension must be at
/// least `2^(scales-1) * 11`.
pub fn ms_ssim_cfg(a: &ImagePatch, b: &ImagePatch, cfg: &MsSsimConfig) -> Result<f64, MetricsError> {
    cfg.validate()?;
    if (a.width, a.height) != (b.width, b.height) {
        return Err(MetricsError::DimensionMismatch);
    }
    let min_side = a.width.min(a.height);
    if min_side / (1 << (cfg.scales - 1)) < WIN {
        return Err(MetricsError::TooSmallForScales {
            min_side,
            scales: cfg.scales,
        });
    }
    let mut av = a.pixels.clone();
    let mut bv = b.pixels.clone();
    let (mut w, mut h) = (a.width, a.height);
    let mut val = 1.0;
    for s in 0..cfg.scales {
        let (cs, l) = ssim_cs_l_with(&av, &bv, w, h, cfg.c1, cfg.c2);
        let wgt = cfg.weights[s];
        if s + 1 == cfg.scales {
            let l = if l > 0.0 { l } else { 0.0 };
            val *= math::powf(l, wgt) * math::powf(cs, wgt);
        } else {
            val *= math::powf(cs, wgt);
            let (na, nw, nh) = downsample2(&av, w, h);
            let (nb, _, _) = downsample2(&bv, w, h);
            av = na;
            bv = nb;
            w = nw;
            h = nh;
        }
    }
    Ok(val.clamp(0.0, 1.0))
}

/// Adjoint of [`gauss_filter`]: scatters output-side gradients back through
/// the horizontal then vertical stages (reverse order), honoring the
/// symmetric reflection.
fn gauss_filter_adjoint(d_out: &[f64], w: usize, h: usize, g: &[f64; WIN]) -> Vec<f64> {
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let d = d_out[y * w + x];
            for (t, &gt) in g.iter().enumerate() {
                let xx = reflect(x as isize + t as isize - HALF, w);
                tmp[y * w + xx] += gt * d;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let d = tmp[y * w + x];
            for (t, &gt) in g.iter().enumerate() {
                let yy = reflect(y as isize + t as isize - HALF, h);
                out[yy * w + x] += gt * d;
            }
        }
    }
    out
}

/// Gradient of `d_cs * cs_mean + d_l * l_mean` with respect to `a`
/// (`b` held fixed), recomputing the forward statistics internally.
/// Zero-clamped contrast-structure pixels contribute zero gradient.
fn ssim_cs_l_backward(a: &[f64], b: &[f64], w: usize, h: usize, d_cs: f64, d_l: f64) -> Vec<f64> {
    let g = gaussian_window();
    let c1 = 0.01 * 0.01;
    let c2 = 0.03 * 0.03;
    let mu_a = gauss_filter(a, w, h, &g);
    let mu_b = gauss_filter(b, w, h, &g);
    let aa: Vec<f64> = a.iter().map(|x| x * x).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let bb: Vec<f64> = b.iter().map(|x| x * x).collect();
    let saa = gauss_filter(&aa, w, h, &g);
    let sab = gauss_filter(&ab, w, h, &g);
    let sbb = gauss_filter(&bb, w, h, &g);
    let n = (w * h) as f64;
    let mut d_mu_a = vec![0.0; w * h];
    let mut d_saa = vec![0.0; w * h];
    let mut d_sab = vec![0.0; w * h];
    for i in 0..w * h {
        let va = saa[i] - mu_a[i] * mu_a[i];
        let vb = sbb[i] - mu_b[i] * mu_b[i];
        let cov = sab[i] - mu_a[i] * mu_b[i];
        let den = va + vb + c2;
        let cs = (2.0 * cov + c2) / den;
        if cs > 0.0 && d_cs != 0.0 {
            let d_cs_i = d_cs / n;
            let d_cov = d_cs_i * 2.0 / den;
            let d_va = -d_cs_i * cs / den;
            // cov = sab - mu_a mu_b ; va = saa - mu_a^2
            d_sab[i] += d_cov;
            d_saa[i] += d_va;
            d_mu_a[i] += -d_cov * mu_b[i] - 2.0 * d_va * mu_a[i];
        }
        if d_l != 0.0 {
            let den_l = mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1;
            let l = (2.0 * mu_a[i] * mu_b[i] + c1) / den_l;
            d_mu_a[i] += d_l / n * (2.0 * mu_b[i] - 2.0 * l * mu_a[i]) / den_l;
        }
    }
    let g_mu = gauss_filter_adjoint(&d_mu_a, w, h, &g);
    let g_aa = gauss_filter_adjoint(&d_saa, w, h, &g);
    let g_ab = gauss_filter_adjoint(&d_sab, w, h, &g);
    (0..w * h)
        .map(|i| g_mu[i] + 2.0 * a[i] * g_aa[i] + b[i] * g_ab[i])
        .collect()
}

/// Adjoint of [`downsample2`]: each coarse-pixel gradient spreads 0.25 to
/// its four source pixels (odd trailing rows/columns stay untouched,
/// matching the forward truncation).
fn downsample2_adjoint(d_coarse: &[f64], w: usize, h: usize) -> Vec<f64> {
    let w2 = w / 2;
    let h2 = h / 2;
    let mut out = vec![0.0; w * h];
    for y in 0..h2 {
        for x in 0..w2 {
            let d = 0.25 * d_coarse[y * w2 + x];
            out[(2 * y) * w + 2 * x] += d;
            out[(2 * y) * w + 2 * x + 1] += d;
            out[(2 * y + 1) * w + 2 * x] += d;
            out[(2 * y + 1) * w + 2 * x + 1] += d;
        }
    }
    out
}

/// MS-SSIM plus its gradient with respect to the first image's pixels
/// (reverse-mode through every scale). Used by the optional `1 - MS-SSIM`
/// training loss. Clamped regions (value at 0 or 1, zero-clamped terms)
/// get zero gradient.
pub fn ms_ssim_grad(a: &ImagePatch, b: &ImagePatch) -> (f64, Vec<f64>) {
    debug_assert_eq!((a.width, a.height), (b.width, b.height));
    let scales = ms_ssim_scales(a.width.min(a.height));
    let wsum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    // forward, keeping every scale's images and term means
    let mut imgs_a = vec![a.pixels.clone()];
    let mut imgs_b = vec![b.pixels.clone()];
    let mut dims = vec![(a.width, a.height)];
    let mut terms = Vec::with_capacity(scales);
    let mut val = 1.0f64;
    for s in 0..scales {
        let (w, h) = dims[s];
        let (cs, l) = ssim_cs_l(&imgs_a[s], &imgs_b[s], w, h);
        let wgt = MS_SSIM_WEIGHTS[s] / wsum;
        if s + 1 == scales {
            let lc = if l > 0.0 { l } else { 0.0 };
            val *= math::powf(lc, wgt) * math::powf(cs, wgt);
        } else {
            val *= math::powf(cs, wgt);
            let (na, nw, nh) = downsample2(&imgs_a[s], w, h);
            let (nb, _, _) = downsample2(&imgs_b[s], w, h);
            imgs_a.push(na);
            imgs_b.push(nb);
            dims.push((nw, nh));
        }
        terms.push((cs, l, wgt));
    }
    let clamped = val.clamp(0.0, 1.0);
    if !(val > 0.0 && val < 1.0) {
        return (clamped, vec![0.0; a.pixels.len()]);
    }
    // backward: d val / d cs_mean[s] = val * wgt / cs_mean[s]
    let mut d_cur: Vec<f64> = Vec::new();
    for s in (0..scales).rev() {
        let (w, h) = dims[s];
        let (cs, l, wgt) = terms[s];
        let d_cs = if cs > 1e-12 { val * wgt / cs } else { 0.0 };
        let d_l = if s + 1 == scales && l > 1e-12 {
            val * wgt / l
        } else {
            0.0
        };
        let mut d_img = ssim_cs_l_backward(&imgs_a[s], &imgs_b[s], w, h, d_cs, d_l);
        if s + 1 < scales {
            let up = downsample2_adjoint(&d_cur, w, h);
            for (d, u) in d_img.iter_mut().zip(&up) {
                *d += u;
            }
        }
        d_cur = d_img;
    }
    (clamped, d_cur)
}

/// MS-SSIM on a dB scale: `-10 log10(1 - v)`, capped at 60 dB so identical
/// images stay finite.
pub fn ms_ssim_db(v: f64) -> f64 {
    let d = 1.0 - v;
    if d <= 1e-6 {
        60.0
    } else {
        (-10.0 * math::log10(d)).min(60.0)
    }
}

/// Peak signal-to-noise ratio for unit-range images, capped at 100 dB.
pub fn psnr(a: &ImagePatch, b: &ImagePatch) -> f64 {
    debug_assert_eq!(a.pixels.len(), b.pixels.len());
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.pixels.len() as f64;
    if mse <= 1e-10 {
        100.0
    } else {
        (-10.0 * math::log10(mse)).min(100.0)
    }
}

/// Fraction of differing bits between two equal-length bit slices.
pub fn ber(a: &[u8], b: &[u8]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
    diff as f64 / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad16() -> ImagePatch {
        let mut p = ImagePatch::constant(16, 16, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                *p.at_mut(j, i) = (i as f64 + 2.0 * j as f64) / 48.0;
            }
        }
        p
    }

    fn grad16_shifted() -> ImagePatch {
        let mut p = grad16();
        for v in p.pixels.iter_mut() {
            *v = (*v + 0.08).clamp(0.0, 1.0);
        }
        p
    }

    fn checker16() -> ImagePatch {
        let mut p = ImagePatch::constant(16, 16, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                *p.at_mut(j, i) = if (i / 2 + j / 2) % 2 == 1 { 0.8 } else { 0.2 };
            }
        }
        p
    }

    fn pat128(phase: f64) -> ImagePatch {
        let mut p = ImagePatch::constant(128, 128, 0.0);
        for i in 0..128 {
            for j in 0..128 {
                let v = 0.5
                    + 0.25 * math::sin(i as f64 / 7.0 + phase) * math::cos(j as f64 / 11.0)
                    + 0.2 * math::cos((i as f64 + 2.0 * j as f64) / 23.0);
                *p.at_mut(j, i) = v.clamp(0.0, 1.0);
            }
        }
        p
    }

    #[test]
    fn identical_images_score_one() {
        // [TRIVIAL] both SSIM terms are exactly 1 when a == b.
        let a = grad16();
        assert_eq!(ms_ssim(&a, &a), 1.0);
        assert_eq!(ssim(&a, &a), 1.0);
        let big = pat128(0.0);
        assert_eq!(ms_ssim(&big, &big), 1.0);
    }

    #[test]
    fn ms_ssim_frozen_oracles() {
        // [DERIVED] frozen against an independent implementation of the same
        // construction (separable Gaussian via scipy.ndimage.correlate1d,
        // symmetric reflection) evaluated on these exact patterns.
        let a = grad16();
        assert!((ms_ssim(&a, &grad16_shifted()) - 0.973_249_390_576_768_8).abs() < 1e-9);
        assert!((ms_ssim(&a, &checker16()) - 0.013_149_697_264_987_764).abs() < 1e-9);
        let gray = ImagePatch::constant(16, 16, 0.5);
        assert!((ms_ssim(&checker16(), &gray) - 0.009_939_118_454_380_804).abs() < 1e-9);
        let big_a = pat128(0.0);
        let big_b = pat128(0.15);
        assert!((ms_ssim(&big_a, &big_b) - 0.990_980_573_665_043_4).abs() < 1e-9);
    }

    #[test]
    fn cs_l_frozen_oracle() {
        // [DERIVED] same independent-reference freeze as above, single scale.
        let a = grad16();
        let c = checker16();
        let (cs, l) = ssim_cs_l(&a.pixels, &c.pixels, 16, 16);
        assert!((cs - 0.014_821_173_192_603_77).abs() < 1e-9);
        assert!((l - 0.887_223_777_369_383_6).abs() < 1e-9);
    }

    #[test]
    fn scale_count_by_size() {
        // [PAPER-ADJACENT CONVENTION] 16x16 supports one scale, 128x128 four,
        // anything >= 352 the full five.
        assert_eq!(ms_ssim_scales(16), 1);
        assert_eq!(ms_ssim_scales(32), 2);
        assert_eq!(ms_ssim_scales(128), 4);
        assert_eq!(ms_ssim_scales(352), 5);
    }

    #[test]
    fn psnr_frozen_oracle_and_cap() {
        let a = grad16();
        let b = grad16_shifted();
        // [DERIVED] mse = 0.006390258789062497 -> 21.944815536747733 dB.
        assert!((psnr(&a, &b) - 21.944_815_536_747_733).abs() < 1e-9);
        assert_eq!(psnr(&a, &a), 100.0);
    }

    #[test]
    fn ms_ssim_db_mapping() {
        // [TRIVIAL] 0.9 -> 10 dB, 0.99 -> 20 dB; saturation at 60 dB.
        assert!((ms_ssim_db(0.9) - 10.0).abs() < 1e-9);
        assert!((ms_ssim_db(0.99) - 20.0).abs() < 1e-9);
        assert_eq!(ms_ssim_db(1.0), 60.0);
    }

    #[test]
    fn ber_counts() {
        assert_eq!(ber(&[0, 1, 1, 0], &[0, 1, 1, 0]), 0.0);
        assert_eq!(ber(&[0, 1, 1, 0], &[1, 1, 1, 1]), 0.5);
        assert_eq!(ber(&[], &[]), 0.0);
    }

    #[test]
    fn ms_ssim_grad_matches_finite_differences() {
        // [DERIVED: finite-difference oracle] reverse mode through the
        // full multi-scale pipeline, both at one scale (16x16) and two
        // (32x32, exercising the downsample adjoint chain).
        let cases: alloc::vec::Vec<(ImagePatch, ImagePatch)> = alloc::vec![
            (grad16(), grad16_shifted()),
            (
                {
                    let mut p = ImagePatch::constant(32, 32, 0.0);
                    for i in 0..32 {
                        for j in 0..32 {
                            *p.at_mut(j, i) =
                                0.5 + 0.3 * math::sin(i as f64 / 3.0) * math::cos(j as f64 / 5.0);
                        }
                    }
                    p
                },
                {
                    let mut p = ImagePatch::constant(32, 32, 0.0);
                    for i in 0..32 {
                        for j in 0..32 {
                            *p.at_mut(j, i) =
                                0.5 + 0.28 * math::sin(i as f64 / 3.0 + 0.1) * math::cos(j as f64 / 5.0);
                        }
                    }
                    p
                }
            ),
        ];
        for (mut a, b) in cases {
            let (v0, g) = ms_ssim_grad(&a, &b);
            assert!((v0 - ms_ssim(&a, &b)).abs() < 1e-12);
            let h = 1e-5;
            for &idx in &[0usize, 7, 40, a.pixels.len() / 2, a.pixels.len() - 1] {
                let saved = a.pixels[idx];
                a.pixels[idx] = saved + h;
                let vp = ms_ssim(&a, &b);
                a.pixels[idx] = saved - h;
                let vm = ms_ssim(&a, &b);
                a.pixels[idx] = saved;
                let fd = (vp - vm) / (2.0 * h);
                let rel = (fd - g[idx]).abs() / fd.abs().max(g[idx].abs()).max(1e-8);
                assert!(rel < 1e-5, "pixel {idx}: fd {fd} vs analytic {}", g[idx]);
            }
        }
    }

    #[test]
    fn ms_ssim_grad_zero_on_identical() {
        // clamp at 1.0 -> zero subgradient
        let a = grad16();
        let (v, g) = ms_ssim_grad(&a, &a.clone());
        assert_eq!(v, 1.0);
        assert!(g.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn ms_ssim_constant_shift_invariance() {
        // adding the same constant to both images moves MS-SSIM by less
        // than the c1/c2 stabilization tolerance: contrast/structure are
        // exactly shift-invariant and the luminance term only leaks
        // through its stability constant while the means stay mid-range
        let mut a = ImagePatch::constant(16, 16, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                *a.at_mut(j, i) = 0.25 + 0.5 * (i as f64 + 2.0 * j as f64) / 48.0;
            }
        }
        let mut b = a.clone();
        for (i, v) in b.pixels.iter_mut().enumerate() {
            *v += if i % 2 == 0 { 0.03 } else { -0.03 };
        }
        let base = ms_ssim(&a, &b);
        for shift in [0.05, 0.1, -0.1] {
            let mut a2 = a.clone();
            let mut b2 = b.clone();
            for v in a2.pixels.iter_mut() {
                *v += shift;
            }
            for v in b2.pixels.iter_mut() {
                *v += shift;
            }
            let moved = ms_ssim(&a2, &b2);
            assert!((moved - base).abs() < 1e-3, "shift {shift}: {base} -> {moved}");
        }
    }

    #[test]
    fn ms_ssim_symmetry_and_range() {
        let a = grad16();
        let b = checker16();
        let ab = ms_ssim(&a, &b);
        let ba = ms_ssim(&b, &a);
        assert!((ab - ba).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn msssim_config_default_invariants() {
        // [TRIVIAL: invariant check] renormalized weights sum to 1 +- 1e-9
        let cfg = MsSsimConfig::default();
        assert_eq!(cfg.scales, 5);
        cfg.validate().unwrap();
        let sum: f64 = cfg.weights.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
        // the raw published constants deliberately stay untouched
        let raw: f64 = MS_SSIM_WEIGHTS.iter().sum();
        assert!((raw - 1.0001).abs() < 1e-12);
    }

    #[test]
    fn msssim_cfg_agrees_with_adaptive_variant() {
        // single scale at 16x16
        let a = grad16();
        let b = checker16();
        let one = ms_ssim_cfg(&a, &b, &MsSsimConfig::for_scales(1)).unwrap();
        assert!((one - ms_ssim(&a, &b)).abs() < 1e-12);
        // full five scales needs a 352-pixel side
        let mut big_a = ImagePatch::constant(352, 352, 0.0);
        let mut big_b = ImagePatch::constant(352, 352, 0.0);
        for y in 0..352 {
            for x in 0..352 {
                let v = 0.5 + 0.4 * math::sin(0.05 * x as f64) * math::cos(0.03 * y as f64);
                *big_a.at_mut(x, y) = v;
                *big_b.at_mut(x, y) = (v + 0.02 * math::sin(0.3 * (x + y) as f64)).clamp(0.0, 1.0);
            }
        }
        let five = ms_ssim_cfg(&big_a, &big_b, &MsSsimConfig::default()).unwrap();
        assert!((five - ms_ssim(&big_a, &big_b)).abs() < 1e-12);
    }

    #[test]
    fn msssim_cfg_domain_errors() {
        let a = grad16();
        let wide = ImagePatch::constant(16, 32, 0.5);
        assert_eq!(
            ms_ssim_cfg(&a, &wide, &MsSsimConfig::for_scales(1)),
            Err(MetricsError::DimensionMismatch)
        );
        // a 16x16 patch cannot support five dyadic scales of an 11-tap window
        assert_eq!(
            ms_ssim_cfg(&a, &grad16(), &MsSsimConfig::default()),
            Err(MetricsError::TooSmallForScales {
                min_side: 16,
                scales: 5
            })
        );
        let bad = MsSsimConfig {
            scales: 2,
            weights: alloc::vec![0.5, 0.6],
            c1: 1e-4,
            c2: 9e-4,
        };
        assert_eq!(bad.validate(), Err(MetricsError::InvalidConfig));
        assert!(ms_ssim_cfg(&a, &grad16(), &bad).is_err());
    }
}

