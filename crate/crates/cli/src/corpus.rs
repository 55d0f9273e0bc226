//! Corpus ingestion: a directory of PGM files becomes a deterministic,
//! split-tagged list of fixed-size patches.
//!
//! Files are ordered by name, reduced to the requested patch size by
//! nearest-neighbor downscale followed by a center crop, and assigned to
//! the train or eval split by a hash of their file name — stable across
//! machines and independent of directory iteration order.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use duplex_core::image::ImagePatch;

use crate::pgm::read_pgm;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
pub struct CorpusItem {
    /// File name (no directory), the split and ordering key.
    pub name: String,
    pub patch: ImagePatch,
    pub split: Split,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    /// Sorted by `name`.
    pub items: Vec<CorpusItem>,
    pub patch_size: usize,
}

impl Corpus {
    pub fn patches(&self, split: Split) -> Vec<ImagePatch> {
        self.items
            .iter()
            .filter(|it| it.split == split)
            .map(|it| it.patch.clone())
            .collect()
    }

    pub fn names(&self, split: Split) -> Vec<&str> {
        self.items
            .iter()
            .filter(|it| it.split == split)
            .map(|it| it.name.as_str())
            .collect()
    }
}

/// Split a patch list into the two link directions by position, matching
/// the convention the trainer uses for its direction pools: even indices
/// feed A→B, odd indices feed B→A.
pub fn direction_pools(patches: &[ImagePatch]) -> (Vec<ImagePatch>, Vec<ImagePatch>) {
    if patches.len() < 2 {
        return (patches.to_vec(), patches.to_vec());
    }
    let ab = patches.iter().step_by(2).cloned().collect();
    let ba = patches.iter().skip(1).step_by(2).cloned().collect();
    (ab, ba)
}

/// FNV-1a over the file name; the low bit picks the split.
fn split_of(name: &str) -> Split {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    if h % 2 == 0 {
        Split::Train
    } else {
        Split::Eval
    }
}

/// Load every `.pgm` file under `dir` as one `patch_size` x `patch_size`
/// patch. Errors name the offending file; an empty directory is an error.
pub fn load_corpus(dir: &Path, patch_size: usize) -> Result<Corpus> {
    if patch_size == 0 {
        bail!("patch size must be positive");
    }
    let entries =
        fs::read_dir(dir).with_context(|| format!("reading corpus dir {}", dir.display()))?;
    let mut names: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.with_context(|| format!("listing {}", dir.display()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".pgm") {
            names.push(name);
        }
    }
    if names.is_empty() {
        bail!("no .pgm files in {}", dir.display());
    }
    names.sort();
    let mut items = Vec::with_capacity(names.len());
    for name in names {
        let full = read_pgm(&dir.join(&name))?;
        let patch = reduce_to(&full, patch_size)
            .with_context(|| format!("reducing {name} to {patch_size}x{patch_size}"))?;
        let split = split_of(&name);
        items.push(CorpusItem { name, patch, split });
    }
    Ok(Corpus { items, patch_size })
}

/// Nearest-neighbor downscale by the largest integer stride that keeps
/// both dimensions at or above `target`, then center crop.
fn reduce_to(img: &ImagePatch, target: usize) -> Result<ImagePatch> {
    if img.width < target || img.height < target {
        bail!("image {}x{} smaller than patch {target}", img.width, img.height);
    }
    let stride = (img.width / target).min(img.height / target).max(1);
    let dw = img.width / stride;
    let dh = img.height / stride;
    let x0 = (dw - target) / 2;
    let y0 = (dh - target) / 2;
    let mut pixels = Vec::with_capacity(target * target);
    for y in 0..target {
        for x in 0..target {
            pixels.push(img.at((x0 + x) * stride, (y0 + y) * stride));
        }
    }
    Ok(ImagePatch { width: target, height: target, pixels })
}
