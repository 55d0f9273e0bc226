//! Versioned binary serialization for trained models.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "SDDM"                       4-byte magic
//! version        u32           format version, currently 1
//! spec fields    6 x u64       patch_size, d_c, hidden, n_hidden_layers,
//!                              k_symbols, n_directions
//! conditioning   u8            0 = embedding, 1 = separate models
//! signatures     u8            0 = disabled, 1 = enabled
//! spec_hash      u64           FNV hash of the spec, cross-checked on load
//! n_params       u64           then n_params x f64 parameters
//! n_signatures   u64           then n_signatures x f64 phase signatures
//! ```
//!
//! Loading rebuilds the architecture from the stored spec and overwrites
//! its parameters, so a file only loads into the exact architecture that
//! produced it.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use duplex_core::semantic::model::{Conditioning, JsccModel, ModelSpec};

const MAGIC: &[u8; 4] = b"SDDM";
const MODEL_VERSION: u32 = 1;

pub fn save_model(path: &Path, model: &JsccModel) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    let s = &model.spec;
    for v in [
        s.patch_size,
        s.d_c,
        s.hidden,
        s.n_hidden_layers,
        s.k_symbols,
        s.n_directions,
    ] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.push(match s.conditioning {
        Conditioning::Embedding => 0,
        Conditioning::SeparateModels => 1,
    });
    out.push(u8::from(s.use_phase_signatures));
    out.extend_from_slice(&s.fnv_hash().to_le_bytes());
    out.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for p in &model.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out.extend_from_slice(&(model.signatures.len() as u64).to_le_bytes());
    for p in &model.signatures {
        out.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, out).with_context(|| format!("writing model {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<JsccModel> {
    let bytes = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    parse_model(&bytes).with_context(|| format!("in model file {}", path.display()))
}

fn parse_model(bytes: &[u8]) -> Result<JsccModel> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != MAGIC {
        bail!("bad magic (not a model file)");
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != MODEL_VERSION {
        bail!("unsupported model version {version} (expected {MODEL_VERSION})");
    }
    let patch_size = r.u64()? as usize;
    let d_c = r.u64()? as usize;
    let hidden = r.u64()? as usize;
    let n_hidden_layers = r.u64()? as usize;
    let k_symbols = r.u64()? as usize;
    let n_directions = r.u64()? as usize;
    let conditioning = match r.u8()? {
        0 => Conditioning::Embedding,
        1 => Conditioning::SeparateModels,
        other => bail!("unknown conditioning tag {other}"),
    };
    let use_phase_signatures = match r.u8()? {
        0 => false,
        1 => true,
        other => bail!("bad signature flag {other}"),
    };
    let spec = ModelSpec {
        patch_size,
        d_c,
        hidden,
        n_hidden_layers,
        k_symbols,
        n_directions,
        conditioning,
        use_phase_signatures,
    };
    let stored_hash = r.u64()?;
    if stored_hash != spec.fnv_hash() {
        bail!("spec hash mismatch: stored {stored_hash:#x}, computed {:#x}", spec.fnv_hash());
    }
    let mut model = JsccModel::new(spec, 0);
    let n_params = r.u64()? as usize;
    if n_params != model.params.len() {
        bail!("parameter count {} does not fit this architecture ({})", n_params, model.params.len());
    }
    for p in model.params.iter_mut() {
        *p = r.f64()?;
    }
    let n_sig = r.u64()? as usize;
    if n_sig != model.signatures.len() {
        bail!("signature count {} does not fit this architecture ({})", n_sig, model.signatures.len());
    }
    for p in model.signatures.iter_mut() {
        *p = r.f64()?;
    }
    if r.at != bytes.len() {
        bail!("{} trailing bytes", bytes.len() - r.at);
    }
    Ok(model)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let chunk = self
            .bytes
            .get(self.at..self.at + n)
            .ok_or_else(|| anyhow::anyhow!("truncated at byte {}", self.at))?;
        self.at += n;
        Ok(chunk)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
