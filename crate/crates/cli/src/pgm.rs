//! Binary PGM (P5) reading and writing.
//!
//! The only image format the harness speaks: 8-bit single-channel, binary
//! payload. The reader is strict about the header (magic, dimensions,
//! maxval 255) and names the offending file in every error.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use duplex_core::image::ImagePatch;

/// Read an 8-bit binary PGM into a patch with pixels normalized to [0, 1].
pub fn read_pgm(path: &Path) -> Result<ImagePatch> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_pgm(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Write a patch as 8-bit binary PGM, clamping pixels to [0, 1].
pub fn write_pgm(path: &Path, patch: &ImagePatch) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", patch.width, patch.height).into_bytes();
    out.extend(patch.to_u8());
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn parse_pgm(bytes: &[u8]) -> Result<ImagePatch> {
    let mut cursor = 0usize;
    let magic = next_token(bytes, &mut cursor)?;
    if magic != b"P5" {
        bail!("not a binary PGM (magic {:?})", String::from_utf8_lossy(magic));
    }
    let width: usize = parse_number(next_token(bytes, &mut cursor)?, "width")?;
    let height: usize = parse_number(next_token(bytes, &mut cursor)?, "height")?;
    let maxval: usize = parse_number(next_token(bytes, &mut cursor)?, "maxval")?;
    if maxval != 255 {
        bail!("unsupported maxval {maxval} (only 8-bit PGM is accepted)");
    }
    if width == 0 || height == 0 {
        bail!("degenerate dimensions {width}x{height}");
    }
    // exactly one whitespace byte separates the header from the payload
    cursor += 1;
    let need = width * height;
    let payload = bytes
        .get(cursor..cursor + need)
        .ok_or_else(|| anyhow::anyhow!("truncated payload: need {need} bytes"))?;
    Ok(ImagePatch::from_u8(width, height, payload))
}

/// Advance past whitespace and `#` comments, returning the next token.
fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if start == *cursor {
        bail!("truncated header");
    }
    Ok(&bytes[start..*cursor])
}

fn parse_number(token: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| anyhow::anyhow!("bad {what} field {:?}", String::from_utf8_lossy(token)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn round_trips_through_disk() {
        let patch = ImagePatch::from_u8(3, 2, &[0, 64, 128, 192, 255, 10]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        write_pgm(&path, &patch).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.width, 3);
        assert_eq!(back.height, 2);
        assert_eq!(back.to_u8(), patch.to_u8());
    }

    #[test]
    fn accepts_comments_in_the_header() {
        let mut bytes = b"P5\n# made by hand\n2 2\n255\n".to_vec();
        bytes.extend([1, 2, 3, 4]);
        let f = write_temp(&bytes);
        let p = read_pgm(f.path()).unwrap();
        assert_eq!(p.to_u8(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn rejects_wrong_magic_naming_the_file() {
        let f = write_temp(b"P2\n2 2\n255\n1 2 3 4\n");
        let err = read_pgm(f.path()).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("not a binary PGM"), "{msg}");
        assert!(msg.contains(&f.path().display().to_string()), "{msg}");
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = b"P5\n4 4\n255\n".to_vec();
        bytes.extend([0u8; 7]);
        let f = write_temp(&bytes);
        let err = read_pgm(f.path()).unwrap_err();
        assert!(format!("{err:#}").contains("truncated payload"));
    }

    #[test]
    fn rejects_sixteen_bit_files() {
        let f = write_temp(b"P5\n1 1\n65535\n\x00\x01");
        let err = read_pgm(f.path()).unwrap_err();
        assert!(format!("{err:#}").contains("maxval"));
    }
}
