//! Import of parity-check matrices in the "alist" text format, so
//! externally specified codes (e.g. standards matrices) can replace the
//! bundled protographs.
//!
//! The format, as used by the MacKay code archive: a header `N M`, the
//! maximum column/row degrees, per-column then per-row degree lists, then
//! one line per column and one line per row of 1-based indices (padded
//! with zeros for irregular codes).

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use duplex_core::baseline::ldpc::LdpcCode;

/// Parse an alist document into a decoder-ready code.
pub fn parse_alist(text: &str) -> Result<LdpcCode> {
    let mut nums = text
        .split_ascii_whitespace()
        .map(|t| t.parse::<i64>().map_err(|_| anyhow::anyhow!("non-numeric token {t:?}")));
    let mut next = |what: &str| -> Result<i64> {
        nums.next().ok_or_else(|| anyhow::anyhow!("truncated before {what}"))?
    };

    let n = usize::try_from(next("N")?).context("N must be non-negative")?;
    let m = usize::try_from(next("M")?).context("M must be non-negative")?;
    if n == 0 || m == 0 {
        bail!("degenerate size {n} x {m}");
    }
    let max_col = usize::try_from(next("max column degree")?)?;
    let max_row = usize::try_from(next("max row degree")?)?;

    let mut col_deg = Vec::with_capacity(n);
    for i in 0..n {
        let d = usize::try_from(next("column degree")?)?;
        if d > max_col {
            bail!("column {i} degree {d} exceeds declared maximum {max_col}");
        }
        col_deg.push(d);
    }
    let mut row_deg = Vec::with_capacity(m);
    for i in 0..m {
        let d = usize::try_from(next("row degree")?)?;
        if d > max_row {
            bail!("row {i} degree {d} exceeds declared maximum {max_row}");
        }
        row_deg.push(d);
    }

    // column section: consumed and cross-checked against the row section
    let mut count_by_row = vec![0usize; m];
    for (c, &deg) in col_deg.iter().enumerate() {
        let mut seen = 0usize;
        for _ in 0..max_col {
            let v = next("column entry")?;
            if v == 0 {
                continue;
            }
            let r = usize::try_from(v).context("negative row index")? - 1;
            if r >= m {
                bail!("column {c} references row {} of {m}", r + 1);
            }
            count_by_row[r] += 1;
            seen += 1;
        }
        if seen != deg {
            bail!("column {c} lists {seen} entries, degree says {deg}");
        }
    }

    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(m);
    for (r, &deg) in row_deg.iter().enumerate() {
        let mut row = Vec::with_capacity(deg);
        for _ in 0..max_row {
            let v = next("row entry")?;
            if v == 0 {
                continue;
            }
            let c = usize::try_from(v).context("negative column index")? - 1;
            if c >= n {
                bail!("row {r} references column {} of {n}", c + 1);
            }
            row.push(c);
        }
        if row.len() != deg {
            bail!("row {r} lists {} entries, degree says {deg}", row.len());
        }
        if count_by_row[r] != deg {
            bail!(
                "row {r}: column section implies degree {}, row section says {deg}",
                count_by_row[r]
            );
        }
        rows.push(row);
    }
    if nums.next().is_some() {
        bail!("trailing tokens after the row section");
    }
    Ok(LdpcCode::from_parity_rows(rows, n))
}

pub fn load_alist(path: &Path) -> Result<LdpcCode> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_alist(&text).with_context(|| format!("in alist file {}", path.display()))
}
