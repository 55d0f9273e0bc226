//! QC-LDPC codes with systematic-by-elimination encoding and normalized
//! min-sum belief propagation.
//!
//! Two protograph base matrices are bundled (nominal rates 1/3 and 7/12),
//! lifted by a circulant size chosen at runtime. Arbitrary transmit lengths
//! are reached by shortening: the lift is rounded up to the next multiple of
//! twelve columns and the surplus message positions are pinned to zero,
//! transmitted nowhere, and re-inserted at the receiver as maximally
//! reliable LLRs. Custom parity matrices (e.g. imported from alist files by
//! the harness) plug in through [`LdpcCode::from_parity_rows`].
//!
//! The decoder is flooding normalized min-sum (factor 0.75, LLR clamp ±30).
//! A decode is *converged* only when the hard decision satisfies every
//! check and no total LLR is exactly zero — an all-zero input carries no
//! information and must not count as success.

use alloc::vec;
use alloc::vec::Vec;

/// Saturation magnitude for LLRs entering and propagating through BP.
pub const LLR_MAX: f64 = 30.0;

/// Min-sum normalization factor.
const MIN_SUM_ALPHA: f64 = 0.75;

/// Base matrix of the nominal rate-1/3 code: 8 checks x 12 variables,
/// entries are circulant shifts, -1 marks no edge. Searched offline for
/// full lifted rank and freedom from 4-cycles at the lift sizes used by
/// the bundled scenarios (Z in {11, 22, 100}).
pub const BASE_RATE_1_3: [[i16; 12]; 8] = [
    [-1, -1, 96, -1, 8, -1, -1, -1, -1, -1, 28, -1],
    [19, -1, -1, -1, -1, 81, 95, 58, -1, -1, -1, -1],
    [-1, 32, 8, -1, -1, -1, 71, -1, -1, -1, -1, -1],
    [-1, 72, -1, -1, -1, 0, -1, -1, -1, -1, -1, -1],
    [42, 67, -1, 82, 29, 45, -1, -1, -1, 66, 91, -1],
    [33, -1, 44, -1, -1, -1, -1, -1, -1, 9, -1, 82],
    [-1, -1, -1, 3, -1, -1, -1, -1, 2, -1, -1, -1],
    [-1, -1, -1, 18, 30, -1, -1, 13, 40, -1, -1, 27],
];

/// Base matrix of the nominal rate-7/12 code: 5 checks x 12 variables.
/// Same search constraints as [`BASE_RATE_1_3`].
pub const BASE_RATE_7_12: [[i16; 12]; 5] = [
    [65, -1, 22, -1, 86, -1, -1, -1, -1, 2, -1, 11],
    [-1, -1, -1, 50, 8, 5, 75, -1, 35, -1, 39, 17],
    [-1, 11, 82, -1, -1, -1, -1, 23, -1, -1, 4, -1],
    [54, 71, 67, 25, 3, 32, 87, 0, 70, -1, -1, -1],
    [71, 70, -1, 58, -1, 77, 95, 75, -1, 10, -1, -1],
];

/// Nominal code rate selector for the bundled base matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NominalRate {
    OneThird,
    SevenTwelfths,
}

impl NominalRate {
    fn base(self) -> (&'static [[i16; 12]], usize) {
        match self {
            NominalRate::OneThird => (&BASE_RATE_1_3, 8),
            NominalRate::SevenTwelfths => (&BASE_RATE_7_12, 5),
        }
    }
}

/// A binary LDPC code: sparse parity checks plus a derived systematic
/// encoder (message positions = non-pivot columns of the GF(2) elimination).
#[derive(Clone, Debug)]
pub struct LdpcCode {
    n: usize,
    rows: Vec<Vec<usize>>,
    pivot_cols: Vec<usize>,
    msg_cols: Vec<usize>,
    /// Per pivot row: the reduced row restricted to message columns,
    /// bit-packed; parity bit = XOR of selected message bits.
    gen_rows: Vec<Vec<u64>>,
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
fn get_bit(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
fn set_bit(row: &mut [u64], i: usize) {
    row[i / 64] |= 1 << (i % 64);
}

impl LdpcCode {
    /// Build from explicit parity rows (each row lists its variable
    /// indices). Redundant rows are allowed; the message length is
    /// `n - rank(H)`.
    ///
    /// # Panics
    /// Panics if any index is out of range or the code has no message bits
    /// (rank = n).
    pub fn from_parity_rows(rows: Vec<Vec<usize>>, n: usize) -> Self {
        assert!(rows.iter().flatten().all(|&v| v < n), "variable index out of range");
        let m = rows.len();
        let nw = words_for(n);
        let mut r: Vec<Vec<u64>> = vec![vec![0u64; nw]; m];
        for (i, row) in rows.iter().enumerate() {
            for &v in row {
                set_bit(&mut r[i], v);
            }
        }
        // Gauss-Jordan over GF(2), tracking pivot columns in scan order.
        let mut pivot_cols = Vec::new();
        let mut rank = 0usize;
        for c in 0..n {
            let Some(p) = (rank..m).find(|&i| get_bit(&r[i], c)) else {
                continue;
            };
            r.swap(rank, p);
            let pivot_row = r[rank].clone();
            for (i, row) in r.iter_mut().enumerate() {
                if i != rank && get_bit(row, c) {
                    for (w, pw) in row.iter_mut().zip(&pivot_row) {
                        *w ^= pw;
                    }
                }
            }
            pivot_cols.push(c);
            rank += 1;
            if rank == m {
                break;
            }
        }
        let in_pivot = {
            let mut mask = vec![false; n];
            for &c in &pivot_cols {
                mask[c] = true;
            }
            mask
        };
        let msg_cols: Vec<usize> = (0..n).filter(|&c| !in_pivot[c]).collect();
        assert!(!msg_cols.is_empty(), "parity matrix has full column rank: no message bits");
        let kw = words_for(msg_cols.len());
        let gen_rows: Vec<Vec<u64>> = (0..rank)
            .map(|i| {
                let mut g = vec![0u64; kw];
                for (j, &c) in msg_cols.iter().enumerate() {
                    if get_bit(&r[i], c) {
                        set_bit(&mut g, j);
                    }
                }
                g
            })
            .collect();
        Self {
            n,
            rows,
            pivot_cols,
            msg_cols,
            gen_rows,
        }
    }

    /// Lift a bundled protograph by circulant size `z`.
    pub fn from_qc(rate: NominalRate, z: usize) -> Self {
        assert!(z >= 1);
        let (base, mb) = rate.base();
        let n = 12 * z;
        let mut rows = Vec::with_capacity(mb * z);
        for base_row in base.iter().take(mb) {
            for r in 0..z {
                let mut row = Vec::new();
                for (bj, &shift) in base_row.iter().enumerate() {
                    if shift >= 0 {
                        let s = shift as usize % z;
                        row.push(bj * z + (r + s) % z);
                    }
                }
                rows.push(row);
            }
        }
        Self::from_parity_rows(rows, n)
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length `k = n - rank(H)`.
    pub fn k(&self) -> usize {
        self.msg_cols.len()
    }

    /// Codeword column carrying message bit `i`.
    pub fn msg_col(&self, i: usize) -> usize {
        self.msg_cols[i]
    }

    /// Systematic encode: message bits land on the non-pivot columns,
    /// parity bits fill the pivot columns so that `H c = 0`.
    ///
    /// # Panics
    /// Panics if `msg.len() != k`.
    pub fn encode(&self, msg: &[u8]) -> Vec<u8> {
        assert_eq!(msg.len(), self.k(), "message length must equal k");
        let kw = words_for(self.k());
        let mut mw = vec![0u64; kw];
        for (i, &b) in msg.iter().enumerate() {
            if b & 1 == 1 {
                set_bit(&mut mw, i);
            }
        }
        let mut cw = vec![0u8; self.n];
        for (i, &c) in self.msg_cols.iter().enumerate() {
            cw[c] = msg[i] & 1;
        }
        for (g, &p) in self.gen_rows.iter().zip(&self.pivot_cols) {
            let mut acc = 0u64;
            for (gw, mw) in g.iter().zip(&mw) {
                acc ^= gw & mw;
            }
            cw[p] = (acc.count_ones() & 1) as u8;
        }
        cw
    }

    /// `H c = 0` over GF(2)?
    pub fn parity_ok(&self, cw: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |a, &v| a ^ (cw[v] & 1)) == 0)
    }

    /// Extract the message bits from a codeword.
    pub fn extract_message(&self, cw: &[u8]) -> Vec<u8> {
        self.msg_cols.iter().map(|&c| cw[c] & 1).collect()
    }

    /// Flooding normalized min-sum BP.
    ///
    /// # Panics
    /// Panics if `llr.len() != n`.
    pub fn decode_bp(&self, llr: &[f64], max_iter: usize) -> BpOutcome {
        assert_eq!(llr.len(), self.n, "LLR length must equal n");
        let clamp = |v: f64| v.clamp(-LLR_MAX, LLR_MAX);
        // check-to-variable messages, one per edge, indexed [check][slot]
        let mut msgs: Vec<Vec<f64>> = self.rows.iter().map(|r| vec![0.0; r.len()]).collect();
        let mut total = vec![0.0; self.n];
        let mut hard = vec![0u8; self.n];
        let mut iterations = 0;
        for it in 0..max_iter.max(1) {
            iterations = it + 1;
            // variable totals
            for (t, &l) in total.iter_mut().zip(llr) {
                *t = clamp(l);
            }
            for (row, m) in self.rows.iter().zip(&msgs) {
                for (&v, &mv) in row.iter().zip(m) {
                    total[v] += mv;
                }
            }
            for t in total.iter_mut() {
                *t = clamp(*t);
            }
            for (h, &t) in hard.iter_mut().zip(&total) {
                *h = if t < 0.0 { 1 } else { 0 };
            }
            if self.parity_ok(&hard) && total.iter().all(|&t| t != 0.0) {
                return BpOutcome {
                    message: self.extract_message(&hard),
                    codeword: hard,
                    converged: true,
                    iterations,
                };
            }
            // check updates: sign product and two smallest magnitudes of
            // the extrinsic inputs, normalized by MIN_SUM_ALPHA
            for (row, m) in self.rows.iter().zip(msgs.iter_mut()) {
                let mut sign_prod = 1.0f64;
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut min_slot = 0usize;
                for (slot, (&v, &mv)) in row.iter().zip(m.iter()).enumerate() {
                    let ext = total[v] - mv;
                    let s = if ext < 0.0 { -1.0 } else { 1.0 };
                    sign_prod *= s;
                    let a = if ext < 0.0 { -ext } else { ext };
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        min_slot = slot;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for (slot, (&v, mv)) in row.iter().zip(m.iter_mut()).enumerate() {
                    let ext = total[v] - *mv;
                    let s = if ext < 0.0 { -1.0 } else { 1.0 };
                    let mag = if slot == min_slot { min2 } else { min1 };
                    *mv = clamp(MIN_SUM_ALPHA * sign_prod * s * mag);
                }
            }
        }
        BpOutcome {
            message: self.extract_message(&hard),
            codeword: hard,
            converged: false,
            iterations,
        }
    }
}

/// Result of a BP decode.
#[derive(Clone, Debug)]
pub struct BpOutcome {
    /// Hard-decision codeword (length n).
    pub codeword: Vec<u8>,
    /// Message bits extracted from the codeword (length k).
    pub message: Vec<u8>,
    /// True iff the hard decision satisfies all checks and every total LLR
    /// is nonzero.
    pub converged: bool,
    /// BP iterations actually run.
    pub iterations: usize,
}

/// A bundled QC code shortened to an arbitrary transmit length.
///
/// `Z = ceil(n_tx / 12)` picks the lift; the mother code's surplus
/// `12 Z - n_tx` message positions (the highest-index ones) are frozen to
/// zero and never transmitted. Message length is therefore
/// `k = n_tx - (checks-per-protograph-row) * Z`.
#[derive(Clone, Debug)]
pub struct RateMatchedCode {
    code: LdpcCode,
    n_tx: usize,
    k_msg: usize,
    /// mother-code columns actually transmitted, in transmit order
    tx_cols: Vec<usize>,
}

impl RateMatchedCode {
    /// Build a code transmitting exactly `n_tx` bits at the nominal rate.
    /// Returns `None` when `n_tx` is too small to leave any message bits.
    pub fn new(rate: NominalRate, n_tx: usize) -> Option<Self> {
        if n_tx < 24 {
            return None;
        }
        let z = n_tx.div_ceil(12);
        let code = LdpcCode::from_qc(rate, z);
        let shorten = 12 * z - n_tx;
        if code.k() <= shorten {
            return None;
        }
        let k_msg = code.k() - shorten;
        let shortened: Vec<usize> = (k_msg..code.k()).map(|i| code.msg_col(i)).collect();
        let mut is_short = vec![false; code.n()];
        for &c in &shortened {
            is_short[c] = true;
        }
        let tx_cols: Vec<usize> = (0..code.n()).filter(|&c| !is_short[c]).collect();
        Some(Self {
            code,
            n_tx,
            k_msg,
            tx_cols,
        })
    }

    /// Transmitted block length in bits.
    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Message payload per block in bits.
    pub fn k_msg(&self) -> usize {
        self.k_msg
    }

    /// Effective transmitted rate `k / n_tx`.
    pub fn rate(&self) -> f64 {
        self.k_msg as f64 / self.n_tx as f64
    }

    /// Encode `k_msg` message bits into `n_tx` transmitted bits.
    ///
    /// # Panics
    /// Panics if `msg.len() != k_msg`.
    pub fn encode(&self, msg: &[u8]) -> Vec<u8> {
        assert_eq!(msg.len(), self.k_msg);
        let mut full = Vec::with_capacity(self.code.k());
        full.extend_from_slice(msg);
        full.resize(self.code.k(), 0); // shortened positions carry zeros
        let cw = self.code.encode(&full);
        self.tx_cols.iter().map(|&c| cw[c]).collect()
    }

    /// Decode from `n_tx` received LLRs: shortened positions are restored
    /// as maximally reliable zeros before BP.
    ///
    /// # Panics
    /// Panics if `llr.len() != n_tx`.
    pub fn decode(&self, llr: &[f64], max_iter: usize) -> BpOutcome {
        assert_eq!(llr.len(), self.n_tx);
        let mut full = vec![LLR_MAX; self.code.n()]; // +max = bit 0 certain
        for (&c, &l) in self.tx_cols.iter().zip(llr) {
            full[c] = l;
        }
        let mut out = self.code.decode_bp(&full, max_iter);
        out.message.truncate(self.k_msg);
        out
    }
}
