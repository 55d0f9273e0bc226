//! Separate source/channel coding chain: transform image codec, QC-LDPC
//! channel code, and QPSK modem.
//!
//! This is the conventional digital reference against which the semantic
//! chain is compared. Its defining behavioral property is the cliff: as
//! long as the channel decoder converges the reconstruction quality is set
//! purely by the source codec's quantization, and once it stops converging
//! the bitstream header is garbage and the output collapses outright
//! instead of degrading.

pub mod codec;
pub mod ldpc;
pub mod modem;
