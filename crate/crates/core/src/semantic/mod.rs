//! Semantic-domain processing: a small trainable JSCC encoder/decoder pair
//! with per-direction conditioning, its trainer, and the shared dense-net
//! machinery.

pub mod model;
pub mod nn;
pub mod train;
