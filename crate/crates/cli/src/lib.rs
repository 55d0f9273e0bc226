//! Harness around the duplex-core library: configuration, corpus and
//! model file IO, alist parity-matrix import, experiment commands, and
//! CSV/SVG artifact emission.

pub mod alist;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod model_io;
pub mod pgm;
pub mod report;
