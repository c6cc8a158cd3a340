//! Capacity bounds for quantum repeater networks with lossy, noisy nodes.
//!
//! The crate turns a network description (nodes with internal receive/send
//! channels, links with external channels) into per-edge capacity bounds,
//! then into end-to-end bounds for single-path and flooding routing. On
//! weakly-regular lattices it also solves for the largest tolerable link
//! length, internal loss or receiver noise that still guarantees a target
//! flooding capacity.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod channels;
pub mod error;
pub mod network;
pub mod oracles;
pub mod qkd;
pub mod routing;
pub mod wrn;

pub use error::{Error, Result};
