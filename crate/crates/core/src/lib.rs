//! Distributed target tracking over fading wireless channels.
//!
//! Each sensor node runs a sigma-point filter on range-only measurements that
//! have passed through a Rayleigh-fading channel, exchanges information-form
//! measurement contributions with its neighbors over lossy links, and then
//! mixes neighbor estimates with Metropolis weights.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod network;
pub mod numerics;
pub mod sim;

pub use error::{Error, Result};
