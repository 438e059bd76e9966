//! Diffusion codes: classical LDPC codes whose Tanner graphs come from a
//! random SWAP network on the cycle graph, together with the machinery to
//! audit their expansion, lift them to hypergraph-product CSS codes, decode
//! them and simulate their thermal dynamics.

pub mod decoders;
pub mod diffusion;
pub mod error;
pub mod expansion;
pub mod gf2;
pub mod hgp;
pub mod generators;
pub mod seed;
pub mod sep;
pub mod tanner;
pub mod thermal;

pub use error::{Error, Result};
