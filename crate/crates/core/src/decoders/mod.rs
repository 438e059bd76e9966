//! Flip and belief-propagation decoders and the i.i.d. bit-flip benchmark.

mod bench;
mod bp;
mod flip;

pub use bench::{code_seed, estimate_crossing, threshold_bench, CodeFamily, Crossing, DecoderKind, ThresholdCell, ThresholdConfig};
pub use bp::{bp_decode, BpConfig, BpDecoder, BpResult, BpVariant};
pub use flip::{FlipDecoder, ScanPolicy};

use crate::gf2::BitVec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeStatus {
    Converged,
    StoppingSet,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    pub final_word: BitVec,
    /// Accepted flips for the flip decoder, bits changed by the final hard decision for BP.
    pub flips_performed: usize,
    pub iterations: usize,
}

impl DecodeOutcome {
    /// Decoding the all-zero codeword plus noise succeeded.
    pub fn recovered_zero(&self) -> bool {
        self.status == DecodeStatus::Converged && self.final_word.is_zero()
    }
}
