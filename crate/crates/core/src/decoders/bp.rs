use super::{DecodeOutcome, DecodeStatus};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec, SparseMatrix};
use serde::{Deserialize, Serialize};

const LLR_CLAMP: f64 = 60.0;
const TANH_CLAMP: f64 = 1.0 - 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BpVariant {
    SumProduct,
    /// Normalized min-sum: check messages are scaled by `scale`.
    MinSum { scale: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    /// Zero means one round per bit of the code.
    pub max_iters: usize,
    pub variant: BpVariant,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iters: 60,
            variant: BpVariant::SumProduct,
        }
    }
}

/// Result of a fixed number of message-passing rounds.
#[derive(Clone, Debug)]
pub struct BpResult {
    /// Posterior log-likelihood ratios ln(P(0)/P(1)) per bit.
    pub llr: Vec<f64>,
    pub hard_decision: BitVec,
}

impl BpResult {
    /// Posterior probability that each bit is one.
    pub fn marginals(&self) -> Vec<f64> {
        self.llr.iter().map(|&l| 1.0 / (1.0 + l.exp())).collect()
    }
}

/// Flooding-schedule belief propagation on a binary symmetric channel.
#[derive(Clone, Debug)]
pub struct BpDecoder {
    checks: SparseMatrix,
    /// Edge ids incident to each bit; edges are numbered row by row.
    bit_edges: Vec<Vec<u32>>,
    row_start: Vec<usize>,
    config: BpConfig,
}

struct Messages {
    to_check: Vec<f64>,
    to_bit: Vec<f64>,
    channel: Vec<f64>,
    totals: Vec<f64>,
}

impl BpDecoder {
    pub fn new(h: &SparseMatrix, mut config: BpConfig) -> Result<Self> {
        if config.max_iters == 0 {
            config.max_iters = h.n_cols().max(1);
        }
        if let BpVariant::MinSum { scale } = config.variant {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::invalid("scale", "must be positive"));
            }
        }
        let mut bit_edges = vec![Vec::new(); h.n_cols()];
        let mut row_start = Vec::with_capacity(h.n_rows() + 1);
        let mut e = 0u32;
        for row in h.rows() {
            row_start.push(e as usize);
            for &b in row {
                bit_edges[b as usize].push(e);
                e += 1;
            }
        }
        row_start.push(e as usize);
        Ok(Self {
            checks: h.clone(),
            bit_edges,
            row_start,
            config,
        })
    }

    pub fn config(&self) -> BpConfig {
        self.config
    }

    fn channel_llr(&self, received: &BitVec, p: f64) -> Result<Vec<f64>> {
        if received.len() != self.checks.n_cols() {
            return Err(Error::Dimension(format!(
                "received word has length {}, code has {} bits",
                received.len(),
                self.checks.n_cols()
            )));
        }
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::invalid("p_channel", "must lie in (0, 1/2)"));
        }
        let l = ((1.0 - p) / p).ln();
        Ok((0..received.len())
            .map(|i| if received.get(i) { -l } else { l })
            .collect())
    }

    fn init(&self, channel: Vec<f64>) -> Messages {
        let n_edges = *self.row_start.last().unwrap_or(&0);
        let mut to_check = vec![0.0; n_edges];
        for (b, edges) in self.bit_edges.iter().enumerate() {
            for &e in edges {
                to_check[e as usize] = channel[b];
            }
        }
        Messages {
            to_check,
            to_bit: vec![0.0; n_edges],
            totals: channel.clone(),
            channel,
        }
    }

    fn round(&self, msg: &mut Messages, scratch: &mut Vec<f64>) {
        for c in 0..self.checks.n_rows() {
            let (lo, hi) = (self.row_start[c], self.row_start[c + 1]);
            let deg = hi - lo;
            if deg == 0 {
                continue;
            }
            match self.config.variant {
                BpVariant::SumProduct => {
                    scratch.clear();
                    // tanh(v/2) = 1 - 2/(e^v + 1)
                    scratch.extend(msg.to_check[lo..hi].iter().map(|&v| 1.0 - 2.0 / (v.exp() + 1.0)));
                    // Products excluding each edge via prefix and suffix passes.
                    let mut prefix = 1.0;
                    for i in 0..deg {
                        msg.to_bit[lo + i] = prefix;
                        prefix *= scratch[i];
                    }
                    let mut suffix = 1.0;
                    for i in (0..deg).rev() {
                        let t = (msg.to_bit[lo + i] * suffix).clamp(-TANH_CLAMP, TANH_CLAMP);
                        msg.to_bit[lo + i] = ((1.0 + t) / (1.0 - t)).ln().clamp(-LLR_CLAMP, LLR_CLAMP);
                        suffix *= scratch[i];
                    }
                }
                BpVariant::MinSum { scale } => {
                    let mut sign = 1.0;
                    let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, 0);
                    for i in 0..deg {
                        let v = msg.to_check[lo + i];
                        if v < 0.0 {
                            sign = -sign;
                        }
                        let a = v.abs();
                        if a < min1 {
                            min2 = min1;
                            min1 = a;
                            arg = i;
                        } else if a < min2 {
                            min2 = a;
                        }
                    }
                    for i in 0..deg {
                        let v = msg.to_check[lo + i];
                        let s = if v < 0.0 { -sign } else { sign };
                        let m = if i == arg { min2 } else { min1 };
                        let m = if m.is_finite() { m } else { LLR_CLAMP };
                        msg.to_bit[lo + i] = s * scale * m;
                    }
                }
            }
        }
        for (b, edges) in self.bit_edges.iter().enumerate() {
            let total = msg.channel[b] + edges.iter().map(|&e| msg.to_bit[e as usize]).sum::<f64>();
            msg.totals[b] = total;
            for &e in edges {
                msg.to_check[e as usize] = (total - msg.to_bit[e as usize]).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
        }
    }

    fn hard(totals: &[f64]) -> BitVec {
        let bits: Vec<bool> = totals.iter().map(|&l| l < 0.0).collect();
        BitVec::from_bools(&bits)
    }

    fn hard_decision_satisfies(&self, totals: &[f64]) -> bool {
        self.checks
            .rows()
            .iter()
            .all(|row| row.iter().filter(|&&b| totals[b as usize] < 0.0).count() % 2 == 0)
    }

    /// Runs exactly `iters` rounds and returns the posterior LLRs.
    pub fn run(&self, received: &BitVec, p: f64, iters: usize) -> Result<BpResult> {
        let mut msg = self.init(self.channel_llr(received, p)?);
        let mut scratch = Vec::new();
        for _ in 0..iters {
            self.round(&mut msg, &mut scratch);
        }
        let hard_decision = Self::hard(&msg.totals);
        Ok(BpResult {
            llr: msg.totals,
            hard_decision,
        })
    }

    /// Decodes until the hard decision satisfies every check or `max_iters`
    /// rounds have run.
    pub fn decode(&self, received: &BitVec, p: f64) -> Result<DecodeOutcome> {
        let channel = self.channel_llr(received, p)?;
        let outcome = |word: BitVec, status, iterations| {
            let mut diff = word.clone();
            diff.xor_assign(received);
            DecodeOutcome {
                status,
                flips_performed: diff.weight(),
                final_word: word,
                iterations,
            }
        };
        if self.checks.mul_vec(received)?.is_zero() {
            return Ok(outcome(received.clone(), DecodeStatus::Converged, 0));
        }
        let mut msg = self.init(channel);
        let mut scratch = Vec::new();
        for it in 1..=self.config.max_iters {
            self.round(&mut msg, &mut scratch);
            if self.hard_decision_satisfies(&msg.totals) {
                return Ok(outcome(Self::hard(&msg.totals), DecodeStatus::Converged, it));
            }
        }
        Ok(outcome(Self::hard(&msg.totals), DecodeStatus::IterationLimit, self.config.max_iters))
    }
}

/// One-shot sum-product decoding with a dense parity-check matrix.
pub fn bp_decode(h: &BitMatrix, received: &BitVec, p: f64, max_iters: usize) -> Result<DecodeOutcome> {
    let config = BpConfig {
        max_iters,
        variant: BpVariant::SumProduct,
    };
    BpDecoder::new(&h.to_sparse(), config)?.decode(received, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::hamming_7_4;
    use proptest::prelude::*;

    fn codewords(h: &BitMatrix) -> Vec<BitVec> {
        let n = h.cols();
        (0..1u32 << n)
            .map(|mask| BitVec::from_bools(&(0..n).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>()))
            .filter(|x| h.mul_vec(x).unwrap().is_zero())
            .collect()
    }

    fn distance(a: &BitVec, b: &BitVec) -> usize {
        let mut d = a.clone();
        d.xor_assign(b);
        d.weight()
    }

    #[test]
    fn codeword_converges_at_iteration_zero() {
        let h = hamming_7_4();
        let out = bp_decode(&h, &BitVec::zeros(7), 0.05, 50).unwrap();
        assert_eq!(out.status, DecodeStatus::Converged);
        assert_eq!(out.iterations, 0);
    }

    /// The Hamming code checked by all seven nonzero dual codewords.
    fn hamming_full_dual() -> BitMatrix {
        let h = hamming_7_4();
        let rows: Vec<BitVec> = (1..8usize)
            .map(|mask| {
                let mut r = BitVec::zeros(7);
                for k in (0..3).filter(|k| mask >> k & 1 == 1) {
                    r.xor_assign(&h.row_vec(k));
                }
                r
            })
            .collect();
        BitMatrix::from_row_vecs(7, &rows).unwrap()
    }

    #[test]
    fn three_row_hamming_misleads_flooding_on_the_central_bit() {
        // Bit 6 sits in all three checks; one flooding round pushes bits 2, 4
        // and 5 past zero and lands on the weight-3 codeword 0010110.
        let h = hamming_7_4();
        for i in 0..7 {
            let y = BitVec::from_indices(7, &[i]).unwrap();
            let out = bp_decode(&h, &y, 0.05, 50).unwrap();
            assert_eq!(out.status, DecodeStatus::Converged);
            if i == 6 {
                assert_eq!(out.final_word, BitVec::from_indices(7, &[2, 4, 5]).unwrap());
            } else {
                assert!(out.final_word.is_zero());
            }
        }
    }

    #[test]
    fn hamming_single_errors_match_ml() {
        let h = hamming_full_dual();
        assert_eq!(h.rank(), 3);
        let words = codewords(&h);
        assert_eq!(words.len(), 16);
        for c in &words {
            for i in 0..7 {
                let mut y = c.clone();
                y.toggle(i);
                let ml = words.iter().min_by_key(|w| distance(w, &y)).unwrap();
                assert_eq!(ml, c);
                let out = bp_decode(&h, &y, 0.05, 50).unwrap();
                assert_eq!(out.status, DecodeStatus::Converged);
                assert_eq!(&out.final_word, c);
            }
        }
    }

    #[test]
    fn rejects_bad_channel() {
        let h = hamming_7_4();
        assert!(bp_decode(&h, &BitVec::zeros(7), 0.5, 10).is_err());
        assert!(bp_decode(&h, &BitVec::zeros(7), 0.0, 10).is_err());
    }

    #[test]
    fn min_sum_decodes_single_errors() {
        let h = hamming_full_dual().to_sparse();
        let dec = BpDecoder::new(
            &h,
            BpConfig {
                max_iters: 20,
                variant: BpVariant::MinSum { scale: 0.8 },
            },
        )
        .unwrap();
        for i in 0..7 {
            let y = BitVec::from_indices(7, &[i]).unwrap();
            assert!(dec.decode(&y, 0.05).unwrap().recovered_zero());
        }
    }

    /// Random tree-shaped Tanner graph: each new check joins one existing bit
    /// to one or two fresh bits.
    fn tree_code() -> impl Strategy<Value = BitMatrix> {
        prop::collection::vec((any::<prop::sample::Index>(), 1usize..=2), 1..7).prop_filter_map(
            "too many bits",
            |spec| {
                let mut n = 1usize;
                let mut rows = Vec::new();
                for (anchor, fresh) in spec {
                    let mut row = vec![anchor.index(n)];
                    row.extend(n..n + fresh);
                    n += fresh;
                    rows.push(row);
                }
                (n <= 15).then(|| BitMatrix::from_row_indices(n, &rows).unwrap())
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn tree_marginals_are_exact(h in tree_code(), mask in any::<u32>(), p in 0.02f64..0.4) {
            let n = h.cols();
            let y = BitVec::from_bools(&(0..n).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>());
            let words = codewords(&h);
            let mut z = 0.0;
            let mut ones = vec![0.0; n];
            for w in &words {
                let d = distance(w, &y) as i32;
                let weight = p.powi(d) * (1.0 - p).powi(n as i32 - d);
                z += weight;
                for i in w.iter_ones() {
                    ones[i] += weight;
                }
            }
            let dec = BpDecoder::new(&h.to_sparse(), BpConfig::default()).unwrap();
            let res = dec.run(&y, p, 2 * h.rows() + 2).unwrap();
            for (i, m) in res.marginals().into_iter().enumerate() {
                prop_assert!((m - ones[i] / z).abs() < 1e-9, "bit {} bp {} exact {}", i, m, ones[i] / z);
            }
        }
    }
}
