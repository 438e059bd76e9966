use super::{DecodeOutcome, DecodeStatus};
use crate::error::{Error, Result};
use crate::gf2::{BitVec, SparseMatrix};
use crate::seed::Rng;
use crate::tanner::{MatrixMode, TannerGraph};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Order in which improving flips are taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanPolicy {
    /// Sweeps in a fresh random bit order, flipping any bit whose flip
    /// strictly lowers the unsatisfied count (zero-temperature Metropolis
    /// without tie moves).
    #[default]
    RandomSweep,
    /// Always flips the bit with the largest decrease, smallest index first.
    Greedy,
}

/// Bit-flip decoder: flips bits while some flip strictly lowers the number
/// of unsatisfied checks.
#[derive(Clone, Debug)]
pub struct FlipDecoder {
    checks: SparseMatrix,
    bit_checks: SparseMatrix,
    policy: ScanPolicy,
}

impl FlipDecoder {
    pub fn new(h: &SparseMatrix) -> Self {
        Self {
            checks: h.clone(),
            bit_checks: h.transpose(),
            policy: ScanPolicy::RandomSweep,
        }
    }

    pub fn with_policy(mut self, policy: ScanPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> ScanPolicy {
        self.policy
    }

    pub fn from_graph(g: &TannerGraph) -> Self {
        Self::new(&g.to_sparse_matrix(MatrixMode::Parity))
    }

    pub fn n_bits(&self) -> usize {
        self.checks.n_cols()
    }

    pub fn decode(&self, word: &BitVec, rng: &mut Rng) -> Result<DecodeOutcome> {
        let n = self.n_bits();
        if word.len() != n {
            return Err(Error::Dimension(format!(
                "word has length {}, code has {n} bits",
                word.len()
            )));
        }
        let mut x = word.clone();
        let mut unsat_check: Vec<bool> = self
            .checks
            .rows()
            .iter()
            .map(|row| row.iter().filter(|&&b| x.get(b as usize)).count() % 2 == 1)
            .collect();
        let mut unsat_of_bit = vec![0u32; n];
        let mut total = 0usize;
        for (c, row) in self.checks.rows().iter().enumerate() {
            if unsat_check[c] {
                total += 1;
                for &b in row {
                    unsat_of_bit[b as usize] += 1;
                }
            }
        }
        let (flips, sweeps) = match self.policy {
            ScanPolicy::RandomSweep => self.random_sweeps(&mut x, &mut unsat_check, &mut unsat_of_bit, &mut total, rng),
            ScanPolicy::Greedy => self.greedy(&mut x, &mut unsat_check, &mut unsat_of_bit, &mut total),
        };
        let status = if total == 0 {
            DecodeStatus::Converged
        } else {
            DecodeStatus::StoppingSet
        };
        Ok(DecodeOutcome {
            status,
            final_word: x,
            flips_performed: flips,
            iterations: sweeps,
        })
    }

    fn random_sweeps(
        &self,
        x: &mut BitVec,
        unsat_check: &mut [bool],
        unsat_of_bit: &mut [u32],
        total: &mut usize,
        rng: &mut Rng,
    ) -> (usize, usize) {
        let mut order: Vec<u32> = (0..x.len() as u32).collect();
        let mut flips = 0usize;
        let mut sweeps = 0usize;
        while *total > 0 {
            order.shuffle(rng);
            sweeps += 1;
            let mut improved = false;
            for &b in &order {
                let b = b as usize;
                let deg = self.bit_checks.row(b).len() as u32;
                if 2 * unsat_of_bit[b] <= deg {
                    continue;
                }
                x.toggle(b);
                flips += 1;
                improved = true;
                for &c in self.bit_checks.row(b) {
                    let c = c as usize;
                    unsat_check[c] = !unsat_check[c];
                    if unsat_check[c] {
                        *total += 1;
                        for &b2 in self.checks.row(c) {
                            unsat_of_bit[b2 as usize] += 1;
                        }
                    } else {
                        *total -= 1;
                        for &b2 in self.checks.row(c) {
                            unsat_of_bit[b2 as usize] -= 1;
                        }
                    }
                }
                if *total == 0 {
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        (flips, sweeps)
    }

    fn greedy(&self, x: &mut BitVec, unsat_check: &mut [bool], unsat_of_bit: &mut [u32], total: &mut usize) -> (usize, usize) {
        let gain = |b: usize, u: u32| 2 * u as i64 - self.bit_checks.row(b).len() as i64;
        // Keys are (-gain, bit) so the first element is the best flip.
        let mut queue: BTreeSet<(i64, u32)> = (0..x.len())
            .filter_map(|b| {
                let g = gain(b, unsat_of_bit[b]);
                (g > 0).then_some((-g, b as u32))
            })
            .collect();
        let mut flips = 0usize;
        while *total > 0 {
            let Some((_, b)) = queue.pop_first() else {
                break;
            };
            let b = b as usize;
            x.toggle(b);
            flips += 1;
            for &c in self.bit_checks.row(b) {
                let c = c as usize;
                unsat_check[c] = !unsat_check[c];
                let up = unsat_check[c];
                if up {
                    *total += 1;
                } else {
                    *total -= 1;
                }
                for &b2 in self.checks.row(c) {
                    let b2 = b2 as usize;
                    let old = gain(b2, unsat_of_bit[b2]);
                    if up {
                        unsat_of_bit[b2] += 1;
                    } else {
                        unsat_of_bit[b2] -= 1;
                    }
                    let new = gain(b2, unsat_of_bit[b2]);
                    if old > 0 {
                        queue.remove(&(-old, b2 as u32));
                    }
                    if new > 0 {
                        queue.insert((-new, b2 as u32));
                    }
                }
            }
        }
        (flips, flips)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{audit_left_expansion, AuditMode, Gamma, Verdict};
    use crate::generators::gen_gallager;
    use crate::gf2::cycle_repetition;
    use crate::seed::rng_from_seed;
    use crate::tanner::{bipartite_cycle, TannerGraph};

    #[test]
    fn codeword_needs_no_flips() {
        let g = bipartite_cycle(5);
        let dec = FlipDecoder::from_graph(&g);
        let out = dec.decode(&BitVec::zeros(5), &mut rng_from_seed(1)).unwrap();
        assert_eq!(out.status, DecodeStatus::Converged);
        assert_eq!(out.flips_performed, 0);
        let ones = BitVec::from_bools(&[true; 5]);
        let out = dec.decode(&ones, &mut rng_from_seed(1)).unwrap();
        assert_eq!(out.flips_performed, 0);
        assert_eq!(out.final_word, ones);
    }

    #[test]
    fn single_error_on_five_cycle() {
        let dec = FlipDecoder::new(&cycle_repetition(5).to_sparse());
        for i in 0..5 {
            let w = BitVec::from_indices(5, &[i]).unwrap();
            let out = dec.decode(&w, &mut rng_from_seed(i as u64)).unwrap();
            assert!(out.recovered_zero());
            assert_eq!(out.flips_performed, 1);
        }
    }

    #[test]
    fn stopping_set_on_two_adjacent_errors_in_a_cycle() {
        // Two adjacent errors on a 6-cycle leave each bit with one unsatisfied
        // check out of two: a tie, never flipped.
        let dec = FlipDecoder::new(&cycle_repetition(6).to_sparse());
        let w = BitVec::from_indices(6, &[0, 1]).unwrap();
        let out = dec.decode(&w, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out.status, DecodeStatus::StoppingSet);
        assert_eq!(out.final_word, w);
    }

    /// Reference greedy decoder recomputing every gain from scratch.
    fn greedy_reference(h: &SparseMatrix, w: &BitVec) -> BitVec {
        let ht = h.transpose();
        let mut x = w.clone();
        loop {
            let s = h.mul_vec(&x).unwrap();
            let best = (0..x.len())
                .map(|b| {
                    let u = ht.row(b).iter().filter(|&&c| s.get(c as usize)).count() as i64;
                    (2 * u - ht.row(b).len() as i64, b)
                })
                .filter(|&(g, _)| g > 0)
                .max_by_key(|&(g, b)| (g, std::cmp::Reverse(b)));
            match best {
                Some((_, b)) => x.toggle(b),
                None => return x,
            }
        }
    }

    #[test]
    fn greedy_matches_reference() {
        let g = gen_gallager(48, 36, 3, 4, &mut rng_from_seed(8)).unwrap();
        let h = g.to_sparse_matrix(MatrixMode::Parity);
        let dec = FlipDecoder::new(&h).with_policy(ScanPolicy::Greedy);
        let mut rng = rng_from_seed(9);
        for _ in 0..200 {
            let bits: Vec<bool> = (0..48).map(|_| rand::Rng::random_bool(&mut rng, 0.08)).collect();
            let w = BitVec::from_bools(&bits);
            let out = dec.decode(&w, &mut rng).unwrap();
            assert_eq!(out.final_word, greedy_reference(&h, &w));
            let converged = h.mul_vec(&out.final_word).unwrap().is_zero();
            assert_eq!(converged, out.status == DecodeStatus::Converged);
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let dec = FlipDecoder::new(&cycle_repetition(5).to_sparse());
        assert!(dec.decode(&BitVec::zeros(4), &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn unsatisfied_count_strictly_decreases() {
        let mut rng = rng_from_seed(5);
        let g = gen_gallager(60, 45, 3, 4, &mut rng).unwrap();
        let h = g.to_sparse_matrix(MatrixMode::Parity);
        let dec = FlipDecoder::new(&h);
        for trial in 0..50u64 {
            let mut w = BitVec::zeros(60);
            for i in 0..60 {
                if (trial * 31 + i * 17) % 11 == 0 {
                    w.set(i as usize, true);
                }
            }
            let before = h.mul_vec(&w).unwrap().weight();
            let out = dec.decode(&w, &mut rng_from_seed(trial)).unwrap();
            let after = h.mul_vec(&out.final_word).unwrap().weight();
            assert!(after + out.flips_performed <= before);
            if out.status == DecodeStatus::Converged {
                assert_eq!(after, 0);
            }
        }
    }

    fn single_errors_corrected(g: &TannerGraph) {
        let dec = FlipDecoder::from_graph(g);
        for i in 0..g.n_bits() {
            let w = BitVec::from_indices(g.n_bits(), &[i]).unwrap();
            for s in 0..3 {
                let out = dec.decode(&w, &mut rng_from_seed(s)).unwrap();
                assert!(out.recovered_zero(), "bit {i} seed {s}");
            }
        }
    }

    #[test]
    fn certified_pair_expansion_corrects_single_errors() {
        // Pair expansion above 3c/4 means no other bit shares more than half
        // its checks with the erroneous one, so only the error is ever flipped.
        let mut checked = 0;
        for seed in 0..20u64 {
            let g = gen_gallager(40, 40, 4, 4, &mut rng_from_seed(seed)).unwrap();
            let rep = audit_left_expansion(&g, 2, Gamma::new(3, 1).unwrap(), AuditMode::Exhaustive)
                .unwrap();
            if rep.verdict == Verdict::Certified {
                single_errors_corrected(&g);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}
