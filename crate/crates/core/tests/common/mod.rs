#![allow(dead_code)]

use diffcodes::gf2::{BitMatrix, BitVec};

pub fn unsat(h: &BitMatrix, mask: u32) -> usize {
    let x = BitVec::from_bools(&(0..h.cols()).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>());
    h.mul_vec(&x).unwrap().weight()
}

/// Exact Gibbs weights over all `2^n` spin states, indexed by bitmask.
pub fn gibbs(h: &BitMatrix, tau: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..1u32 << h.cols())
        .map(|m| (-2.0 * unsat(h, m) as f64 / tau).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn mask_of(x: &BitVec) -> u32 {
    x.iter_ones().fold(0, |m, i| m | 1 << i)
}

/// Compares per-cell frequencies with `exact`, using the spread of batch
/// means as σ so that autocorrelation of the chain is accounted for.
pub fn within_3_sigma(batches: &[Vec<usize>], per_batch: usize, exact: &[f64], what: &str) -> Result<(), String> {
    let b = batches.len() as f64;
    for (cell, &p) in exact.iter().enumerate() {
        let fs: Vec<f64> = batches.iter().map(|c| c[cell] as f64 / per_batch as f64).collect();
        let mean = fs.iter().sum::<f64>() / b;
        let var = fs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (b - 1.0);
        let binomial = p * (1.0 - p) / (per_batch as f64 * b);
        let sigma = (var / b).max(binomial).sqrt();
        if (mean - p).abs() > 3.0 * sigma + 1e-12 {
            return Err(format!("{what} {cell}: {mean} vs {p} (σ = {sigma})"));
        }
    }
    Ok(())
}
