use super::{BpConfig, BpDecoder, DecodeOutcome, FlipDecoder, ScanPolicy};
use crate::diffusion::{build_diffusion_code, DiffusionParams, TimeMode, TimeSpec};
use crate::error::{Error, Result};
use crate::generators::gen_gallager;
use crate::gf2::{BitVec, SparseMatrix};
use crate::seed::{derive_seed, rng_from_seed, Rng};
use crate::tanner::{MatrixMode, TannerGraph};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Trials drawn from one noise stream.
const CHUNK: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Flip,
    Bp,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Flip => "flip",
            DecoderKind::Bp => "bp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CodeFamily {
    Diffusion {
        wbit: usize,
        wcheck: usize,
        time: TimeSpec,
        time_mode: TimeMode,
    },
    Gallager { wbit: usize, wcheck: usize },
}

impl CodeFamily {
    /// `wbit = 9`, `wcheck = 11`, `T = N`.
    pub fn reference() -> Self {
        CodeFamily::Diffusion {
            wbit: 9,
            wcheck: 11,
            time: TimeSpec::Exponent(1.0),
            time_mode: TimeMode::Discrete,
        }
    }

    pub fn degrees(&self) -> (usize, usize) {
        match *self {
            CodeFamily::Diffusion { wbit, wcheck, .. } | CodeFamily::Gallager { wbit, wcheck } => (wbit, wcheck),
        }
    }

    pub fn time_label(&self) -> String {
        match self {
            CodeFamily::Diffusion { time: TimeSpec::Exponent(a), .. } => format!("N^{a}"),
            CodeFamily::Diffusion { time: TimeSpec::Sweeps(t), .. } => format!("{t}"),
            CodeFamily::Gallager { .. } => "gallager".to_string(),
        }
    }

    pub fn build(&self, n: usize, m: usize, seed: u64) -> Result<TannerGraph> {
        match *self {
            CodeFamily::Diffusion { wbit, wcheck, time, time_mode } => {
                let mut p = DiffusionParams::new(n, m, wbit, wcheck, time, seed);
                p.time_mode = time_mode;
                Ok(build_diffusion_code(&p)?.graph)
            }
            CodeFamily::Gallager { wbit, wcheck } => gen_gallager(n, m, wbit, wcheck, &mut rng_from_seed(seed)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub decoder: DecoderKind,
    pub family: CodeFamily,
    pub p_grid: Vec<f64>,
    /// (n, m) pairs.
    pub sizes: Vec<(usize, usize)>,
    pub trials_per_point: usize,
    pub codes_per_size: usize,
    pub master_seed: u64,
    pub bp: BpConfig,
    #[serde(default)]
    pub flip_policy: ScanPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCell {
    pub decoder: String,
    pub n: usize,
    pub m: usize,
    pub wbit: usize,
    pub wcheck: usize,
    pub t_spec: String,
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub stderr: f64,
    pub master_seed: u64,
}

impl ThresholdConfig {
    /// Decoder column of the output table.
    pub fn decoder_label(&self) -> &'static str {
        match (self.decoder, self.flip_policy) {
            (DecoderKind::Flip, ScanPolicy::Greedy) => "flip-greedy",
            (d, _) => d.name(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() {
            return Err(Error::invalid("p_grid", "must not be empty"));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..0.5).contains(*p)) {
            return Err(Error::invalid("p_grid", format!("{p} is outside [0, 1/2)")));
        }
        if self.sizes.is_empty() {
            return Err(Error::invalid("n_grid", "must not be empty"));
        }
        if self.trials_per_point == 0 {
            return Err(Error::invalid("trials", "must be positive"));
        }
        if self.codes_per_size == 0 {
            return Err(Error::invalid("codes_per_size", "must be positive"));
        }
        Ok(())
    }
}

enum Decoder {
    Flip(FlipDecoder),
    Bp(BpDecoder),
}

impl Decoder {
    fn decode(&self, word: &BitVec, p: f64, rng: &mut Rng) -> Result<DecodeOutcome> {
        match self {
            Decoder::Flip(d) => d.decode(word, rng),
            Decoder::Bp(d) => d.decode(word, p),
        }
    }
}

fn code_label(n: usize, m: usize) -> String {
    format!("code-n{n}-m{m}")
}

fn noise_label(n: usize, m: usize, code: usize, p: f64) -> String {
    format!("noise-n{n}-m{m}-c{code}-p{p:?}")
}

/// Seed of code `index` at size (n, m).
pub fn code_seed(master: u64, n: usize, m: usize, index: usize) -> u64 {
    derive_seed(master, &code_label(n, m), index as u64)
}

fn random_error(n: usize, p: f64, rng: &mut Rng) -> BitVec {
    let mut e = BitVec::zeros(n);
    if p > 0.0 {
        for i in 0..n {
            if rng.random::<f64>() < p {
                e.set(i, true);
            }
        }
    }
    e
}

/// Failures among `trials` decodings of i.i.d. noise on the zero codeword.
fn run_chunk(decoder: &Decoder, n: usize, p: f64, trials: usize, seed: u64) -> Result<u64> {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let e = random_error(n, p, &mut rng);
        if e.is_zero() {
            continue;
        }
        // BP needs p > 0; p = 0 never reaches here.
        if !decoder.decode(&e, p, &mut rng)?.recovered_zero() {
            failures += 1;
        }
    }
    Ok(failures)
}

/// Failure rates of a decoder over a grid of sizes and error rates.
///
/// Every count depends only on the master seed and its grid position, so the
/// table is identical for any number of worker threads.
pub fn threshold_bench(cfg: &ThresholdConfig) -> Result<Vec<ThresholdCell>> {
    cfg.validate()?;
    let code_keys: Vec<(usize, usize)> = (0..cfg.sizes.len())
        .flat_map(|s| (0..cfg.codes_per_size).map(move |c| (s, c)))
        .collect();
    let decoders: Vec<Decoder> = code_keys
        .par_iter()
        .map(|&(s, c)| {
            let (n, m) = cfg.sizes[s];
            let g = cfg.family.build(n, m, code_seed(cfg.master_seed, n, m, c))?;
            let h: SparseMatrix = g.to_sparse_matrix(MatrixMode::Parity);
            Ok(match cfg.decoder {
                DecoderKind::Flip => Decoder::Flip(FlipDecoder::new(&h).with_policy(cfg.flip_policy)),
                DecoderKind::Bp => Decoder::Bp(BpDecoder::new(&h, cfg.bp)?),
            })
        })
        .collect::<Result<_>>()?;

    let n_chunks = cfg.trials_per_point.div_ceil(CHUNK);
    let tasks: Vec<(usize, usize, usize)> = (0..code_keys.len())
        .flat_map(|k| (0..cfg.p_grid.len()).flat_map(move |pi| (0..n_chunks).map(move |ch| (k, pi, ch))))
        .collect();
    let counts: Vec<u64> = tasks
        .par_iter()
        .map(|&(k, pi, ch)| {
            let (s, c) = code_keys[k];
            let (n, m) = cfg.sizes[s];
            let p = cfg.p_grid[pi];
            let trials = CHUNK.min(cfg.trials_per_point - ch * CHUNK);
            let seed = derive_seed(cfg.master_seed, &noise_label(n, m, c, p), ch as u64);
            run_chunk(&decoders[k], n, p, trials, seed)
        })
        .collect::<Result<_>>()?;

    let (wbit, wcheck) = cfg.family.degrees();
    let mut failures = vec![vec![0u64; cfg.p_grid.len()]; cfg.sizes.len()];
    for (&(k, pi, _), &f) in tasks.iter().zip(&counts) {
        failures[code_keys[k].0][pi] += f;
    }
    let trials = (cfg.trials_per_point * cfg.codes_per_size) as u64;
    let mut cells = Vec::new();
    for (s, &(n, m)) in cfg.sizes.iter().enumerate() {
        for (pi, &p) in cfg.p_grid.iter().enumerate() {
            let f = failures[s][pi];
            let rate = f as f64 / trials as f64;
            cells.push(ThresholdCell {
                decoder: cfg.decoder_label().to_string(),
                n,
                m,
                wbit,
                wcheck,
                t_spec: cfg.family.time_label(),
                p,
                trials,
                failures: f,
                failure_rate: rate,
                stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
                master_seed: cfg.master_seed,
            });
        }
    }
    Ok(cells)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub p: f64,
    /// Grid points bracketing the crossing.
    pub p_below: f64,
    pub p_above: f64,
}

/// Where the failure-rate curve of `n_large` overtakes that of `n_small`.
///
/// Takes the first grid point at which the larger code fails more often than
/// the smaller one, provided some earlier point had it failing less often,
/// and interpolates the difference linearly between that point and the one
/// before it.
pub fn estimate_crossing(cells: &[ThresholdCell], n_small: usize, n_large: usize) -> Option<Crossing> {
    let mut ps: Vec<f64> = cells.iter().map(|c| c.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let rate = |n: usize, p: f64| cells.iter().find(|c| c.n == n && c.p == p).map(|c| c.failure_rate);
    let diffs: Vec<(f64, f64)> = ps
        .iter()
        .filter_map(|&p| Some((p, rate(n_large, p)? - rate(n_small, p)?)))
        .collect();
    let first_below = diffs.iter().position(|&(_, d)| d < 0.0)?;
    let j = (first_below + 1..diffs.len()).find(|&j| diffs[j].1 > 0.0)?;
    let (p0, d0) = diffs[j - 1];
    let (p1, d1) = diffs[j];
    Some(Crossing {
        p: p0 + (p1 - p0) * (-d0) / (d1 - d0),
        p_below: p0,
        p_above: p1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(decoder: DecoderKind, p_grid: Vec<f64>) -> ThresholdConfig {
        ThresholdConfig {
            decoder,
            family: CodeFamily::Diffusion {
                wbit: 3,
                wcheck: 4,
                time: TimeSpec::Exponent(1.0),
                time_mode: TimeMode::Discrete,
            },
            p_grid,
            sizes: vec![(40, 30), (80, 60)],
            trials_per_point: 150,
            codes_per_size: 2,
            master_seed: 99,
            bp: BpConfig::default(),
            flip_policy: ScanPolicy::RandomSweep,
        }
    }

    #[test]
    fn zero_noise_never_fails() {
        for d in [DecoderKind::Flip, DecoderKind::Bp] {
            let cells = threshold_bench(&small_cfg(d, vec![0.0])).unwrap();
            assert_eq!(cells.len(), 2);
            assert!(cells.iter().all(|c| c.failures == 0 && c.failure_rate == 0.0 && c.trials == 300));
        }
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(threshold_bench(&small_cfg(DecoderKind::Flip, vec![])).is_err());
        assert!(threshold_bench(&small_cfg(DecoderKind::Flip, vec![0.6])).is_err());
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let cfg = small_cfg(DecoderKind::Flip, vec![0.02, 0.08]);
        let a = threshold_bench(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| threshold_bench(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn failure_rate_grows_with_noise() {
        let cells = threshold_bench(&small_cfg(DecoderKind::Bp, vec![0.01, 0.3])).unwrap();
        for s in [40, 80] {
            let lo = cells.iter().find(|c| c.n == s && c.p == 0.01).unwrap();
            let hi = cells.iter().find(|c| c.n == s && c.p == 0.3).unwrap();
            assert!(hi.failure_rate > lo.failure_rate);
            assert!(hi.failure_rate > 0.9);
        }
    }

    fn cell(n: usize, p: f64, rate: f64) -> ThresholdCell {
        ThresholdCell {
            decoder: "flip".into(),
            n,
            m: n,
            wbit: 1,
            wcheck: 1,
            t_spec: String::new(),
            p,
            trials: 1,
            failures: 0,
            failure_rate: rate,
            stderr: 0.0,
            master_seed: 0,
        }
    }

    #[test]
    fn crossing_interpolates() {
        let cells = vec![
            cell(10, 0.1, 0.0),
            cell(20, 0.1, 0.0),
            cell(10, 0.2, 0.2),
            cell(20, 0.2, 0.1),
            cell(10, 0.3, 0.5),
            cell(20, 0.3, 0.6),
        ];
        let x = estimate_crossing(&cells, 10, 20).unwrap();
        assert!((x.p - 0.25).abs() < 1e-12);
        assert_eq!((x.p_below, x.p_above), (0.2, 0.3));
        assert!(estimate_crossing(&cells[..4], 10, 20).is_none());
    }
}
