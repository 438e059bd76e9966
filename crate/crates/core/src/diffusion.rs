//! Diffusion codes: a random SWAP network on the cycle `C_N` followed by a
//! collapse of label groups into bits and vertex groups into checks.
//!
//! Label `i` starts at vertex `i`. After the network runs, label `i` sits at
//! some vertex `v` and contributes the edge `bit(i) ↔ check(v)`. Bits own
//! contiguous runs of labels and checks own contiguous runs of vertices.
//!
//! With `N = min(n·wbit, m·wcheck)` the runs are the balanced partitions
//! `bit(i) = ⌊i·n/N⌋` and `check(v) = ⌊v·m/N⌋`. When `n·wbit = m·wcheck`
//! these are the plain groups of `wbit` and `wcheck`; otherwise some groups
//! are one short and the graph is degree-bounded rather than regular.

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::tanner::{Provenance, TannerGraph};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    /// Exactly `round(N·T)` swaps.
    #[default]
    Discrete,
    /// A `Poisson(N·T)` number of swaps, as produced by rate-1 clocks on
    /// every edge.
    Continuous,
}

/// Diffusion time in sweeps (one sweep is `N` swaps).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeSpec {
    Sweeps(f64),
    /// `T = N^alpha`; `alpha = 1` is the `T = N` family.
    Exponent(f64),
}

impl TimeSpec {
    pub fn sweeps(self, n_sockets: usize) -> f64 {
        match self {
            TimeSpec::Sweeps(t) => t,
            TimeSpec::Exponent(alpha) => (n_sockets as f64).powf(alpha),
        }
    }
}

/// A permutation of labels over the vertices of `C_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    /// `map[v]` is the label at vertex `v`.
    map: Vec<u32>,
    /// `inverse[label]` is the vertex holding `label`.
    inverse: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let map: Vec<u32> = (0..n as u32).collect();
        Self {
            inverse: map.clone(),
            map,
        }
    }

    /// Builds from `map` where `map[v]` is the label at vertex `v`.
    pub fn from_map(map: Vec<u32>) -> Result<Self> {
        let n = map.len();
        let mut inverse = vec![u32::MAX; n];
        for (v, &label) in map.iter().enumerate() {
            if label as usize >= n || inverse[label as usize] != u32::MAX {
                return Err(Error::invalid("map", "not a bijection"));
            }
            inverse[label as usize] = v as u32;
        }
        Ok(Self { map, inverse })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn label_at(&self, vertex: usize) -> usize {
        self.map[vertex] as usize
    }

    pub fn position_of(&self, label: usize) -> usize {
        self.inverse[label] as usize
    }

    pub fn map(&self) -> &[u32] {
        &self.map
    }

    pub fn inverse(&self) -> &[u32] {
        &self.inverse
    }

    /// Swaps the labels across the cycle edge `(v, v+1 mod N)`.
    pub fn swap_edge(&mut self, v: usize) {
        let n = self.map.len();
        let w = if v + 1 == n { 0 } else { v + 1 };
        self.map.swap(v, w);
        self.inverse[self.map[v] as usize] = v as u32;
        self.inverse[self.map[w] as usize] = w as u32;
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(v, &l)| v == l as usize)
    }
}

/// Number of swaps a run of `t_sweeps` on `C_n` performs.
pub fn swap_count<R: Rng + ?Sized>(n: usize, t_sweeps: f64, mode: TimeMode, rng: &mut R) -> Result<u64> {
    if !(t_sweeps >= 0.0 && t_sweeps.is_finite()) {
        return Err(Error::invalid("T", format!("must be finite and non-negative, got {t_sweeps}")));
    }
    let mean = n as f64 * t_sweeps;
    Ok(match mode {
        TimeMode::Discrete => mean.round() as u64,
        TimeMode::Continuous if mean == 0.0 => 0,
        TimeMode::Continuous => {
            let poisson = Poisson::new(mean).map_err(|e| Error::invalid("T", e.to_string()))?;
            poisson.sample(rng) as u64
        }
    })
}

/// Runs the interchange process on `C_n` from the identity.
pub fn interchange_run<R: Rng + ?Sized>(n: usize, t_sweeps: f64, mode: TimeMode, rng: &mut R) -> Result<Permutation> {
    let swaps = swap_count(n, t_sweeps, mode, rng)?;
    Ok(apply_random_swaps(n, swaps, rng))
}

/// `swaps` uniformly random edge swaps on `C_n`, starting from the identity.
pub fn apply_random_swaps<R: Rng + ?Sized>(n: usize, swaps: u64, rng: &mut R) -> Permutation {
    let mut map: Vec<u32> = (0..n as u32).collect();
    if n >= 2 {
        let last = n - 1;
        for _ in 0..swaps {
            let v = rng.random_range(0..n);
            let w = if v == last { 0 } else { v + 1 };
            map.swap(v, w);
        }
    }
    Permutation::from_map(map).expect("swaps preserve bijectivity")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub n: usize,
    pub m: usize,
    pub wbit: usize,
    pub wcheck: usize,
    pub time: TimeSpec,
    pub time_mode: TimeMode,
    pub seed: u64,
}

impl DiffusionParams {
    pub fn new(n: usize, m: usize, wbit: usize, wcheck: usize, time: TimeSpec, seed: u64) -> Self {
        Self {
            n,
            m,
            wbit,
            wcheck,
            time,
            time_mode: TimeMode::Discrete,
            seed,
        }
    }

    /// `wbit = 9`, `wcheck = 11`, `T = N`.
    pub fn reference_family(n: usize, m: usize, seed: u64) -> Self {
        Self::new(n, m, 9, 11, TimeSpec::Exponent(1.0), seed)
    }

    /// Cycle length `N = min(n·wbit, m·wcheck)`.
    pub fn sockets(&self) -> usize {
        (self.n * self.wbit).min(self.m * self.wcheck)
    }

    pub fn sweeps(&self) -> f64 {
        self.time.sweeps(self.sockets())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("n/m", "need at least one bit and one check"));
        }
        if self.wbit == 0 || self.wcheck == 0 {
            return Err(Error::invalid("wbit/wcheck", "degrees must be positive"));
        }
        let big_n = self.sockets();
        if big_n < self.n || big_n < self.m {
            return Err(Error::invalid(
                "n/m",
                format!("N = {big_n} sockets cannot cover n = {} bits and m = {} checks", self.n, self.m),
            ));
        }
        if big_n > u32::MAX as usize {
            return Err(Error::invalid("n·wbit", "cycle too long"));
        }
        let t = self.sweeps();
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("T", format!("must be finite and non-negative, got {t}")));
        }
        Ok(())
    }

    pub fn bit_of_label(&self, label: usize) -> usize {
        (label as u64 * self.n as u64 / self.sockets() as u64) as usize
    }

    pub fn check_of_vertex(&self, vertex: usize) -> usize {
        (vertex as u64 * self.m as u64 / self.sockets() as u64) as usize
    }

    /// Half-open vertex range owned by `check`.
    pub fn check_interval(&self, check: usize) -> (usize, usize) {
        let big_n = self.sockets() as u64;
        let m = self.m as u64;
        // smallest v with ⌊v·m/N⌋ ≥ c is ⌈c·N/m⌉
        let start = |c: u64| (c * big_n).div_ceil(m) as usize;
        (start(check as u64), start(check as u64 + 1))
    }
}

/// A diffusion code together with the permutation that produced it.
#[derive(Clone, Debug)]
pub struct DiffusionCode {
    pub graph: TannerGraph,
    pub params: DiffusionParams,
    /// `positions[i]` is the vertex where label `i` ended.
    pub positions: Vec<u32>,
}

/// Collapses a final permutation into the Tanner graph.
pub fn collapse(p: &DiffusionParams, perm: &Permutation, provenance: Provenance) -> Result<TannerGraph> {
    let big_n = p.sockets();
    if perm.len() != big_n {
        return Err(Error::Dimension(format!("permutation on {} vertices, expected {big_n}", perm.len())));
    }
    let edges = (0..big_n)
        .map(|i| (p.bit_of_label(i) as u32, p.check_of_vertex(perm.position_of(i)) as u32))
        .collect();
    TannerGraph::new(p.n, p.m, edges, provenance)
}

fn provenance_for(p: &DiffusionParams, swaps: u64) -> Provenance {
    Provenance::new("diffusion", Some(p.seed))
        .with("n", p.n)
        .with("m", p.m)
        .with("wbit", p.wbit)
        .with("wcheck", p.wcheck)
        .with("sockets", p.sockets())
        .with("T", p.sweeps())
        .with("time_spec", serde_json::to_value(p.time).expect("serializable"))
        .with("time_mode", serde_json::to_value(p.time_mode).expect("serializable"))
        .with("swaps", swaps)
}

pub fn build_diffusion_code(p: &DiffusionParams) -> Result<DiffusionCode> {
    p.validate()?;
    let big_n = p.sockets();
    let mut rng = rng_from_seed(p.seed);
    let swaps = swap_count(big_n, p.sweeps(), p.time_mode, &mut rng)?;
    let perm = apply_random_swaps(big_n, swaps, &mut rng);
    let graph = collapse(p, &perm, provenance_for(p, swaps))?;
    Ok(DiffusionCode {
        graph,
        params: p.clone(),
        positions: perm.inverse().to_vec(),
    })
}

/// The time-reversed reading of the same network: vertices become the
/// `wcheck`-sized bit groups and labels the `wbit`-sized check groups.
/// Its output is distributed as an `(m, n, wcheck, wbit, T)` diffusion code.
pub fn build_reversed(p: &DiffusionParams) -> Result<TannerGraph> {
    p.validate()?;
    let big_n = p.sockets();
    let mut rng = rng_from_seed(p.seed);
    let swaps = swap_count(big_n, p.sweeps(), p.time_mode, &mut rng)?;
    let perm = apply_random_swaps(big_n, swaps, &mut rng);
    let edges = (0..big_n)
        .map(|v| (p.check_of_vertex(v) as u32, p.bit_of_label(perm.label_at(v)) as u32))
        .collect();
    TannerGraph::new(p.m, p.n, edges, provenance_for(p, swaps).with("reversed", true))
}

fn cyclic_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

fn params_from_provenance(g: &TannerGraph) -> Result<DiffusionParams> {
    let prov = g.provenance();
    let get = |key: &str| {
        prov.param_u64(key)
            .map(|v| v as usize)
            .ok_or_else(|| Error::MissingProvenance(format!("diffusion parameter `{key}`")))
    };
    if prov.generator != "diffusion" {
        return Err(Error::MissingProvenance(format!(
            "graph was produced by `{}`, not a diffusion run",
            prov.generator
        )));
    }
    let t = prov
        .param_f64("T")
        .ok_or_else(|| Error::MissingProvenance("diffusion parameter `T`".into()))?;
    let p = DiffusionParams::new(get("n")?, get("m")?, get("wbit")?, get("wcheck")?, TimeSpec::Sweeps(t), prov.seed.unwrap_or(0));
    if p.sockets() != get("sockets")? {
        return Err(Error::MissingProvenance("socket count disagrees with parameters".into()));
    }
    Ok(p)
}

/// For every check, the largest cyclic distance from its group's center
/// vertex to either end of its own group or to the starting vertex of any
/// label now inside the group (that is, to the bits it touches).
pub fn check_extents(g: &TannerGraph, positions: &[u32]) -> Result<Vec<usize>> {
    let p = params_from_provenance(g)?;
    let big_n = p.sockets();
    if positions.len() != big_n {
        return Err(Error::Dimension(format!("{} positions for N = {big_n}", positions.len())));
    }
    let mut label_at = vec![u32::MAX; big_n];
    for (label, &v) in positions.iter().enumerate() {
        if v as usize >= big_n || label_at[v as usize] != u32::MAX {
            return Err(Error::invalid("positions", "not a permutation"));
        }
        label_at[v as usize] = label as u32;
    }
    Ok((0..p.m)
        .map(|c| {
            let (start, end) = p.check_interval(c);
            let center = start + (end - start - 1) / 2;
            let own = cyclic_distance(center, start, big_n).max(cyclic_distance(center, end - 1, big_n));
            (start..end)
                .map(|v| cyclic_distance(center, label_at[v] as usize, big_n))
                .fold(own, usize::max)
        })
        .collect())
}

pub fn max_check_extent(g: &TannerGraph, positions: &[u32]) -> Result<usize> {
    Ok(check_extents(g, positions)?.into_iter().max().unwrap_or(0))
}

impl DiffusionCode {
    pub fn max_check_extent(&self) -> Result<usize> {
        max_check_extent(&self.graph, &self.positions)
    }
}

/// One vertex per line, line `i` holding the final vertex of label `i`.
pub fn write_positions<W: Write>(positions: &[u32], mut w: W) -> Result<()> {
    for p in positions {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

pub fn read_positions<R: Read>(r: R) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| Error::Parse(format!("positions: bad entry `{t}`")))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_gallager;
    use crate::tanner::MatrixMode;

    #[test]
    fn zero_time_is_identity() {
        let mut rng = rng_from_seed(0);
        assert!(interchange_run(17, 0.0, TimeMode::Discrete, &mut rng).unwrap().is_identity());
        assert!(interchange_run(17, 0.0, TimeMode::Continuous, &mut rng).unwrap().is_identity());
        assert!(interchange_run(17, -1.0, TimeMode::Discrete, &mut rng).is_err());
    }

    #[test]
    fn single_swap_is_transposition() {
        let mut p = Permutation::identity(5);
        p.swap_edge(1);
        assert_eq!(p.map(), &[0, 2, 1, 3, 4]);
        assert_eq!(p.inverse(), &[0, 2, 1, 3, 4]);
        p.swap_edge(4);
        assert_eq!(p.map(), &[4, 2, 1, 3, 0]);
        assert_eq!(p.position_of(4), 0);
    }

    #[test]
    fn long_runs_mix_label_positions() {
        // position of label 0 after N² sweeps, chi-square over N = 8 cells
        let (n, trials) = (8usize, 4000u64);
        let mut counts = vec![0f64; n];
        for seed in 0..trials {
            let mut rng = rng_from_seed(seed);
            let p = interchange_run(n, (n * n) as f64, TimeMode::Discrete, &mut rng).unwrap();
            counts[p.position_of(0)] += 1.0;
        }
        let e = trials as f64 / n as f64;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        // 7 degrees of freedom, p = 0.001 critical value 24.3
        assert!(chi2 < 24.3, "chi2 = {chi2}");
    }

    #[test]
    fn walker_displacement_matches_lazy_walk() {
        // each swap moves label 0 by ±1 with probability 1/N each
        let (n, swaps, trials) = (1000usize, 20_000u64, 2000u64);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for seed in 0..trials {
            let p = apply_random_swaps(n, swaps, &mut rng_from_seed(seed));
            let v = p.position_of(0) as i64;
            let d = if v > n as i64 / 2 { v - n as i64 } else { v } as f64;
            sum += d;
            sum_sq += d * d;
        }
        let mean = sum / trials as f64;
        let var = sum_sq / trials as f64 - mean * mean;
        let expected = 2.0 * swaps as f64 / n as f64;
        assert!(mean.abs() < 4.0 * (expected / trials as f64).sqrt(), "mean {mean}");
        // variance of the sample variance for a near-Gaussian walk is 2σ⁴/trials
        assert!((var - expected).abs() < 4.0 * expected * (2.0 / trials as f64).sqrt(), "var {var} vs {expected}");
    }

    #[test]
    fn continuous_mode_swap_count_is_poisson() {
        let trials = 2000;
        let mut total = 0u64;
        let mut rng = rng_from_seed(3);
        for _ in 0..trials {
            total += swap_count(50, 2.0, TimeMode::Continuous, &mut rng).unwrap();
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 100.0).abs() < 4.0 * (100.0f64 / trials as f64).sqrt());
        assert_eq!(swap_count(50, 2.0, TimeMode::Discrete, &mut rng).unwrap(), 100);
    }

    #[test]
    fn zero_time_code_is_a_matching() {
        let p = DiffusionParams::new(7, 7, 3, 3, TimeSpec::Sweeps(0.0), 1);
        let code = build_diffusion_code(&p).unwrap();
        for i in 0..7 {
            assert_eq!(code.graph.neighbor_set(&[i]).unwrap(), vec![i]);
        }
        let h = code.graph.to_parity_check_matrix(MatrixMode::Parity);
        assert_eq!(h, crate::gf2::BitMatrix::identity(7));
        assert!(code.max_check_extent().unwrap() <= 3);
    }

    #[test]
    fn degrees_are_bounded() {
        for (n, m, wb, wc) in [(44, 36, 9, 11), (244, 200, 9, 11), (20, 13, 3, 5), (10, 10, 4, 4)] {
            let p = DiffusionParams::new(n, m, wb, wc, TimeSpec::Sweeps(3.0), 5);
            let code = build_diffusion_code(&p).unwrap();
            let g = &code.graph;
            assert_eq!(g.n_edges(), p.sockets());
            let d = g.degree_audit();
            assert!(d.max_bit_degree <= wb && d.max_check_degree <= wc);
            if n * wb == m * wc {
                assert!(d.is_biregular);
            }
        }
        let p = DiffusionParams::new(244, 200, 9, 11, TimeSpec::Exponent(1.0), 0);
        assert_eq!(p.sockets(), 2196);
        assert_eq!(p.sweeps(), 2196.0);
        assert!(DiffusionParams::new(10, 40, 3, 1, TimeSpec::Sweeps(1.0), 0).validate().is_err());
    }

    #[test]
    fn check_interval_matches_partition() {
        let p = DiffusionParams::new(244, 200, 9, 11, TimeSpec::Sweeps(0.0), 0);
        let mut v = 0;
        for c in 0..200 {
            let (s, e) = p.check_interval(c);
            assert_eq!(s, v);
            assert!((s..e).all(|x| p.check_of_vertex(x) == c));
            v = e;
        }
        assert_eq!(v, p.sockets());
    }

    #[test]
    fn build_is_deterministic() {
        let p = DiffusionParams::reference_family(44, 36, 11);
        let a = build_diffusion_code(&p).unwrap();
        let b = build_diffusion_code(&p).unwrap();
        assert_eq!(a.graph.edges(), b.graph.edges());
        assert_eq!(a.positions, b.positions);
    }

    #[test]
    fn extent_needs_provenance() {
        let g = gen_gallager(4, 4, 2, 2, &mut rng_from_seed(0)).unwrap();
        assert!(matches!(max_check_extent(&g, &[0; 8]), Err(Error::MissingProvenance(_))));
    }

    #[test]
    fn positions_roundtrip() {
        let code = build_diffusion_code(&DiffusionParams::new(6, 6, 2, 2, TimeSpec::Sweeps(2.0), 4)).unwrap();
        let mut buf = Vec::new();
        write_positions(&code.positions, &mut buf).unwrap();
        assert_eq!(read_positions(buf.as_slice()).unwrap(), code.positions);
    }

    fn mean_single_bit_neighbors(g: &TannerGraph) -> f64 {
        (0..g.n_bits()).map(|b| g.neighbor_set(&[b]).unwrap().len()).sum::<usize>() as f64 / g.n_bits() as f64
    }

    #[test]
    fn long_time_approaches_gallager_statistics() {
        let (n, m, wb, wc) = (30, 20, 4, 6);
        let seeds = 300;
        let mut diff = Vec::new();
        let mut gal = Vec::new();
        for s in 0..seeds {
            let p = DiffusionParams::new(n, m, wb, wc, TimeSpec::Sweeps(2000.0), s);
            diff.push(mean_single_bit_neighbors(&build_diffusion_code(&p).unwrap().graph));
            gal.push(mean_single_bit_neighbors(&gen_gallager(n, m, wb, wc, &mut rng_from_seed(1000 + s)).unwrap()));
        }
        let stats = |x: &[f64]| {
            let mu = x.iter().sum::<f64>() / x.len() as f64;
            let var = x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
            (mu, var)
        };
        let (ma, va) = stats(&diff);
        let (mb, vb) = stats(&gal);
        let se = ((va + vb) / seeds as f64).sqrt();
        assert!((ma - mb).abs() < 4.0 * se, "{ma} vs {mb} (se {se})");
        // short diffusion keeps many parallel edges, so it is visibly different
        let short: Vec<f64> = (0..50)
            .map(|s| {
                let p = DiffusionParams::new(n, m, wb, wc, TimeSpec::Sweeps(0.5), s);
                mean_single_bit_neighbors(&build_diffusion_code(&p).unwrap().graph)
            })
            .collect();
        assert!(stats(&short).0 < mb - 0.3);
    }

    #[test]
    fn time_reversal_symmetry() {
        // reversed (n, m, wbit, wcheck) runs against direct (m, n, wcheck, wbit) runs
        let seeds = 400;
        let (mut rev, mut dir) = (Vec::new(), Vec::new());
        for s in 0..seeds {
            let p = DiffusionParams::new(12, 18, 6, 4, TimeSpec::Sweeps(4.0), s);
            rev.push(mean_single_bit_neighbors(&build_reversed(&p).unwrap()));
            let q = DiffusionParams::new(18, 12, 4, 6, TimeSpec::Sweeps(4.0), 5000 + s);
            dir.push(mean_single_bit_neighbors(&build_diffusion_code(&q).unwrap().graph));
        }
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let sd = |x: &[f64]| {
            let mu = mean(x);
            (x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
        };
        let se = ((sd(&rev).powi(2) + sd(&dir).powi(2)) / seeds as f64).sqrt();
        assert!((mean(&rev) - mean(&dir)).abs() < 4.0 * se);
        let g = build_reversed(&DiffusionParams::new(12, 18, 6, 4, TimeSpec::Sweeps(4.0), 0)).unwrap();
        let d = g.degree_audit();
        assert!(d.is_biregular && d.max_bit_degree == 4 && d.max_check_degree == 6);
    }
}
