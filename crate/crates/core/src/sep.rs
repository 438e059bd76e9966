//! Simple exclusion process on `C_N` and the gap process it induces.
//!
//! A configuration of `k` particles is described by its gap vector: the
//! cyclic distances between successive particles. Moving particle `j` one
//! step forward shrinks gap `j` and grows gap `j − 1` ("down" at `j`);
//! moving it backwards does the opposite ("up" at `j`). Moves that would
//! create a zero gap are rejected.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default cap on the number of enumerated compositions.
pub const DEFAULT_ENUMERATION_CAP: u128 = 5_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GapVector {
    gaps: Vec<u32>,
}

impl GapVector {
    pub fn new(gaps: Vec<u32>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::invalid("gaps", "need at least one particle"));
        }
        if gaps.contains(&0) {
            return Err(Error::invalid("gaps", "every gap must be at least 1"));
        }
        Ok(Self { gaps })
    }

    pub fn gaps(&self) -> &[u32] {
        &self.gaps
    }

    pub fn k(&self) -> usize {
        self.gaps.len()
    }

    pub fn total(&self) -> usize {
        self.gaps.iter().map(|&g| g as usize).sum()
    }

    /// Entry `i` of the result is entry `i + shift` of `self`.
    pub fn rotated(&self, shift: usize) -> GapVector {
        let k = self.gaps.len();
        GapVector {
            gaps: (0..k).map(|i| self.gaps[(i + shift) % k]).collect(),
        }
    }

    pub fn dominated_by(&self, other: &GapVector) -> bool {
        self.gaps.len() == other.gaps.len() && self.gaps.iter().zip(&other.gaps).all(|(a, b)| a <= b)
    }

    /// A shift `s` with `self.rotated(s) ⪯ other`, if any.
    pub fn aligning_shift(&self, other: &GapVector) -> Option<usize> {
        if self.k() != other.k() {
            return None;
        }
        (0..self.k()).find(|&s| self.rotated(s).dominated_by(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GapMove {
    pub index: usize,
    pub direction: Direction,
}

impl GapMove {
    pub fn up(index: usize) -> Self {
        Self {
            index,
            direction: Direction::Up,
        }
    }

    pub fn down(index: usize) -> Self {
        Self {
            index,
            direction: Direction::Down,
        }
    }

    fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let index = rng.random_range(0..k);
        let direction = if rng.random::<bool>() { Direction::Up } else { Direction::Down };
        Self { index, direction }
    }
}

/// Applies `mv` in place; returns whether it was accepted.
fn step_in_place(gaps: &mut [u32], mv: GapMove) -> bool {
    let k = gaps.len();
    if k == 1 {
        // mass would move from the only gap to itself
        return true;
    }
    let i = mv.index;
    let prev = if i == 0 { k - 1 } else { i - 1 };
    let (grow, shrink) = match mv.direction {
        Direction::Up => (i, prev),
        Direction::Down => (prev, i),
    };
    if gaps[shrink] == 1 {
        return false;
    }
    gaps[shrink] -= 1;
    gaps[grow] += 1;
    true
}

/// One gap-process move; rejected moves return the input unchanged.
pub fn gap_step(g: &GapVector, mv: GapMove) -> Result<(GapVector, bool)> {
    if mv.index >= g.k() {
        return Err(Error::IndexOutOfRange {
            index: mv.index,
            size: g.k(),
        });
    }
    let mut out = g.clone();
    let accepted = step_in_place(&mut out.gaps, mv);
    Ok((out, accepted))
}

/// Lazy gap chain: each step proposes a uniform move with probability `q`
/// and holds otherwise.
pub fn gap_run<R: Rng + ?Sized>(g0: &GapVector, steps: u64, q: f64, rng: &mut R) -> Result<GapVector> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid("q", format!("laziness must lie in [0, 1], got {q}")));
    }
    let mut g = g0.clone();
    for _ in 0..steps {
        if q >= 1.0 || rng.random::<f64>() < q {
            let mv = GapMove::random(g.k(), rng);
            step_in_place(&mut g.gaps, mv);
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SepState {
    n: usize,
    occupied: Vec<u32>,
}

impl SepState {
    pub fn new(n: usize, mut occupied: Vec<u32>) -> Result<Self> {
        occupied.sort_unstable();
        if occupied.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("occupied", "positions must be distinct"));
        }
        if let Some(&v) = occupied.iter().find(|&&v| v as usize >= n) {
            return Err(Error::IndexOutOfRange { index: v as usize, size: n });
        }
        Ok(Self { n, occupied })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn occupied(&self) -> &[u32] {
        &self.occupied
    }

    /// Gaps anchored at the smallest occupied vertex.
    pub fn gap_vector(&self) -> Result<GapVector> {
        gap_vector_of(self)
    }
}

pub fn gap_vector_of(s: &SepState) -> Result<GapVector> {
    let k = s.occupied.len();
    if k == 0 {
        return Err(Error::invalid("state", "gap vector of an empty configuration"));
    }
    let gaps = (0..k)
        .map(|j| {
            let a = s.occupied[j] as usize;
            let b = s.occupied[(j + 1) % k] as usize;
            ((b + s.n - a - 1) % s.n + 1) as u32
        })
        .collect();
    GapVector::new(gaps)
}

/// SEP with labeled particles. Labels never change order around the cycle,
/// so the labeled gap vector is well defined at every step.
#[derive(Clone, Debug)]
pub struct SepSimulator {
    n: usize,
    /// `site[v]` is the particle at vertex `v`, or `u32::MAX`.
    site: Vec<u32>,
    positions: Vec<u32>,
}

/// What one edge selection did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SepEvent {
    /// Neither or both endpoints occupied.
    Idle,
    /// `particle` moved one step; `forward` is the `+1` direction.
    Moved { particle: usize, forward: bool },
}

impl SepEvent {
    /// The gap move equivalent to this event on the labeled gap vector.
    pub fn gap_move(self) -> Option<GapMove> {
        match self {
            SepEvent::Idle => None,
            SepEvent::Moved { particle, forward: true } => Some(GapMove::down(particle)),
            SepEvent::Moved { particle, forward: false } => Some(GapMove::up(particle)),
        }
    }
}

impl SepSimulator {
    /// Labels particles by increasing position.
    pub fn new(s: &SepState) -> Self {
        let mut site = vec![u32::MAX; s.n];
        for (j, &v) in s.occupied.iter().enumerate() {
            site[v as usize] = j as u32;
        }
        Self {
            n: s.n,
            site,
            positions: s.occupied.clone(),
        }
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn state(&self) -> SepState {
        SepState::new(self.n, self.positions.clone()).expect("positions stay distinct")
    }

    /// Gap from particle `j` to particle `j + 1`.
    pub fn labeled_gaps(&self) -> GapVector {
        let k = self.positions.len();
        let gaps = (0..k)
            .map(|j| {
                let a = self.positions[j] as usize;
                let b = self.positions[(j + 1) % k] as usize;
                ((b + self.n - a - 1) % self.n + 1) as u32
            })
            .collect();
        GapVector { gaps }
    }

    /// Swaps across edge `(v, v+1 mod N)`.
    pub fn swap_edge(&mut self, v: usize) -> SepEvent {
        let w = if v + 1 == self.n { 0 } else { v + 1 };
        let (a, b) = (self.site[v], self.site[w]);
        match (a == u32::MAX, b == u32::MAX) {
            (false, true) => {
                self.site.swap(v, w);
                self.positions[a as usize] = w as u32;
                SepEvent::Moved {
                    particle: a as usize,
                    forward: true,
                }
            }
            (true, false) => {
                self.site.swap(v, w);
                self.positions[b as usize] = v as u32;
                SepEvent::Moved {
                    particle: b as usize,
                    forward: false,
                }
            }
            _ => SepEvent::Idle,
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SepEvent {
        let v = rng.random_range(0..self.n);
        self.swap_edge(v)
    }
}

/// Runs `round(N·T)` uniform edge selections (or a Poisson number in
/// continuous mode) and returns the state after every selection, starting
/// with `s0`.
pub fn sep_run<R: Rng + ?Sized>(
    s0: &SepState,
    t_sweeps: f64,
    mode: crate::diffusion::TimeMode,
    rng: &mut R,
) -> Result<Vec<SepState>> {
    let steps = crate::diffusion::swap_count(s0.n, t_sweeps, mode, rng)?;
    let mut sim = SepSimulator::new(s0);
    let mut trace = Vec::with_capacity(steps as usize + 1);
    trace.push(s0.clone());
    for _ in 0..steps {
        sim.step(rng);
        trace.push(sim.state());
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledOutcome {
    pub g_final: GapVector,
    pub gp_final: GapVector,
    /// `gp_final` in the alignment used during the run.
    pub shift: usize,
    pub ordering_held: bool,
    pub steps: u64,
}

/// Runs two gap chains on identical proposals. `g0p` must be dominated by
/// `g0` after some cyclic shift; the first such shift is used throughout.
pub fn coupled_gap_run<R: Rng + ?Sized>(g0: &GapVector, g0p: &GapVector, steps: u64, rng: &mut R) -> Result<CoupledOutcome> {
    let shift = g0p.aligning_shift(g0).ok_or(Error::OrderingViolated)?;
    let mut g = g0.clone();
    let mut gp = g0p.rotated(shift);
    let k = g.k();
    let mut held = true;
    for _ in 0..steps {
        let mv = GapMove::random(k, rng);
        step_in_place(&mut g.gaps, mv);
        step_in_place(&mut gp.gaps, mv);
        held &= gp.dominated_by(&g);
    }
    Ok(CoupledOutcome {
        g_final: g,
        gp_final: gp,
        shift,
        ordering_held: held,
        steps,
    })
}

/// Removes `remove` unoccupied vertices from the configuration whose gaps
/// are `g`, choosing them uniformly among the removable slack. Every gap
/// keeps at least one unit, so the result is dominated by `g`.
pub fn remove_vertices<R: Rng + ?Sized>(g: &GapVector, remove: usize, rng: &mut R) -> Result<GapVector> {
    let slack: usize = g.gaps.iter().map(|&x| x as usize - 1).sum();
    if remove > slack {
        return Err(Error::invalid(
            "remove",
            format!("only {slack} empty vertices available, asked for {remove}"),
        ));
    }
    let mut out = g.gaps.clone();
    let mut left = slack;
    for _ in 0..remove {
        let mut pick = rng.random_range(0..left);
        for x in out.iter_mut() {
            let s = *x as usize - 1;
            if pick < s {
                *x -= 1;
                break;
            }
            pick -= s;
        }
        left -= 1;
    }
    GapVector::new(out)
}

/// A gap vector drawn uniformly from the compositions of `n` into `k` parts.
pub fn uniform_gap_vector<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<GapVector> {
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("need 1 ≤ k ≤ N, got k = {k}, N = {n}")));
    }
    // choose k−1 distinct cut points in 1..n
    let cuts = rand::seq::index::sample(rng, n - 1, k - 1);
    let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut gaps = Vec::with_capacity(k);
    for c in cuts {
        gaps.push((c - prev) as u32);
        prev = c;
    }
    gaps.push((n - prev) as u32);
    GapVector::new(gaps)
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of compositions of `n` into `k` positive parts.
pub fn composition_count(n: usize, k: usize) -> u128 {
    if k == 0 {
        return u128::from(n == 0);
    }
    if n < k {
        return 0;
    }
    binomial(n as u64 - 1, k as u64 - 1)
}

/// All compositions of `n` into `k` positive parts in lexicographic order,
/// each carrying probability `1 / C(n−1, k−1)` under the stationary law.
pub fn enumerate_gap_vectors(n: usize, k: usize, cap: u128) -> Result<Vec<GapVector>> {
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("need 1 ≤ k ≤ N, got k = {k}, N = {n}")));
    }
    let count = composition_count(n, k);
    if count > cap {
        return Err(Error::CapExceeded {
            count,
            cap,
            hint: "lower N or k",
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![1u32; k];
    fn go(pos: usize, remaining: usize, cur: &mut [u32], out: &mut Vec<GapVector>) {
        let k = cur.len();
        if pos == k - 1 {
            cur[pos] = remaining as u32;
            out.push(GapVector { gaps: cur.to_vec() });
            return;
        }
        let parts_after = k - pos - 1;
        for v in 1..=remaining - parts_after {
            cur[pos] = v as u32;
            go(pos + 1, remaining - v, cur, out);
        }
    }
    go(0, n, &mut cur, &mut out);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    /// Compositions with at least `Q` parts `≤ d`, when enumeration ran.
    pub hits: Option<u128>,
    pub total: u128,
    pub exact_prob: Option<f64>,
    pub bound: f64,
}

impl TailBound {
    /// Exact probability within the bound, judged by integer arithmetic
    /// when possible. `None` when the exact value is unavailable.
    pub fn holds(&self) -> Option<bool> {
        self.hits.map(|h| (h as f64) <= self.bound * self.total as f64 * (1.0 + 1e-12))
    }
}

/// `C(k, Q)·(e²·k·d/N)^Q`.
pub fn small_gap_bound(n: usize, k: usize, d: usize, q: usize) -> f64 {
    let base = std::f64::consts::E.powi(2) * (k * d) as f64 / n as f64;
    binomial(k as u64, q as u64) as f64 * base.powi(q as i32)
}

/// `P[#{i : g_i ≤ d} ≥ Q]` under the uniform law on compositions, plus the
/// closed-form bound.
pub fn small_gap_tail(n: usize, k: usize, d: usize, q: usize, cap: u128) -> Result<TailBound> {
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    if q == 0 || q > k {
        return Err(Error::invalid("Q", format!("need 1 ≤ Q ≤ k, got Q = {q}, k = {k}")));
    }
    let bound = small_gap_bound(n, k, d, q);
    let total = composition_count(n, k);
    match enumerate_gap_vectors(n, k, cap) {
        Ok(all) => {
            let hits = all
                .iter()
                .filter(|g| g.gaps.iter().filter(|&&x| x as usize <= d).count() >= q)
                .count() as u128;
            Ok(TailBound {
                hits: Some(hits),
                total,
                exact_prob: Some(hits as f64 / total as f64),
                bound,
            })
        }
        Err(Error::CapExceeded { .. }) => Ok(TailBound {
            hits: None,
            total,
            exact_prob: None,
            bound,
        }),
        Err(e) => Err(e),
    }
}

/// The lazy gap chain on labeled gap vectors of `(n, k)` as an explicit
/// sparse transition matrix.
#[derive(Clone, Debug)]
pub struct GapChain {
    pub states: Vec<GapVector>,
    index: HashMap<Vec<u32>, usize>,
    /// `transitions[s]` lists `(target, probability)`, self-loop included.
    pub transitions: Vec<Vec<(usize, f64)>>,
}

impl GapChain {
    pub fn new(n: usize, k: usize, q: f64, cap: u128) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid("q", format!("laziness must lie in [0, 1], got {q}")));
        }
        let states = enumerate_gap_vectors(n, k, cap)?;
        let index: HashMap<Vec<u32>, usize> = states.iter().enumerate().map(|(i, g)| (g.gaps.clone(), i)).collect();
        let per_move = q / (2 * k) as f64;
        let transitions = states
            .iter()
            .enumerate()
            .map(|(s, g)| {
                let mut row: Vec<(usize, f64)> = vec![(s, 1.0 - q)];
                for i in 0..k {
                    for mv in [GapMove::up(i), GapMove::down(i)] {
                        let mut next = g.gaps.clone();
                        step_in_place(&mut next, mv);
                        let t = index[&next];
                        match row.iter_mut().find(|(x, _)| *x == t) {
                            Some(slot) => slot.1 += per_move,
                            None => row.push((t, per_move)),
                        }
                    }
                }
                row
            })
            .collect();
        Ok(Self {
            states,
            index,
            transitions,
        })
    }

    pub fn index_of(&self, g: &GapVector) -> Option<usize> {
        self.index.get(&g.gaps).copied()
    }

    /// Probability of moving from `from` to `to` in one step.
    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.transitions[from].iter().find(|(t, _)| *t == to).map_or(0.0, |&(_, p)| p)
    }

    /// One step of `dist ↦ dist · P`.
    pub fn evolve(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; dist.len()];
        for (s, row) in self.transitions.iter().enumerate() {
            let mass = dist[s];
            if mass == 0.0 {
                continue;
            }
            for &(t, p) in row {
                out[t] += mass * p;
            }
        }
        out
    }

    /// Power iteration from a point mass on the first state until successive
    /// iterates differ by less than `tol` in L1.
    pub fn stationary(&self, tol: f64, max_iters: usize) -> (Vec<f64>, usize) {
        let mut dist = vec![0.0; self.states.len()];
        dist[0] = 1.0;
        for it in 0..max_iters {
            let next = self.evolve(&dist);
            let diff: f64 = next.iter().zip(&dist).map(|(a, b)| (a - b).abs()).sum();
            dist = next;
            if diff < tol {
                return (dist, it + 1);
            }
        }
        (dist, max_iters)
    }

    /// Distribution after `steps` steps from the point mass on `start`.
    pub fn distribution_after(&self, start: usize, steps: u64) -> Vec<f64> {
        let mut dist = vec![0.0; self.states.len()];
        dist[start] = 1.0;
        for _ in 0..steps {
            dist = self.evolve(&dist);
        }
        dist
    }
}

pub fn tv_to_uniform(dist: &[f64]) -> f64 {
    let u = 1.0 / dist.len() as f64;
    0.5 * dist.iter().map(|p| (p - u).abs()).sum::<f64>()
}

/// One cell of the SEP-versus-gap-chain comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionCell {
    pub from: Vec<u32>,
    pub to: Vec<u32>,
    pub from_visits: u64,
    pub observed: u64,
    pub expected_prob: f64,
    /// `(observed − visits·p) / sqrt(visits·p·(1−p))`.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedChainReport {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub events: u64,
    pub cells: Vec<TransitionCell>,
    /// Observed transitions the chain forbids.
    pub impossible: u64,
}

impl InducedChainReport {
    pub fn max_abs_z(&self) -> f64 {
        self.cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Runs the SEP for `events` edge selections from a uniformly placed start
/// and tabulates labeled gap transitions against the lazy chain with
/// `q = 2k/N`.
pub fn induced_chain_stats<R: Rng + ?Sized>(n: usize, k: usize, events: u64, rng: &mut R) -> Result<InducedChainReport> {
    if k == 0 || 2 * k > n {
        return Err(Error::invalid("k", "need 1 ≤ k ≤ N/2 so that q = 2k/N ≤ 1"));
    }
    let q = 2.0 * k as f64 / n as f64;
    let chain = GapChain::new(n, k, q, DEFAULT_ENUMERATION_CAP)?;
    let occupied: Vec<u32> = rand::seq::index::sample(rng, n, k).into_iter().map(|v| v as u32).collect();
    let mut sim = SepSimulator::new(&SepState::new(n, occupied)?);
    let s = chain.states.len();
    let mut counts = vec![HashMap::<usize, u64>::new(); s];
    let mut visits = vec![0u64; s];
    let mut cur = chain.index_of(&sim.labeled_gaps()).expect("valid gap vector");
    let mut impossible = 0;
    for _ in 0..events {
        sim.step(rng);
        let next = chain.index_of(&sim.labeled_gaps()).expect("valid gap vector");
        visits[cur] += 1;
        if chain.probability(cur, next) == 0.0 {
            impossible += 1;
        }
        *counts[cur].entry(next).or_default() += 1;
        cur = next;
    }
    let mut cells = Vec::new();
    for from in 0..s {
        if visits[from] == 0 {
            continue;
        }
        for &(to, p) in &chain.transitions[from] {
            let observed = counts[from].get(&to).copied().unwrap_or(0);
            let v = visits[from] as f64;
            let sd = (v * p * (1.0 - p)).sqrt();
            let z = if sd > 0.0 { (observed as f64 - v * p) / sd } else { 0.0 };
            cells.push(TransitionCell {
                from: chain.states[from].gaps.clone(),
                to: chain.states[to].gaps.clone(),
                from_visits: visits[from],
                observed,
                expected_prob: p,
                z,
            });
        }
    }
    Ok(InducedChainReport {
        n,
        k,
        q,
        events,
        cells,
        impossible,
    })
}

/// Monte Carlo estimate of `P[#{i : g_i ≤ d} ≥ Q]` after running the SEP
/// for `t_sweeps` from `k` packed particles.
pub fn sep_tail_estimate<R: Rng + ?Sized>(n: usize, k: usize, d: usize, q: usize, t_sweeps: f64, trials: u64, rng: &mut R) -> Result<f64> {
    let start = SepState::new(n, (0..k as u32).collect())?;
    let steps = (n as f64 * t_sweeps).round() as u64;
    let mut hits = 0u64;
    for _ in 0..trials {
        let mut sim = SepSimulator::new(&start);
        for _ in 0..steps {
            sim.step(rng);
        }
        if sim.labeled_gaps().gaps.iter().filter(|&&x| x as usize <= d).count() >= q {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
