//! Expansion, unique-neighbor expansion and confinement audits.
//!
//! Every audited quantity is additive over sets of bits that share no
//! check, so checking the sets that are connected under "shares a check"
//! is as strong as checking every set.

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::seed::rng_from_seed;
use crate::tanner::{Provenance, TannerGraph};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

/// Default cap on the number of subsets one audit may visit.
pub const DEFAULT_SET_CAP: u128 = 200_000_000;

/// Expansion ratio `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gamma {
    pub num: u64,
    pub den: u64,
}

impl Gamma {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("gamma_den", "must be positive"));
        }
        Ok(Self { num, den })
    }

    pub fn integer(v: u64) -> Self {
        Self { num: v, den: 1 }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `value ≥ gamma · size`, exactly.
    pub fn admits(self, value: usize, size: usize) -> bool {
        value as u128 * self.den as u128 >= self.num as u128 * size as u128
    }

    /// `2·gamma − c`, saturating at zero.
    pub fn unique_neighbor_consequence(self, c: usize) -> Gamma {
        let num = (2 * self.num as u128).saturating_sub(c as u128 * self.den as u128);
        Gamma {
            num: num as u64,
            den: self.den,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AuditMode {
    Exhaustive,
    ConnectedSets,
    /// Random neighbor-connected clusters; can only refute.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// |Γ(S)|
    Neighbors,
    /// |Γ_u(S)|
    UniqueNeighbors,
    /// Checks with odd incidence, i.e. the syndrome weight of `S`.
    Syndrome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Refuted,
    /// Sampling found no counterexample.
    NotRefuted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub measure: Measure,
    pub side: String,
    pub delta_tested: usize,
    pub gamma: Gamma,
    pub gamma_target: f64,
    pub mode: AuditMode,
    pub sets_checked: u64,
    pub worst_set: Vec<usize>,
    pub worst_value: usize,
    pub worst_ratio: f64,
    pub verdict: Verdict,
    pub certified: bool,
    /// Nonzero sets with zero syndrome (only for [`Measure::Syndrome`]),
    /// smallest first, at most a handful kept.
    pub kernel_sets: Vec<Vec<usize>>,
    pub kernel_count: u64,
}

/// Incremental per-check incidence counts for a growing set of bits.
struct Tally<'a> {
    bit_adj: &'a [Vec<u32>],
    counts: Vec<u32>,
    touched: usize,
    unique: usize,
    odd: usize,
}

impl<'a> Tally<'a> {
    fn new(g: &'a GraphView) -> Self {
        Self {
            bit_adj: &g.bit_checks,
            counts: vec![0; g.n_checks],
            touched: 0,
            unique: 0,
            odd: 0,
        }
    }

    fn add(&mut self, b: usize) {
        for &c in &self.bit_adj[b] {
            let x = &mut self.counts[c as usize];
            match *x {
                0 => {
                    self.touched += 1;
                    self.unique += 1;
                }
                1 => self.unique -= 1,
                _ => {}
            }
            *x += 1;
            if *x % 2 == 1 {
                self.odd += 1;
            } else {
                self.odd -= 1;
            }
        }
    }

    fn remove(&mut self, b: usize) {
        for &c in &self.bit_adj[b] {
            let x = &mut self.counts[c as usize];
            *x -= 1;
            match *x {
                0 => {
                    self.touched -= 1;
                    self.unique -= 1;
                }
                1 => self.unique += 1,
                _ => {}
            }
            if *x % 2 == 1 {
                self.odd += 1;
            } else {
                self.odd -= 1;
            }
        }
    }

    fn value(&self, m: Measure) -> usize {
        match m {
            Measure::Neighbors => self.touched,
            Measure::UniqueNeighbors => self.unique,
            Measure::Syndrome => self.odd,
        }
    }
}

struct GraphView {
    n_bits: usize,
    n_checks: usize,
    bit_checks: Vec<Vec<u32>>,
    adjacency: Vec<Vec<u32>>,
}

impl GraphView {
    fn new(g: &TannerGraph) -> Self {
        Self {
            n_bits: g.n_bits(),
            n_checks: g.n_checks(),
            bit_checks: (0..g.n_bits()).map(|b| g.bit_checks(b).to_vec()).collect(),
            adjacency: g.bit_adjacency(),
        }
    }
}

/// Running minimum of `value / |S|`, ties broken towards the
/// lexicographically smallest set.
#[derive(Clone, Debug, Default)]
struct Worst {
    best: Option<(usize, Vec<usize>)>,
    checked: u64,
    kernel: Vec<Vec<usize>>,
    kernel_count: u64,
}

const KERNEL_KEEP: usize = 8;

fn set_order(a: &[usize], b: &[usize]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl Worst {
    fn offer(&mut self, value: usize, set: &[usize], exclude_zero: bool) {
        self.checked += 1;
        if exclude_zero && value == 0 {
            self.kernel_count += 1;
            let mut s = set.to_vec();
            s.sort_unstable();
            self.kernel.push(s);
            self.kernel.sort_by(|a, b| set_order(a, b));
            self.kernel.truncate(KERNEL_KEEP);
            return;
        }
        let replace = match &self.best {
            None => true,
            Some((v, s)) => {
                let lhs = value as u128 * s.len() as u128;
                let rhs = *v as u128 * set.len() as u128;
                match lhs.cmp(&rhs) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let mut sorted = set.to_vec();
                        sorted.sort_unstable();
                        sorted.as_slice() < s.as_slice()
                    }
                }
            }
        };
        if replace {
            let mut s = set.to_vec();
            s.sort_unstable();
            self.best = Some((value, s));
        }
    }

    fn merge(mut self, other: Worst) -> Worst {
        self.checked += other.checked;
        self.kernel_count += other.kernel_count;
        self.kernel.extend(other.kernel);
        self.kernel.sort_by(|a, b| set_order(a, b));
        self.kernel.truncate(KERNEL_KEEP);
        if let Some((v, s)) = other.best {
            let before = self.checked;
            self.offer(v, &s, false);
            self.checked = before;
        }
        self
    }
}

fn sum_binomials(n: usize, max: usize) -> u128 {
    (1..=max.min(n)).map(|s| crate::sep::binomial(n as u64, s as u64)).fold(0u128, u128::saturating_add)
}

/// Every subset of size `1..=delta`, sharded by smallest element.
fn exhaustive(view: &GraphView, delta: usize, measure: Measure, cap: u128) -> Result<Worst> {
    let count = sum_binomials(view.n_bits, delta);
    if count > cap {
        return Err(Error::CapExceeded {
            count,
            cap,
            hint: "use connected_sets or sampled mode, or lower delta",
        });
    }
    let exclude_zero = measure == Measure::Syndrome;
    let shards: Vec<Worst> = (0..view.n_bits)
        .into_par_iter()
        .map(|first| {
            let mut tally = Tally::new(view);
            let mut worst = Worst::default();
            let mut set = vec![first];
            tally.add(first);
            fn go(view: &GraphView, tally: &mut Tally, set: &mut Vec<usize>, delta: usize, measure: Measure, ex: bool, worst: &mut Worst) {
                worst.offer(tally.value(measure), set, ex);
                if set.len() == delta {
                    return;
                }
                let start = set.last().unwrap() + 1;
                for b in start..view.n_bits {
                    tally.add(b);
                    set.push(b);
                    go(view, tally, set, delta, measure, ex, worst);
                    set.pop();
                    tally.remove(b);
                }
            }
            go(view, &mut tally, &mut set, delta, measure, exclude_zero, &mut worst);
            worst
        })
        .collect();
    Ok(shards.into_iter().fold(Worst::default(), Worst::merge))
}

/// Calls `visit` on every connected set of size `1..=s_max` whose smallest
/// element is `root`. Each set is visited once.
fn connected_from_root(adjacency: &[Vec<u32>], root: usize, s_max: usize, visit: &mut dyn FnMut(&[usize], Option<usize>, bool)) {
    // `cover[u]`: how many set members have u in their closed neighborhood.
    // The callback receives (set, newly added bit, entering?) so that the
    // caller can keep incremental state.
    struct State<'a> {
        adjacency: &'a [Vec<u32>],
        cover: Vec<u32>,
        root: usize,
        s_max: usize,
    }
    fn cover_add(st: &mut State, w: usize, delta: i32) {
        st.cover[w] = (st.cover[w] as i32 + delta) as u32;
        for &u in &st.adjacency[w] {
            st.cover[u as usize] = (st.cover[u as usize] as i32 + delta) as u32;
        }
    }
    fn extend(st: &mut State, set: &mut Vec<usize>, mut ext: Vec<usize>, visit: &mut dyn FnMut(&[usize], Option<usize>, bool)) {
        if set.len() == st.s_max {
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &st.adjacency[w] {
                let u = u as usize;
                if u > st.root && st.cover[u] == 0 {
                    next.push(u);
                }
            }
            cover_add(st, w, 1);
            set.push(w);
            visit(set, Some(w), true);
            extend(st, set, next, visit);
            set.pop();
            visit(set, Some(w), false);
            cover_add(st, w, -1);
        }
    }
    let mut st = State {
        adjacency,
        cover: vec![0; adjacency.len()],
        root,
        s_max,
    };
    let mut set = vec![root];
    cover_add(&mut st, root, 1);
    visit(&set, Some(root), true);
    let ext: Vec<usize> = adjacency[root].iter().map(|&u| u as usize).filter(|&u| u > root).collect();
    extend(&mut st, &mut set, ext, visit);
    set.pop();
    visit(&set, Some(root), false);
}

fn connected(view: &GraphView, delta: usize, measure: Measure, cap: u128) -> Result<Worst> {
    let exclude_zero = measure == Measure::Syndrome;
    let seen = AtomicU64::new(0);
    let cap64 = cap.min(u64::MAX as u128) as u64;
    let shards: Vec<Option<Worst>> = (0..view.n_bits)
        .into_par_iter()
        .map(|root| {
            let mut tally = Tally::new(view);
            let mut worst = Worst::default();
            let mut local = 0u64;
            let mut over = false;
            connected_from_root(&view.adjacency, root, delta, &mut |set, bit, entering| {
                let b = bit.expect("always set");
                if entering {
                    tally.add(b);
                    worst.offer(tally.value(measure), set, exclude_zero);
                    local += 1;
                    if local % 4096 == 0 && seen.fetch_add(4096, AtomicOrdering::Relaxed) + 4096 > cap64 {
                        over = true;
                    }
                } else {
                    tally.remove(b);
                }
            });
            seen.fetch_add(local % 4096, AtomicOrdering::Relaxed);
            (!over).then_some(worst)
        })
        .collect();
    let total = seen.load(AtomicOrdering::Relaxed) as u128;
    if total > cap || shards.iter().any(Option::is_none) {
        return Err(Error::CapExceeded {
            count: total,
            cap,
            hint: "lower delta or use sampled mode",
        });
    }
    Ok(shards.into_iter().flatten().fold(Worst::default(), Worst::merge))
}

/// Grows a random neighbor-connected cluster of the given size.
fn random_cluster<R: Rng + ?Sized>(view: &GraphView, size: usize, rng: &mut R) -> Vec<usize> {
    let mut set = vec![rng.random_range(0..view.n_bits)];
    let mut frontier: Vec<usize> = Vec::new();
    while set.len() < size {
        frontier.clear();
        for &b in &set {
            for &u in &view.adjacency[b] {
                let u = u as usize;
                if !set.contains(&u) && !frontier.contains(&u) {
                    frontier.push(u);
                }
            }
        }
        if frontier.is_empty() {
            break;
        }
        set.push(frontier[rng.random_range(0..frontier.len())]);
    }
    set
}

fn sampled(view: &GraphView, delta: usize, measure: Measure, samples: u64, seed: u64) -> Worst {
    let exclude_zero = measure == Measure::Syndrome;
    let chunk = 1024u64;
    let n_chunks = samples.div_ceil(chunk);
    let shards: Vec<Worst> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = rng_from_seed(crate::seed::derive_seed(seed, "expansion-sample", ci));
            let mut tally = Tally::new(view);
            let mut worst = Worst::default();
            let todo = chunk.min(samples - ci * chunk);
            for _ in 0..todo {
                let size = rng.random_range(1..=delta);
                let set = random_cluster(view, size, &mut rng);
                for &b in &set {
                    tally.add(b);
                }
                worst.offer(tally.value(measure), &set, exclude_zero);
                for &b in &set {
                    tally.remove(b);
                }
            }
            worst
        })
        .collect();
    shards.into_iter().fold(Worst::default(), Worst::merge)
}

fn audit(g: &TannerGraph, side: &str, delta: usize, gamma: Gamma, mode: AuditMode, measure: Measure, cap: u128) -> Result<ExpansionReport> {
    if delta == 0 {
        return Err(Error::invalid("delta", "must be at least 1"));
    }
    let view = GraphView::new(g);
    let delta = delta.min(view.n_bits);
    let worst = if view.n_bits == 0 {
        Worst::default()
    } else {
        match mode {
            AuditMode::Exhaustive => exhaustive(&view, delta, measure, cap)?,
            AuditMode::ConnectedSets => connected(&view, delta, measure, cap)?,
            AuditMode::Sampled { samples, seed } => sampled(&view, delta, measure, samples, seed),
        }
    };
    let (worst_value, worst_set) = worst.best.clone().unwrap_or((0, Vec::new()));
    let holds = worst_set.is_empty() || gamma.admits(worst_value, worst_set.len());
    // a low-weight kernel word breaks the decomposition argument: unions
    // with it are not connected yet can violate the ratio
    let pieces_suffice = worst.kernel_count == 0;
    let verdict = match (holds, mode) {
        (false, _) => Verdict::Refuted,
        (true, AuditMode::Sampled { .. }) => Verdict::NotRefuted,
        (true, AuditMode::ConnectedSets) if !pieces_suffice => Verdict::NotRefuted,
        (true, _) => Verdict::Certified,
    };
    Ok(ExpansionReport {
        measure,
        side: side.to_string(),
        delta_tested: delta,
        gamma,
        gamma_target: gamma.value(),
        mode,
        sets_checked: worst.checked,
        worst_ratio: if worst_set.is_empty() { 0.0 } else { worst_value as f64 / worst_set.len() as f64 },
        worst_set,
        worst_value,
        verdict,
        certified: verdict == Verdict::Certified,
        kernel_sets: worst.kernel,
        kernel_count: worst.kernel_count,
    })
}

/// `|Γ(S)| ≥ γ|S|` for every set of bits with `|S| ≤ delta`.
pub fn audit_left_expansion(g: &TannerGraph, delta: usize, gamma: Gamma, mode: AuditMode) -> Result<ExpansionReport> {
    audit_left_expansion_capped(g, delta, gamma, mode, DEFAULT_SET_CAP)
}

pub fn audit_left_expansion_capped(g: &TannerGraph, delta: usize, gamma: Gamma, mode: AuditMode, cap: u128) -> Result<ExpansionReport> {
    audit(g, "left", delta, gamma, mode, Measure::Neighbors, cap)
}

/// The left audit of the transposed graph.
pub fn audit_right_expansion(g: &TannerGraph, delta: usize, gamma: Gamma, mode: AuditMode) -> Result<ExpansionReport> {
    audit(&g.transposed(), "right", delta, gamma, mode, Measure::Neighbors, DEFAULT_SET_CAP)
}

pub fn audit_unique_neighbor(g: &TannerGraph, delta: usize, gamma_u: Gamma, mode: AuditMode) -> Result<ExpansionReport> {
    audit(g, "left", delta, gamma_u, mode, Measure::UniqueNeighbors, DEFAULT_SET_CAP)
}

/// `|He| ≥ γ|e|` for nonzero `e` with `|e| ≤ delta` outside `ker H`; kernel
/// words found are reported separately.
pub fn audit_confinement(h: &BitMatrix, delta: usize, gamma: Gamma, mode: AuditMode) -> Result<ExpansionReport> {
    audit_confinement_capped(h, delta, gamma, mode, DEFAULT_SET_CAP)
}

pub fn audit_confinement_capped(h: &BitMatrix, delta: usize, gamma: Gamma, mode: AuditMode, cap: u128) -> Result<ExpansionReport> {
    let g = TannerGraph::from_matrix(h, Provenance::new("matrix", None));
    audit(&g, "left", delta, gamma, mode, Measure::Syndrome, cap)
}

/// Every set of bits of size `1..=s_max` connected under "shares a check",
/// each exactly once, in a fixed order.
pub fn enumerate_connected_sets(g: &TannerGraph, s_max: usize, cap: u128) -> Result<Vec<Vec<usize>>> {
    let adjacency = g.bit_adjacency();
    let mut out = Vec::new();
    let mut over = false;
    for root in 0..g.n_bits() {
        connected_from_root(&adjacency, root, s_max, &mut |set, _, entering| {
            if entering && !over {
                let mut s = set.to_vec();
                s.sort_unstable();
                out.push(s);
                if out.len() as u128 > cap {
                    over = true;
                }
            }
        });
        if over {
            return Err(Error::CapExceeded {
                count: out.len() as u128,
                cap,
                hint: "lower s_max",
            });
        }
    }
    Ok(out)
}
