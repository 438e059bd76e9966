//! Random Tanner-graph generators used as baselines for diffusion codes.

use crate::error::{Error, Result};
use crate::tanner::{Provenance, TannerGraph};
use rand::seq::SliceRandom;
use rand::Rng;

/// For each bit, the checks it may connect to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSets(Vec<Vec<usize>>);

impl CandidateSets {
    pub fn new(sets: Vec<Vec<usize>>, n_checks: usize) -> Result<Self> {
        for (bit, set) in sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::CandidateSetTooSmall {
                    bit,
                    size: 0,
                    needed: 1,
                });
            }
            if let Some(&c) = set.iter().find(|&&c| c >= n_checks) {
                return Err(Error::IndexOutOfRange { index: c, size: n_checks });
            }
            let mut sorted = set.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid("candidate set", format!("bit {bit} lists a check twice")));
            }
        }
        Ok(Self(sets))
    }

    /// Every bit may use every check.
    pub fn complete(n: usize, m: usize) -> Self {
        Self(vec![(0..m).collect(); n])
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn mean_size(&self) -> f64 {
        self.0.iter().map(Vec::len).sum::<usize>() as f64 / self.0.len().max(1) as f64
    }
}

/// Connects every bit to `c` checks drawn uniformly from its candidate set.
///
/// Draws are without replacement unless `with_replacement` is set; either
/// way each candidate set must hold at least `c` checks.
pub fn gen_candidate_set<R: Rng + ?Sized>(
    m: usize,
    c: usize,
    sets: &CandidateSets,
    with_replacement: bool,
    rng: &mut R,
) -> Result<TannerGraph> {
    if c == 0 {
        return Err(Error::invalid("c", "left degree must be at least 1"));
    }
    let n = sets.0.len();
    let mut edges = Vec::with_capacity(n * c);
    let mut scratch = Vec::new();
    for (bit, set) in sets.0.iter().enumerate() {
        if set.len() < c {
            return Err(Error::CandidateSetTooSmall {
                bit,
                size: set.len(),
                needed: c,
            });
        }
        if with_replacement {
            for _ in 0..c {
                edges.push((bit as u32, set[rng.random_range(0..set.len())] as u32));
            }
        } else {
            scratch.clear();
            scratch.extend_from_slice(set);
            let (chosen, _) = scratch.partial_shuffle(rng, c);
            edges.extend(chosen.iter().map(|&ch| (bit as u32, ch as u32)));
        }
    }
    let prov = Provenance::new("candidate-set", None)
        .with("n", n)
        .with("m", m)
        .with("c", c)
        .with("with_replacement", with_replacement);
    TannerGraph::new(n, m, edges, prov)
}

fn unit_ball_volume(dim: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = V_{d-2} * 2π / d
    let mut v = [1.0, 2.0];
    if dim < 2 {
        return v[dim];
    }
    let mut out = 0.0;
    for d in 2..=dim {
        out = v[d % 2] * 2.0 * std::f64::consts::PI / d as f64;
        v[d % 2] = out;
    }
    out
}

fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Candidate sets from a random geometric layout: bits and checks uniform on
/// the periodic unit `dim`-cube, each bit admitting the checks inside the
/// ball of volume `alpha · m^(beta − 1)` around it.
pub fn geometric_candidate_sets<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    dim: usize,
    beta: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", "must lie in (0, 1)"));
    }
    if alpha < 1.0 {
        return Err(Error::invalid("alpha", "must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let volume = alpha * (m as f64).powf(beta - 1.0);
    let mut place = |count: usize| -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect()
    };
    let bits = place(n);
    let checks = place(m);
    if volume >= 1.0 {
        return Ok(vec![(0..m).collect(); n]);
    }
    let radius = (volume / unit_ball_volume(dim)).powf(1.0 / dim as f64);
    Ok(bits
        .iter()
        .map(|b| {
            checks
                .iter()
                .enumerate()
                .filter(|(_, ch)| torus_distance(b, ch) <= radius)
                .map(|(i, _)| i)
                .collect()
        })
        .collect())
}

pub fn gen_geometric<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    c: usize,
    dim: usize,
    beta: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<TannerGraph> {
    let raw = geometric_candidate_sets(n, m, dim, beta, alpha, rng)?;
    if let Some((bit, set)) = raw.iter().enumerate().find(|(_, s)| s.len() < c) {
        return Err(Error::CandidateSetTooSmall {
            bit,
            size: set.len(),
            needed: c,
        });
    }
    let sets = CandidateSets::new(raw, m)?;
    let mean = sets.mean_size();
    let mut g = gen_candidate_set(m, c, &sets, false, rng)?;
    let prov = g.provenance_mut();
    prov.generator = "geometric".into();
    prov.params.insert("dim".into(), dim.into());
    prov.params.insert("beta".into(), beta.into());
    prov.params.insert("alpha".into(), alpha.into());
    prov.params.insert("mean_candidate_size".into(), mean.into());
    Ok(g)
}

/// Configuration-model (Gallager) graph: a uniform matching between the
/// `n·wbit` bit sockets and the `m·wcheck` check sockets.
pub fn gen_gallager<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    wbit: usize,
    wcheck: usize,
    rng: &mut R,
) -> Result<TannerGraph> {
    if wbit == 0 || wcheck == 0 {
        return Err(Error::invalid("wbit/wcheck", "degrees must be positive"));
    }
    if n * wbit != m * wcheck {
        return Err(Error::invalid(
            "n·wbit",
            format!("{n}·{wbit} = {} differs from m·wcheck = {m}·{wcheck} = {}", n * wbit, m * wcheck),
        ));
    }
    let sockets = n * wbit;
    let mut perm: Vec<u32> = (0..sockets as u32).collect();
    perm.shuffle(rng);
    let edges = perm
        .iter()
        .enumerate()
        .map(|(i, &p)| ((i / wbit) as u32, p / wcheck as u32))
        .collect();
    let prov = Provenance::new("gallager", None)
        .with("n", n)
        .with("m", m)
        .with("wbit", wbit)
        .with("wcheck", wcheck);
    TannerGraph::new(n, m, edges, prov)
}

/// Output of [`right_degree_correct`]: the split graph and, for every new
/// check, the original check it was carved from.
#[derive(Clone, Debug)]
pub struct DegreeCorrection {
    pub graph: TannerGraph,
    pub family: Vec<usize>,
    pub bound: usize,
}

/// Splits every check of degree `d_r` into `⌈d_r / d⌉` checks of degree at
/// most `d = ⌈n·c / m⌉` (with `c` the maximum bit degree), spreading its edges
/// as evenly as possible. The first piece keeps the original index; further
/// pieces are appended after the last original check.
pub fn right_degree_correct(g: &TannerGraph) -> DegreeCorrection {
    let n = g.n_bits();
    let m = g.n_checks();
    let c = g.degree_audit().max_bit_degree;
    let bound = if m == 0 { 0 } else { (n * c).div_ceil(m).max(1) };
    let mut family: Vec<usize> = (0..m).collect();
    let mut edges = Vec::with_capacity(g.n_edges());
    for r in 0..m {
        let bits = g.check_bits(r);
        let pieces = bits.len().div_ceil(bound).max(1);
        let ids: Vec<u32> = (0..pieces)
            .map(|p| {
                if p == 0 {
                    r as u32
                } else {
                    family.push(r);
                    (family.len() - 1) as u32
                }
            })
            .collect();
        // even split: piece p takes socket positions with p = j * pieces / len
        for (j, &b) in bits.iter().enumerate() {
            edges.push((b, ids[j * pieces / bits.len()]));
        }
    }
    // keep edges grouped by bit like the input
    edges.sort_by_key(|&(b, _)| b);
    let mut prov = g.provenance().clone();
    prov.params.insert("right_degree_bound".into(), bound.into());
    prov.params.insert("original_checks".into(), m.into());
    let graph = TannerGraph::new(n, family.len(), edges, prov).expect("indices in range");
    DegreeCorrection { graph, family, bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn candidate_set_examples() {
        let mut rng = rng_from_seed(1);
        let g = gen_candidate_set(1, 1, &CandidateSets::complete(1, 1), false, &mut rng).unwrap();
        assert_eq!(g.edges(), &[(0, 0)]);

        let sets = CandidateSets::new(vec![vec![0, 2], vec![1, 3], vec![0, 1]], 4).unwrap();
        let a = gen_candidate_set(4, 2, &sets, false, &mut rng_from_seed(2)).unwrap();
        let b = gen_candidate_set(4, 2, &sets, false, &mut rng_from_seed(3)).unwrap();
        for bit in 0..3 {
            let mut x = a.neighbor_set(&[bit]).unwrap();
            let mut y = b.neighbor_set(&[bit]).unwrap();
            x.sort();
            y.sort();
            assert_eq!(x, y);
            assert_eq!(x, sets.sets()[bit].clone().into_iter().collect::<Vec<_>>().tap_sort());
        }

        let err = gen_candidate_set(4, 3, &sets, false, &mut rng).unwrap_err();
        assert!(matches!(err, Error::CandidateSetTooSmall { bit: 0, size: 2, needed: 3 }));
    }

    trait TapSort {
        fn tap_sort(self) -> Self;
    }
    impl TapSort for Vec<usize> {
        fn tap_sort(mut self) -> Self {
            self.sort();
            self
        }
    }

    #[test]
    fn candidate_set_output_is_left_regular() {
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let g = gen_candidate_set(30, 4, &CandidateSets::complete(50, 30), seed % 2 == 0, &mut rng).unwrap();
            assert!((0..50).all(|b| g.bit_degree(b) == 4));
        }
    }

    #[test]
    fn geometric_mean_candidate_size() {
        // dim 1, m = 100, beta = 0.5, alpha = 2: ball length 0.2, so m·V = 20
        let trials = 400;
        let mut total = 0.0;
        for seed in 0..trials {
            let sets = geometric_candidate_sets(10, 100, 1, 0.5, 2.0, &mut rng_from_seed(seed)).unwrap();
            total += sets.iter().map(Vec::len).sum::<usize>() as f64 / 10.0;
        }
        let mean = total / trials as f64;
        // per-bit count is Binomial(100, 0.2): sd 4, averaged over 4000 bits
        assert!((mean - 20.0).abs() < 0.5, "mean candidate size {mean}");
    }

    #[test]
    fn geometric_in_two_dimensions() {
        let sets = geometric_candidate_sets(200, 400, 2, 0.6, 3.0, &mut rng_from_seed(9)).unwrap();
        let mean = sets.iter().map(Vec::len).sum::<usize>() as f64 / 200.0;
        let expected = 3.0 * 400f64.powf(0.6);
        assert!((mean - expected).abs() < 0.15 * expected, "{mean} vs {expected}");
        let g = gen_geometric(200, 400, 5, 2, 0.6, 3.0, &mut rng_from_seed(9)).unwrap();
        assert!((0..200).all(|b| g.bit_degree(b) == 5));
    }

    #[test]
    fn geometric_limit_recovers_all_checks() {
        let sets = geometric_candidate_sets(5, 50, 1, 0.999_999, 1.0, &mut rng_from_seed(4)).unwrap();
        assert!(sets.iter().all(|s| s.len() == 50));
    }

    #[test]
    fn geometric_reports_small_candidate_sets() {
        let err = gen_geometric(50, 100, 30, 1, 0.2, 1.0, &mut rng_from_seed(5)).unwrap_err();
        assert!(matches!(err, Error::CandidateSetTooSmall { needed: 30, .. }));
        assert!(gen_geometric(5, 5, 1, 1, 1.5, 1.0, &mut rng_from_seed(5)).is_err());
    }

    #[test]
    fn gallager_is_biregular() {
        for seed in 0..10 {
            let g = gen_gallager(44, 36, 9, 11, &mut rng_from_seed(seed)).unwrap();
            let d = g.degree_audit();
            assert!(d.is_biregular);
            assert_eq!((d.max_bit_degree, d.max_check_degree), (9, 11));
        }
        // 4888·9 = 43992 ≠ 4000·11 = 44000
        assert!(gen_gallager(4888, 4000, 9, 11, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn gallager_socket_marginal_is_uniform() {
        // check reached by socket 0 over many seeds: chi-square over m = 6 groups
        let (m, trials) = (6usize, 6000);
        let mut counts = vec![0f64; m];
        for seed in 0..trials {
            let g = gen_gallager(4, m, 3, 2, &mut rng_from_seed(seed)).unwrap();
            counts[g.edges()[0].1 as usize] += 1.0;
        }
        let expected = trials as f64 / m as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 5 degrees of freedom, p = 0.001 critical value 20.5
        assert!(chi2 < 20.5, "chi2 = {chi2}");
    }

    #[test]
    fn right_degree_correction() {
        let g = gen_gallager(20, 10, 3, 6, &mut rng_from_seed(1)).unwrap();
        let fixed = right_degree_correct(&g);
        assert_eq!(fixed.graph.n_checks(), 10);

        let heavy = TannerGraph::new(4, 2, vec![(0, 0), (1, 0), (2, 0), (3, 0)], Provenance::default()).unwrap();
        let fixed = right_degree_correct(&heavy);
        assert_eq!(fixed.bound, 2);
        assert_eq!(fixed.graph.n_checks(), 3);
        assert_eq!(fixed.graph.check_degree(0), 2);
        assert_eq!(fixed.graph.check_degree(2), 2);
        assert_eq!(fixed.family, vec![0, 1, 0]);

        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let sets = CandidateSets::new((0..40).map(|_| (0..6).collect()).collect(), 25).unwrap();
            let g = gen_candidate_set(25, 3, &sets, false, &mut rng).unwrap();
            let fixed = right_degree_correct(&g);
            let h = &fixed.graph;
            let bound = (40 * 3usize).div_ceil(25);
            assert!(h.n_checks() >= 25 && h.n_checks() <= 50);
            assert!((0..h.n_checks()).all(|r| h.check_degree(r) <= bound));
            assert!((0..40).all(|b| h.bit_degree(b) == 3));
            assert_eq!(h.n_edges(), g.n_edges());
            let mut before: Vec<(u32, usize)> = g.edges().iter().map(|&(b, c)| (b, c as usize)).collect();
            let mut after: Vec<(u32, usize)> =
                h.edges().iter().map(|&(b, c)| (b, fixed.family[c as usize])).collect();
            before.sort();
            after.sort();
            assert_eq!(before, after);
        }
    }
}
