use super::{BitMatrix, BitVec};

/// Row spaces of rank at most this are enumerated exhaustively when
/// computing reduced weights; larger ones use syndrome search.
pub const ENUMERATION_RANK_LIMIT: usize = 20;

/// Is there a set of exactly `w` distinct columns XOR-ing to `target`?
fn combination_exists(columns: &[Vec<u64>], target: &[u64], w: usize) -> bool {
    fn go(columns: &[Vec<u64>], start: usize, remaining: usize, acc: &mut [u64], target: &[u64]) -> bool {
        if remaining == 1 {
            return columns[start..]
                .iter()
                .any(|c| c.iter().zip(acc.iter()).zip(target).all(|((c, a), t)| c ^ a == *t));
        }
        for i in start..=columns.len() - remaining {
            for (a, c) in acc.iter_mut().zip(&columns[i]) {
                *a ^= c;
            }
            let found = go(columns, i + 1, remaining - 1, acc, target);
            for (a, c) in acc.iter_mut().zip(&columns[i]) {
                *a ^= c;
            }
            if found {
                return true;
            }
        }
        false
    }
    if w == 0 {
        return target.iter().all(|&t| t == 0);
    }
    if w > columns.len() {
        return false;
    }
    let mut acc = vec![0u64; target.len()];
    go(columns, 0, w, &mut acc, target)
}

fn packed_columns(m: &BitMatrix) -> Vec<Vec<u64>> {
    let t = m.transpose();
    (0..t.rows()).map(|c| t.row(c).to_vec()).collect()
}

/// Smallest weight `≤ w_max` of a nonzero vector in `ker(H)`, by iterative
/// deepening over column subsets. `None` when no such vector exists.
pub fn min_distance_bruteforce(h: &BitMatrix, w_max: usize) -> Option<usize> {
    let columns = packed_columns(h);
    let zero = vec![0u64; h.rows().div_ceil(64)];
    (1..=w_max.min(h.cols())).find(|&w| combination_exists(&columns, &zero, w))
}

/// `dist(x, rowspace(h_other))` when it is at most `w_max`.
///
/// Uses [`reduced_weight_by_enumeration`] for row spaces of rank up to
/// [`ENUMERATION_RANK_LIMIT`] and [`reduced_weight_by_syndrome_search`]
/// otherwise.
pub fn reduced_weight_bruteforce(x: &BitVec, h_other: &BitMatrix, w_max: usize) -> Option<usize> {
    CosetWeigher::new(h_other).weight(x, w_max)
}

/// Minimum of `|x + a|` over every `a` in the row space, visiting all
/// `2^rank` elements in Gray-code order.
pub fn reduced_weight_by_enumeration(x: &BitVec, h_other: &BitMatrix, w_max: usize) -> Option<usize> {
    assert_eq!(x.len(), h_other.cols(), "dimension mismatch");
    let basis = h_other.row_basis();
    enumerate_coset(x, &basis, w_max)
}

fn enumerate_coset(x: &BitVec, basis: &[BitVec], w_max: usize) -> Option<usize> {
    assert!(basis.len() < 63, "row space too large to enumerate");
    let mut cur = x.clone();
    let mut best = cur.weight();
    for i in 1u64..(1u64 << basis.len()) {
        cur.xor_assign(&basis[i.trailing_zeros() as usize]);
        best = best.min(cur.weight());
    }
    (best <= w_max).then_some(best)
}

/// Finds the lightest `e` with `x + e` in the row space. Membership is
/// tested through a kernel basis `K` of `h_other`: `x + e ∈ rowspace` iff
/// `K e = K x`.
pub fn reduced_weight_by_syndrome_search(x: &BitVec, h_other: &BitMatrix, w_max: usize) -> Option<usize> {
    assert_eq!(x.len(), h_other.cols(), "dimension mismatch");
    let dual = h_other.kernel_basis();
    syndrome_search(x, &dual, w_max)
}

fn syndrome_search(x: &BitVec, dual: &[BitVec], w_max: usize) -> Option<usize> {
    let n = x.len();
    let k = BitMatrix::from_row_vecs(n, dual).expect("kernel vectors have length n");
    let target = k.mul_vec(x).expect("dimensions agree");
    let columns = packed_columns(&k);
    (0..=w_max.min(n)).find(|&w| combination_exists(&columns, target.words(), w))
}

/// Reusable `dist(·, rowspace(H))` evaluator for audits that weigh many
/// vectors against the same stabilizer matrix.
#[derive(Clone, Debug)]
pub struct CosetWeigher {
    n: usize,
    basis: Vec<BitVec>,
    dual: Option<Vec<BitVec>>,
}

impl CosetWeigher {
    pub fn new(h: &BitMatrix) -> Self {
        let basis = h.row_basis();
        let dual = (basis.len() > ENUMERATION_RANK_LIMIT).then(|| h.kernel_basis());
        Self {
            n: h.cols(),
            basis,
            dual,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn uses_enumeration(&self) -> bool {
        self.dual.is_none()
    }

    pub fn weight(&self, x: &BitVec, w_max: usize) -> Option<usize> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        match &self.dual {
            None => enumerate_coset(x, &self.basis, w_max),
            Some(dual) => syndrome_search(x, dual, w_max),
        }
    }

    /// Is `x` itself a sum of stabilizer rows?
    pub fn in_rowspace(&self, x: &BitVec) -> bool {
        self.weight(x, 0) == Some(0)
    }
}
