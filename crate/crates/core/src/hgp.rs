//! Hypergraph products of Tanner graphs.
//!
//! For graphs `B1 = (L1, R1)` and `B2 = (L2, R2)` with parity-mode matrices
//! `H1` and `H2`, qubits live on `L1×L2 ∪ R1×R2`, X-checks on `L1×R2` and
//! Z-checks on `R1×L2`:
//!
//! * qubit `(α, a) ∈ L1×L2` meets X-check `(α, β)` when `H2[β][a] = 1` and
//!   Z-check `(b, a)` when `H1[b][α] = 1`;
//! * qubit `(b, β) ∈ R1×R2` meets X-check `(α, β)` when `H1[b][α] = 1` and
//!   Z-check `(b, a)` when `H2[β][a] = 1`.
//!
//! Index layout: qubit `(α, a)` is `α·n2 + a`, qubit `(b, β)` is
//! `n1·n2 + b·m2 + β`, X-check `(α, β)` is `α·m2 + β` and Z-check `(b, a)`
//! is `b·n2 + a`.

use crate::error::{Error, Result};
use crate::expansion::Gamma;
use crate::gf2::{write_alist, BitMatrix, BitVec, CosetWeigher, SparseMatrix};
use crate::tanner::{MatrixMode, Provenance, TannerGraph};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Largest code for which dense ranks are computed.
pub const DENSE_RANK_LIMIT: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    X,
    Z,
}

#[derive(Clone, Debug)]
pub struct CssCode {
    pub n_qubits: usize,
    pub hx: SparseMatrix,
    pub hz: SparseMatrix,
    pub provenance: Vec<Provenance>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CssStats {
    pub n_qubits: usize,
    pub n_x_checks: usize,
    pub n_z_checks: usize,
    /// Largest number of X-checks on one qubit.
    pub max_qubit_degree_x: usize,
    pub max_qubit_degree_z: usize,
    pub max_x_check_weight: usize,
    pub max_z_check_weight: usize,
}

impl CssCode {
    pub fn new(hx: SparseMatrix, hz: SparseMatrix, provenance: Vec<Provenance>) -> Result<Self> {
        if hx.n_cols() != hz.n_cols() {
            return Err(Error::Dimension(format!(
                "H_X has {} columns, H_Z has {}",
                hx.n_cols(),
                hz.n_cols()
            )));
        }
        Ok(Self {
            n_qubits: hx.n_cols(),
            hx,
            hz,
            provenance,
        })
    }

    pub fn from_dense(hx: &BitMatrix, hz: &BitMatrix) -> Result<Self> {
        Self::new(hx.to_sparse(), hz.to_sparse(), Vec::new())
    }

    pub fn sector(&self, sector: Sector) -> &SparseMatrix {
        match sector {
            Sector::X => &self.hx,
            Sector::Z => &self.hz,
        }
    }

    pub fn stats(&self) -> CssStats {
        CssStats {
            n_qubits: self.n_qubits,
            n_x_checks: self.hx.n_rows(),
            n_z_checks: self.hz.n_rows(),
            max_qubit_degree_x: self.hx.max_col_weight(),
            max_qubit_degree_z: self.hz.max_col_weight(),
            max_x_check_weight: self.hx.max_row_weight(),
            max_z_check_weight: self.hz.max_row_weight(),
        }
    }

    fn check_dense_size(&self) -> Result<()> {
        if self.n_qubits > DENSE_RANK_LIMIT {
            return Err(Error::CapExceeded {
                count: self.n_qubits as u128,
                cap: DENSE_RANK_LIMIT as u128,
                hint: "dense rank is only computed for small codes",
            });
        }
        Ok(())
    }

    /// `n − rank(H_X) − rank(H_Z)`.
    pub fn logical_dimension(&self) -> Result<usize> {
        self.check_dense_size()?;
        Ok(self.n_qubits - self.hx.to_dense().rank() - self.hz.to_dense().rank())
    }

    /// Writes `<stem>.hx.alist`, `<stem>.hz.alist` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        write_alist(&self.hx, BufWriter::new(File::create(dir.join(format!("{stem}.hx.alist")))?))?;
        write_alist(&self.hz, BufWriter::new(File::create(dir.join(format!("{stem}.hz.alist")))?))?;
        let meta = CssMetadata {
            format: "css-v1".into(),
            layout: LAYOUT.into(),
            stats: self.stats(),
            css_valid: css_validate(self),
            inputs: self.provenance.clone(),
        };
        let path = dir.join(format!("{stem}.json"));
        serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &meta)?;
        Ok(path)
    }
}

const LAYOUT: &str = "qubits: L1xL2 row-major then R1xR2 row-major; X-checks L1xR2 row-major; Z-checks R1xL2 row-major";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CssMetadata {
    pub format: String,
    pub layout: String,
    pub stats: CssStats,
    pub css_valid: bool,
    pub inputs: Vec<Provenance>,
}

/// Hypergraph product of two graphs, built from their parity-mode matrices.
pub fn hypergraph_product_of(g1: &TannerGraph, g2: &TannerGraph) -> CssCode {
    let h1 = g1.to_sparse_matrix(MatrixMode::Parity);
    let h2 = g2.to_sparse_matrix(MatrixMode::Parity);
    let (n1, m1) = (h1.n_cols(), h1.n_rows());
    let (n2, m2) = (h2.n_cols(), h2.n_rows());
    let h1t = h1.transpose();
    let h2t = h2.transpose();
    let base = n1 * n2;
    let n_qubits = base + m1 * m2;

    let mut hx_rows = Vec::with_capacity(n1 * m2);
    for alpha in 0..n1 {
        for beta in 0..m2 {
            let mut row: Vec<u32> = h2.row(beta).iter().map(|&a| (alpha * n2 + a as usize) as u32).collect();
            row.extend(h1t.row(alpha).iter().map(|&b| (base + b as usize * m2 + beta) as u32));
            hx_rows.push(row);
        }
    }
    let mut hz_rows = Vec::with_capacity(m1 * n2);
    for b in 0..m1 {
        for a in 0..n2 {
            let mut row: Vec<u32> = h1.row(b).iter().map(|&alpha| (alpha as usize * n2 + a) as u32).collect();
            row.extend(h2t.row(a).iter().map(|&beta| (base + b * m2 + beta as usize) as u32));
            hz_rows.push(row);
        }
    }
    // both halves of every row are increasing and the second half follows
    // the first, so rows are already sorted without duplicates
    let hx = SparseMatrix::from_sorted_rows(n_qubits, hx_rows);
    let hz = SparseMatrix::from_sorted_rows(n_qubits, hz_rows);
    CssCode {
        n_qubits,
        hx,
        hz,
        provenance: vec![g1.provenance().clone(), g2.provenance().clone()],
    }
}

/// Product of a graph with itself.
pub fn hypergraph_product(g: &TannerGraph) -> CssCode {
    let mut c = hypergraph_product_of(g, g);
    c.provenance.truncate(1);
    c
}

/// `H_X · H_Z^T = 0`.
pub fn css_validate(c: &CssCode) -> bool {
    c.hx.n_cols() == c.hz.n_cols() && c.hx.mul_transpose(&c.hz).map(|p| p.is_zero()).unwrap_or(false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorConfinement {
    /// `Boundary` weighs errors modulo rows of `H_X` and measures `H_Z x`.
    pub kind: String,
    pub errors_checked: u64,
    /// Worst `|syndrome| / ‖x‖` over errors with `1 ≤ ‖x‖ ≤ delta`.
    pub worst_error: Vec<usize>,
    pub worst_syndrome: usize,
    pub worst_reduced_weight: usize,
    pub worst_ratio: f64,
    /// Errors with zero syndrome outside the stabilizer space: logical
    /// operators of weight at most `w_max`.
    pub logical_count: u64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumConfinementReport {
    pub delta: usize,
    pub gamma: Gamma,
    pub w_max: usize,
    pub boundary: SectorConfinement,
    pub coboundary: SectorConfinement,
    pub certified: bool,
}

fn sector_confinement(kind: &str, n: usize, stab: &BitMatrix, checks: &SparseMatrix, delta: usize, gamma: Gamma, w_max: usize) -> SectorConfinement {
    let weigher = CosetWeigher::new(stab);
    let mut out = SectorConfinement {
        kind: kind.to_string(),
        errors_checked: 0,
        worst_error: Vec::new(),
        worst_syndrome: 0,
        worst_reduced_weight: 0,
        worst_ratio: f64::INFINITY,
        logical_count: 0,
        certified: true,
    };
    let mut support: Vec<usize> = Vec::new();
    fn go(
        n: usize,
        start: usize,
        w_max: usize,
        support: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if !support.is_empty() {
            visit(support);
        }
        if support.len() == w_max {
            return;
        }
        for q in start..n {
            support.push(q);
            go(n, q + 1, w_max, support, visit);
            support.pop();
        }
    }
    go(n, 0, w_max, &mut support, &mut |s| {
        out.errors_checked += 1;
        let x = BitVec::from_indices(n, s).expect("indices in range");
        let r = weigher.weight(&x, s.len()).expect("x itself bounds the coset weight");
        let syndrome = checks.mul_vec(&x).expect("dimensions agree").weight();
        if r == 0 {
            return;
        }
        if syndrome == 0 {
            out.logical_count += 1;
        }
        if r > delta {
            return;
        }
        if !gamma.admits(syndrome, r) {
            out.certified = false;
        }
        let ratio = syndrome as f64 / r as f64;
        if ratio < out.worst_ratio {
            out.worst_ratio = ratio;
            out.worst_error = s.to_vec();
            out.worst_syndrome = syndrome;
            out.worst_reduced_weight = r;
        }
    });
    out
}

/// Checks boundary and coboundary confinement over every error of weight
/// at most `w_max`: whenever the reduced weight `r` satisfies
/// `1 ≤ r ≤ delta`, the syndrome must weigh at least `γ·r`.
pub fn quantum_confinement_audit(c: &CssCode, delta: usize, gamma: Gamma, w_max: usize, cap: u128) -> Result<QuantumConfinementReport> {
    c.check_dense_size()?;
    let count: u128 = (1..=w_max.min(c.n_qubits))
        .map(|w| crate::sep::binomial(c.n_qubits as u64, w as u64))
        .fold(0u128, u128::saturating_add);
    if count > cap {
        return Err(Error::CapExceeded {
            count,
            cap,
            hint: "lower w_max",
        });
    }
    let hx = c.hx.to_dense();
    let hz = c.hz.to_dense();
    let boundary = sector_confinement("boundary", c.n_qubits, &hx, &c.hz, delta, gamma, w_max);
    let coboundary = sector_confinement("coboundary", c.n_qubits, &hz, &c.hx, delta, gamma, w_max);
    Ok(QuantumConfinementReport {
        delta,
        gamma,
        w_max,
        certified: boundary.certified && coboundary.certified,
        boundary,
        coboundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{build_diffusion_code, DiffusionParams, TimeSpec};
    use crate::generators::gen_gallager;
    use crate::gf2::{cycle_repetition, hamming_7_4};
    use crate::seed::rng_from_seed;
    use crate::tanner::bipartite_cycle;
    use rand::seq::SliceRandom;

    fn single_edge() -> TannerGraph {
        TannerGraph::new(1, 1, vec![(0, 0)], Provenance::default()).unwrap()
    }

    /// Entry-by-entry transcription of the neighbor rules.
    fn kron_reference(h1: &BitMatrix, h2: &BitMatrix) -> (BitMatrix, BitMatrix) {
        let (m1, n1) = (h1.rows(), h1.cols());
        let (m2, n2) = (h2.rows(), h2.cols());
        let n = n1 * n2 + m1 * m2;
        let mut hx = BitMatrix::zeros(n1 * m2, n);
        let mut hz = BitMatrix::zeros(m1 * n2, n);
        for alpha in 0..n1 {
            for beta in 0..m2 {
                for a in 0..n2 {
                    if h2.get(beta, a) {
                        hx.set(alpha * m2 + beta, alpha * n2 + a, true);
                    }
                }
                for b in 0..m1 {
                    if h1.get(b, alpha) {
                        hx.set(alpha * m2 + beta, n1 * n2 + b * m2 + beta, true);
                    }
                }
            }
        }
        for b in 0..m1 {
            for a in 0..n2 {
                for alpha in 0..n1 {
                    if h1.get(b, alpha) {
                        hz.set(b * n2 + a, alpha * n2 + a, true);
                    }
                }
                for beta in 0..m2 {
                    if h2.get(beta, a) {
                        hz.set(b * n2 + a, n1 * n2 + b * m2 + beta, true);
                    }
                }
            }
        }
        (hx, hz)
    }

    #[test]
    fn smallest_product() {
        let c = hypergraph_product(&single_edge());
        assert_eq!(c.n_qubits, 2);
        assert_eq!(c.hx.n_rows(), 1);
        assert_eq!(c.hz.n_rows(), 1);
        assert!(css_validate(&c));
        assert_eq!(c.hx.row(0), &[0, 1]);
    }

    #[test]
    fn validation_detects_anticommuting_checks() {
        let one = BitMatrix::identity(1);
        assert!(!css_validate(&CssCode::from_dense(&one, &one).unwrap()));
    }

    #[test]
    fn shuffled_rows_stay_valid() {
        let g = gen_gallager(12, 9, 3, 4, &mut rng_from_seed(2)).unwrap();
        let c = hypergraph_product(&g);
        let mut rows = c.hz.rows().to_vec();
        rows.shuffle(&mut rng_from_seed(3));
        let shuffled = CssCode::new(c.hx.clone(), SparseMatrix::from_rows(c.n_qubits, rows).unwrap(), Vec::new()).unwrap();
        assert!(css_validate(&shuffled));
    }

    #[test]
    fn matches_kronecker_reference() {
        for seed in 0..5 {
            let g1 = gen_gallager(8, 6, 3, 4, &mut rng_from_seed(seed)).unwrap();
            let g2 = gen_gallager(6, 4, 2, 3, &mut rng_from_seed(seed + 10)).unwrap();
            let c = hypergraph_product_of(&g1, &g2);
            let (hx, hz) = kron_reference(
                &g1.to_parity_check_matrix(MatrixMode::Parity),
                &g2.to_parity_check_matrix(MatrixMode::Parity),
            );
            assert_eq!(c.hx.to_dense(), hx);
            assert_eq!(c.hz.to_dense(), hz);
            assert!(css_validate(&c));
            assert!(hx.matmul(&hz).unwrap().is_zero());
        }
    }

    #[test]
    fn counts_follow_closed_forms() {
        for seed in 0..10 {
            let p = DiffusionParams::new(20 + seed as usize, 15, 3, 4, TimeSpec::Sweeps(5.0), seed);
            let g = build_diffusion_code(&p).unwrap().graph;
            let (n, m) = (g.n_bits(), g.n_checks());
            let c = hypergraph_product(&g);
            assert_eq!(c.n_qubits, n * n + m * m);
            assert_eq!(c.hx.n_rows(), n * m);
            assert_eq!(c.hz.n_rows(), m * n);
            assert!(css_validate(&c));
            let s = c.stats();
            let d = g.degree_audit();
            assert!(s.max_qubit_degree_x <= d.max_bit_degree.max(d.max_check_degree));
            assert!(s.max_x_check_weight <= d.max_bit_degree + d.max_check_degree);
            let k = c.logical_dimension().unwrap();
            assert!(k >= (n as i64 - m as i64).pow(2) as usize);
        }
    }

    #[test]
    fn cycle_product_is_toric() {
        // the ring of 5 gives the 5×5 toric code: 50 qubits, 2 logical qubits
        let g = bipartite_cycle(5);
        let c = hypergraph_product(&g);
        assert_eq!(c.n_qubits, 50);
        assert_eq!(c.logical_dimension().unwrap(), 2);
        assert_eq!(c.stats().max_x_check_weight, 4);

        let h = TannerGraph::from_matrix(&hamming_7_4(), Provenance::default());
        let c = hypergraph_product(&h);
        assert_eq!(c.n_qubits, 58);
        assert_eq!(c.logical_dimension().unwrap(), 16);

        // 4 checks of the 4-cycle have rank 3, so k = 1 + 1
        let rep = TannerGraph::from_matrix(&cycle_repetition(4), Provenance::default());
        assert_eq!(hypergraph_product(&rep).logical_dimension().unwrap(), 2);
    }

    #[test]
    fn confinement_on_toy_product() {
        let c = hypergraph_product(&single_edge());
        let r = quantum_confinement_audit(&c, 2, Gamma::integer(1), 2, 1000).unwrap();
        // single-qubit errors have reduced weight 1 and syndrome 1; the
        // two-qubit error is the stabilizer itself
        assert_eq!(r.boundary.errors_checked, 3);
        assert_eq!(r.boundary.worst_ratio, 1.0);
        assert_eq!(r.boundary.worst_reduced_weight, 1);
        assert!(r.certified);
        assert!(!quantum_confinement_audit(&c, 2, Gamma::integer(2), 2, 1000).unwrap().certified);
    }

    #[test]
    fn stabilizer_rows_are_free() {
        let g = bipartite_cycle(3);
        let c = hypergraph_product(&g);
        let r = quantum_confinement_audit(&c, 4, Gamma::new(1, 1).unwrap(), 4, 1 << 20).unwrap();
        // every X-stabilizer row has weight 4 and is weighed as 0; the
        // toric code on the 3-ring has weight-3 logicals
        assert!(r.boundary.logical_count > 0);
        assert!(!r.certified);
        let rows: Vec<usize> = c.hx.row(0).iter().map(|&q| q as usize).collect();
        let x = BitVec::from_indices(c.n_qubits, &rows).unwrap();
        assert!(CosetWeigher::new(&c.hx.to_dense()).in_rowspace(&x));
    }

    #[test]
    fn large_instance_shape() {
        let p = DiffusionParams::reference_family(244, 200, 7);
        let code = build_diffusion_code(&p).unwrap();
        let c = hypergraph_product(&code.graph);
        assert_eq!(c.n_qubits, 99_536);
        assert_eq!(c.hx.n_rows(), 48_800);
        assert_eq!(c.hz.n_rows(), 48_800);
        assert!(css_validate(&c));
        let s = c.stats();
        assert!(s.max_qubit_degree_x <= 11 && s.max_qubit_degree_z <= 11);
        assert!(s.max_x_check_weight <= 20 && s.max_z_check_weight <= 20);
    }

    #[test]
    fn save_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = hypergraph_product(&bipartite_cycle(3));
        let path = c.save(dir.path(), "toric3").unwrap();
        let meta: CssMetadata = serde_json::from_reader(File::open(path).unwrap()).unwrap();
        assert!(meta.css_valid);
        assert_eq!(meta.stats.n_qubits, 18);
        let hx = crate::gf2::read_alist(File::open(dir.path().join("toric3.hx.alist")).unwrap()).unwrap();
        assert_eq!(hx, c.hx);
    }
}
