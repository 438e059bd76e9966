//! Bipartite multigraphs between bits (left) and checks (right).
//!
//! Edges form a multiset: the same (bit, check) pair may appear several
//! times. Neighbor queries ignore multiplicity, unique-neighbor queries count
//! it, and conversion to a parity-check matrix either reduces it mod 2
//! ([`MatrixMode::Parity`], the default everywhere) or clamps it to one
//! ([`MatrixMode::Simple`]).

use crate::error::{Error, Result};
use crate::gf2::{write_alist, BitMatrix, SparseMatrix};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    /// Entry is the edge multiplicity mod 2.
    #[default]
    Parity,
    /// Entry is one iff the multiplicity is at least one.
    Simple,
}

/// Where a graph came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

impl Provenance {
    pub fn new(generator: impl Into<String>, seed: Option<u64>) -> Self {
        Self {
            generator: generator.into(),
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn param_u64(&self, key: &str) -> Option<u64> {
        self.params.get(key).and_then(serde_json::Value::as_u64)
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(serde_json::Value::as_f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeAudit {
    pub max_bit_degree: usize,
    pub max_check_degree: usize,
    pub min_bit_degree: usize,
    pub min_check_degree: usize,
    pub is_biregular: bool,
}

#[derive(Clone, Debug)]
pub struct TannerGraph {
    n_bits: usize,
    n_checks: usize,
    edges: Vec<(u32, u32)>,
    bit_adj: Vec<Vec<u32>>,
    check_adj: Vec<Vec<u32>>,
    provenance: Provenance,
}

impl TannerGraph {
    pub fn new(n_bits: usize, n_checks: usize, edges: Vec<(u32, u32)>, provenance: Provenance) -> Result<Self> {
        let mut bit_adj = vec![Vec::new(); n_bits];
        let mut check_adj = vec![Vec::new(); n_checks];
        for &(b, c) in &edges {
            if b as usize >= n_bits {
                return Err(Error::IndexOutOfRange {
                    index: b as usize,
                    size: n_bits,
                });
            }
            if c as usize >= n_checks {
                return Err(Error::IndexOutOfRange {
                    index: c as usize,
                    size: n_checks,
                });
            }
            bit_adj[b as usize].push(c);
            check_adj[c as usize].push(b);
        }
        Ok(Self {
            n_bits,
            n_checks,
            edges,
            bit_adj,
            check_adj,
            provenance,
        })
    }

    /// Graph whose biadjacency matrix is `h` (one edge per nonzero entry).
    pub fn from_matrix(h: &BitMatrix, provenance: Provenance) -> Self {
        let mut edges = Vec::new();
        for r in 0..h.rows() {
            for c in h.row_vec(r).iter_ones() {
                edges.push((c as u32, r as u32));
            }
        }
        Self::new(h.cols(), h.rows(), edges, provenance).expect("matrix indices are in range")
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Checks incident to `bit`, repeated by multiplicity.
    pub fn bit_checks(&self, bit: usize) -> &[u32] {
        &self.bit_adj[bit]
    }

    /// Bits incident to `check`, repeated by multiplicity.
    pub fn check_bits(&self, check: usize) -> &[u32] {
        &self.check_adj[check]
    }

    pub fn bit_degree(&self, bit: usize) -> usize {
        self.bit_adj[bit].len()
    }

    pub fn check_degree(&self, check: usize) -> usize {
        self.check_adj[check].len()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }

    fn validate_bits(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&b| b >= self.n_bits) {
            Some(&b) => Err(Error::IndexOutOfRange {
                index: b,
                size: self.n_bits,
            }),
            None => Ok(()),
        }
    }

    /// Γ(S): checks adjacent to any bit of `set`, sorted.
    pub fn neighbor_set(&self, set: &[usize]) -> Result<Vec<usize>> {
        self.validate_bits(set)?;
        let mut out: Vec<usize> = set
            .iter()
            .flat_map(|&b| self.bit_adj[b].iter().map(|&c| c as usize))
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Γ_u(S): checks with exactly one incident edge into `set`, counting
    /// parallel edges separately. Duplicate entries of `set` are ignored.
    pub fn unique_neighbor_set(&self, set: &[usize]) -> Result<Vec<usize>> {
        self.validate_bits(set)?;
        let mut bits = set.to_vec();
        bits.sort_unstable();
        bits.dedup();
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for &b in &bits {
            for &c in &self.bit_adj[b] {
                *counts.entry(c).or_default() += 1;
            }
        }
        Ok(counts
            .into_iter()
            .filter(|&(_, k)| k == 1)
            .map(|(c, _)| c as usize)
            .collect())
    }

    pub fn to_sparse_matrix(&self, mode: MatrixMode) -> SparseMatrix {
        let rows: Vec<Vec<u32>> = self
            .check_adj
            .iter()
            .map(|bits| {
                let mut row = bits.clone();
                row.sort_unstable();
                match mode {
                    MatrixMode::Parity => row,
                    MatrixMode::Simple => {
                        row.dedup();
                        row
                    }
                }
            })
            .collect();
        SparseMatrix::from_rows(self.n_bits, rows).expect("edge indices are in range")
    }

    /// The `n_checks × n_bits` biadjacency matrix.
    pub fn to_parity_check_matrix(&self, mode: MatrixMode) -> BitMatrix {
        self.to_sparse_matrix(mode).to_dense()
    }

    pub fn degree_audit(&self) -> DegreeAudit {
        let bit_deg = self.bit_adj.iter().map(Vec::len);
        let check_deg = self.check_adj.iter().map(Vec::len);
        let max_bit_degree = bit_deg.clone().max().unwrap_or(0);
        let min_bit_degree = bit_deg.min().unwrap_or(0);
        let max_check_degree = check_deg.clone().max().unwrap_or(0);
        let min_check_degree = check_deg.min().unwrap_or(0);
        DegreeAudit {
            max_bit_degree,
            max_check_degree,
            min_bit_degree,
            min_check_degree,
            is_biregular: max_bit_degree == min_bit_degree && max_check_degree == min_check_degree,
        }
    }

    /// The same graph with the roles of bits and checks exchanged.
    pub fn transposed(&self) -> TannerGraph {
        let edges = self.edges.iter().map(|&(b, c)| (c, b)).collect();
        let mut prov = self.provenance.clone();
        prov.params.insert("transposed".into(), true.into());
        TannerGraph::new(self.n_checks, self.n_bits, edges, prov).expect("indices are in range")
    }

    /// For every bit, the other bits that share at least one check, sorted.
    pub fn bit_adjacency(&self) -> Vec<Vec<u32>> {
        (0..self.n_bits)
            .map(|b| {
                let mut nb: Vec<u32> = self.bit_adj[b]
                    .iter()
                    .flat_map(|&c| self.check_adj[c as usize].iter().copied())
                    .filter(|&o| o as usize != b)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect()
    }

    pub fn metadata(&self) -> GraphMetadata {
        let deg = self.degree_audit();
        GraphMetadata {
            format: METADATA_FORMAT.to_string(),
            n_bits: self.n_bits,
            n_checks: self.n_checks,
            n_edges: self.edges.len(),
            max_bit_degree: deg.max_bit_degree,
            max_check_degree: deg.max_check_degree,
            is_biregular: deg.is_biregular,
            matrix_mode: MatrixMode::Parity,
            provenance: self.provenance.clone(),
        }
    }

    /// Writes `<stem>.json`, `<stem>.alist` (parity-mode matrix) and
    /// `<stem>.edges` into `dir`. Returns the metadata path.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let json_path = dir.join(format!("{stem}.json"));
        serde_json::to_writer_pretty(BufWriter::new(File::create(&json_path)?), &self.metadata())?;
        write_alist(
            &self.to_sparse_matrix(MatrixMode::Parity),
            BufWriter::new(File::create(dir.join(format!("{stem}.alist")))?),
        )?;
        self.write_edge_list(BufWriter::new(File::create(dir.join(format!("{stem}.edges")))?))?;
        Ok(json_path)
    }

    /// `bit check` per line, 0-indexed, one line per edge (multiplicity kept).
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for &(b, c) in &self.edges {
            writeln!(w, "{b} {c}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_edge_list<R: std::io::Read>(r: R) -> Result<Vec<(u32, u32)>> {
        let mut edges = Vec::new();
        for (lineno, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace().map(str::parse::<u32>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(b)), Some(Ok(c)), None) => edges.push((b, c)),
                _ => return Err(Error::Parse(format!("edge list line {}: `{line}`", lineno + 1))),
            }
        }
        Ok(edges)
    }

    /// Loads a graph from its metadata file; the edge list is expected next
    /// to it with the `.edges` extension.
    pub fn load(json_path: &Path) -> Result<Self> {
        let meta: GraphMetadata = serde_json::from_reader(BufReader::new(File::open(json_path)?))?;
        let edges = Self::read_edge_list(File::open(json_path.with_extension("edges"))?)?;
        if edges.len() != meta.n_edges {
            return Err(Error::Parse(format!(
                "edge list has {} edges, metadata says {}",
                edges.len(),
                meta.n_edges
            )));
        }
        Self::new(meta.n_bits, meta.n_checks, edges, meta.provenance)
    }
}

pub const METADATA_FORMAT: &str = "tanner-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub format: String,
    pub n_bits: usize,
    pub n_checks: usize,
    pub n_edges: usize,
    pub max_bit_degree: usize,
    pub max_check_degree: usize,
    pub is_biregular: bool,
    pub matrix_mode: MatrixMode,
    pub provenance: Provenance,
}

/// `n` bits and `n` checks where bit `i` meets checks `i` and `i + 1 mod n`.
pub fn bipartite_cycle(n: usize) -> TannerGraph {
    let edges = (0..n as u32)
        .flat_map(|i| [(i, i), (i, (i + 1) % n as u32)])
        .collect();
    TannerGraph::new(n, n, edges, Provenance::new("bipartite-cycle", None)).expect("valid")
}

/// Perfect matching of `n` bits to `n` checks, each pair joined by
/// `multiplicity` parallel edges.
pub fn matching(n: usize, multiplicity: usize) -> TannerGraph {
    let edges = (0..n as u32)
        .flat_map(|i| std::iter::repeat_n((i, i), multiplicity))
        .collect();
    TannerGraph::new(n, n, edges, Provenance::new("matching", None)).expect("valid")
}
