//! Classical Ising dynamics on parity checks.
//!
//! A spin is stored as a bit (`true` means σ = −1), so a check is violated
//! exactly when the parity of its bits is odd. Energy is twice the number of
//! violated checks above the ground state, and the energy density is the
//! violated fraction of checks.

use crate::decoders::FlipDecoder;
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec, SparseMatrix};
use crate::hgp::{CssCode, Sector};
use crate::seed::Rng;
use crate::tanner::{MatrixMode, TannerGraph};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct SpinSystem {
    checks: SparseMatrix,
    spin_checks: SparseMatrix,
    spins: BitVec,
    violated: Vec<bool>,
    unsatisfied: usize,
}

impl SpinSystem {
    /// All spins up (the zero codeword).
    pub fn new(h: &SparseMatrix) -> Self {
        Self {
            checks: h.clone(),
            spin_checks: h.transpose(),
            spins: BitVec::zeros(h.n_cols()),
            violated: vec![false; h.n_rows()],
            unsatisfied: 0,
        }
    }

    pub fn from_graph(g: &TannerGraph) -> Self {
        Self::new(&g.to_sparse_matrix(MatrixMode::Parity))
    }

    pub fn with_spins(h: &SparseMatrix, spins: BitVec) -> Result<Self> {
        let mut s = Self::new(h);
        s.set_spins(spins)?;
        Ok(s)
    }

    pub fn set_spins(&mut self, spins: BitVec) -> Result<()> {
        if spins.len() != self.n_spins() {
            return Err(Error::Dimension(format!(
                "{} spins given, system has {}",
                spins.len(),
                self.n_spins()
            )));
        }
        self.spins = spins;
        self.violated = self.recount();
        self.unsatisfied = self.violated.iter().filter(|&&v| v).count();
        Ok(())
    }

    fn recount(&self) -> Vec<bool> {
        self.checks
            .rows()
            .iter()
            .map(|row| row.iter().filter(|&&b| self.spins.get(b as usize)).count() % 2 == 1)
            .collect()
    }

    pub fn n_spins(&self) -> usize {
        self.checks.n_cols()
    }

    pub fn n_checks(&self) -> usize {
        self.checks.n_rows()
    }

    pub fn checks(&self) -> &SparseMatrix {
        &self.checks
    }

    pub fn spins(&self) -> &BitVec {
        &self.spins
    }

    pub fn unsatisfied(&self) -> usize {
        self.unsatisfied
    }

    pub fn energy_density(&self) -> f64 {
        if self.n_checks() == 0 {
            0.0
        } else {
            self.unsatisfied as f64 / self.n_checks() as f64
        }
    }

    /// Recomputes every check from scratch and compares with the running count.
    pub fn bookkeeping_consistent(&self) -> bool {
        let fresh = self.recount();
        fresh == self.violated && fresh.iter().filter(|&&v| v).count() == self.unsatisfied
    }

    /// Change in the number of violated checks if spin `i` were flipped.
    pub fn delta_unsatisfied(&self, i: usize) -> i64 {
        let row = self.spin_checks.row(i);
        let bad = row.iter().filter(|&&c| self.violated[c as usize]).count() as i64;
        row.len() as i64 - 2 * bad
    }

    pub fn flip(&mut self, i: usize) {
        self.spins.toggle(i);
        for &c in self.spin_checks.row(i) {
            let c = c as usize;
            self.violated[c] = !self.violated[c];
            if self.violated[c] {
                self.unsatisfied += 1;
            } else {
                self.unsatisfied -= 1;
            }
        }
    }

    /// `n` single-spin Metropolis proposals at uniformly random sites.
    ///
    /// Moves that do not raise the energy are always accepted, including at
    /// τ = 0.
    pub fn metropolis_sweep(&mut self, tau: f64, rng: &mut Rng) {
        let n = self.n_spins();
        if n == 0 {
            return;
        }
        let max_deg = self.spin_checks.max_row_weight();
        let accept: Vec<f64> = (0..=max_deg)
            .map(|d| if tau > 0.0 { (-2.0 * d as f64 / tau).exp() } else { 0.0 })
            .collect();
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let d = self.delta_unsatisfied(i);
            if d <= 0 || rng.random::<f64>() < accept[d as usize] {
                self.flip(i);
            }
        }
    }
}

/// Equilibrium energy density for linearly independent checks, where each
/// check is violated independently with probability 1/(1 + e^{2/τ}).
///
/// Returns `None` when the rows of `h` are dependent.
pub fn equilibrium_energy(h: &BitMatrix, tau: f64) -> Option<f64> {
    if h.rank() != h.rows() {
        return None;
    }
    Some(violation_probability(tau))
}

pub fn violation_probability(tau: f64) -> f64 {
    if tau <= 0.0 {
        0.0
    } else {
        1.0 / (1.0 + (2.0 / tau).exp())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub tau_start: f64,
    pub tau_end: f64,
    pub delta_tau: f64,
    pub equil_sweeps: usize,
    pub sample_every: usize,
    /// Sampling sweeps after equilibration at each temperature.
    pub t_eq: usize,
}

impl AnnealSchedule {
    pub fn new(tau_start: f64, tau_end: f64, delta_tau: f64, t_eq: usize) -> Self {
        Self {
            tau_start,
            tau_end,
            delta_tau,
            equil_sweeps: 1000,
            sample_every: 10,
            t_eq,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_tau > 0.0) {
            return Err(Error::invalid("delta_tau", "must be positive"));
        }
        if self.tau_start < 0.0 || self.tau_end < 0.0 {
            return Err(Error::invalid("tau", "temperatures must be non-negative"));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every", "must be positive"));
        }
        Ok(())
    }

    /// Temperatures visited, ascending for heating and descending for cooling.
    pub fn temperatures(&self) -> Vec<f64> {
        let steps = ((self.tau_end - self.tau_start).abs() / self.delta_tau + 1e-9).floor() as usize;
        let dir = if self.tau_end >= self.tau_start { 1.0 } else { -1.0 };
        (0..=steps)
            .map(|k| ((self.tau_start + dir * k as f64 * self.delta_tau) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealPoint {
    pub tau: f64,
    /// Mean of the sampled energy densities; absent when nothing was sampled.
    pub mean_energy: Option<f64>,
    pub samples: usize,
    /// Energy density when leaving this temperature.
    pub final_energy: f64,
}

/// Runs the schedule from the current state, carrying the state over from
/// one temperature to the next.
pub fn run_anneal(s: &mut SpinSystem, schedule: &AnnealSchedule, rng: &mut Rng) -> Result<Vec<AnnealPoint>> {
    schedule.validate()?;
    let mut trace = Vec::new();
    for tau in schedule.temperatures() {
        for _ in 0..schedule.equil_sweeps {
            s.metropolis_sweep(tau, rng);
        }
        let mut sum = 0.0;
        let mut samples = 0;
        for sweep in 1..=schedule.t_eq {
            s.metropolis_sweep(tau, rng);
            if sweep % schedule.sample_every == 0 {
                sum += s.energy_density();
                samples += 1;
            }
        }
        trace.push(AnnealPoint {
            tau,
            mean_energy: (samples > 0).then(|| sum / samples as f64),
            samples,
            final_energy: s.energy_density(),
        });
    }
    Ok(trace)
}

/// Long run from a uniformly random state, used as the equilibrium
/// reference when the checks are dependent.
pub fn empirical_energy(h: &SparseMatrix, tau: f64, burn_in: usize, samples: usize, every: usize, rng: &mut Rng) -> f64 {
    let n = h.n_cols();
    let bits: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut s = SpinSystem::with_spins(h, BitVec::from_bools(&bits)).expect("length matches");
    for _ in 0..burn_in {
        s.metropolis_sweep(tau, rng);
    }
    let mut sum = 0.0;
    for _ in 0..samples {
        for _ in 0..every.max(1) {
            s.metropolis_sweep(tau, rng);
        }
        sum += s.energy_density();
    }
    if samples == 0 {
        s.energy_density()
    } else {
        sum / samples as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub time: usize,
    pub censored: bool,
}

/// Sweeps until a flip-decoded copy of the thermal state no longer returns
/// to the zero codeword.
pub fn memory_time(h: &SparseMatrix, tau: f64, check_every: usize, max_sweeps: usize, rng: &mut Rng) -> Result<MemoryRecord> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", "must be positive"));
    }
    if check_every == 0 {
        return Err(Error::invalid("check_every", "must be positive"));
    }
    let decoder = FlipDecoder::new(h);
    let mut s = SpinSystem::new(h);
    let mut sweep = 0;
    while sweep < max_sweeps {
        let burst = check_every.min(max_sweeps - sweep);
        for _ in 0..burst {
            s.metropolis_sweep(tau, rng);
        }
        sweep += burst;
        if burst < check_every || s.spins().is_zero() {
            continue;
        }
        if !decoder.decode(s.spins(), rng)?.recovered_zero() {
            return Ok(MemoryRecord {
                time: sweep,
                censored: false,
            });
        }
    }
    Ok(MemoryRecord {
        time: max_sweeps,
        censored: true,
    })
}

/// Spin system whose checks are the stabilizers of one CSS sector.
pub fn quantum_thermal_system(c: &CssCode, sector: Sector) -> SpinSystem {
    SpinSystem::new(c.sector(sector))
}
