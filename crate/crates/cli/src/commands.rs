use crate::output::{csv_string, emit, manifest_path, write_manifest, Manifest, SCHEMA_VERSION};
use crate::{
    AuditArgs, BenchArgs, Cli, Command, DecoderArg, FlipScan, GenerateArgs, HgpArgs, Kind, MeasureArg, ModeArg, Protocol,
    SectorArg, SepArgs, SepMode, SideArg, ThermalArgs, TimeArgs, TimeModeArg,
};
use anyhow::{bail, Context, Result};
use diffcodes::decoders::{threshold_bench, BpConfig, BpVariant, CodeFamily, DecoderKind, ScanPolicy, ThresholdConfig};
use diffcodes::diffusion::{build_diffusion_code, build_reversed, write_positions, DiffusionParams, TimeMode, TimeSpec};
use diffcodes::expansion::{
    audit_confinement_capped, audit_left_expansion_capped, audit_right_expansion, audit_unique_neighbor, AuditMode,
    Gamma, DEFAULT_SET_CAP,
};
use diffcodes::generators::{gen_gallager, gen_geometric};
use diffcodes::hgp::{css_validate, hypergraph_product_of, Sector, DENSE_RANK_LIMIT};
use diffcodes::seed::{derive_seed, rng_from_seed, stream};
use diffcodes::sep::{
    coupled_gap_run, induced_chain_stats, remove_vertices, sep_tail_estimate, small_gap_tail, tv_to_uniform,
    uniform_gap_vector, GapChain, DEFAULT_ENUMERATION_CAP,
};
use diffcodes::tanner::{bipartite_cycle, matching, MatrixMode, TannerGraph};
use diffcodes::thermal::{
    empirical_energy, equilibrium_energy, memory_time, run_anneal, violation_probability, AnnealSchedule, SpinSystem,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub fn run(cli: &Cli, args: &[String]) -> Result<i32> {
    let started = Instant::now();
    let started_unix = crate::output::unix_time();
    let (name, seed, outputs, code) = match &cli.command {
        Command::Generate(a) => ("generate", Some(a.seed), generate(a)?, 0),
        Command::ExpansionAudit(a) => ("expansion-audit", Some(a.seed), audit(a)?, 0),
        Command::SepLab(a) => ("sep-lab", Some(a.seed), sep_lab(a)?, 0),
        Command::Hgp(a) => ("hgp", None, hgp(a)?, 0),
        Command::DecodeBench(a) => ("decode-bench", Some(a.seed), decode_bench(a)?, 0),
        Command::Thermal(a) => ("thermal", Some(a.seed), thermal(a)?, 0),
        Command::Selftest(a) => ("selftest", Some(a.seed), vec![], crate::selftest::run(a.seed)),
    };
    if let Some(primary) = outputs.first() {
        let m = Manifest {
            subcommand: name,
            args,
            master_seed: seed,
            version: env!("DIFFCODES_GIT_DESCRIBE"),
            workers: rayon::current_num_threads(),
            wall_time_secs: started.elapsed().as_secs_f64(),
            started_unix,
            outputs: outputs.clone(),
        };
        write_manifest(&manifest_path(primary), &m)?;
    }
    Ok(code)
}

fn file_output(out: &Option<PathBuf>) -> Vec<PathBuf> {
    out.iter().filter(|p| p.as_path() != Path::new("-")).cloned().collect()
}

impl TimeArgs {
    pub fn spec(&self) -> TimeSpec {
        match (self.t_exponent, self.t_absolute) {
            (_, Some(t)) => TimeSpec::Sweeps(t),
            (Some(a), None) => TimeSpec::Exponent(a),
            (None, None) => TimeSpec::Exponent(1.0),
        }
    }

    pub fn mode(&self) -> TimeMode {
        match self.time_mode {
            TimeModeArg::Discrete => TimeMode::Discrete,
            TimeModeArg::Continuous => TimeMode::Continuous,
        }
    }
}

/// Default check count keeping n·wbit ≈ m·wcheck.
fn default_m(n: usize, wbit: usize, wcheck: usize) -> usize {
    ((n * wbit) as f64 / wcheck as f64).round().max(1.0) as usize
}

fn diffusion_params(n: usize, m: Option<usize>, wbit: usize, wcheck: usize, time: &TimeArgs, seed: u64) -> DiffusionParams {
    let mut p = DiffusionParams::new(n, m.unwrap_or_else(|| default_m(n, wbit, wcheck)), wbit, wcheck, time.spec(), seed);
    p.time_mode = time.mode();
    p
}

fn generate(a: &GenerateArgs) -> Result<Vec<PathBuf>> {
    let m = a.m.unwrap_or_else(|| default_m(a.n, a.wbit, a.wcheck));
    let mut rng = rng_from_seed(a.seed);
    let mut extra = Vec::new();
    let g = match a.kind {
        Kind::Diffusion if a.reversed => build_reversed(&diffusion_params(a.n, a.m, a.wbit, a.wcheck, &a.time, a.seed))?,
        Kind::Diffusion => {
            let code = build_diffusion_code(&diffusion_params(a.n, a.m, a.wbit, a.wcheck, &a.time, a.seed))?;
            std::fs::create_dir_all(&a.out)?;
            let pos = a.out.join(format!("{}.positions", a.stem));
            write_positions(&code.positions, BufWriter::new(File::create(&pos)?))?;
            extra.push(pos);
            code.graph
        }
        Kind::Gallager => gen_gallager(a.n, m, a.wbit, a.wcheck, &mut rng)?,
        Kind::Geometric => gen_geometric(a.n, m, a.wbit, a.dim, a.beta, a.alpha, &mut rng)?,
        Kind::Cycle => bipartite_cycle(a.n),
        Kind::Matching => matching(a.n, a.multiplicity),
    };
    let json = g.save(&a.out, &a.stem)?;
    eprintln!(
        "wrote {} ({} bits, {} checks, {} edges)",
        json.display(),
        g.n_bits(),
        g.n_checks(),
        g.n_edges()
    );
    let mut outs = vec![json];
    outs.extend(extra);
    Ok(outs)
}

fn load(path: &Path) -> Result<TannerGraph> {
    TannerGraph::load(path).with_context(|| format!("loading {}", path.display()))
}

fn audit(a: &AuditArgs) -> Result<Vec<PathBuf>> {
    let g = load(&a.input)?;
    let gamma = Gamma::new(a.gamma_num, a.gamma_den)?;
    let mode = match a.mode {
        ModeArg::Exhaustive => AuditMode::Exhaustive,
        ModeArg::Connected => AuditMode::ConnectedSets,
        ModeArg::Sampled => AuditMode::Sampled {
            samples: a.samples,
            seed: a.seed,
        },
    };
    let cap = a.cap.unwrap_or(DEFAULT_SET_CAP);
    let report = match (a.measure, a.side) {
        (MeasureArg::Neighbors, SideArg::Left) => audit_left_expansion_capped(&g, a.delta, gamma, mode, cap)?,
        (MeasureArg::Neighbors, SideArg::Right) => audit_right_expansion(&g, a.delta, gamma, mode)?,
        (MeasureArg::UniqueNeighbors, SideArg::Left) => audit_unique_neighbor(&g, a.delta, gamma, mode)?,
        (MeasureArg::Confinement, SideArg::Left) => {
            audit_confinement_capped(&g.to_parity_check_matrix(MatrixMode::Parity), a.delta, gamma, mode, cap)?
        }
        (_, SideArg::Right) => bail!("side: right-side audits only support --measure neighbors"),
    };
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(file_output(&a.out))
}

#[derive(Serialize)]
struct SepRow {
    schema_version: u32,
    mode: &'static str,
    trial: u64,
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "N_prime")]
    n_prime: Option<usize>,
    k: usize,
    d: Option<usize>,
    #[serde(rename = "Q")]
    q: Option<usize>,
    steps: u64,
    observable: String,
    value: f64,
    reference: Option<f64>,
}

impl SepRow {
    fn new(mode: &'static str, a: &SepArgs) -> Self {
        SepRow {
            schema_version: SCHEMA_VERSION,
            mode,
            trial: 0,
            seed: a.seed,
            n: a.big_n,
            n_prime: None,
            k: a.k,
            d: None,
            q: None,
            steps: a.steps,
            observable: String::new(),
            value: 0.0,
            reference: None,
        }
    }
}

fn sep_lab(a: &SepArgs) -> Result<Vec<PathBuf>> {
    let rows: Vec<SepRow> = match a.mode {
        SepMode::Monotonicity => {
            let n_prime = a.big_n_prime.unwrap_or(a.big_n.saturating_sub(1));
            if n_prime > a.big_n || n_prime < a.k {
                bail!("N-prime: must satisfy k ≤ N' ≤ N");
            }
            (0..a.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(a.seed, "monotonicity", t);
                    let mut rng = rng_from_seed(seed);
                    let g = uniform_gap_vector(a.big_n, a.k, &mut rng)?;
                    let gp = remove_vertices(&g, a.big_n - n_prime, &mut rng)?;
                    let out = coupled_gap_run(&g, &gp, a.steps, &mut rng)?;
                    let mut row = SepRow::new("monotonicity", a);
                    row.trial = t;
                    row.seed = seed;
                    row.n_prime = Some(n_prime);
                    row.observable = "ordering_held".into();
                    row.value = if out.ordering_held { 1.0 } else { 0.0 };
                    Ok(row)
                })
                .collect::<Result<_>>()?
        }
        SepMode::InducedChain => {
            let seed = derive_seed(a.seed, "induced-chain", 0);
            let report = induced_chain_stats(a.big_n, a.k, a.steps, &mut rng_from_seed(seed))?;
            let mut rows: Vec<SepRow> = report
                .cells
                .iter()
                .map(|c| {
                    let mut row = SepRow::new("induced-chain", a);
                    row.seed = seed;
                    row.observable = format!("{:?}->{:?}", c.from, c.to);
                    row.value = if c.from_visits > 0 { c.observed as f64 / c.from_visits as f64 } else { 0.0 };
                    row.reference = Some(c.expected_prob);
                    row
                })
                .collect();
            let mut z = SepRow::new("induced-chain", a);
            z.seed = seed;
            z.observable = "max_abs_z".into();
            z.value = report.max_abs_z();
            rows.push(z);
            rows
        }
        SepMode::TailBound => {
            let exact = small_gap_tail(a.big_n, a.k, a.d, a.q, DEFAULT_ENUMERATION_CAP)?;
            let mut row = SepRow::new("tail-bound", a);
            row.d = Some(a.d);
            row.q = Some(a.q);
            row.observable = "exact_prob".into();
            row.value = exact.exact_prob.unwrap_or(f64::NAN);
            row.reference = Some(exact.bound);
            let seed = derive_seed(a.seed, "tail-bound", 0);
            let est = sep_tail_estimate(a.big_n, a.k, a.d, a.q, a.steps as f64, a.trials, &mut rng_from_seed(seed))?;
            let mut sim = SepRow::new("tail-bound", a);
            sim.seed = seed;
            sim.d = Some(a.d);
            sim.q = Some(a.q);
            sim.observable = "sep_estimate".into();
            sim.value = est;
            sim.reference = Some(exact.bound);
            vec![row, sim]
        }
        SepMode::Mixing => {
            let q = (2.0 * a.k as f64 / a.big_n as f64).min(0.5);
            let chain = GapChain::new(a.big_n, a.k, q, DEFAULT_ENUMERATION_CAP)?;
            let mut rows = Vec::new();
            let mut t = 1u64;
            while t <= a.steps.max(1) {
                let mut row = SepRow::new("mixing", a);
                row.steps = t;
                row.observable = "tv_to_uniform".into();
                row.value = tv_to_uniform(&chain.distribution_after(0, t));
                row.reference = Some(q);
                rows.push(row);
                t *= 2;
            }
            rows
        }
    };
    emit(a.out.as_deref(), &csv_string(&rows)?)?;
    Ok(file_output(&a.out))
}

fn hgp(a: &HgpArgs) -> Result<Vec<PathBuf>> {
    let g1 = load(&a.input)?;
    let g2 = match &a.input2 {
        Some(p) => load(p)?,
        None => g1.clone(),
    };
    let c = hypergraph_product_of(&g1, &g2);
    if !css_validate(&c) {
        bail!("hypergraph product failed the CSS identity");
    }
    let json = c.save(&a.out, &a.stem)?;
    println!("{}", serde_json::to_string_pretty(&c.stats())?);
    Ok(vec![json])
}

#[derive(Serialize)]
struct BenchRow {
    schema_version: u32,
    decoder: String,
    n: usize,
    m: usize,
    wbit: usize,
    wcheck: usize,
    #[serde(rename = "T_spec")]
    t_spec: String,
    p: f64,
    trials: u64,
    failures: u64,
    failure_rate: f64,
    stderr: f64,
    master_seed: u64,
}

pub fn parse_size(s: &str, wbit: usize, wcheck: usize) -> Result<(usize, usize)> {
    let s = s.trim();
    match s.split_once(':') {
        Some((n, m)) => Ok((
            n.trim().parse().with_context(|| format!("n_grid: bad size `{s}`"))?,
            m.trim().parse().with_context(|| format!("n_grid: bad size `{s}`"))?,
        )),
        None => {
            let n: usize = s.parse().with_context(|| format!("n_grid: bad size `{s}`"))?;
            Ok((n, default_m(n, wbit, wcheck)))
        }
    }
}

fn decode_bench(a: &BenchArgs) -> Result<Vec<PathBuf>> {
    let family = if a.gallager {
        CodeFamily::Gallager {
            wbit: a.wbit,
            wcheck: a.wcheck,
        }
    } else {
        CodeFamily::Diffusion {
            wbit: a.wbit,
            wcheck: a.wcheck,
            time: a.time.spec(),
            time_mode: a.time.mode(),
        }
    };
    let cfg = ThresholdConfig {
        decoder: match a.decoder {
            DecoderArg::Flip => DecoderKind::Flip,
            DecoderArg::Bp => DecoderKind::Bp,
        },
        family,
        p_grid: a.p_grid.clone(),
        sizes: a
            .n_grid
            .iter()
            .map(|s| parse_size(s, a.wbit, a.wcheck))
            .collect::<Result<_>>()?,
        trials_per_point: a.trials,
        codes_per_size: a.codes_per_size,
        master_seed: a.seed,
        bp: BpConfig {
            max_iters: a.bp_iters,
            variant: match a.min_sum_scale {
                Some(scale) => BpVariant::MinSum { scale },
                None => BpVariant::SumProduct,
            },
        },
        flip_policy: match a.flip_scan {
            FlipScan::RandomSweep => ScanPolicy::RandomSweep,
            FlipScan::Greedy => ScanPolicy::Greedy,
        },
    };
    let rows: Vec<BenchRow> = threshold_bench(&cfg)?
        .into_iter()
        .map(|c| BenchRow {
            schema_version: SCHEMA_VERSION,
            decoder: c.decoder,
            n: c.n,
            m: c.m,
            wbit: c.wbit,
            wcheck: c.wcheck,
            t_spec: c.t_spec,
            p: c.p,
            trials: c.trials,
            failures: c.failures,
            failure_rate: c.failure_rate,
            stderr: c.stderr,
            master_seed: c.master_seed,
        })
        .collect();
    emit(a.out.as_deref(), &csv_string(&rows)?)?;
    Ok(file_output(&a.out))
}

#[derive(Serialize)]
struct ThermalRow {
    schema_version: u32,
    protocol: &'static str,
    tau: f64,
    sweep: Option<usize>,
    energy_density: Option<f64>,
    equilibrium: Option<f64>,
    reference: &'static str,
    memory_time: Option<usize>,
    censored: Option<bool>,
    instance_id: u64,
    master_seed: u64,
}

fn thermal(a: &ThermalArgs) -> Result<Vec<PathBuf>> {
    let instance_id = derive_seed(a.seed, "thermal-code", 0);
    let g = match &a.input {
        Some(p) => load(p)?,
        None => build_diffusion_code(&diffusion_params(a.n, a.m, a.wbit, a.wcheck, &a.time, instance_id))?.graph,
    };
    let h = if a.quantum {
        let c = hypergraph_product_of(&g, &g);
        let sector = match a.sector {
            SectorArg::X => Sector::X,
            SectorArg::Z => Sector::Z,
        };
        c.sector(sector).clone()
    } else {
        g.to_sparse_matrix(MatrixMode::Parity)
    };
    let protocol = match a.protocol {
        Protocol::Heat => "heat",
        Protocol::Cool => "cool",
        Protocol::Memory => "memory",
    };
    let rows: Vec<ThermalRow> = match a.protocol {
        Protocol::Heat | Protocol::Cool => {
            let (start, end) = match a.protocol {
                Protocol::Heat => (a.tau_start.min(a.tau_end), a.tau_start.max(a.tau_end)),
                _ => (a.tau_start.max(a.tau_end), a.tau_start.min(a.tau_end)),
            };
            let schedule = AnnealSchedule {
                tau_start: start,
                tau_end: end,
                delta_tau: a.delta_tau,
                equil_sweeps: a.sweeps,
                sample_every: a.sample_every,
                t_eq: a.t_eq,
            };
            schedule.validate()?;
            let mut s = SpinSystem::new(&h);
            if a.protocol == Protocol::Cool {
                // Start from the infinite-temperature ensemble.
                let mut rng = stream(a.seed, "thermal-init", 0);
                for _ in 0..10 {
                    s.metropolis_sweep(f64::INFINITY, &mut rng);
                }
            }
            let trace = run_anneal(&mut s, &schedule, &mut stream(a.seed, "thermal-dynamics", 0))?;
            let independent = h.n_rows() <= DENSE_RANK_LIMIT
                && h.n_cols() <= 4 * DENSE_RANK_LIMIT
                && equilibrium_energy(&h.to_dense(), 1.0).is_some();
            let per_tau = a.sweeps + a.t_eq;
            let references: Vec<(Option<f64>, &'static str)> = trace
                .par_iter()
                .enumerate()
                .map(|(i, pt)| {
                    if independent {
                        (Some(violation_probability(pt.tau)), "analytic")
                    } else if a.reference_sweeps > 0 {
                        let mut rng = stream(a.seed, "thermal-reference", i as u64);
                        let e = empirical_energy(&h, pt.tau, a.reference_sweeps, a.reference_sweeps / 10, 10, &mut rng);
                        (Some(e), "empirical")
                    } else {
                        (None, "")
                    }
                })
                .collect();
            trace
                .iter()
                .zip(references)
                .enumerate()
                .map(|(i, (pt, (eq, reference)))| ThermalRow {
                    schema_version: SCHEMA_VERSION,
                    protocol,
                    tau: pt.tau,
                    sweep: Some((i + 1) * per_tau),
                    energy_density: Some(pt.mean_energy.unwrap_or(pt.final_energy)),
                    equilibrium: eq,
                    reference,
                    memory_time: None,
                    censored: None,
                    instance_id,
                    master_seed: a.seed,
                })
                .collect()
        }
        Protocol::Memory => (0..a.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(a.seed, "memory", t);
                let rec = memory_time(&h, a.tau, a.check_every, a.max_sweeps, &mut rng)?;
                Ok(ThermalRow {
                    schema_version: SCHEMA_VERSION,
                    protocol,
                    tau: a.tau,
                    sweep: None,
                    energy_density: None,
                    equilibrium: None,
                    reference: "",
                    memory_time: Some(rec.time),
                    censored: Some(rec.censored),
                    instance_id,
                    master_seed: a.seed,
                })
            })
            .collect::<Result<_>>()?,
    };
    emit(a.out.as_deref(), &csv_string(&rows)?)?;
    Ok(file_output(&a.out))
}
