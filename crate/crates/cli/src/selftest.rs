//! Quick versions of the oracle suites, one line per check.

use diffcodes::decoders::{bp_decode, FlipDecoder};
use diffcodes::expansion::{audit_left_expansion, AuditMode, Gamma, Verdict};
use diffcodes::gf2::{cycle_repetition, hamming_7_4, BitMatrix, BitVec};
use diffcodes::hgp::{css_validate, hypergraph_product};
use diffcodes::diffusion::{build_diffusion_code, DiffusionParams, TimeSpec};
use diffcodes::seed::{derive_seed, rng_from_seed};
use diffcodes::sep::{composition_count, small_gap_tail, tv_to_uniform, GapChain, DEFAULT_ENUMERATION_CAP};
use diffcodes::tanner::{bipartite_cycle, matching};
use diffcodes::thermal::equilibrium_energy;

fn gibbs_energy(h: &BitMatrix, tau: f64) -> f64 {
    let n = h.cols();
    let (mut z, mut e) = (0.0, 0.0);
    for mask in 0..1u32 << n {
        let x = BitVec::from_bools(&(0..n).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>());
        let u = h.mul_vec(&x).map(|s| s.weight()).unwrap_or(0) as f64;
        let w = (-2.0 * u / tau).exp();
        z += w;
        e += w * u;
    }
    e / z / h.rows() as f64
}

fn check(name: &str, f: impl FnOnce() -> Result<bool, String>) -> bool {
    let ok = matches!(f(), Ok(true));
    println!("{} {name}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn run(seed: u64) -> i32 {
    let e = |err: diffcodes::Error| err.to_string();
    let results = [
        check("gap chain stationary distribution is uniform (N ≤ 9, k ≤ 3)", || {
            for n in 2..=9 {
                for k in 1..=3.min(n) {
                    let chain = GapChain::new(n, k, 0.5, DEFAULT_ENUMERATION_CAP).map_err(e)?;
                    if chain.states.len() as u128 != composition_count(n, k) {
                        return Ok(false);
                    }
                    let (pi, _) = chain.stationary(1e-13, 200_000);
                    if tv_to_uniform(&pi) > 1e-10 {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }),
        check("small-gap tail bound (N ≤ 12, k ≤ 3)", || {
            for n in 3..=12 {
                for k in 1..=3 {
                    for d in 1..=2 {
                        for q in 1..=k {
                            let t = small_gap_tail(n, k, d, q, DEFAULT_ENUMERATION_CAP).map_err(e)?;
                            if t.holds() == Some(false) {
                                return Ok(false);
                            }
                        }
                    }
                }
            }
            Ok(true)
        }),
        check("expansion: cycle certified at 1, matching refuted above 1", || {
            let c = audit_left_expansion(&bipartite_cycle(12), 4, Gamma::integer(1), AuditMode::Exhaustive).map_err(e)?;
            let m = audit_left_expansion(&matching(12, 1), 2, Gamma::new(11, 10).map_err(e)?, AuditMode::Exhaustive)
                .map_err(e)?;
            Ok(c.verdict == Verdict::Certified && m.verdict == Verdict::Refuted)
        }),
        check("flip decoder corrects single errors on the 5-cycle", || {
            let dec = FlipDecoder::new(&cycle_repetition(5).to_sparse());
            for i in 0..5 {
                let w = BitVec::from_indices(5, &[i]).map_err(e)?;
                if !dec.decode(&w, &mut rng_from_seed(seed)).map_err(e)?.recovered_zero() {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        check("BP leaves a codeword at iteration 0", || {
            let out = bp_decode(&hamming_7_4(), &BitVec::zeros(7), 0.05, 50).map_err(e)?;
            Ok(out.recovered_zero() && out.iterations == 0)
        }),
        check("CSS identity on small diffusion products", || {
            for i in 0..5 {
                let p = DiffusionParams::new(12, 9, 3, 4, TimeSpec::Exponent(1.0), derive_seed(seed, "selftest-css", i));
                let g = build_diffusion_code(&p).map_err(e)?.graph;
                if !css_validate(&hypergraph_product(&g)) {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        check("equilibrium energy matches enumeration on the Hamming code", || {
            let h = hamming_7_4();
            Ok([0.5, 1.0, 3.0].iter().all(|&tau| {
                equilibrium_energy(&h, tau).is_some_and(|v| (v - gibbs_energy(&h, tau)).abs() < 1e-12)
            }))
        }),
    ];
    if results.iter().all(|&r| r) {
        0
    } else {
        1
    }
}
