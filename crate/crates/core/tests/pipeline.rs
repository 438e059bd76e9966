use diffcodes::decoders::{BpConfig, BpDecoder, FlipDecoder};
use diffcodes::diffusion::{build_diffusion_code, read_positions, write_positions, DiffusionParams, TimeSpec};
use diffcodes::gf2::{read_alist, write_alist, BitVec};
use diffcodes::hgp::{css_validate, hypergraph_product};
use diffcodes::seed::rng_from_seed;
use diffcodes::tanner::{MatrixMode, TannerGraph};
use diffcodes::thermal::{run_anneal, AnnealSchedule, SpinSystem};

#[test]
fn saved_code_round_trips_through_every_format() {
    let code = build_diffusion_code(&DiffusionParams::new(30, 20, 4, 6, TimeSpec::Exponent(1.0), 11)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let json = code.graph.save(dir.path(), "c").unwrap();
    let loaded = TannerGraph::load(&json).unwrap();
    assert_eq!(loaded.edges(), code.graph.edges());
    assert_eq!(loaded.provenance(), code.graph.provenance());

    let h = code.graph.to_sparse_matrix(MatrixMode::Parity);
    let alist = std::fs::read(dir.path().join("c.alist")).unwrap();
    assert_eq!(read_alist(alist.as_slice()).unwrap(), h);
    let mut buf = Vec::new();
    write_alist(&h, &mut buf).unwrap();
    assert_eq!(buf, alist);

    let mut pos = Vec::new();
    write_positions(&code.positions, &mut pos).unwrap();
    assert_eq!(read_positions(pos.as_slice()).unwrap(), code.positions);
    assert_eq!(
        diffcodes::diffusion::max_check_extent(&loaded, &code.positions).unwrap(),
        code.max_check_extent().unwrap()
    );
}

#[test]
fn product_of_loaded_code_is_css() {
    let code = build_diffusion_code(&DiffusionParams::reference_family(44, 36, 5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let g = TannerGraph::load(&code.graph.save(dir.path(), "g").unwrap()).unwrap();
    let c = hypergraph_product(&g);
    assert!(css_validate(&c));
    assert_eq!(c.n_qubits, 44 * 44 + 36 * 36);
    let meta: serde_json::Value = serde_json::from_reader(std::fs::File::open(c.save(dir.path(), "q").unwrap()).unwrap()).unwrap();
    assert_eq!(meta["css_valid"], true);
}

#[test]
fn decoders_clear_single_errors_on_a_reference_family_code() {
    let g = build_diffusion_code(&DiffusionParams::reference_family(352, 288, 1)).unwrap().graph;
    let h = g.to_sparse_matrix(MatrixMode::Parity);
    let flip = FlipDecoder::new(&h);
    let bp = BpDecoder::new(&h, BpConfig::default()).unwrap();
    let mut rng = rng_from_seed(0);
    let (mut flip_ok, mut bp_ok) = (0, 0);
    for bit in (0..352).step_by(11) {
        let e = BitVec::from_indices(352, &[bit]).unwrap();
        flip_ok += usize::from(flip.decode(&e, &mut rng).unwrap().recovered_zero());
        bp_ok += usize::from(bp.decode(&e, 0.01).unwrap().recovered_zero());
    }
    assert_eq!(bp_ok, 32);
    // random-sweep flipping can stall on a low-degree neighbor; most errors still clear
    assert!(flip_ok >= 20, "{flip_ok}/32");
}

#[test]
fn cold_code_stays_ordered_and_hot_code_disorders() {
    let g = build_diffusion_code(&DiffusionParams::reference_family(352, 288, 2)).unwrap().graph;
    let mut s = SpinSystem::from_graph(&g);
    let schedule = AnnealSchedule::new(0.2, 4.0, 1.9, 20);
    let trace = run_anneal(&mut s, &schedule, &mut rng_from_seed(3)).unwrap();
    assert_eq!(trace.len(), 3);
    assert!(trace[0].mean_energy.unwrap() < 0.01);
    assert!(trace[2].mean_energy.unwrap() > 0.3);
    assert!(s.bookkeeping_consistent());
}
