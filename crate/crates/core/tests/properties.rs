use std::sync::Arc;

use nested_polar::channels::{build_scenario_channels, ScenarioKind};
use nested_polar::codec::{extract_message, respects_frozen, Codec};
use nested_polar::design::{design_code, DesignConfig, EstimationMode, Thresholds};
use nested_polar::dmc::{
    compose, noiseless, verify_degradation, ChannelPair, Dmc, Kernel, Orientation, OutputAlphabet,
};
use nested_polar::polar::{add_blocks, TransformPlan};
use nested_polar::presets::random;
use nested_polar::rates::theoretical_rates;
use nested_polar::AbelianGroup;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GROUPS: &[&[usize]] = &[
    &[2],
    &[3],
    &[4],
    &[2, 2],
    &[5],
    &[6],
    &[8],
    &[2, 4],
    &[3, 3],
    &[2, 2, 2],
    &[4, 4],
    &[2, 8],
];

fn group() -> impl Strategy<Value = Arc<AbelianGroup>> {
    prop::sample::select(GROUPS).prop_map(|f| Arc::new(AbelianGroup::new(f).unwrap()))
}

fn random_dmc(rng: &mut ChaCha8Rng, g: &Arc<AbelianGroup>, m: usize) -> Dmc {
    let out = OutputAlphabet::from_names(&[("Y", m)]).unwrap();
    let rows = random::kernel(rng, g.order(), m);
    Dmc::new(g.clone(), out, rows.concat()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coset_decomposition_recomposes(g in group(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<_> = g.subgroup_ids().collect();
        let k = ids[rng.gen_range(0..ids.len())];
        let supers: Vec<_> = ids.iter().copied().filter(|&h| g.is_subgroup_of(k, h)).collect();
        let h = supers[rng.gen_range(0..supers.len())];
        let e = rng.gen_range(0..g.order());
        let (a, b, c) = g.coset_decompose(e, k, h).unwrap();
        prop_assert!(g.subgroup(k).contains(a));
        prop_assert!(g.transversal_in(k, h).unwrap().contains(&b));
        prop_assert!(g.transversal(h).contains(&c));
        prop_assert_eq!(g.add(g.add(a, b), c), e);
    }

    #[test]
    fn meet_and_join_are_lattice_bounds(g in group(), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let ids: Vec<_> = g.subgroup_ids().collect();
        let (a, b) = (ids[i.index(ids.len())], ids[j.index(ids.len())]);
        let (m, s) = (g.meet(a, b), g.join(a, b));
        prop_assert!(g.is_subgroup_of(m, a) && g.is_subgroup_of(m, b));
        prop_assert!(g.is_subgroup_of(a, s) && g.is_subgroup_of(b, s));
        let both: Vec<_> = g.members_of(a).into_iter().filter(|&x| g.subgroup(b).contains(x)).collect();
        prop_assert_eq!(g.members_of(m), both);
    }

    #[test]
    fn transform_is_linear_and_invertible(g in group(), n in 0u32..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = TransformPlan::new(n).unwrap();
        let q = g.order();
        let a: Vec<usize> = (0..plan.len()).map(|_| rng.gen_range(0..q)).collect();
        let b: Vec<usize> = (0..plan.len()).map(|_| rng.gen_range(0..q)).collect();
        let (ta, tb) = (plan.transform(&g, &a), plan.transform(&g, &b));
        prop_assert_eq!(plan.transform(&g, &add_blocks(&g, &a, &b)), add_blocks(&g, &ta, &tb));
        prop_assert_eq!(plan.inverse(&g, &ta), a.clone());
        prop_assert_eq!(plan.transform(&g, &plan.inverse(&g, &a)), a);
    }

    #[test]
    fn bhattacharyya_bounds_and_symmetry(g in group(), m in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_dmc(&mut rng, &g, m);
        let z = w.z_params();
        for d in g.elements() {
            prop_assert!((0.0..=1.0).contains(&z.z[d]));
            prop_assert!((z.z[d] - z.z[g.neg(d)]).abs() < 1e-12);
        }
        for h in g.subgroup_ids() {
            let zh = z.z_sub(&g, h);
            prop_assert!(zh >= 0.0 && zh <= (g.order() - g.subgroup(h).order()) as f64 + 1e-12);
        }
    }

    #[test]
    fn degradation_is_monotone(g in group(), m in 1usize..=4, m2 in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let better = random_dmc(&mut rng, &g, m);
        let to = OutputAlphabet::from_names(&[("Y2", m2)]).unwrap();
        let kernel = Kernel::new(better.outputs().clone(), to, random::kernel(&mut rng, m, m2).concat()).unwrap();
        let worse = compose(&better, &kernel).unwrap();
        prop_assert!(verify_degradation(&better, &kernel, &worse).unwrap().degraded);
        let (zb, zw) = (better.z_params(), worse.z_params());
        for d in g.elements() {
            prop_assert!(zw.z[d] >= zb.z[d] - 1e-9);
        }
        prop_assert!(worse.symmetric_capacity() <= better.symmetric_capacity() + 1e-9);
    }

    #[test]
    fn chain_rule_and_nonnegative_information(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = random::unstructured(&mut rng, &[("A", 3), ("B", 2), ("C", 4)]).unwrap();
        let h_ab = j.entropy(&["A", "B"]).unwrap();
        let split = j.entropy(&["A"]).unwrap() + j.cond_entropy(&["B"], &["A"]).unwrap();
        prop_assert!((h_ab - split).abs() < 1e-9);
        prop_assert!(j.mutual_info(&["A"], &["B", "C"]).unwrap() >= -1e-12);
        prop_assert!(j.cond_mutual_info(&["A"], &["B"], &["C"]).unwrap() >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructed_pairs_are_degraded(kind_ix in 0usize..6, q in prop::sample::select(&[2usize, 3, 4][..]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Arc::new(AbelianGroup::new(&[q]).unwrap());
        let (kind, joint) = match kind_ix {
            0 => (ScenarioKind::BergerTung, random::source_chain(&mut rng, q).unwrap()),
            1 => (ScenarioKind::KmSum, random::source_chain(&mut rng, q).unwrap()),
            2 => (ScenarioKind::Mac, random::mac(&mut rng, q).unwrap()),
            3 => (ScenarioKind::CompMac, random::comp_mac(&mut rng, q, |a, b| (a + b) % q).unwrap()),
            4 => (ScenarioKind::Broadcast, random::broadcast(&mut rng, q).unwrap()),
            _ => (ScenarioKind::MultipleDescription, random::multiple_description(&mut rng, q).unwrap()),
        };
        let ch = build_scenario_channels(kind, &joint, &g).unwrap();
        for (tag, cert) in ch.verify_all().unwrap() {
            prop_assert!(cert.degraded, "{kind} pair {tag}: deviation {}", cert.max_deviation);
        }
    }

    #[test]
    fn description_rate_splits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = AbelianGroup::new(&[3]).unwrap();
        let j = random::multiple_description(&mut rng, 3).unwrap();
        let r = theoretical_rates(ScenarioKind::MultipleDescription, &j, &g).unwrap();
        prop_assert!((r["r1"] - r["r11"] - r["r12"]).abs() < 1e-9);
    }

    #[test]
    fn partition_covers_and_rate_is_bounded(p in 0.02f64..0.2, extra in 0.02f64..0.2, seed in any::<u64>()) {
        let g = Arc::new(AbelianGroup::new(&[2]).unwrap());
        let out = OutputAlphabet::from_names(&[("d", 2)]).unwrap();
        let pw = p + extra - 2.0 * p * extra;
        let mk = |e: f64| Dmc::new(g.clone(), out.clone(), vec![1.0 - e, e, e, 1.0 - e]).unwrap();
        let recipe = Kernel::new(out.clone(), out.clone(), vec![1.0 - extra, extra, extra, 1.0 - extra]).unwrap();
        let pair = ChannelPair::new("T", mk(pw), mk(p), Orientation::SourceCoding, recipe).unwrap();
        let th = Thresholds { delta_c: 0.05, delta_s: 0.05 };
        let cfg = DesignConfig { n: 7, thresholds: th, mode: EstimationMode::MonteCarlo { trials: 1000 }, seed };
        let spec = design_code(&pair, &cfg, 0).unwrap();
        let cells = spec.partition.cells();
        let mut seen: Vec<usize> = cells.values().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..spec.len()).collect::<Vec<_>>());

        let pc = cfg.estimate(&pair.wc).unwrap();
        let ps = cfg.estimate(&pair.ws).unwrap();
        let unpolarized = |z: &[Vec<f64>]| z.iter().filter(|r| r[1] > th.delta_c && r[1] < 1.0 - th.delta_s).count();
        let frac = (unpolarized(&pc.z) + unpolarized(&ps.z)) as f64 / spec.len() as f64;
        let gap = pair.ws.symmetric_capacity() - pair.wc.symmetric_capacity();
        prop_assert!(spec.rate() <= gap + 2.0 * frac + 1e-9, "rate {} gap {gap} unpolarized {frac}", spec.rate());
    }

    #[test]
    fn codec_keeps_cosets_and_reconstruction(q in prop::sample::select(&[2usize, 4][..]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Arc::new(AbelianGroup::new(&[q]).unwrap());
        let better = random_dmc(&mut rng, &g, 3);
        let kernel = Kernel::new(better.outputs().clone(), better.outputs().clone(), random::kernel(&mut rng, 3, 3).concat()).unwrap();
        let worse = compose(&better, &kernel).unwrap();
        let pair = ChannelPair::new("T", worse, better, Orientation::SourceCoding, kernel).unwrap();
        let cfg = DesignConfig { n: 5, thresholds: Thresholds::default(), mode: EstimationMode::MonteCarlo { trials: 1000 }, seed };
        let spec = design_code(&pair, &cfg, 0).unwrap();
        let mut codec = Codec::new(&spec).unwrap();
        let obs: Vec<usize> = (0..spec.len()).map(|_| rng.gen_range(0..3)).collect();
        let enc = codec.encode(&spec, &obs, None, &mut rng).unwrap();
        prop_assert!(respects_frozen(&spec, &enc.a));
        prop_assert_eq!(extract_message(&spec, &enc.a).unwrap(), enc.message.clone());
        let x = codec.transform(&g, &enc.a);
        for i in 0..spec.len() {
            prop_assert_eq!(g.add(enc.reconstruction[i], x[i]), spec.dither[i]);
        }
        if let Ok(dec) = codec.decode(&spec, &obs, Some(&enc.message)) {
            prop_assert!(respects_frozen(&spec, &dec.a_hat));
            let xh = codec.transform(&g, &dec.a_hat);
            for i in 0..spec.len() {
                prop_assert_eq!(g.add(dec.reconstruction[i], xh[i]), spec.dither[i]);
            }
        }
    }

    #[test]
    fn noiseless_feedback_round_trips(g in group(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = noiseless(g.clone()).unwrap();
        let pair = ChannelPair::new("T", w.clone(), w.clone(), Orientation::SourceCoding, Kernel::identity(w.outputs())).unwrap();
        let cfg = DesignConfig { n: 3, thresholds: Thresholds::default(), mode: EstimationMode::MonteCarlo { trials: 1000 }, seed };
        let spec = design_code(&pair, &cfg, 0).unwrap();
        let mut codec = Codec::new(&spec).unwrap();
        let obs: Vec<usize> = (0..spec.len()).map(|_| rng.gen_range(0..g.order())).collect();
        let enc = codec.encode(&spec, &obs, None, &mut rng).unwrap();
        let dec = codec.decode(&spec, &obs, Some(&enc.message)).unwrap();
        prop_assert_eq!(dec.a_hat, enc.a);
    }
}
