use nested_polar::channels::ScenarioKind;
use nested_polar::design::Thresholds;
use nested_polar::joint::JointDist;
use nested_polar::presets;
use nested_polar::scenarios::{default_estimation, run_scenario, ScenarioConfig};
use nested_polar::Error;

fn cfg(
    scenario: ScenarioKind,
    joint: JointDist,
    n: u32,
    trials: usize,
    seed: u64,
) -> ScenarioConfig {
    ScenarioConfig {
        scenario,
        joint,
        group: vec![2],
        n,
        thresholds: Thresholds::default(),
        trials,
        seed,
        estimation: default_estimation(),
        distortions: Default::default(),
        broadcast_map: None,
        cost: None,
    }
}

fn all_presets() -> Vec<(ScenarioKind, JointDist)> {
    vec![
        (
            ScenarioKind::BergerTung,
            presets::bt_doubly_symmetric(0.1, 0.1, 0.1).unwrap(),
        ),
        (
            ScenarioKind::KmSum,
            presets::km_binary(0.05, 0.0, 0.0).unwrap(),
        ),
        (
            ScenarioKind::Mac,
            presets::mac_binary(0.5, 0.5, 0.1).unwrap(),
        ),
        (ScenarioKind::CompMac, presets::comp_mac_xor(0.05).unwrap()),
        (
            ScenarioKind::Broadcast,
            presets::broadcast_binary(0.05, 0.1, 0.05).unwrap(),
        ),
        (
            ScenarioKind::MultipleDescription,
            presets::md_binary(0.1, 0.2, 0.05).unwrap(),
        ),
    ]
}

#[test]
fn every_scenario_runs_at_small_n() {
    for (kind, joint) in all_presets() {
        let r = run_scenario(&cfg(kind, joint, 7, 40, 3)).unwrap();
        assert_eq!(r.block_length, 128);
        assert!(!r.terminals.is_empty());
        for t in &r.terminals {
            assert!(
                t.designed_rate >= 0.0 && t.designed_rate.is_finite(),
                "{kind} {}",
                t.tag
            );
        }
        for (name, e) in &r.metrics {
            assert!(e.mean.is_finite() && e.mean >= 0.0, "{kind} {name}");
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    for (kind, joint) in all_presets() {
        let c = cfg(kind, joint, 6, 24, 8);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_scenario(&c).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_scenario(&c).unwrap());
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&many).unwrap(),
            "{kind}"
        );
    }
}

#[test]
fn seeds_change_the_outcome() {
    let j = presets::bt_doubly_symmetric(0.1, 0.1, 0.1).unwrap();
    let a = run_scenario(&cfg(ScenarioKind::BergerTung, j.clone(), 7, 30, 1)).unwrap();
    let b = run_scenario(&cfg(ScenarioKind::BergerTung, j, 7, 30, 2)).unwrap();
    assert_ne!(a.metric("D1"), b.metric("D1"));
}

#[test]
fn broadcast_without_markov_chain_is_refused() {
    let flip = |p: f64, a: usize, b: usize| if a == b { 1.0 - p } else { p };
    let j = JointDist::from_fn(&[("U", 2), ("V", 2), ("X", 4), ("Y", 2), ("Z", 2)], |s| {
        if s[2] != 2 * s[0] + s[1] {
            return 0.0;
        }
        0.5 * flip(0.1, s[0], s[1]) * flip(0.1, s[0], s[3]) * flip(0.1, s[1], s[4])
    })
    .unwrap();
    match run_scenario(&cfg(ScenarioKind::Broadcast, j, 6, 4, 1)) {
        Err(Error::NotDegraded { .. }) => {}
        other => panic!(
            "expected a degradation failure, got {:?}",
            other.map(|r| r.scenario)
        ),
    }
}

#[test]
fn noiseless_binary_mac_has_no_errors() {
    // Uniform inputs and Z = (X, Y): each user sees a perfect channel.
    let j = JointDist::from_fn(&[("X", 2), ("Y", 2), ("Z", 4)], |a| {
        if a[2] == 2 * a[0] + a[1] {
            0.25
        } else {
            0.0
        }
    })
    .unwrap();
    let r = run_scenario(&cfg(ScenarioKind::Mac, j, 8, 50, 4)).unwrap();
    for t in &r.terminals {
        assert_eq!(t.block_errors, Some(0), "terminal {}", t.tag);
        assert!(
            (t.designed_rate - 1.0).abs() < 1e-12,
            "terminal {} rate {}",
            t.tag,
            t.designed_rate
        );
    }
}

#[test]
fn constant_side_terminal_reduces_to_point_to_point() {
    let r = run_scenario(&cfg(
        ScenarioKind::BergerTung,
        presets::bt_constant_side(0.1).unwrap(),
        9,
        80,
        2,
    ))
    .unwrap();
    assert_eq!(r.terminal("Y").unwrap().designed_rate, 0.0);
    assert!(r.metric("D1").unwrap() < 0.1 + 0.05);
    assert_eq!(r.metric("D2"), Some(0.0));
}

#[test]
fn lossless_sum_recovers_the_sum() {
    let mut c = cfg(
        ScenarioKind::KmSum,
        presets::km_binary(0.05, 0.0, 0.0).unwrap(),
        9,
        60,
        5,
    );
    c.thresholds.delta_c = 0.001;
    let r = run_scenario(&c).unwrap();
    assert!(r.metric("block_error_sum").unwrap() <= 0.1);
    assert!(r.metric("D").unwrap() <= r.metric("block_error_sum").unwrap());
}

#[test]
fn the_sum_is_computed_over_z3() {
    let j = JointDist::from_fn(&[("X", 3), ("Y", 3), ("Z", 3)], |a| {
        if a[2] == (a[0] + a[1]) % 3 {
            0.9 / 9.0
        } else {
            0.05 / 9.0
        }
    })
    .unwrap();
    let mut c = cfg(ScenarioKind::CompMac, j, 7, 60, 6);
    c.group = vec![3];
    let r = run_scenario(&c).unwrap();
    assert!(r.metric("message_sum_error").unwrap() <= 0.1);
}

#[test]
fn invalid_configs_are_rejected_with_the_field() {
    let mut c = cfg(
        ScenarioKind::Mac,
        presets::mac_binary(0.5, 0.5, 0.1).unwrap(),
        6,
        0,
        1,
    );
    assert!(matches!(run_scenario(&c), Err(Error::Config { ref field, .. }) if field == "trials"));
    c.trials = 1;
    c.scenario = ScenarioKind::MultipleDescription;
    assert!(matches!(run_scenario(&c), Err(Error::Config { ref field, .. }) if field == "joint"));
}

#[test]
fn rate_gap_shrinks_as_the_block_grows() {
    let j = presets::bt_doubly_symmetric(0.1, 0.1, 0.1).unwrap();
    let mean_gap = |n: u32| {
        let gaps: Vec<f64> = (1..=3)
            .map(|seed| {
                run_scenario(&cfg(ScenarioKind::BergerTung, j.clone(), n, 1, seed))
                    .unwrap()
                    .max_rate_gap()
            })
            .collect();
        gaps.iter().sum::<f64>() / gaps.len() as f64
    };
    let gaps: Vec<f64> = (7..=10).map(mean_gap).collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "gaps {gaps:?}");
    }
}
