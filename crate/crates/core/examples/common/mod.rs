use nested_polar::channels::ScenarioKind;
use nested_polar::joint::JointDist;
use nested_polar::scenarios::{default_estimation, run_scenario, ScenarioConfig, SimReport};

pub fn config(scenario: ScenarioKind, joint: JointDist, n: u32, trials: usize) -> ScenarioConfig {
    ScenarioConfig {
        scenario,
        joint,
        group: vec![2],
        n,
        thresholds: Default::default(),
        trials,
        seed: 1,
        estimation: default_estimation(),
        distortions: Default::default(),
        broadcast_map: None,
        cost: None,
    }
}

pub fn run_and_print(cfg: &ScenarioConfig) -> nested_polar::Result<SimReport> {
    let r = run_scenario(cfg)?;
    println!(
        "{} at N = {}, {} trials",
        r.scenario, r.block_length, r.trials
    );
    for t in &r.terminals {
        println!(
            "  terminal {}: designed rate {:.4}, theoretical {:.4}, block error {}",
            t.tag,
            t.designed_rate,
            t.theoretical_rate,
            t.block_error_rate
                .as_ref()
                .map_or("-".into(), |e| format!("{:.4}", e.mean))
        );
    }
    for (k, e) in &r.metrics {
        println!("  {k} = {:.4} +- {:.4}", e.mean, e.ci95);
    }
    if !r.targets.is_empty() {
        println!("  targets {:?}", r.targets);
    }
    println!("  events {:?}", r.events);
    Ok(r)
}
