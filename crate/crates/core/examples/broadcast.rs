//! Two-receiver degraded broadcast with superposition input X = g(U, V).

mod common;

use nested_polar::channels::ScenarioKind;
use nested_polar::presets;

fn main() -> nested_polar::Result<()> {
    let joint = presets::broadcast_binary(0.05, 0.1, 0.05)?;
    let mut cfg = common::config(ScenarioKind::Broadcast, joint, 10, 200);
    cfg.cost = Some(vec![0.0, 1.0, 1.0, 2.0]);
    common::run_and_print(&cfg)?;

    // V depends on U beyond what Y reveals: U -> Y -> V fails, so the state
    // channel is not degraded and the run is refused.
    let bad = nested_polar::joint::JointDist::from_fn(
        &[("U", 2), ("V", 2), ("X", 4), ("Y", 2), ("Z", 2)],
        |s| {
            let (u, v, x, y, z) = (s[0], s[1], s[2], s[3], s[4]);
            if x != 2 * u + v {
                return 0.0;
            }
            let f = |p: f64, a: usize, b: usize| if a == b { 1.0 - p } else { p };
            0.5 * f(0.1, u, v) * f(0.1, u, y) * f(0.1, v, z)
        },
    )?;
    let cfg = common::config(ScenarioKind::Broadcast, bad, 8, 10);
    match nested_polar::scenarios::run_scenario(&cfg) {
        Ok(_) => println!("unexpectedly ran"),
        Err(e) => println!("refused: {e}"),
    }
    Ok(())
}
