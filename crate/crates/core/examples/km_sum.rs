//! Recovering the modulo-two sum of two correlated binary sources.

mod common;

use nested_polar::channels::ScenarioKind;
use nested_polar::presets;

fn main() -> nested_polar::Result<()> {
    let joint = presets::km_binary(0.05, 0.0, 0.0)?;
    let mut cfg = common::config(ScenarioKind::KmSum, joint, 10, 200);
    cfg.thresholds.delta_c = 0.001;
    common::run_and_print(&cfg)?;

    // Lossy quantizers: the decoder recovers U + V, a noisy version of X + Y.
    let joint = presets::km_binary(0.05, 0.02, 0.02)?;
    common::run_and_print(&common::config(ScenarioKind::KmSum, joint, 10, 200))?;
    Ok(())
}
