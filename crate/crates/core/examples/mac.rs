//! Two-user binary adder MAC decoded successively, Y first.

mod common;

use nested_polar::channels::ScenarioKind;
use nested_polar::presets;

fn main() -> nested_polar::Result<()> {
    let joint = presets::mac_binary(0.5, 0.5, 0.1)?;
    let mut cfg = common::config(ScenarioKind::Mac, joint, 10, 200);
    cfg.thresholds.delta_c = 0.001;
    common::run_and_print(&cfg)?;

    // Nonuniform inputs are shaped through the source-coding layer.
    let joint = presets::mac_binary(0.3, 0.5, 0.05)?;
    common::run_and_print(&common::config(ScenarioKind::Mac, joint, 10, 200))?;
    Ok(())
}
