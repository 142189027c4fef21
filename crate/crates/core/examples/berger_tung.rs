//! Distributed lossy coding of a doubly symmetric binary source.

mod common;

use nested_polar::channels::ScenarioKind;
use nested_polar::presets;

fn main() -> nested_polar::Result<()> {
    let joint = presets::bt_doubly_symmetric(0.1, 0.1, 0.1)?;
    common::run_and_print(&common::config(ScenarioKind::BergerTung, joint, 10, 200))?;

    // A constant side terminal leaves point-to-point lossy coding of X.
    let joint = presets::bt_constant_side(0.1)?;
    common::run_and_print(&common::config(ScenarioKind::BergerTung, joint, 10, 200))?;
    Ok(())
}
