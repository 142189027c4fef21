//! Computing X + Y over a MAC whose output is a noisy sum, over Z_2 and Z_3.

mod common;

use nested_polar::channels::ScenarioKind;
use nested_polar::presets;

fn main() -> nested_polar::Result<()> {
    let joint = presets::comp_mac_xor(0.05)?;
    common::run_and_print(&common::config(ScenarioKind::CompMac, joint, 10, 200))?;

    // Uniform inputs over Z_3; Z = X + Y, replaced by each other value w.p. 0.05.
    let joint = nested_polar::joint::JointDist::from_fn(&[("X", 3), ("Y", 3), ("Z", 3)], |a| {
        if a[2] == (a[0] + a[1]) % 3 {
            0.9 / 9.0
        } else {
            0.05 / 9.0
        }
    })?;
    let mut cfg = common::config(ScenarioKind::CompMac, joint, 8, 200);
    cfg.group = vec![3];
    common::run_and_print(&cfg)?;
    Ok(())
}
