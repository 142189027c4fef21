//! One encoder, two descriptions and three decoders.

mod common;

use nested_polar::channels::ScenarioKind;
use nested_polar::presets;

fn main() -> nested_polar::Result<()> {
    let joint = presets::md_binary(0.1, 0.2, 0.05)?;
    let r = common::run_and_print(&common::config(
        ScenarioKind::MultipleDescription,
        joint,
        10,
        200,
    ))?;
    let rate = |k: &str| r.theoretical.get(k).copied().unwrap_or(f64::NAN);
    println!(
        "R1 = {:.4} = R11 + R12 = {:.4} + {:.4}",
        rate("r1"),
        rate("r11"),
        rate("r12")
    );
    Ok(())
}
