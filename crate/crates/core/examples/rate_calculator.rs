//! Information-theoretic corner rates for each preset, and for a joint read
//! from a file given on the command line.

use nested_polar::channels::ScenarioKind;
use nested_polar::joint::JointDist;
use nested_polar::presets;
use nested_polar::rates::theoretical_rates;
use nested_polar::AbelianGroup;

fn show(kind: ScenarioKind, joint: &JointDist, group: &AbelianGroup) -> nested_polar::Result<()> {
    println!("{kind}:");
    for (k, v) in theoretical_rates(kind, joint, group)? {
        println!("  {k:18} {v:.6}");
    }
    Ok(())
}

fn main() -> nested_polar::Result<()> {
    let z2 = AbelianGroup::new(&[2])?;
    if let Some(path) = std::env::args().nth(1) {
        let kind: ScenarioKind = std::env::args()
            .nth(2)
            .and_then(|k| serde_json::from_str(&format!("{k:?}")).ok())
            .unwrap_or(ScenarioKind::BergerTung);
        let joint = JointDist::parse(&std::fs::read_to_string(path)?)?;
        let q: usize = joint.sizes().iter().copied().max().unwrap_or(2);
        return show(kind, &joint, &AbelianGroup::new(&[q])?);
    }
    show(
        ScenarioKind::BergerTung,
        &presets::bt_doubly_symmetric(0.1, 0.1, 0.1)?,
        &z2,
    )?;
    show(
        ScenarioKind::KmSum,
        &presets::km_binary(0.05, 0.0, 0.0)?,
        &z2,
    )?;
    show(ScenarioKind::Mac, &presets::mac_binary(0.5, 0.5, 0.1)?, &z2)?;
    show(ScenarioKind::CompMac, &presets::comp_mac_xor(0.05)?, &z2)?;
    show(
        ScenarioKind::Broadcast,
        &presets::broadcast_binary(0.05, 0.1, 0.05)?,
        &z2,
    )?;
    show(
        ScenarioKind::MultipleDescription,
        &presets::md_binary(0.1, 0.2, 0.05)?,
        &z2,
    )?;
    Ok(())
}
