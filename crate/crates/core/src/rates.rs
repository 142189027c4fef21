//! Closed-form rates of each scenario's corner point, plus the
//! time-sharing and three-user expressions when the joint carries the extra
//! variables (`Q` for distributed source coding, `T` for multiple
//! descriptions, a third MAC input `W`).

use std::collections::BTreeMap;

use crate::channels::ScenarioKind;
use crate::error::Result;
use crate::group::AbelianGroup;
use crate::joint::JointDist;

pub type Rates = BTreeMap<String, f64>;

fn with_sum(
    joint: &JointDist,
    group: &AbelianGroup,
    name: &str,
    a: &str,
    b: &str,
) -> Result<JointDist> {
    if joint.has(name) {
        return Ok(joint.clone());
    }
    joint.with_function(name, group.order(), &[a, b], |v| group.add(v[0], v[1]))
}

pub fn theoretical_rates(
    kind: ScenarioKind,
    joint: &JointDist,
    group: &AbelianGroup,
) -> Result<Rates> {
    let mut r = Rates::new();
    let mut put = |k: &str, v: f64| {
        r.insert(k.to_string(), v);
    };
    let j = joint;
    match kind {
        ScenarioKind::BergerTung => {
            let iuv = j.mutual_info(&["U"], &["V"])?;
            let ixu = j.mutual_info(&["X"], &["U"])?;
            let iyv = j.mutual_info(&["Y"], &["V"])?;
            put("r1", ixu - iuv);
            put("r2", iyv);
            put("sum", ixu + iyv - iuv);
            put("r1_other_corner", ixu);
            put("r2_other_corner", iyv - iuv);
            if j.has("Q") {
                put("r1_q", j.cond_mutual_info(&["X"], &["U"], &["V", "Q"])?);
                put("r2_q", j.cond_mutual_info(&["Y"], &["V"], &["Q"])?);
                put(
                    "r1_q_split",
                    j.mutual_info(&["U"], &["X", "Q"])? - j.mutual_info(&["U"], &["V", "Q"])?,
                );
                put(
                    "r2_q_split",
                    j.mutual_info(&["V"], &["Y", "Q"])? - j.mutual_info(&["V"], &["Q"])?,
                );
            }
        }
        ScenarioKind::KmSum => {
            let j = with_sum(j, group, "W", "U", "V")?;
            let hw = j.entropy(&["W"])?;
            put("r1", hw - j.cond_entropy(&["U"], &["X"])?);
            put("r2", hw - j.cond_entropy(&["V"], &["Y"])?);
        }
        ScenarioKind::Mac => {
            put("r1", j.cond_mutual_info(&["X"], &["Z"], &["Y"])?);
            put(
                "r1_entropy_form",
                j.entropy(&["X"])? - j.cond_entropy(&["X"], &["Y", "Z"])?,
            );
            put("r2", j.mutual_info(&["Y"], &["Z"])?);
            if j.has("W") {
                put("r_w", j.cond_mutual_info(&["W"], &["Z"], &["X", "Y"])?);
                put("r_x", j.mutual_info(&["X"], &["Y", "Z"])?);
                put("r_y", j.mutual_info(&["Y"], &["Z"])?);
            }
        }
        ScenarioKind::CompMac => {
            let j = with_sum(j, group, "S", "X", "Y")?;
            let hs_z = j.cond_entropy(&["S"], &["Z"])?;
            let (hx, hy) = (j.entropy(&["X"])?, j.entropy(&["Y"])?);
            put("r", hx.min(hy) - hs_z);
            put("r_x", hx - hs_z);
            put("r_y", hy - hs_z);
        }
        ScenarioKind::Broadcast => {
            put(
                "r1",
                j.mutual_info(&["U"], &["Y"])? - j.mutual_info(&["U"], &["V"])?,
            );
            put(
                "r1_entropy_form",
                j.cond_entropy(&["U"], &["V"])? - j.cond_entropy(&["U"], &["Y"])?,
            );
            put("r2", j.mutual_info(&["V"], &["Z"])?);
        }
        ScenarioKind::MultipleDescription => {
            let r1 = j.mutual_info(&["X"], &["U", "V", "W"])? - j.mutual_info(&["X"], &["V"])?
                + j.mutual_info(&["U"], &["V"])?;
            let r11 = j.entropy(&["U"])? - j.cond_entropy(&["U"], &["V", "X"])?;
            let r12 =
                j.cond_entropy(&["W"], &["U", "V"])? - j.cond_entropy(&["W"], &["U", "V", "X"])?;
            let r2 = j.mutual_info(&["X"], &["V"])?;
            put("r1", r1);
            put("r11", r11);
            put("r12", r12);
            put("r2", r2);
            put("sum", r1 + r2);
            if j.has("T") {
                let t = j.mutual_info(&["X"], &["T"])?;
                put("r1_t", j.mutual_info(&["X"], &["V", "T"])?);
                put(
                    "r2_t",
                    j.cond_mutual_info(&["X"], &["U", "V", "W"], &["T"])?
                        + 2.0 * t
                        + j.cond_mutual_info(&["U"], &["V"], &["T"])?
                        - j.mutual_info(&["X"], &["V", "T"])?,
                );
                put(
                    "r11_t",
                    j.cond_entropy(&["U"], &["T"])? - j.cond_entropy(&["U"], &["X", "V", "T"])?,
                );
                put(
                    "r12_t",
                    j.cond_entropy(&["W"], &["U", "V", "T"])?
                        - j.cond_entropy(&["W"], &["X", "U", "V", "T"])?,
                );
                put("r13_t", t);
                put(
                    "r21_t",
                    j.cond_entropy(&["V"], &["T"])? - j.cond_entropy(&["V"], &["X", "T"])?,
                );
                put("r22_t", t);
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::h2;

    #[test]
    fn slepian_wolf_corner() {
        // U = X, V = Y with Y = X xor Bern(0.1)
        let j = JointDist::from_fn(&[("X", 2), ("Y", 2), ("U", 2), ("V", 2)], |a| {
            if a[2] != a[0] || a[3] != a[1] {
                0.0
            } else if a[0] == a[1] {
                0.45
            } else {
                0.05
            }
        })
        .unwrap();
        let g = AbelianGroup::new(&[2]).unwrap();
        let r = theoretical_rates(ScenarioKind::BergerTung, &j, &g).unwrap();
        assert!((r["r1"] - h2(0.1)).abs() < 1e-12);
        assert!((r["r2"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comp_mac_with_silent_partner() {
        let j = JointDist::from_fn(&[("X", 2), ("Y", 2), ("Z", 2)], |a| {
            if a[1] != 0 {
                return 0.0;
            }
            let px = if a[0] == 1 { 0.3 } else { 0.7 };
            px * if a[2] == a[0] { 0.9 } else { 0.1 }
        })
        .unwrap();
        let g = AbelianGroup::new(&[2]).unwrap();
        let r = theoretical_rates(ScenarioKind::CompMac, &j, &g).unwrap();
        let expect = j.entropy(&["X"]).unwrap() - j.cond_entropy(&["X"], &["Z"]).unwrap();
        assert!((r["r_x"] - expect).abs() < 1e-12);
    }
}
