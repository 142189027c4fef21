//! Test channels for the six multi-terminal constructions.
//!
//! Every channel here has the same shape: a target variable `T` is observed
//! through a uniform group shift, `W(side, d | s) = p(T = d - s, side)`. The
//! output's last component is the shifted value `d` and the preceding
//! components are the side variables.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dmc::{ChannelPair, DegradationCertificate, Dmc, Kernel, Orientation, OutputAlphabet};
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::joint::{JointDist, MARKOV_TOLERANCE};

/// Name of the shifted component in every test-channel output.
pub const DITHER: &str = "dither";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BergerTung,
    KmSum,
    Mac,
    CompMac,
    Broadcast,
    MultipleDescription,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::BergerTung,
        ScenarioKind::KmSum,
        ScenarioKind::Mac,
        ScenarioKind::CompMac,
        ScenarioKind::Broadcast,
        ScenarioKind::MultipleDescription,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::BergerTung => "berger_tung",
            ScenarioKind::KmSum => "km_sum",
            ScenarioKind::Mac => "mac",
            ScenarioKind::CompMac => "comp_mac",
            ScenarioKind::Broadcast => "broadcast",
            ScenarioKind::MultipleDescription => "multiple_description",
        }
    }

    pub fn required_vars(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::BergerTung | ScenarioKind::KmSum => &["X", "Y", "U", "V"],
            ScenarioKind::Mac | ScenarioKind::CompMac => &["X", "Y", "Z"],
            ScenarioKind::Broadcast => &["U", "V", "X", "Y", "Z"],
            ScenarioKind::MultipleDescription => &["X", "U", "V", "W"],
        }
    }

    /// Variables whose values are used as group elements.
    fn group_valued(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::BergerTung | ScenarioKind::KmSum | ScenarioKind::Broadcast => &["U", "V"],
            ScenarioKind::Mac | ScenarioKind::CompMac => &["X", "Y"],
            ScenarioKind::MultipleDescription => &["U", "V", "W"],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("kind", format!("unknown scenario {s:?}")))
    }
}

/// `W(side..., d | s) = p(target = d - s, side...)`.
pub fn test_channel(
    joint: &JointDist,
    group: &Arc<AbelianGroup>,
    target: &str,
    side: &[&str],
) -> Result<Dmc> {
    let q = group.order();
    let t_size = joint.size_of(target)?;
    if t_size > q {
        return Err(Error::Channel(format!(
            "{target} has {t_size} values but the group has order {q}"
        )));
    }
    let mut names = vec![target];
    names.extend_from_slice(side);
    let m = joint.marginal(&names)?;
    let mut comps: Vec<(String, usize)> = side
        .iter()
        .map(|n| Ok((n.to_string(), joint.size_of(n)?)))
        .collect::<Result<_>>()?;
    comps.push((DITHER.to_string(), q));
    let outputs = OutputAlphabet::new(comps)?;
    let mut assignment = vec![0; names.len()];
    Dmc::from_fn(group.clone(), outputs, |s, label| {
        let t = group.sub(label[label.len() - 1], s);
        if t >= t_size {
            return 0.0;
        }
        assignment[0] = t;
        assignment[1..].copy_from_slice(&label[..label.len() - 1]);
        m.prob(&assignment)
    })
}

/// `(side, d) -> (side', d)` where the new side values are drawn from
/// `p(new | old)`.
fn resample_side(
    joint: &JointDist,
    from: &OutputAlphabet,
    to: &OutputAlphabet,
    new: &str,
    old: &str,
) -> Result<Kernel> {
    let cond = joint.conditional(&[new], &[old])?;
    Kernel::from_fn(from.clone(), to.clone(), |a, b| {
        if a[1] == b[1] {
            cond[a[0]][b[0]]
        } else {
            0.0
        }
    })
}

/// `(side, d) -> d + t` with `t ~ p(shift | side)`.
fn shift_by(
    joint: &JointDist,
    group: &AbelianGroup,
    from: &OutputAlphabet,
    to: &OutputAlphabet,
    shift: &str,
    side: &str,
    negate: bool,
) -> Result<Kernel> {
    let cond = joint.conditional(&[shift], &[side])?;
    Kernel::from_fn(from.clone(), to.clone(), |a, b| {
        let delta = if negate {
            group.sub(a[1], b[0])
        } else {
            group.sub(b[0], a[1])
        };
        cond[a[0]].get(delta).copied().unwrap_or(0.0)
    })
}

/// The default broadcast mapping: `X` indexes the pair `(U, V)` row-major.
pub fn default_broadcast_map(u_size: usize, v_size: usize) -> Vec<usize> {
    (0..u_size * v_size).collect()
}

/// All channel pairs of one scenario together with the (possibly augmented)
/// joint they were built from.
#[derive(Clone, Debug)]
pub struct ScenarioChannels {
    pub kind: ScenarioKind,
    pub group: Arc<AbelianGroup>,
    pub joint: JointDist,
    pub pairs: Vec<ChannelPair>,
}

impl ScenarioChannels {
    pub fn pair(&self, tag: &str) -> Result<&ChannelPair> {
        self.pairs
            .iter()
            .find(|p| p.tag == tag)
            .ok_or_else(|| Error::Channel(format!("no channel pair tagged {tag}")))
    }

    pub fn verify_all(&self) -> Result<Vec<(String, DegradationCertificate)>> {
        self.pairs
            .iter()
            .map(|p| Ok((p.tag.clone(), p.verify_degradation()?)))
            .collect()
    }

    pub fn require_degraded(&self) -> Result<()> {
        self.pairs
            .iter()
            .try_for_each(ChannelPair::require_degraded)
    }
}

pub fn build_scenario_channels(
    kind: ScenarioKind,
    joint: &JointDist,
    group: &Arc<AbelianGroup>,
) -> Result<ScenarioChannels> {
    build_scenario_channels_with_map(kind, joint, group, None)
}

/// As [`build_scenario_channels`], with an explicit broadcast mapping
/// `g(u, v)` given as a table indexed by `u * |V| + v`.
pub fn build_scenario_channels_with_map(
    kind: ScenarioKind,
    joint: &JointDist,
    group: &Arc<AbelianGroup>,
    g_map: Option<&[usize]>,
) -> Result<ScenarioChannels> {
    for v in kind.required_vars() {
        if !joint.has(v) {
            return Err(Error::Joint(format!("{kind} requires variable {v}")));
        }
    }
    let q = group.order();
    for v in kind.group_valued() {
        if joint.size_of(v)? > q {
            return Err(Error::Channel(format!(
                "{v} does not fit in a group of order {q}"
            )));
        }
    }
    let g = &**group;
    let mut joint = joint.clone();
    let pairs = match kind {
        ScenarioKind::BergerTung | ScenarioKind::KmSum => {
            joint.require_markov(&["U"], &["X"], &["Y", "V"])?;
            joint.require_markov(&["U", "X"], &["Y"], &["V"])?;
            if kind == ScenarioKind::BergerTung {
                berger_tung_pairs(&joint, group)?
            } else {
                if joint.has("W") {
                    let viol =
                        joint.functional_violation("W", &["U", "V"], |a| g.add(a[0], a[1]))?;
                    if viol > MARKOV_TOLERANCE {
                        return Err(Error::Joint("W is present but differs from U + V".into()));
                    }
                } else {
                    joint = joint.with_function("W", q, &["U", "V"], |a| g.add(a[0], a[1]))?;
                }
                km_pairs(&joint, group)?
            }
        }
        ScenarioKind::Mac | ScenarioKind::CompMac => {
            joint.require_markov(&["X"], &[], &["Y"])?;
            if kind == ScenarioKind::Mac {
                mac_pairs(&joint, group)?
            } else {
                if !joint.has("S") {
                    joint = joint.with_function("S", q, &["X", "Y"], |a| g.add(a[0], a[1]))?;
                }
                comp_mac_pairs(&joint, group)?
            }
        }
        ScenarioKind::Broadcast => {
            let (nu, nv) = (joint.size_of("U")?, joint.size_of("V")?);
            let nx = joint.size_of("X")?;
            let table = match g_map {
                Some(t) => t.to_vec(),
                None => default_broadcast_map(nu, nv),
            };
            if table.len() != nu * nv || table.iter().any(|&x| x >= nx) {
                return Err(Error::Joint(
                    "broadcast map g(u, v) does not map U x V into X".into(),
                ));
            }
            let viol = joint.functional_violation("X", &["U", "V"], |a| table[a[0] * nv + a[1]])?;
            if viol > MARKOV_TOLERANCE {
                return Err(Error::Joint(format!(
                    "X differs from g(U, V) with probability {viol:.3e}"
                )));
            }
            joint.require_markov(&["U"], &["X"], &["V"])?;
            joint.require_markov(&["U", "V"], &["X"], &["Y", "Z"])?;
            broadcast_pairs(&joint, group)?
        }
        ScenarioKind::MultipleDescription => md_pairs(&joint, group)?,
    };
    Ok(ScenarioChannels {
        kind,
        group: group.clone(),
        joint,
        pairs,
    })
}

fn marginal_pair(tag: &str, wc: Dmc, ws: Dmc, orientation: Orientation) -> Result<ChannelPair> {
    let (better, worse) = match orientation {
        Orientation::SourceCoding => (&ws, &wc),
        Orientation::ChannelCoding => (&wc, &ws),
    };
    let recipe = Kernel::marginalize(better.outputs(), &worse.outputs().names())?;
    ChannelPair::new(tag, wc, ws, orientation, recipe)
}

fn berger_tung_pairs(joint: &JointDist, group: &Arc<AbelianGroup>) -> Result<Vec<ChannelPair>> {
    let y_pair = marginal_pair(
        "Y",
        test_channel(joint, group, "V", &[])?,
        test_channel(joint, group, "V", &["Y"])?,
        Orientation::SourceCoding,
    )?;
    let wc = test_channel(joint, group, "U", &["V"])?;
    let ws = test_channel(joint, group, "U", &["X"])?;
    let recipe = resample_side(joint, ws.outputs(), wc.outputs(), "V", "X")?;
    let x_pair = ChannelPair::new("X", wc, ws, Orientation::SourceCoding, recipe)?;
    Ok(vec![y_pair, x_pair])
}

fn km_pairs(joint: &JointDist, group: &Arc<AbelianGroup>) -> Result<Vec<ChannelPair>> {
    let wc = test_channel(joint, group, "W", &[])?;
    let mut out = Vec::new();
    for (tag, own, other, obs) in [("X", "U", "V", "X"), ("Y", "V", "U", "Y")] {
        let ws = test_channel(joint, group, own, &[obs])?;
        let recipe = shift_by(joint, group, ws.outputs(), wc.outputs(), other, obs, false)?;
        out.push(ChannelPair::new(
            tag,
            wc.clone(),
            ws,
            Orientation::SourceCoding,
            recipe,
        )?);
    }
    Ok(out)
}

fn mac_pairs(joint: &JointDist, group: &Arc<AbelianGroup>) -> Result<Vec<ChannelPair>> {
    Ok(vec![
        marginal_pair(
            "Y",
            test_channel(joint, group, "Y", &["Z"])?,
            test_channel(joint, group, "Y", &[])?,
            Orientation::ChannelCoding,
        )?,
        marginal_pair(
            "X",
            test_channel(joint, group, "X", &["Y", "Z"])?,
            test_channel(joint, group, "X", &[])?,
            Orientation::ChannelCoding,
        )?,
    ])
}

fn comp_mac_pairs(joint: &JointDist, group: &Arc<AbelianGroup>) -> Result<Vec<ChannelPair>> {
    let wc = test_channel(joint, group, "S", &["Z"])?;
    let mut out = Vec::new();
    for (tag, partner) in [("X", "Y"), ("Y", "X")] {
        let ws = test_channel(joint, group, tag, &[])?;
        let recipe = shift_by(joint, group, wc.outputs(), ws.outputs(), partner, "Z", true)?;
        out.push(ChannelPair::new(
            tag,
            wc.clone(),
            ws,
            Orientation::ChannelCoding,
            recipe,
        )?);
    }
    Ok(out)
}

fn broadcast_pairs(joint: &JointDist, group: &Arc<AbelianGroup>) -> Result<Vec<ChannelPair>> {
    let z_pair = marginal_pair(
        "Z",
        test_channel(joint, group, "V", &["Z"])?,
        test_channel(joint, group, "V", &[])?,
        Orientation::ChannelCoding,
    )?;
    let wc = test_channel(joint, group, "U", &["Y"])?;
    let ws = test_channel(joint, group, "U", &["V"])?;
    let recipe = resample_side(joint, wc.outputs(), ws.outputs(), "V", "Y")?;
    let y_pair = ChannelPair::new("Y", wc, ws, Orientation::ChannelCoding, recipe)?;
    Ok(vec![z_pair, y_pair])
}

fn md_pairs(joint: &JointDist, group: &Arc<AbelianGroup>) -> Result<Vec<ChannelPair>> {
    Ok(vec![
        marginal_pair(
            "V",
            test_channel(joint, group, "V", &[])?,
            test_channel(joint, group, "V", &["X"])?,
            Orientation::SourceCoding,
        )?,
        marginal_pair(
            "U",
            test_channel(joint, group, "U", &[])?,
            test_channel(joint, group, "U", &["V", "X"])?,
            Orientation::SourceCoding,
        )?,
        marginal_pair(
            "W",
            test_channel(joint, group, "W", &["U", "V"])?,
            test_channel(joint, group, "W", &["U", "V", "X"])?,
            Orientation::SourceCoding,
        )?,
    ])
}
