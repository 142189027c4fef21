//! End-to-end simulations of the six multi-terminal constructions.
//!
//! [`design_scenario`] builds and certifies the channel pairs and designs
//! one nested code per terminal; [`run_scenario`] then runs independent
//! trials in parallel and reduces them in trial order.

mod pipelines;
mod stats;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{build_scenario_channels_with_map, ScenarioChannels, ScenarioKind};
use crate::codec::Codec;
use crate::design::{
    design_code_with_params, CodeSpec, DesignConfig, EstimationMode, IndexParams, Thresholds,
    CODESPEC_VERSION,
};
use crate::dmc::{Dmc, Orientation};
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::joint::JointDist;
use crate::rates::{theoretical_rates, Rates};

pub use stats::Estimate;

pub fn default_estimation() -> EstimationMode {
    EstimationMode::MonteCarlo { trials: 2000 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub joint: JointDist,
    pub group: Vec<usize>,
    pub n: u32,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_estimation")]
    pub estimation: EstimationMode,
    /// Distortion tables keyed `d1`, `d2`, `d3`, or `d` for the sum problem.
    /// Missing tables default to Hamming distortion.
    #[serde(default)]
    pub distortions: BTreeMap<String, Vec<Vec<f64>>>,
    /// Broadcast mapping `g(u, v)` indexed by `u * |V| + v`.
    #[serde(default)]
    pub broadcast_map: Option<Vec<usize>>,
    /// Broadcast input cost `w(x)`.
    #[serde(default)]
    pub cost: Option<Vec<f64>>,
}

/// Terminal tags in design order, and the rate key each one targets.
pub fn terminals(kind: ScenarioKind) -> &'static [(&'static str, &'static str)] {
    match kind {
        ScenarioKind::BergerTung => &[("Y", "r2"), ("X", "r1")],
        ScenarioKind::KmSum => &[("X", "r1"), ("Y", "r2")],
        ScenarioKind::Mac => &[("Y", "r2"), ("X", "r1")],
        ScenarioKind::CompMac => &[("X", "r"), ("Y", "r")],
        ScenarioKind::Broadcast => &[("Z", "r2"), ("Y", "r1")],
        ScenarioKind::MultipleDescription => &[("V", "r2"), ("U", "r11"), ("W", "r12")],
    }
}

/// Distortion tables each scenario uses: `(key, source variable, reconstruction variable)`.
fn distortion_axes(kind: ScenarioKind) -> &'static [(&'static str, &'static str, &'static str)] {
    match kind {
        ScenarioKind::BergerTung => &[("d1", "X", "U"), ("d2", "Y", "V")],
        ScenarioKind::MultipleDescription => {
            &[("d1", "X", "U"), ("d2", "X", "V"), ("d3", "X", "W")]
        }
        _ => &[],
    }
}

fn hamming(rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|a| (0..cols).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
        .collect()
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        AbelianGroup::new(&self.group).map_err(|e| Error::config("group", e.to_string()))?;
        for v in self.scenario.required_vars() {
            if !self.joint.has(v) {
                return Err(Error::config(
                    "joint",
                    format!("{} requires variable {v}", self.scenario),
                ));
            }
        }
        self.thresholds.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        if let EstimationMode::MonteCarlo { trials } = self.estimation {
            if trials < crate::design::MIN_MC_TRIALS {
                return Err(Error::config(
                    "estimation.trials",
                    format!(
                        "need at least {} Monte-Carlo trials",
                        crate::design::MIN_MC_TRIALS
                    ),
                ));
            }
        }
        for (key, table) in &self.distortions {
            let (rows, cols) = self.distortion_shape(key)?;
            if table.len() != rows || table.iter().any(|r| r.len() != cols) {
                return Err(Error::config(
                    format!("distortions.{key}"),
                    format!("expected a {rows} x {cols} table"),
                ));
            }
            if table
                .iter()
                .flatten()
                .any(|&d| !(d >= 0.0 && d.is_finite()))
            {
                return Err(Error::config(
                    format!("distortions.{key}"),
                    "entries must be finite and nonnegative",
                ));
            }
        }
        if let Some(cost) = &self.cost {
            if self.scenario != ScenarioKind::Broadcast {
                return Err(Error::config(
                    "cost",
                    "only the broadcast scenario has an input cost",
                ));
            }
            if cost.len() != self.joint.size_of("X")?
                || cost.iter().any(|&c| !(c >= 0.0 && c.is_finite()))
            {
                return Err(Error::config(
                    "cost",
                    "need one finite nonnegative cost per value of X",
                ));
            }
        }
        Ok(())
    }

    fn distortion_shape(&self, key: &str) -> Result<(usize, usize)> {
        if self.scenario == ScenarioKind::KmSum && key == "d" {
            let q: usize = self.group.iter().product();
            return Ok((self.joint.size_of("X")? * self.joint.size_of("Y")?, q));
        }
        match distortion_axes(self.scenario).iter().find(|a| a.0 == key) {
            Some(&(_, a, b)) => Ok((self.joint.size_of(a)?, self.joint.size_of(b)?)),
            None => Err(Error::config(
                format!("distortions.{key}"),
                format!("not used by {}", self.scenario),
            )),
        }
    }

    /// The configured table for `key`, or Hamming distortion.
    pub fn distortion(&self, key: &str) -> Result<Vec<Vec<f64>>> {
        if let Some(t) = self.distortions.get(key) {
            return Ok(t.clone());
        }
        let (rows, cols) = self.distortion_shape(key)?;
        if self.scenario == ScenarioKind::KmSum {
            let g = AbelianGroup::new(&self.group)?;
            let ny = self.joint.size_of("Y")?;
            return Ok((0..rows)
                .map(|r| {
                    let (x, y) = (r / ny, r % ny);
                    (0..cols)
                        .map(|w| {
                            if x < cols && y < cols && g.add(x, y) == w {
                                0.0
                            } else {
                                1.0
                            }
                        })
                        .collect()
                })
                .collect());
        }
        Ok(hamming(rows, cols))
    }

    /// `E d(source, auxiliary)` under the joint, for every distortion the
    /// scenario reports.
    pub fn distortion_targets(&self) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for &(key, a, b) in distortion_axes(self.scenario) {
            let d = self.distortion(key)?;
            out.insert(
                key.to_uppercase(),
                self.joint.expectation(&[a, b], |v| d[v[0]][v[1]])?,
            );
        }
        if let Some(cost) = &self.cost {
            out.insert(
                "cost".into(),
                self.joint.expectation(&["X"], |v| cost[v[0]])?,
            );
        }
        Ok(out)
    }

    pub fn design_config(&self) -> DesignConfig {
        DesignConfig {
            n: self.n,
            thresholds: self.thresholds,
            mode: self.estimation,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalReport {
    pub tag: String,
    pub designed_rate: f64,
    pub theoretical_rate: f64,
    pub rate_gap: f64,
    pub message_symbols: usize,
    /// Absent for the sum problems, whose decoder only recovers a sum.
    pub block_errors: Option<u64>,
    pub block_error_rate: Option<Estimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: ScenarioKind,
    pub block_length: usize,
    pub trials: usize,
    pub seed: u64,
    pub terminals: Vec<TerminalReport>,
    pub theoretical: Rates,
    pub targets: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, Estimate>,
    pub events: BTreeMap<String, u64>,
    pub config: ScenarioConfig,
}

impl SimReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|e| e.mean)
    }

    pub fn terminal(&self, tag: &str) -> Option<&TerminalReport> {
        self.terminals.iter().find(|t| t.tag == tag)
    }

    /// Largest `|designed - theoretical|` over the terminals.
    pub fn max_rate_gap(&self) -> f64 {
        self.terminals
            .iter()
            .map(|t| t.rate_gap.abs())
            .fold(0.0, f64::max)
    }
}

/// Persistent storage for designed codes.
pub trait SpecStore: Sync {
    fn load(&self, key: &str) -> Result<Option<CodeSpec>>;
    fn store(&self, key: &str, spec: &CodeSpec) -> Result<()>;
}

#[derive(Serialize)]
struct DesignKey<'a> {
    version: u32,
    tag: &'a str,
    orientation: Orientation,
    wc: &'a Dmc,
    ws: Vec<&'a Dmc>,
    design: DesignConfig,
    instance: u64,
}

/// Content hash of everything a designed code depends on.
pub fn design_key(
    tag: &str,
    wc: &Dmc,
    ws: &[&Dmc],
    orientation: Orientation,
    cfg: &DesignConfig,
    instance: u64,
) -> Result<String> {
    let key = DesignKey {
        version: CODESPEC_VERSION,
        tag,
        orientation,
        wc,
        ws: ws.to_vec(),
        design: *cfg,
        instance,
    };
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&key)?)))
}

pub struct ScenarioDesign {
    pub channels: ScenarioChannels,
    /// One code per terminal, in the order of [`terminals`].
    pub codes: Vec<CodeSpec>,
    pub cache_hits: usize,
}

impl ScenarioDesign {
    pub fn code(&self, tag: &str) -> Result<&CodeSpec> {
        self.codes
            .iter()
            .find(|c| c.tag == tag)
            .ok_or_else(|| Error::Channel(format!("no code for terminal {tag}")))
    }
}

pub fn build_channels(cfg: &ScenarioConfig) -> Result<ScenarioChannels> {
    let group = Arc::new(AbelianGroup::new(&cfg.group)?);
    build_scenario_channels_with_map(
        cfg.scenario,
        &cfg.joint,
        &group,
        cfg.broadcast_map.as_deref(),
    )
}

/// Builds the channel pairs, refuses uncertified pairs, and designs every
/// terminal's code (loading it from `store` when present).
pub fn design_scenario(
    cfg: &ScenarioConfig,
    store: Option<&dyn SpecStore>,
) -> Result<ScenarioDesign> {
    cfg.validate()?;
    let channels = build_channels(cfg)?;
    channels.require_degraded()?;
    let dcfg = cfg.design_config();
    let tags: Vec<&str> = terminals(cfg.scenario).iter().map(|t| t.0).collect();
    // the sum problems share one index structure across both terminals
    let shared = matches!(cfg.scenario, ScenarioKind::KmSum | ScenarioKind::CompMac);
    let mut params: BTreeMap<(String, &'static str), IndexParams> = BTreeMap::new();
    let mut estimate = |tag: &str, side: &'static str, w: &Dmc| -> Result<IndexParams> {
        let key = if shared && side == "c" {
            ("*".to_string(), side)
        } else {
            (tag.to_string(), side)
        };
        if let Some(p) = params.get(&key) {
            return Ok(p.clone());
        }
        let p = dcfg.estimate(w)?;
        params.insert(key, p.clone());
        Ok(p)
    };
    let mut codes = Vec::new();
    let mut cache_hits = 0;
    for (instance, tag) in tags.iter().enumerate() {
        let pair = channels.pair(tag)?;
        let partners: Vec<&crate::dmc::ChannelPair> = if shared {
            tags.iter()
                .map(|t| channels.pair(t))
                .collect::<Result<_>>()?
        } else {
            vec![pair]
        };
        let ws: Vec<&Dmc> = partners.iter().map(|p| &p.ws).collect();
        let key = design_key(tag, &pair.wc, &ws, pair.orientation, &dcfg, instance as u64)?;
        if let Some(spec) = store.map(|s| s.load(&key)).transpose()?.flatten() {
            cache_hits += 1;
            codes.push(spec);
            continue;
        }
        let pc = estimate(tag, "c", &pair.wc)?;
        let ps: Vec<IndexParams> = partners
            .iter()
            .map(|p| estimate(&p.tag, "s", &p.ws))
            .collect::<Result<_>>()?;
        let refs: Vec<&IndexParams> = ps.iter().collect();
        let spec = design_code_with_params(pair, &pc, &refs, &dcfg, instance as u64)?;
        if let Some(s) = store {
            s.store(&key, &spec)?;
        }
        codes.push(spec);
    }
    Ok(ScenarioDesign {
        channels,
        codes,
        cache_hits,
    })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimReport> {
    let design = design_scenario(cfg, None)?;
    run_designed(cfg, &design)
}

/// Runs the trials of an already designed scenario.
pub fn run_designed(cfg: &ScenarioConfig, design: &ScenarioDesign) -> Result<SimReport> {
    let ctx = pipelines::Context::new(cfg, design)?;
    let outcomes: Vec<stats::TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map_init(
            || {
                design
                    .codes
                    .iter()
                    .map(Codec::new)
                    .collect::<Result<Vec<_>>>()
            },
            |codecs, t| match codecs {
                Ok(c) => ctx.trial(c, t),
                Err(e) => Err(Error::Codec(e.to_string())),
            },
        )
        .collect::<Result<_>>()?;
    let agg = stats::aggregate(&outcomes);
    let theoretical =
        theoretical_rates(cfg.scenario, &design.channels.joint, &design.channels.group)?;
    let terminals = terminals(cfg.scenario)
        .iter()
        .map(|&(tag, key)| {
            let spec = design.code(tag)?;
            let designed = spec.rate();
            let target = theoretical[key];
            let errors = agg.events.get(&format!("block_errors_{tag}")).copied();
            Ok(TerminalReport {
                tag: tag.to_string(),
                designed_rate: designed,
                theoretical_rate: target,
                rate_gap: designed - target,
                message_symbols: spec.message_indices().len(),
                block_errors: errors,
                block_error_rate: agg.metrics.get(&format!("block_error_{tag}")).cloned(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SimReport {
        scenario: cfg.scenario,
        block_length: 1 << cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        terminals,
        theoretical,
        targets: cfg.distortion_targets()?,
        metrics: agg.metrics,
        events: agg.events,
        config: cfg.clone(),
    })
}
