//! Experiment files.
//!
//! ```toml
//! name = "berger_tung_sweep"
//! seed = 7
//!
//! [[scenario]]
//! kind = "berger_tung"
//! group = [2]
//! n = 10
//! trials = 200
//! thresholds = { delta_c = 0.01, delta_s = 0.1 }
//! estimation = { mode = "monte_carlo", trials = 2000 }
//! joint = { preset = "bt_doubly_symmetric", params = [0.1, 0.1, 0.1] }
//!
//! [sweep]
//! n = [8, 10, 12]
//! ```
//!
//! A joint is a preset, a `file` in the text format of
//! [`JointDist::parse`] (relative to the experiment file), or inline
//! `vars`/`sizes`/`probs`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channels::ScenarioKind;
use crate::design::{EstimationMode, Thresholds};
use crate::error::{Error, Result};
use crate::joint::{JointDist, Variable};
use crate::presets;
use crate::scenarios::{default_estimation, ScenarioConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub preset: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    pub file: Option<PathBuf>,
    pub vars: Option<Vec<String>>,
    pub sizes: Option<Vec<usize>>,
    pub probs: Option<Vec<f64>>,
}

impl JointSpec {
    pub fn resolve(&self, base: &Path) -> Result<JointDist> {
        match (&self.preset, &self.file, &self.vars) {
            (Some(name), None, None) => presets::by_name(name, &self.params),
            (None, Some(file), None) => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::config("joint.file", format!("{}: {e}", path.display())))?;
                JointDist::parse(&text)
            }
            (None, None, Some(vars)) => {
                let (Some(sizes), Some(probs)) = (&self.sizes, &self.probs) else {
                    return Err(Error::config(
                        "joint",
                        "inline joints need vars, sizes and probs",
                    ));
                };
                if sizes.len() != vars.len() {
                    return Err(Error::config("joint.sizes", "one size per variable"));
                }
                let vars = vars
                    .iter()
                    .zip(sizes)
                    .map(|(n, &s)| Variable {
                        name: n.clone(),
                        size: s,
                    })
                    .collect();
                JointDist::new(vars, probs.clone())
            }
            _ => Err(Error::config(
                "joint",
                "give exactly one of preset, file, or inline vars",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub group: Vec<usize>,
    pub n: u32,
    pub trials: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_estimation")]
    pub estimation: EstimationMode,
    pub joint: JointSpec,
    #[serde(default)]
    pub distortions: BTreeMap<String, Vec<Vec<f64>>>,
    pub broadcast_map: Option<Vec<usize>>,
    pub cost: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub n: Option<Vec<u32>>,
    pub delta_c: Option<Vec<f64>>,
    pub delta_s: Option<Vec<f64>>,
    pub trials: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub name: Option<String>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Code cache directory; defaults to `<out>/cache`.
    pub cache: Option<PathBuf>,
    pub workers: Option<usize>,
    pub scenario: Vec<ScenarioSection>,
    #[serde(default)]
    pub sweep: Sweep,
}

/// One fully resolved experiment point.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub index: usize,
    pub config: ScenarioConfig,
}

fn axis<T: Clone>(values: &Option<Vec<T>>, default: T, field: &str) -> Result<Vec<T>> {
    match values {
        Some(v) if v.is_empty() => Err(Error::config(
            format!("sweep.{field}"),
            "sweep axis is empty",
        )),
        Some(v) => Ok(v.clone()),
        None => Ok(vec![default]),
    }
}

impl ExperimentFile {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::config("file", e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let exp: ExperimentFile = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("file", e.message().to_string()))?;
        if exp.scenario.is_empty() {
            return Err(Error::config("scenario", "no scenarios defined"));
        }
        Ok(exp)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    /// Expands scenarios and sweep axes into grid points, in a fixed order
    /// (scenario, n, delta_c, delta_s, trials, seed).
    pub fn grid(&self, base: &Path) -> Result<Vec<GridPoint>> {
        let mut out = Vec::new();
        for s in &self.scenario {
            let joint = s.joint.resolve(base)?;
            let ns = axis(&self.sweep.n, s.n, "n")?;
            let dcs = axis(&self.sweep.delta_c, s.thresholds.delta_c, "delta_c")?;
            let dss = axis(&self.sweep.delta_s, s.thresholds.delta_s, "delta_s")?;
            let trials = axis(&self.sweep.trials, s.trials, "trials")?;
            let seeds = axis(&self.sweep.seeds, self.seed, "seeds")?;
            for &n in &ns {
                for &delta_c in &dcs {
                    for &delta_s in &dss {
                        for &t in &trials {
                            for &seed in &seeds {
                                let config = ScenarioConfig {
                                    scenario: s.kind,
                                    joint: joint.clone(),
                                    group: s.group.clone(),
                                    n,
                                    thresholds: Thresholds { delta_c, delta_s },
                                    trials: t,
                                    seed,
                                    estimation: s.estimation,
                                    distortions: s.distortions.clone(),
                                    broadcast_map: s.broadcast_map.clone(),
                                    cost: s.cost.clone(),
                                };
                                config.validate()?;
                                out.push(GridPoint {
                                    index: out.len(),
                                    config,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Applies `path.to.key=value`. The value is read as a TOML value, falling
/// back to a bare string. A path segment that meets an array of tables
/// applies to every element.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let Some((path, raw)) = spec.split_once('=') else {
        return Err(Error::config(
            "override",
            format!("expected key=value, got {spec:?}"),
        ));
    };
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config("override", format!("malformed key {path:?}")));
    }
    set_path(table, &keys, &value, path)
}

fn set_path(table: &mut toml::Table, keys: &[&str], value: &toml::Value, full: &str) -> Result<()> {
    let (head, rest) = keys.split_first().expect("nonempty");
    if rest.is_empty() {
        table.insert(head.to_string(), value.clone());
        return Ok(());
    }
    let entry = table
        .entry(head.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => set_path(t, rest, value, full),
        toml::Value::Array(items) if items.iter().all(|i| i.is_table()) => {
            for item in items {
                if let toml::Value::Table(t) = item {
                    set_path(t, rest, value, full)?;
                }
            }
            Ok(())
        }
        _ => Err(Error::config(
            "override",
            format!("{full}: `{head}` is not a table"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 3
[[scenario]]
kind = "berger_tung"
group = [2]
n = 6
trials = 4
joint = { preset = "bt_doubly_symmetric", params = [0.1, 0.1, 0.1] }
"#;

    #[test]
    fn overrides_reach_arrays_of_tables() {
        let e = ExperimentFile::parse(
            BASIC,
            &[
                "scenario.n=8".into(),
                "sweep.n=[4, 5]".into(),
                "seed=9".into(),
            ],
        )
        .unwrap();
        assert_eq!(e.scenario[0].n, 8);
        assert_eq!(e.sweep.n, Some(vec![4, 5]));
        assert_eq!(e.seed, 9);
        let g = e.grid(Path::new(".")).unwrap();
        assert_eq!(g.iter().map(|p| p.config.n).collect::<Vec<_>>(), vec![4, 5]);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = BASIC.replace("trials = 4", "trials = 4\ntypo = 1");
        assert!(matches!(
            ExperimentFile::parse(&bad, &[]),
            Err(Error::Config { .. })
        ));
        let e = ExperimentFile::parse(BASIC, &["sweep.n=[]".into()]).unwrap();
        match e.grid(Path::new(".")) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "sweep.n"),
            other => panic!("{other:?}"),
        }
        assert!(apply_override(&mut toml::Table::new(), "nokey").is_err());
    }

    #[test]
    fn inline_joint() {
        let j = JointSpec {
            preset: None,
            params: vec![],
            file: None,
            vars: Some(vec!["X".into()]),
            sizes: Some(vec![2]),
            probs: Some(vec![0.5, 0.5]),
        };
        assert_eq!(j.resolve(Path::new(".")).unwrap().size_of("X").unwrap(), 2);
    }
}
