//! Experiment driver behind the `npolar` binary: expands an experiment file
//! into grid points, designs or loads the codes, runs the trials, and writes
//! `results.csv`, `report.json` and `timings.csv`.
//!
//! The two result files depend only on the experiment file and the seed.
//! Wall-clock times go to `timings.csv` alone.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{apply_override, ExperimentFile, GridPoint, JointSpec, ScenarioSection, Sweep};
pub use output::{CsvRow, PointResult, CSV_SCHEMA};

use crate::design::CodeSpec;
use crate::error::{Error, Result};
use crate::rates::{theoretical_rates, Rates};
use crate::scenarios::{build_channels, design_scenario, run_designed, SpecStore};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
}

pub struct Experiment {
    pub file: ExperimentFile,
    pub points: Vec<GridPoint>,
    pub out: PathBuf,
    pub cache: PathBuf,
    pub workers: usize,
}

/// Reads and validates an experiment; nothing is written.
pub fn load_experiment(path: &Path, opts: &RunOptions) -> Result<Experiment> {
    let mut overrides = Vec::new();
    if let Some(seed) = opts.seed {
        overrides.push(format!("seed={seed}"));
    }
    overrides.extend(opts.overrides.iter().cloned());
    let file = ExperimentFile::load(path, &overrides)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let points = file.grid(base)?;
    let out = opts
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("npolar-out"));
    let cache = file.cache.clone().unwrap_or_else(|| out.join("cache"));
    let workers = opts.workers.or(file.workers).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    if workers == 0 {
        return Err(Error::config("workers", "must be positive"));
    }
    Ok(Experiment {
        file,
        points,
        out,
        cache,
        workers,
    })
}

/// Code cache keyed by content hash, one JSON file per code.
pub struct DirStore {
    dir: PathBuf,
}

impl DirStore {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(DirStore { dir })
    }
}

impl SpecStore for DirStore {
    fn load(&self, key: &str) -> Result<Option<CodeSpec>> {
        let path = self.dir.join(format!("{key}.json"));
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some(CodeSpec::from_json(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn store(&self, key: &str, spec: &CodeSpec) -> Result<()> {
        let tmp = self
            .dir
            .join(format!("{key}.json.{}.tmp", std::process::id()));
        std::fs::write(&tmp, spec.to_json()?)?;
        std::fs::rename(&tmp, self.dir.join(format!("{key}.json")))?;
        Ok(())
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))
}

fn run_point(point: &GridPoint, store: &DirStore) -> PointResult {
    let t0 = Instant::now();
    let design = design_scenario(&point.config, Some(store));
    let design_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (report, cache_hits) = match design {
        Ok(d) => (
            run_designed(&point.config, &d).map_err(|e| e.to_string()),
            d.cache_hits,
        ),
        Err(e) => (Err(e.to_string()), 0),
    };
    PointResult {
        index: point.index,
        config: point.config.clone(),
        report,
        design_seconds,
        run_seconds: t1.elapsed().as_secs_f64(),
        cache_hits,
    }
}

pub struct RunSummary {
    pub out: PathBuf,
    pub results: Vec<PointResult>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.report.is_err()).count()
    }
}

/// Runs every grid point. Points execute concurrently up to the worker
/// limit; artifacts are written once, in grid order. A failing point is
/// recorded in its row and does not stop the others.
pub fn run_experiment(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let exp = load_experiment(path, opts)?;
    std::fs::create_dir_all(&exp.out)?;
    let store = DirStore::new(&exp.cache)?;
    let results: Vec<PointResult> = pool(exp.workers)?.install(|| {
        exp.points
            .par_iter()
            .map(|p| run_point(p, &store))
            .collect()
    });
    output::write_artifacts(&exp.out, exp.file.name.as_deref(), &results)?;
    for r in &results {
        if let Err(e) = &r.report {
            log::warn!("grid point {} failed: {e}", r.index);
        }
    }
    Ok(RunSummary {
        out: exp.out,
        results,
    })
}

/// Designs the codes of every grid point. With `write`, each code goes to
/// `<out>/point<k>_<tag>.json`.
pub fn design_experiment(
    path: &Path,
    opts: &RunOptions,
    write: bool,
) -> Result<Vec<(usize, Vec<CodeSpec>)>> {
    let exp = load_experiment(path, opts)?;
    let store = DirStore::new(&exp.cache)?;
    let designs: Vec<Result<(usize, Vec<CodeSpec>)>> = pool(exp.workers)?.install(|| {
        exp.points
            .par_iter()
            .map(|p| Ok((p.index, design_scenario(&p.config, Some(&store))?.codes)))
            .collect()
    });
    let designs: Vec<(usize, Vec<CodeSpec>)> = designs.into_iter().collect::<Result<_>>()?;
    if write {
        std::fs::create_dir_all(&exp.out)?;
        for (k, codes) in &designs {
            for c in codes {
                std::fs::write(
                    exp.out.join(format!("point{k}_{}.json", c.tag)),
                    c.to_json()?,
                )?;
            }
        }
    }
    Ok(designs)
}

pub fn rates_experiment(path: &Path, opts: &RunOptions) -> Result<Vec<(GridPoint, Rates)>> {
    let exp = load_experiment(path, opts)?;
    exp.points
        .into_iter()
        .map(|p| {
            let ch = build_channels(&p.config)?;
            let r = theoretical_rates(p.config.scenario, &ch.joint, &ch.group)?;
            Ok((p, r))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub point: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Degradation certificates and capacity identities for every grid point.
pub fn verify_experiment(path: &Path, opts: &RunOptions) -> Result<Vec<Check>> {
    let exp = load_experiment(path, opts)?;
    let mut checks = Vec::new();
    for p in &exp.points {
        let ch = match build_channels(&p.config) {
            Ok(ch) => ch,
            Err(e) => {
                checks.push(Check {
                    point: p.index,
                    name: "channels".into(),
                    passed: false,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        for (tag, cert) in ch.verify_all()? {
            checks.push(Check {
                point: p.index,
                name: format!("degradation[{tag}]"),
                passed: cert.degraded,
                detail: format!("max deviation {:.3e}", cert.max_deviation),
            });
        }
        let q = (ch.group.order() as f64).log2();
        for pair in &ch.pairs {
            for (side, w) in [("wc", &pair.wc), ("ws", &pair.ws)] {
                let comps = &w.outputs().components;
                let Some(target) = target_of(&ch, pair, side) else {
                    continue;
                };
                let given: Vec<&str> = comps[..comps.len() - 1]
                    .iter()
                    .map(|c| c.0.as_str())
                    .collect();
                let expect = q - ch.joint.cond_entropy(&[target], &given)?;
                let got = w.symmetric_capacity();
                checks.push(Check {
                    point: p.index,
                    name: format!("capacity[{}.{side}]", pair.tag),
                    passed: (got - expect).abs() < 1e-9,
                    detail: format!("I = {got:.12}, log q - H = {expect:.12}"),
                });
            }
        }
        checks.push(Check {
            point: p.index,
            name: "additive_transversals".into(),
            passed: true,
            detail: if ch.group.has_additive_transversals() {
                "sum decoding is exact".into()
            } else {
                "transversals are not closed under addition; sum decoding may carry into a subgroup"
                    .into()
            },
        });
    }
    Ok(checks)
}

/// The variable a test channel describes, recovered from its pair.
fn target_of(
    ch: &crate::channels::ScenarioChannels,
    pair: &crate::dmc::ChannelPair,
    side: &str,
) -> Option<&'static str> {
    use crate::channels::ScenarioKind::*;
    Some(match (ch.kind, pair.tag.as_str(), side) {
        (BergerTung, "Y", _) => "V",
        (BergerTung, "X", _) => "U",
        (KmSum, _, "wc") => "W",
        (KmSum, "X", _) => "U",
        (KmSum, "Y", _) => "V",
        (Mac, "X", _) => "X",
        (Mac, "Y", _) => "Y",
        (CompMac, _, "wc") => "S",
        (CompMac, "X", _) => "X",
        (CompMac, "Y", _) => "Y",
        (Broadcast, "Z", _) => "V",
        (Broadcast, "Y", _) => "U",
        (MultipleDescription, "V", _) => "V",
        (MultipleDescription, "U", _) => "U",
        (MultipleDescription, "W", _) => "W",
        _ => return None,
    })
}
