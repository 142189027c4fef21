//! Code construction: per-index Bhattacharyya estimates for the synthesized
//! channels, the subgroup partition of the indices, and the resulting
//! nested code.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmc::{ChannelPair, Dmc, Orientation};
use crate::error::{Error, Result};
use crate::group::{AbelianGroup, Element, SubgroupId};
use crate::polar::TransformPlan;
use crate::rng::{stream_rng, streams};
use crate::sc::{observation_likelihoods, ScEngine};

pub const CODESPEC_VERSION: u32 = 1;
pub const MIN_MC_TRIALS: usize = 1000;
pub const EXACT_MAX_N: usize = 8;
pub const EXACT_MAX_OUTPUTS: usize = 4;
pub const EXACT_MAX_WORK: u128 = 1 << 28;
/// Monte-Carlo trials handled by one work unit; fixed so the reduction
/// order does not depend on the thread pool.
const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EstimationMode {
    Exact,
    MonteCarlo { trials: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    pub n: u32,
    pub q: usize,
    pub mode: EstimationMode,
    /// `z[i][d]`: estimate of `Z_d` for the `i`-th synthesized channel.
    pub z: Vec<Vec<f64>>,
    /// Monte-Carlo samples redrawn because the true input's posterior
    /// underflowed.
    pub resamples: u64,
}

impl IndexParams {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `Z^H` at index `i`, clipped to `[0, q - |H|]`.
    pub fn z_sub(&self, group: &AbelianGroup, i: usize, h: SubgroupId) -> f64 {
        let sub = group.subgroup(h);
        let s: f64 = self.z[i]
            .iter()
            .enumerate()
            .filter(|(d, _)| !sub.contains(*d))
            .map(|(_, z)| z)
            .sum();
        s.clamp(0.0, (group.order() - sub.order()) as f64)
    }
}

pub fn estimate_index_params(
    w: &Dmc,
    n: u32,
    mode: EstimationMode,
    seed: u64,
) -> Result<IndexParams> {
    match mode {
        EstimationMode::Exact => exact_params(w, n),
        EstimationMode::MonteCarlo { trials } => monte_carlo_params(w, n, trials, seed),
    }
}

fn check_exact(w: &Dmc, n: u32) -> Result<usize> {
    let len = 1usize << n;
    let (q, m) = (w.q() as u128, w.output_size() as u128);
    if len > EXACT_MAX_N || w.output_size() > EXACT_MAX_OUTPUTS {
        return Err(Error::Infeasible(format!(
            "exact enumeration needs N <= {EXACT_MAX_N} and at most {EXACT_MAX_OUTPUTS} outputs (got N = {len}, {m} outputs)"
        )));
    }
    let work = (q * m).checked_pow(len as u32).unwrap_or(u128::MAX);
    if work > EXACT_MAX_WORK {
        return Err(Error::Infeasible(format!(
            "exact enumeration of {work} (input, output) pairs"
        )));
    }
    Ok(len)
}

fn digits(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

/// Direct evaluation of `Z_d(W_N^(i))` from the definition of the
/// synthesized channels, without the SC recursion.
fn exact_params(w: &Dmc, n: u32) -> Result<IndexParams> {
    let len = check_exact(w, n)?;
    let g = w.group();
    let (q, m) = (g.order(), w.output_size());
    let plan = TransformPlan::new(n)?;
    let inputs = q.pow(len as u32);
    let codewords: Vec<Vec<Element>> = (0..inputs)
        .map(|a| plan.transform(g, &digits(a, q, len)))
        .collect();
    let scale = 1.0 / (q as f64).powi(len as i32 - 1);
    let mut z = vec![vec![0.0; q]; len];
    let mut sums: Vec<Vec<f64>> = (0..len).map(|i| vec![0.0; q.pow(i as u32 + 1)]).collect();
    for yi in 0..m.pow(len as u32) {
        let ys = digits(yi, m, len);
        let last = &mut sums[len - 1];
        for (a, x) in codewords.iter().enumerate() {
            last[a] = x
                .iter()
                .zip(&ys)
                .map(|(&xj, &yj)| w.prob(xj, yj))
                .product::<f64>()
                * scale;
        }
        for i in (0..len - 1).rev() {
            let (head, tail) = sums.split_at_mut(i + 1);
            let (dst, src) = (&mut head[i], &tail[0]);
            for (k, slot) in dst.iter_mut().enumerate() {
                *slot = src[k * q..(k + 1) * q].iter().sum();
            }
        }
        for (i, s) in sums.iter().enumerate() {
            for prefix in s.chunks(q) {
                for (d, zd) in z[i].iter_mut().enumerate() {
                    let acc: f64 = (0..q)
                        .map(|ai| (prefix[ai] * prefix[g.add(ai, d)]).sqrt())
                        .sum();
                    *zd += acc / q as f64;
                }
            }
        }
    }
    for zi in &mut z {
        zi.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    }
    Ok(IndexParams {
        n,
        q,
        mode: EstimationMode::Exact,
        z,
        resamples: 0,
    })
}

/// Adds `sqrt(post(a_i + d) / post(a_i))` from one genie-aided SC pass to
/// `acc`; returns `false` (adding nothing) when the true input's posterior
/// underflowed to zero.
fn genie_ratios(
    engine: &mut ScEngine,
    obs: &[f64],
    a: &[Element],
    group: &AbelianGroup,
    acc: &mut [f64],
) -> Result<bool> {
    let q = group.order();
    let mut ok = true;
    let mut local = vec![0.0; acc.len()];
    engine.run(obs, |i, post| {
        let p = post[a[i]];
        if p <= 0.0 {
            ok = false;
        } else {
            for d in 0..q {
                let num = post[group.add(a[i], d)];
                local[i * q + d] = if num > 0.0 { (num / p).sqrt() } else { 0.0 };
            }
        }
        Ok(a[i])
    })?;
    if ok {
        acc.iter_mut().zip(&local).for_each(|(s, l)| *s += l);
    }
    Ok(ok)
}

fn monte_carlo_params(w: &Dmc, n: u32, trials: usize, seed: u64) -> Result<IndexParams> {
    if trials < MIN_MC_TRIALS {
        return Err(Error::Infeasible(format!(
            "monte-carlo estimation needs at least {MIN_MC_TRIALS} trials"
        )));
    }
    let group = w.group_arc().clone();
    let q = group.order();
    let len = 1usize << n;
    let plan = TransformPlan::new(n)?;
    let sampler = w.sampler();
    let chunks: Vec<(usize, usize)> = (0..trials)
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(trials)))
        .collect();
    let partials: Vec<Result<(Vec<f64>, u64)>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut engine = ScEngine::new(group.clone(), n)?;
            let mut acc = vec![0.0; len * q];
            let mut resamples = 0u64;
            let mut ys = vec![0usize; len];
            for t in start..end {
                let mut rng = stream_rng(seed, streams::DESIGN, t as u64);
                loop {
                    let a: Vec<Element> = (0..len).map(|_| rng.gen_range(0..q)).collect();
                    let x = plan.transform(&group, &a);
                    for (y, &xj) in ys.iter_mut().zip(&x) {
                        *y = sampler.sample(xj, &mut rng);
                    }
                    let obs = observation_likelihoods(w, &ys);
                    if genie_ratios(&mut engine, &obs, &a, &group, &mut acc)? {
                        break;
                    }
                    resamples += 1;
                }
            }
            Ok((acc, resamples))
        })
        .collect();
    let mut total = vec![0.0; len * q];
    let mut resamples = 0;
    for part in partials {
        let (acc, r) = part?;
        total.iter_mut().zip(&acc).for_each(|(t, a)| *t += a);
        resamples += r;
    }
    let z = total
        .chunks(q)
        .map(|row| {
            row.iter()
                .map(|s| (s / trials as f64).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    Ok(IndexParams {
        n,
        q,
        mode: EstimationMode::MonteCarlo { trials },
        z,
        resamples,
    })
}

/// Exact expectation of the SC ratio statistic over every input and
/// output sequence. Agrees with [`EstimationMode::Exact`] when the recursion
/// is correct; kept separate so the two computations can be compared.
pub fn sc_enumerated_params(w: &Dmc, n: u32) -> Result<IndexParams> {
    let len = check_exact(w, n)?;
    let group = w.group_arc().clone();
    let (q, m) = (group.order(), w.output_size());
    let plan = TransformPlan::new(n)?;
    let mut engine = ScEngine::new(group.clone(), n)?;
    let mut z = vec![vec![0.0; q]; len];
    for ai in 0..q.pow(len as u32) {
        let a = digits(ai, q, len);
        let x = plan.transform(&group, &a);
        for yi in 0..m.pow(len as u32) {
            let ys = digits(yi, m, len);
            let weight: f64 = x
                .iter()
                .zip(&ys)
                .map(|(&xj, &yj)| w.prob(xj, yj))
                .product::<f64>()
                / (q as f64).powi(len as i32);
            if weight == 0.0 {
                continue;
            }
            let mut acc = vec![0.0; len * q];
            if !genie_ratios(
                &mut engine,
                &observation_likelihoods(w, &ys),
                &a,
                &group,
                &mut acc,
            )? {
                return Err(Error::DecodeFailure { index: 0 });
            }
            for (i, zi) in z.iter_mut().enumerate() {
                for (d, v) in zi.iter_mut().enumerate() {
                    *v += weight * acc[i * q + d];
                }
            }
        }
    }
    Ok(IndexParams {
        n,
        q,
        mode: EstimationMode::Exact,
        z,
        resamples: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub delta_c: f64,
    pub delta_s: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            delta_c: 0.01,
            delta_s: 0.1,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let Thresholds { delta_c, delta_s } = *self;
        if !(delta_c > 0.0 && delta_c <= delta_s && delta_s < 1.0) {
            return Err(Error::config(
                "thresholds",
                format!("need 0 < delta_c <= delta_s < 1, got {delta_c}, {delta_s}"),
            ));
        }
        Ok(())
    }

    /// `beta` with `2^{-N^beta} = delta`, for comparison with the
    /// asymptotic thresholds.
    pub fn beta_equivalent(delta: f64, n: u32) -> f64 {
        if n == 0 {
            return f64::NAN;
        }
        (1.0 / delta).log2().log2() / n as f64
    }
}

/// The minimal subgroup `S` with `Z^S < threshold`, ties broken by order,
/// then by the `Z^S` value, then by lattice position.
fn minimal_qualifying(
    group: &AbelianGroup,
    params: &IndexParams,
    i: usize,
    threshold: f64,
) -> SubgroupId {
    let qualifying: Vec<(SubgroupId, f64)> = group
        .subgroup_ids()
        .map(|s| (s, params.z_sub(group, i, s)))
        .filter(|&(_, z)| z < threshold)
        .collect();
    let minimal = qualifying.iter().filter(|(s, _)| {
        !qualifying
            .iter()
            .any(|(t, _)| t != s && group.is_subgroup_of(*t, *s))
    });
    minimal
        .min_by(|(a, za), (b, zb)| {
            let (oa, ob) = (group.subgroup(*a).order(), group.subgroup(*b).order());
            oa.cmp(&ob).then(za.total_cmp(zb)).then(a.0.cmp(&b.0))
        })
        .map(|&(s, _)| s)
        .unwrap_or_else(|| group.whole())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Promotion {
    pub index: usize,
    pub h: usize,
    pub k_before: usize,
    pub k_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Channel-side subgroup `H` per index.
    pub h: Vec<SubgroupId>,
    /// Source-side subgroup `K` per index, after promotion.
    pub k: Vec<SubgroupId>,
    pub promotions: Vec<Promotion>,
}

impl Partition {
    /// Index lists per `(H, K)` cell.
    pub fn cells(&self) -> BTreeMap<(SubgroupId, SubgroupId), Vec<usize>> {
        let mut out: BTreeMap<_, Vec<usize>> = BTreeMap::new();
        for (i, (&h, &k)) in self.h.iter().zip(&self.k).enumerate() {
            out.entry((h, k)).or_default().push(i);
        }
        out
    }
}

/// Assigns every index to a cell `A_H ∩ B_K`. Several source-side estimates
/// may be given; their `K` choices are intersected, which builds one index
/// structure usable by every encoder.
pub fn partition_indices(
    group: &AbelianGroup,
    params_c: &IndexParams,
    params_s: &[&IndexParams],
    thresholds: Thresholds,
    orientation: Orientation,
) -> Result<Partition> {
    thresholds.validate()?;
    if params_s.is_empty() {
        return Err(Error::Codec("no source-side parameters".into()));
    }
    for p in params_s {
        if p.len() != params_c.len() || p.q != params_c.q {
            return Err(Error::Codec(
                "index parameters disagree on block length or group".into(),
            ));
        }
    }
    if params_c.q != group.order() {
        return Err(Error::Codec(
            "index parameters were estimated over a different group".into(),
        ));
    }
    let len = params_c.len();
    let mut h = Vec::with_capacity(len);
    let mut k = Vec::with_capacity(len);
    let mut promotions = Vec::new();
    for i in 0..len {
        let hi = minimal_qualifying(group, params_c, i, thresholds.delta_c);
        let ki = params_s
            .iter()
            .map(|p| minimal_qualifying(group, p, i, 1.0 - thresholds.delta_s))
            .reduce(|a, b| group.meet(a, b))
            .expect("nonempty");
        let fixed = match orientation {
            Orientation::SourceCoding if !group.is_subgroup_of(ki, hi) => Some(group.meet(ki, hi)),
            Orientation::ChannelCoding if !group.is_subgroup_of(hi, ki) => Some(group.join(ki, hi)),
            _ => None,
        };
        if let Some(kf) = fixed {
            promotions.push(Promotion {
                index: i,
                h: hi.0,
                k_before: ki.0,
                k_after: kf.0,
            });
        }
        h.push(hi);
        k.push(fixed.unwrap_or(ki));
    }
    if !promotions.is_empty() {
        log::debug!(
            "{} of {len} indices needed a promoted source subgroup",
            promotions.len()
        );
    }
    Ok(Partition { h, k, promotions })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationMeta {
    pub mode: EstimationMode,
    pub seed: u64,
    pub resamples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub h: Vec<Element>,
    pub k: Vec<Element>,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CodeSpecFile {
    version: u32,
    tag: String,
    group: Vec<usize>,
    n: u32,
    orientation: Orientation,
    thresholds: Thresholds,
    beta_c: f64,
    beta_s: f64,
    estimation: EstimationMeta,
    rate: f64,
    partition: Vec<CellEntry>,
    promotions: Vec<Promotion>,
    dither: Vec<Element>,
    frozen: Vec<Element>,
    wc: Dmc,
    ws: Dmc,
}

/// A designed nested polar code.
///
/// At index `i` the two subgroups from the partition are ordered as
/// `lo <= hi` (`K <= H` for source coding, `H <= K` for channel coding).
/// The component `[a_i]_lo` is shared randomness (`frozen[i]`), the
/// component in `T_{lo<=hi}` is the message, and the component in `T_hi` is
/// chosen by the encoder and recovered by the decoder.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "CodeSpecFile", try_from = "CodeSpecFile")]
pub struct CodeSpec {
    pub tag: String,
    pub group: Arc<AbelianGroup>,
    pub n: u32,
    pub orientation: Orientation,
    pub thresholds: Thresholds,
    pub estimation: EstimationMeta,
    pub partition: Partition,
    pub dither: Vec<Element>,
    pub frozen: Vec<Element>,
    pub wc: Dmc,
    pub ws: Dmc,
    tables: CodeTables,
}

#[derive(Clone, Debug, Default)]
struct CodeTables {
    lo: Vec<SubgroupId>,
    hi: Vec<SubgroupId>,
    /// Per distinct `(lo, hi)`: sorted `T_{lo<=hi} + T_hi`.
    composed: BTreeMap<(SubgroupId, SubgroupId), Vec<Element>>,
    message_indices: Vec<usize>,
}

impl CodeTables {
    fn build(
        group: &AbelianGroup,
        orientation: Orientation,
        partition: &Partition,
    ) -> Result<Self> {
        let (lo, hi): (Vec<_>, Vec<_>) = partition
            .h
            .iter()
            .zip(&partition.k)
            .map(|(&h, &k)| match orientation {
                Orientation::SourceCoding => (k, h),
                Orientation::ChannelCoding => (h, k),
            })
            .unzip();
        let mut composed = BTreeMap::new();
        for (&l, &h) in lo.iter().zip(&hi) {
            if let std::collections::btree_map::Entry::Vacant(e) = composed.entry((l, h)) {
                e.insert(group.composed_transversal(l, h)?);
            }
        }
        let message_indices = (0..lo.len()).filter(|&i| lo[i] != hi[i]).collect();
        Ok(CodeTables {
            lo,
            hi,
            composed,
            message_indices,
        })
    }
}

impl From<CodeSpec> for CodeSpecFile {
    fn from(c: CodeSpec) -> Self {
        let partition = c
            .partition
            .cells()
            .into_iter()
            .map(|((h, k), indices)| CellEntry {
                h: c.group.members_of(h),
                k: c.group.members_of(k),
                indices,
            })
            .collect();
        CodeSpecFile {
            version: CODESPEC_VERSION,
            rate: c.rate(),
            beta_c: Thresholds::beta_equivalent(c.thresholds.delta_c, c.n),
            beta_s: Thresholds::beta_equivalent(c.thresholds.delta_s, c.n),
            tag: c.tag,
            group: c.group.factors().to_vec(),
            n: c.n,
            orientation: c.orientation,
            thresholds: c.thresholds,
            estimation: c.estimation,
            partition,
            promotions: c.partition.promotions,
            dither: c.dither,
            frozen: c.frozen,
            wc: c.wc,
            ws: c.ws,
        }
    }
}

impl TryFrom<CodeSpecFile> for CodeSpec {
    type Error = Error;
    fn try_from(f: CodeSpecFile) -> Result<Self> {
        if f.version != CODESPEC_VERSION {
            return Err(Error::Codec(format!(
                "unsupported code spec version {}",
                f.version
            )));
        }
        let group = Arc::new(AbelianGroup::new(&f.group)?);
        let len = 1usize << f.n;
        let mut h = vec![None; len];
        let mut k = vec![None; len];
        for cell in &f.partition {
            let (hid, kid) = (group.find_subgroup(&cell.h)?, group.find_subgroup(&cell.k)?);
            for &i in &cell.indices {
                if i >= len || h[i].is_some() {
                    return Err(Error::Codec(format!(
                        "index {i} is out of range or assigned twice"
                    )));
                }
                h[i] = Some(hid);
                k[i] = Some(kid);
            }
        }
        let collect = |v: Vec<Option<SubgroupId>>| -> Result<Vec<SubgroupId>> {
            v.into_iter()
                .enumerate()
                .map(|(i, s)| {
                    s.ok_or_else(|| Error::Codec(format!("index {i} is not in any cell")))
                })
                .collect()
        };
        let partition = Partition {
            h: collect(h)?,
            k: collect(k)?,
            promotions: f.promotions,
        };
        CodeSpec::assemble(
            f.tag,
            group,
            f.n,
            f.orientation,
            f.thresholds,
            f.estimation,
            partition,
            f.dither,
            f.frozen,
            f.wc,
            f.ws,
        )
    }
}

impl CodeSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        tag: String,
        group: Arc<AbelianGroup>,
        n: u32,
        orientation: Orientation,
        thresholds: Thresholds,
        estimation: EstimationMeta,
        partition: Partition,
        dither: Vec<Element>,
        frozen: Vec<Element>,
        wc: Dmc,
        ws: Dmc,
    ) -> Result<Self> {
        let len = 1usize << n;
        if partition.h.len() != len || dither.len() != len || frozen.len() != len {
            return Err(Error::Codec(
                "partition, dither and frozen values must all have length N".into(),
            ));
        }
        if wc.group() != &*group || ws.group() != &*group {
            return Err(Error::Codec(
                "channels are not over the code's group".into(),
            ));
        }
        let tables = CodeTables::build(&group, orientation, &partition)?;
        for i in 0..len {
            if dither[i] >= group.order() || !group.subgroup(tables.lo[i]).contains(frozen[i]) {
                return Err(Error::Codec(format!(
                    "dither or frozen value at index {i} is invalid"
                )));
            }
        }
        Ok(CodeSpec {
            tag,
            group,
            n,
            orientation,
            thresholds,
            estimation,
            partition,
            dither,
            frozen,
            wc,
            ws,
            tables,
        })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn lo(&self, i: usize) -> SubgroupId {
        self.tables.lo[i]
    }

    pub fn hi(&self, i: usize) -> SubgroupId {
        self.tables.hi[i]
    }

    /// `T_{lo<=hi} + T_hi` at index `i`, sorted.
    pub fn composed(&self, i: usize) -> &[Element] {
        &self.tables.composed[&(self.tables.lo[i], self.tables.hi[i])]
    }

    /// `T_hi` at index `i`.
    pub fn outer_transversal(&self, i: usize) -> &[Element] {
        self.group.transversal(self.tables.hi[i])
    }

    /// Indices whose cell carries message symbols, in increasing order.
    pub fn message_indices(&self) -> &[usize] {
        &self.tables.message_indices
    }

    /// `T_{lo<=hi}` at a message index.
    pub fn message_alphabet(&self, i: usize) -> &[Element] {
        self.group
            .transversal_in(self.tables.lo[i], self.tables.hi[i])
            .expect("lo <= hi by construction")
    }

    /// `sum_i log2(|hi_i| / |lo_i|) / N`.
    pub fn rate(&self) -> f64 {
        let bits: f64 = (0..self.len())
            .map(|i| {
                let (l, h) = (
                    self.group.subgroup(self.lo(i)).order(),
                    self.group.subgroup(self.hi(i)).order(),
                );
                (h as f64 / l as f64).log2()
            })
            .sum();
        bits / self.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn code_rate(spec: &CodeSpec) -> f64 {
    spec.rate()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub n: u32,
    pub thresholds: Thresholds,
    pub mode: EstimationMode,
    pub seed: u64,
}

impl DesignConfig {
    pub fn estimate(&self, w: &Dmc) -> Result<IndexParams> {
        estimate_index_params(w, self.n, self.mode, self.seed)
    }
}

/// Designs the code for one channel pair. `instance` selects the dither and
/// shared-randomness streams, so codes of different terminals differ.
pub fn design_code(pair: &ChannelPair, cfg: &DesignConfig, instance: u64) -> Result<CodeSpec> {
    let pc = cfg.estimate(&pair.wc)?;
    let ps = cfg.estimate(&pair.ws)?;
    design_code_with_params(pair, &pc, &[&ps], cfg, instance)
}

pub fn design_code_with_params(
    pair: &ChannelPair,
    params_c: &IndexParams,
    params_s: &[&IndexParams],
    cfg: &DesignConfig,
    instance: u64,
) -> Result<CodeSpec> {
    let group = pair.wc.group_arc().clone();
    let partition =
        partition_indices(&group, params_c, params_s, cfg.thresholds, pair.orientation)?;
    let len = 1usize << cfg.n;
    let mut rng = stream_rng(cfg.seed, streams::DITHER, instance);
    let dither: Vec<Element> = (0..len).map(|_| rng.gen_range(0..group.order())).collect();
    let tables = CodeTables::build(&group, pair.orientation, &partition)?;
    let mut rng = stream_rng(cfg.seed, streams::FROZEN, instance);
    let frozen = (0..len)
        .map(|i| {
            let members = group.subgroup(tables.lo[i]).members();
            members[rng.gen_range(0..members.len())]
        })
        .collect();
    let resamples = params_c.resamples + params_s.iter().map(|p| p.resamples).sum::<u64>();
    CodeSpec::assemble(
        pair.tag.clone(),
        group,
        cfg.n,
        pair.orientation,
        cfg.thresholds,
        EstimationMeta {
            mode: cfg.mode,
            seed: cfg.seed,
            resamples,
        },
        partition,
        dither,
        frozen,
        pair.wc.clone(),
        pair.ws.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmc::{bsc, noiseless, useless, Kernel, OutputAlphabet};

    fn z2() -> Arc<AbelianGroup> {
        Arc::new(AbelianGroup::new(&[2]).unwrap())
    }

    #[test]
    fn perfect_channel_has_zero_parameters() {
        let w = noiseless(z2()).unwrap();
        for mode in [
            EstimationMode::Exact,
            EstimationMode::MonteCarlo { trials: 1000 },
        ] {
            let p = estimate_index_params(&w, 2, mode, 1).unwrap();
            assert!(p.z.iter().all(|z| z[1] == 0.0), "{mode:?}");
        }
    }

    #[test]
    fn bsc_n2_closed_form() {
        // At N = 2 the minus channel of a BSC(p) is a BSC(2p(1-p)) and the
        // plus channel has Z equal to the square of the original.
        let p: f64 = 0.25;
        let w = bsc(p).unwrap();
        let e = estimate_index_params(&w, 1, EstimationMode::Exact, 0).unwrap();
        let pm = 2.0 * p * (1.0 - p);
        let z_minus = 2.0 * (pm * (1.0 - pm)).sqrt();
        let z = 2.0 * (p * (1.0 - p)).sqrt();
        assert!((e.z[0][1] - z_minus).abs() < 1e-12);
        assert!((e.z[1][1] - z * z).abs() < 1e-12);
        let sc = sc_enumerated_params(&w, 1).unwrap();
        assert!((sc.z[0][1] - e.z[0][1]).abs() < 1e-12 && (sc.z[1][1] - e.z[1][1]).abs() < 1e-12);
    }

    #[test]
    fn exact_limits_enforced() {
        let w = bsc(0.1).unwrap();
        assert!(matches!(
            estimate_index_params(&w, 4, EstimationMode::Exact, 0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            estimate_index_params(&w, 2, EstimationMode::MonteCarlo { trials: 10 }, 0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn mod_two_channel_over_z4() {
        let g = Arc::new(AbelianGroup::new(&[4]).unwrap());
        let w = Dmc::from_fn(
            g.clone(),
            OutputAlphabet::from_names(&[("Y", 2)]).unwrap(),
            |x, y| {
                if x % 2 == y[0] {
                    1.0
                } else {
                    0.0
                }
            },
        )
        .unwrap();
        let p = estimate_index_params(&w, 2, EstimationMode::Exact, 0).unwrap();
        let h = g.find_subgroup(&[0, 2]).unwrap();
        for i in 0..4 {
            assert!(p.z_sub(&g, i, h).abs() < 1e-12);
        }
    }

    fn pair(wc: Dmc, ws: Dmc, o: Orientation) -> ChannelPair {
        let recipe = Kernel::identity(wc.outputs());
        ChannelPair::new("T", wc, ws, o, recipe).unwrap()
    }

    #[test]
    fn partition_covers_and_promotes() {
        let g = z2();
        let pc = estimate_index_params(&noiseless(g.clone()).unwrap(), 2, EstimationMode::Exact, 0)
            .unwrap();
        let ps =
            estimate_index_params(&useless(g.clone(), 2).unwrap(), 2, EstimationMode::Exact, 0)
                .unwrap();
        let part = partition_indices(
            &g,
            &pc,
            &[&ps],
            Thresholds::default(),
            Orientation::SourceCoding,
        )
        .unwrap();
        assert_eq!(part.promotions.len(), 4);
        assert_eq!(part.cells().values().map(Vec::len).sum::<usize>(), 4);
        assert!(part.k.iter().all(|&k| k == g.trivial()));
    }

    #[test]
    fn identical_channels_have_rate_zero() {
        let w = bsc(0.2).unwrap();
        let cfg = DesignConfig {
            n: 3,
            thresholds: Thresholds {
                delta_c: 0.5,
                delta_s: 0.5,
            },
            mode: EstimationMode::Exact,
            seed: 3,
        };
        let spec = design_code(&pair(w.clone(), w, Orientation::SourceCoding), &cfg, 0).unwrap();
        assert_eq!(spec.rate(), 0.0);
        assert!(spec.message_indices().is_empty());
    }

    #[test]
    fn partition_matches_brute_classification() {
        let g = z2();
        let (wc, ws) = (bsc(0.2).unwrap(), bsc(0.05).unwrap());
        let pc = estimate_index_params(&wc, 2, EstimationMode::Exact, 0).unwrap();
        let ps = estimate_index_params(&ws, 2, EstimationMode::Exact, 0).unwrap();
        let th = Thresholds {
            delta_c: 0.1,
            delta_s: 0.1,
        };
        let part = partition_indices(&g, &pc, &[&ps], th, Orientation::SourceCoding).unwrap();
        for i in 0..4 {
            let h = if pc.z[i][1] < 0.1 {
                g.trivial()
            } else {
                g.whole()
            };
            let mut k = if ps.z[i][1] < 0.9 {
                g.trivial()
            } else {
                g.whole()
            };
            if !g.is_subgroup_of(k, h) {
                k = g.meet(k, h);
            }
            assert_eq!((part.h[i], part.k[i]), (h, k), "index {i}");
        }
    }

    #[test]
    fn rate_arithmetic_and_json_round_trip() {
        let g = z2();
        let w = bsc(0.1).unwrap();
        let len = 8;
        let h: Vec<SubgroupId> = (0..len)
            .map(|i| if i < 3 { g.whole() } else { g.trivial() })
            .collect();
        let partition = Partition {
            h,
            k: vec![g.trivial(); len],
            promotions: vec![],
        };
        let meta = EstimationMeta {
            mode: EstimationMode::Exact,
            seed: 0,
            resamples: 0,
        };
        let spec = CodeSpec::assemble(
            "T".into(),
            g.clone(),
            3,
            Orientation::SourceCoding,
            Thresholds::default(),
            meta,
            partition,
            vec![1; len],
            vec![0; len],
            w.clone(),
            w,
        )
        .unwrap();
        assert!((spec.rate() - 0.375).abs() < 1e-15);
        let back = CodeSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back.partition, spec.partition);
        assert_eq!(back.dither, spec.dither);
        assert_eq!(back.message_indices(), &[0, 1, 2]);
    }

    #[test]
    fn monte_carlo_is_schedule_independent() {
        let w = bsc(0.2).unwrap();
        let a =
            estimate_index_params(&w, 3, EstimationMode::MonteCarlo { trials: 1500 }, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| {
            estimate_index_params(&w, 3, EstimationMode::MonteCarlo { trials: 1500 }, 11).unwrap()
        });
        assert_eq!(a, b);
    }
}
