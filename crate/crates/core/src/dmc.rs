//! Discrete memoryless channels with group-valued inputs, their
//! Bhattacharyya parameters, and stochastic degradation between them.

use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{AbelianGroup, Element, SubgroupId};

pub const ROW_TOLERANCE: f64 = 1e-12;
pub const DEGRADATION_TOLERANCE: f64 = 1e-12;

/// A product of named finite components, flattened row-major
/// (last component fastest).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputAlphabet {
    pub components: Vec<(String, usize)>,
}

impl OutputAlphabet {
    pub fn new(components: Vec<(String, usize)>) -> Result<Self> {
        if components.iter().any(|(_, s)| *s == 0) {
            return Err(Error::Channel("empty output component".into()));
        }
        Ok(OutputAlphabet { components })
    }

    pub fn from_names(components: &[(&str, usize)]) -> Result<Self> {
        Self::new(
            components
                .iter()
                .map(|&(n, s)| (n.to_string(), s))
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.components.iter().map(|(_, s)| s).product()
    }

    pub fn names(&self) -> Vec<&str> {
        self.components.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|(n, _)| n == name)
    }

    pub fn flatten(&self, label: &[usize]) -> usize {
        debug_assert_eq!(label.len(), self.components.len());
        label
            .iter()
            .zip(&self.components)
            .fold(0, |acc, (&v, (_, s))| acc * s + v)
    }

    pub fn label(&self, mut y: usize) -> Vec<usize> {
        let mut out = vec![0; self.components.len()];
        for (slot, (_, s)) in out.iter_mut().zip(&self.components).rev() {
            *slot = y % s;
            y /= s;
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DmcRepr {
    group: Vec<usize>,
    outputs: OutputAlphabet,
    table: Vec<f64>,
}

/// `W(y|x)` with `x` ranging over a finite Abelian group.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "DmcRepr", try_from = "DmcRepr")]
pub struct Dmc {
    group: Arc<AbelianGroup>,
    outputs: OutputAlphabet,
    table: Vec<f64>,
    cols: Vec<f64>,
}

impl From<Dmc> for DmcRepr {
    fn from(w: Dmc) -> Self {
        DmcRepr {
            group: w.group.factors().to_vec(),
            outputs: w.outputs,
            table: w.table,
        }
    }
}

impl TryFrom<DmcRepr> for Dmc {
    type Error = Error;
    fn try_from(r: DmcRepr) -> Result<Self> {
        Dmc::new(Arc::new(AbelianGroup::new(&r.group)?), r.outputs, r.table)
    }
}

impl PartialEq for Dmc {
    fn eq(&self, other: &Self) -> bool {
        *self.group == *other.group && self.outputs == other.outputs && self.table == other.table
    }
}

impl Dmc {
    pub fn new(group: Arc<AbelianGroup>, outputs: OutputAlphabet, table: Vec<f64>) -> Result<Self> {
        let (q, m) = (group.order(), outputs.size());
        if table.len() != q * m {
            return Err(Error::Channel(format!(
                "table has {} entries, expected {q}x{m}",
                table.len()
            )));
        }
        if table.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Channel(
                "negative or non-finite transition probability".into(),
            ));
        }
        for (x, row) in table.chunks(m).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Channel(format!("row {x} sums to {s}")));
            }
        }
        let mut cols = vec![0.0; q * m];
        for x in 0..q {
            for y in 0..m {
                cols[y * q + x] = table[x * m + y];
            }
        }
        Ok(Dmc {
            group,
            outputs,
            table,
            cols,
        })
    }

    /// Builds a channel from `f(x, label)`; rows are renormalized to absorb
    /// rounding from the callers' sums.
    pub fn from_fn(
        group: Arc<AbelianGroup>,
        outputs: OutputAlphabet,
        mut f: impl FnMut(Element, &[usize]) -> f64,
    ) -> Result<Self> {
        let (q, m) = (group.order(), outputs.size());
        let mut table = Vec::with_capacity(q * m);
        for x in 0..q {
            let start = table.len();
            for y in 0..m {
                table.push(f(x, &outputs.label(y)));
            }
            let s: f64 = table[start..].iter().sum();
            if s > 0.0 && (s - 1.0).abs() <= 1e-9 {
                table[start..].iter_mut().for_each(|p| *p /= s);
            }
        }
        Dmc::new(group, outputs, table)
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn group_arc(&self) -> &Arc<AbelianGroup> {
        &self.group
    }

    pub fn outputs(&self) -> &OutputAlphabet {
        &self.outputs
    }

    pub fn q(&self) -> usize {
        self.group.order()
    }

    pub fn output_size(&self) -> usize {
        self.outputs.size()
    }

    pub fn prob(&self, x: Element, y: usize) -> f64 {
        self.table[x * self.output_size() + y]
    }

    pub fn row(&self, x: Element) -> &[f64] {
        let m = self.output_size();
        &self.table[x * m..(x + 1) * m]
    }

    /// `W(y|.)` as a vector over the input group.
    pub fn column(&self, y: usize) -> &[f64] {
        let q = self.q();
        &self.cols[y * q..(y + 1) * q]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn sampler(&self) -> DmcSampler {
        let rows = (0..self.q())
            .map(|x| WeightedIndex::new(self.row(x)).expect("rows are validated distributions"))
            .collect();
        DmcSampler { rows }
    }

    /// Bhattacharyya parameters `Z_d` for every `d` in the group.
    pub fn z_params(&self) -> ZParams {
        let g = &*self.group;
        let q = g.order();
        let z = (0..q)
            .map(|d| {
                let mut acc = 0.0;
                for x in 0..q {
                    let (r1, r2) = (self.row(x), self.row(g.add(x, d)));
                    acc += r1.iter().zip(r2).map(|(a, b)| (a * b).sqrt()).sum::<f64>();
                }
                (acc / q as f64).clamp(0.0, 1.0)
            })
            .collect();
        ZParams { z }
    }

    /// `I(X;Y)` in bits with `X` uniform over the group.
    pub fn symmetric_capacity(&self) -> f64 {
        let q = self.q() as f64;
        let mut out = 0.0;
        for y in 0..self.output_size() {
            let col = self.column(y);
            let py: f64 = col.iter().sum::<f64>() / q;
            for &w in col {
                if w > 0.0 {
                    out += w / q * (w / py).log2();
                }
            }
        }
        out.clamp(0.0, q.log2())
    }
}

pub struct DmcSampler {
    rows: Vec<WeightedIndex<f64>>,
}

impl DmcSampler {
    pub fn sample<R: Rng + ?Sized>(&self, x: Element, rng: &mut R) -> usize {
        self.rows[x].sample(rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZParams {
    /// `z[d]` for each group element `d`.
    pub z: Vec<f64>,
}

impl ZParams {
    /// `Z^H = sum of Z_d over d outside H`.
    pub fn z_sub(&self, group: &AbelianGroup, h: SubgroupId) -> f64 {
        let sub = group.subgroup(h);
        self.z
            .iter()
            .enumerate()
            .filter(|(d, _)| !sub.contains(*d))
            .map(|(_, z)| z)
            .sum()
    }
}

/// Stochastic map between two output alphabets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub from: OutputAlphabet,
    pub to: OutputAlphabet,
    table: Vec<f64>,
}

impl Kernel {
    pub fn new(from: OutputAlphabet, to: OutputAlphabet, table: Vec<f64>) -> Result<Self> {
        let (a, b) = (from.size(), to.size());
        if table.len() != a * b {
            return Err(Error::Channel(format!(
                "kernel has {} entries, expected {a}x{b}",
                table.len()
            )));
        }
        for (i, row) in table.chunks(b).enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Channel(format!(
                    "kernel row {i} is not a distribution (sum {s})"
                )));
            }
        }
        Ok(Kernel { from, to, table })
    }

    pub fn from_fn(
        from: OutputAlphabet,
        to: OutputAlphabet,
        mut f: impl FnMut(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        let (a, b) = (from.size(), to.size());
        let mut table = Vec::with_capacity(a * b);
        for i in 0..a {
            let li = from.label(i);
            let start = table.len();
            for j in 0..b {
                table.push(f(&li, &to.label(j)));
            }
            let s: f64 = table[start..].iter().sum();
            if s > 0.0 && (s - 1.0).abs() <= 1e-9 {
                table[start..].iter_mut().for_each(|p| *p /= s);
            }
        }
        Kernel::new(from, to, table)
    }

    pub fn identity(alphabet: &OutputAlphabet) -> Self {
        let m = alphabet.size();
        let table = (0..m * m)
            .map(|k| if k / m == k % m { 1.0 } else { 0.0 })
            .collect();
        Kernel {
            from: alphabet.clone(),
            to: alphabet.clone(),
            table,
        }
    }

    /// Drops every component not named in `keep`.
    pub fn marginalize(from: &OutputAlphabet, keep: &[&str]) -> Result<Self> {
        let pos: Vec<usize> = keep
            .iter()
            .map(|n| {
                from.position(n)
                    .ok_or_else(|| Error::Channel(format!("no output component {n}")))
            })
            .collect::<Result<_>>()?;
        let to = OutputAlphabet::new(pos.iter().map(|&p| from.components[p].clone()).collect())?;
        Kernel::from_fn(from.clone(), to, |a, b| {
            if pos.iter().zip(b).all(|(&p, &v)| a[p] == v) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.table[a * self.to.size() + b]
    }
}

/// `W` followed by `k`.
pub fn compose(w: &Dmc, k: &Kernel) -> Result<Dmc> {
    if w.outputs() != &k.from {
        return Err(Error::Channel(format!(
            "kernel expects outputs {:?}, channel produces {:?}",
            k.from.names(),
            w.outputs().names()
        )));
    }
    let (q, b) = (w.q(), k.to.size());
    let mut table = vec![0.0; q * b];
    for x in 0..q {
        for (y, &p) in w.row(x).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for z in 0..b {
                table[x * b + z] += p * k.table[y * b + z];
            }
        }
    }
    for row in table.chunks_mut(b) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }
    Dmc::new(w.group_arc().clone(), k.to.clone(), table)
}

#[derive(Clone, Debug)]
pub struct DegradationCertificate {
    pub composed: Dmc,
    pub max_deviation: f64,
    pub degraded: bool,
}

/// Checks `worse == better ∘ kernel` entrywise.
pub fn verify_degradation(
    better: &Dmc,
    kernel: &Kernel,
    worse: &Dmc,
) -> Result<DegradationCertificate> {
    if better.group() != worse.group() {
        return Err(Error::Channel(
            "channels have different input groups".into(),
        ));
    }
    if worse.outputs() != &kernel.to {
        return Err(Error::Channel(format!(
            "kernel produces {:?}, degraded channel has {:?}",
            kernel.to.names(),
            worse.outputs().names()
        )));
    }
    let composed = compose(better, kernel)?;
    let max_deviation = composed
        .table()
        .iter()
        .zip(worse.table())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DegradationCertificate {
        composed,
        max_deviation,
        degraded: max_deviation <= DEGRADATION_TOLERANCE,
    })
}

/// Which channel of a pair is the degraded one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Quantize with `ws`, decode with side information through `wc`;
    /// `wc` is degraded with respect to `ws`.
    SourceCoding,
    /// Transmit a message with state `ws`, decode through `wc`;
    /// `ws` is degraded with respect to `wc`.
    ChannelCoding,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelPair {
    pub tag: String,
    pub wc: Dmc,
    pub ws: Dmc,
    pub orientation: Orientation,
    /// Maps the better channel's outputs to the degraded channel's outputs.
    pub recipe: Kernel,
}

impl ChannelPair {
    pub fn new(
        tag: impl Into<String>,
        wc: Dmc,
        ws: Dmc,
        orientation: Orientation,
        recipe: Kernel,
    ) -> Result<Self> {
        if wc.group() != ws.group() {
            return Err(Error::Channel(
                "channel pair members use different input groups".into(),
            ));
        }
        Ok(ChannelPair {
            tag: tag.into(),
            wc,
            ws,
            orientation,
            recipe,
        })
    }

    pub fn better(&self) -> &Dmc {
        match self.orientation {
            Orientation::SourceCoding => &self.ws,
            Orientation::ChannelCoding => &self.wc,
        }
    }

    pub fn worse(&self) -> &Dmc {
        match self.orientation {
            Orientation::SourceCoding => &self.wc,
            Orientation::ChannelCoding => &self.ws,
        }
    }

    pub fn verify_degradation(&self) -> Result<DegradationCertificate> {
        verify_degradation(self.better(), &self.recipe, self.worse())
    }

    pub fn require_degraded(&self) -> Result<()> {
        let cert = self.verify_degradation()?;
        if !cert.degraded {
            return Err(Error::NotDegraded {
                tag: self.tag.clone(),
                deviation: cert.max_deviation,
            });
        }
        Ok(())
    }
}

/// Binary symmetric channel over `Z_2`.
pub fn bsc(p: f64) -> Result<Dmc> {
    let g = Arc::new(AbelianGroup::new(&[2])?);
    Dmc::new(
        g,
        OutputAlphabet::from_names(&[("Y", 2)])?,
        vec![1.0 - p, p, p, 1.0 - p],
    )
}

/// Channel revealing the input exactly.
pub fn noiseless(group: Arc<AbelianGroup>) -> Result<Dmc> {
    let q = group.order();
    let table = (0..q * q)
        .map(|k| if k / q == k % q { 1.0 } else { 0.0 })
        .collect();
    Dmc::new(group, OutputAlphabet::from_names(&[("Y", q)])?, table)
}

/// Channel whose output is independent of the input.
pub fn useless(group: Arc<AbelianGroup>, m: usize) -> Result<Dmc> {
    let q = group.order();
    Dmc::new(
        group,
        OutputAlphabet::from_names(&[("Y", m)])?,
        vec![1.0 / m as f64; q * m],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z4() -> Arc<AbelianGroup> {
        Arc::new(AbelianGroup::new(&[4]).unwrap())
    }

    #[test]
    fn hand_z_values() {
        let z = bsc(0.25).unwrap().z_params();
        assert_eq!(z.z[0], 1.0);
        assert!((z.z[1] - 2.0 * (0.25f64 * 0.75).sqrt()).abs() < 1e-12);
        assert!((z.z[1] - 0.8660254037844386).abs() < 1e-9);

        let g = z4();
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
        let z = w.z_params();
        assert_eq!(z.z, vec![1.0, 0.0, 1.0, 0.0]);
        let h = g.find_subgroup(&[0, 2]).unwrap();
        assert_eq!(z.z_sub(&g, h), 0.0);
        assert_eq!(z.z_sub(&g, g.trivial()), 1.0);
    }

    #[test]
    fn extreme_channels() {
        let g = z4();
        let perfect = noiseless(g.clone()).unwrap();
        assert_eq!(perfect.z_params().z[1..], [0.0, 0.0, 0.0]);
        assert!((perfect.symmetric_capacity() - 2.0).abs() < 1e-12);
        let dead = useless(g, 3).unwrap();
        assert!(dead.z_params().z.iter().all(|z| (z - 1.0).abs() < 1e-12));
        assert!(dead.symmetric_capacity().abs() < 1e-12);
        let h2 = -(0.11f64 * 0.11f64.log2() + 0.89 * 0.89f64.log2());
        assert!((bsc(0.11).unwrap().symmetric_capacity() - (1.0 - h2)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        let out = OutputAlphabet::from_names(&[("Y", 2)]).unwrap();
        let g = Arc::new(AbelianGroup::new(&[2]).unwrap());
        assert!(Dmc::new(g.clone(), out.clone(), vec![0.5, 0.6, 0.5, 0.5]).is_err());
        assert!(Dmc::new(g.clone(), out.clone(), vec![1.5, -0.5, 0.5, 0.5]).is_err());
        assert!(Dmc::new(g, out, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn degradation_of_bsc_cascade() {
        let good = bsc(0.1).unwrap();
        let bad = bsc(0.1 * 0.8 + 0.9 * 0.2).unwrap();
        let out = good.outputs().clone();
        let k = Kernel::new(out.clone(), out.clone(), vec![0.8, 0.2, 0.2, 0.8]).unwrap();
        assert!(verify_degradation(&good, &k, &bad).unwrap().degraded);
        assert!(
            verify_degradation(&good, &Kernel::identity(&out), &good)
                .unwrap()
                .degraded
        );
        assert!(
            !verify_degradation(&good, &Kernel::identity(&out), &bad)
                .unwrap()
                .degraded
        );
    }

    #[test]
    fn marginalizing_kernel() {
        let from = OutputAlphabet::from_names(&[("A", 2), ("B", 3)]).unwrap();
        let k = Kernel::marginalize(&from, &["B"]).unwrap();
        assert_eq!(k.to.names(), vec!["B"]);
        assert_eq!(k.prob(from.flatten(&[1, 2]), 2), 1.0);
        assert_eq!(k.prob(from.flatten(&[1, 2]), 1), 0.0);
    }

    #[test]
    fn serde_round_trip() {
        let w = bsc(0.2).unwrap();
        let json = serde_json::to_string(&w).unwrap();
        let back: Dmc = serde_json::from_str(&json).unwrap();
        assert_eq!(w, back);
        assert_eq!(w.column(1), back.column(1));
    }

    #[test]
    fn labels_flatten_round_trip() {
        let a = OutputAlphabet::from_names(&[("A", 3), ("B", 2), ("C", 4)]).unwrap();
        for y in 0..a.size() {
            assert_eq!(a.flatten(&a.label(y)), y);
        }
    }
}
