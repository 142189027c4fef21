//! Successive cancellation over the group butterfly.
//!
//! With `x = (aF^{⊗n})B`, the recursion runs on `F^{⊗n}` in natural order
//! and reads the channel likelihood of physical position `br(k)` at leaf
//! position `k`. Each stage splits a block as `(T(a) + T(b), T(b))`.
//!
//! Likelihood vectors stay in the linear domain and are normalized at every
//! node. When a variable-node product underflows, it is recomputed from
//! logarithms. If a vector is genuinely all zero, the observation is
//! impossible under the decisions taken so far and decoding stops with
//! [`Error::DecodeFailure`]. In lenient mode (used by encoders, which may
//! have been forced off the posterior's support) such a vector is replaced
//! by the uniform one and counted instead.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{AbelianGroup, Element};
use crate::polar::TransformPlan;

pub struct ScEngine {
    group: Arc<AbelianGroup>,
    plan: TransformPlan,
    q: usize,
    add: Vec<Element>,
    lik: Vec<Vec<f64>>,
    xs: Vec<Vec<Element>>,
    decided: Vec<Element>,
    lenient: bool,
    vanished: u32,
}

fn normalize(v: &mut [f64]) -> bool {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|p| *p /= s);
        true
    } else {
        false
    }
}

impl ScEngine {
    pub fn new(group: Arc<AbelianGroup>, n: u32) -> Result<Self> {
        let plan = TransformPlan::new(n)?;
        let q = group.order();
        let add = (0..q * q).map(|k| group.add(k / q, k % q)).collect();
        let len = plan.len();
        let lik = (0..=n).map(|l| vec![0.0; (len >> l) * q]).collect();
        let xs = (0..=n).map(|l| vec![0; len >> l]).collect();
        Ok(ScEngine {
            group,
            plan,
            q,
            add,
            lik,
            xs,
            decided: vec![0; len],
            lenient: false,
            vanished: 0,
        })
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.plan.len()
    }

    pub fn n(&self) -> u32 {
        self.plan.n()
    }

    pub fn set_lenient(&mut self, on: bool) {
        self.lenient = on;
    }

    /// Vanishing likelihood vectors replaced during the last lenient pass.
    pub fn vanished(&self) -> u32 {
        self.vanished
    }

    /// Runs one pass. `obs` holds `N` rows of `q` channel likelihoods in
    /// physical order; `decide(i, posterior)` fixes `a_i` from the
    /// normalized posterior of index `i` given the earlier decisions.
    pub fn run<F>(&mut self, obs: &[f64], mut decide: F) -> Result<&[Element]>
    where
        F: FnMut(usize, &[f64]) -> Result<Element>,
    {
        let (q, len) = (self.q, self.len());
        if obs.len() != len * q {
            return Err(Error::Codec(format!(
                "expected {} likelihoods, got {}",
                len * q,
                obs.len()
            )));
        }
        self.vanished = 0;
        let perm = self.plan.permutation();
        let top = &mut self.lik[0];
        for k in 0..len {
            let src = &obs[perm[k] * q..(perm[k] + 1) * q];
            let dst = &mut top[k * q..(k + 1) * q];
            dst.copy_from_slice(src);
            if !normalize(dst) {
                if !self.lenient {
                    return Err(Error::DecodeFailure { index: 0 });
                }
                dst.fill(1.0 / q as f64);
                self.vanished += 1;
            }
        }
        self.recurse(0, 0, &mut decide)?;
        Ok(&self.decided)
    }

    /// The codeword `aG` of the last pass, in physical order.
    pub fn codeword(&self) -> Vec<Element> {
        let perm = self.plan.permutation();
        (0..self.len()).map(|j| self.xs[0][perm[j]]).collect()
    }

    fn recurse<F>(&mut self, level: usize, base: usize, decide: &mut F) -> Result<()>
    where
        F: FnMut(usize, &[f64]) -> Result<Element>,
    {
        let q = self.q;
        let len = self.xs[level].len();
        if len == 1 {
            let a = decide(base, &self.lik[level][..q])?;
            if a >= q {
                return Err(Error::Codec(format!(
                    "decision {a} at index {base} is not a group element"
                )));
            }
            self.decided[base] = a;
            self.xs[level][0] = a;
            return Ok(());
        }
        let h = len / 2;
        {
            let (upper, lower) = self.lik.split_at_mut(level + 1);
            let (src, dst) = (&upper[level], &mut lower[0]);
            for j in 0..h {
                let p1 = &src[j * q..(j + 1) * q];
                let p2 = &src[(j + h) * q..(j + h + 1) * q];
                let out = &mut dst[j * q..(j + 1) * q];
                for (c, o) in out.iter_mut().enumerate() {
                    let row = &self.add[c * q..(c + 1) * q];
                    *o = row.iter().zip(p2).map(|(&cb, &pb)| p1[cb] * pb).sum();
                }
                if !normalize(out) {
                    return Err(Error::DecodeFailure { index: base });
                }
            }
        }
        self.recurse(level + 1, base, decide)?;
        {
            let (upper, lower) = self.xs.split_at_mut(level + 1);
            upper[level][..h].copy_from_slice(&lower[0][..h]);
        }
        {
            let (upper, lower) = self.lik.split_at_mut(level + 1);
            let (src, dst) = (&upper[level], &mut lower[0]);
            let x1 = &self.xs[level][..h];
            for j in 0..h {
                let p1 = &src[j * q..(j + 1) * q];
                let p2 = &src[(j + h) * q..(j + h + 1) * q];
                let out = &mut dst[j * q..(j + 1) * q];
                let row = &self.add[x1[j] * q..(x1[j] + 1) * q];
                for e in 0..q {
                    out[e] = p1[row[e]] * p2[e];
                }
                if !normalize(out) && !log_product(p1, p2, row, out) {
                    if !self.lenient {
                        return Err(Error::DecodeFailure { index: base + h });
                    }
                    out.fill(1.0 / q as f64);
                    self.vanished += 1;
                }
            }
        }
        self.recurse(level + 1, base + h, decide)?;
        let (upper, lower) = self.xs.split_at_mut(level + 1);
        let (x, x2) = (&mut upper[level], &lower[0]);
        for j in 0..h {
            x[j] = self.add[x[j] * q + x2[j]];
            x[j + h] = x2[j];
        }
        Ok(())
    }
}

/// Recomputes `p1[row[e]] * p2[e]` from logarithms after an underflow.
fn log_product(p1: &[f64], p2: &[f64], row: &[Element], out: &mut [f64]) -> bool {
    let mut peak = f64::NEG_INFINITY;
    for e in 0..out.len() {
        let (a, b) = (p1[row[e]], p2[e]);
        out[e] = if a > 0.0 && b > 0.0 {
            a.ln() + b.ln()
        } else {
            f64::NEG_INFINITY
        };
        peak = peak.max(out[e]);
    }
    if peak == f64::NEG_INFINITY {
        return false;
    }
    out.iter_mut().for_each(|l| *l = (*l - peak).exp());
    normalize(out)
}

/// Posterior of `a_i` given the observation and the prefix `a_0..a_{i-1}`.
pub fn sc_posterior(
    engine: &mut ScEngine,
    obs: &[f64],
    i: usize,
    prefix: &[Element],
) -> Result<Vec<f64>> {
    if prefix.len() != i || i >= engine.len() {
        return Err(Error::Codec(format!(
            "prefix of length {} for index {i}",
            prefix.len()
        )));
    }
    let mut out = Vec::new();
    engine.run(obs, |j, post| {
        if j == i {
            out = post.to_vec();
        }
        Ok(prefix.get(j).copied().unwrap_or(0))
    })?;
    Ok(out)
}

/// Likelihood rows `W(y_j | .)` for a sequence of flattened outputs.
pub fn observation_likelihoods(w: &crate::dmc::Dmc, ys: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ys.len() * w.q());
    for &y in ys {
        out.extend_from_slice(w.column(y));
    }
    out
}
