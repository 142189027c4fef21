//! Encoding and decoding with a designed nested code.
//!
//! Both directions walk the indices in order with the SC engine. At index
//! `i` the admissible values of `a_i` form a coset `base + S`, where `base`
//! collects the known components and `S` is a transversal:
//!
//! * the encoder samples `a_i` from the posterior restricted to the coset;
//! * the decoder takes the most likely element of the coset.

use rand::Rng;

use crate::design::CodeSpec;
use crate::dmc::Dmc;
use crate::error::{Error, Result};
use crate::group::{AbelianGroup, Element};
use crate::polar::{sub_blocks, TransformPlan};
use crate::sc::{observation_likelihoods, ScEngine};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodeResult {
    pub a: Vec<Element>,
    /// `[a_i]_{T_{lo<=hi}}` for each message index.
    pub message: Vec<Element>,
    /// `dither - aG`.
    pub reconstruction: Vec<Element>,
    /// Indices where the posterior put no mass on the admissible coset; the
    /// encoder then sampled uniformly.
    pub coset_mass_failures: u32,
    /// Likelihood vectors that vanished and were replaced by uniform ones.
    pub vanishing_nodes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub a_hat: Vec<Element>,
    pub reconstruction: Vec<Element>,
    pub message: Vec<Element>,
}

/// Flattens per-position component values into channel output labels.
/// `sides` are listed in the channel's component order; the dither is the
/// final component.
pub fn observation_labels(w: &Dmc, sides: &[&[usize]], dither: &[Element]) -> Result<Vec<usize>> {
    let comps = &w.outputs().components;
    if sides.len() + 1 != comps.len() {
        return Err(Error::Codec(format!(
            "channel expects {} side components, got {}",
            comps.len() - 1,
            sides.len()
        )));
    }
    let len = dither.len();
    if sides.iter().any(|s| s.len() != len) {
        return Err(Error::Codec(
            "side sequences and dither differ in length".into(),
        ));
    }
    let mut label = vec![0; comps.len()];
    (0..len)
        .map(|j| {
            for (slot, s) in label.iter_mut().zip(sides) {
                *slot = s[j];
            }
            label[comps.len() - 1] = dither[j];
            if label.iter().zip(comps).any(|(&v, (_, size))| v >= *size) {
                return Err(Error::Codec(format!(
                    "observation at position {j} is outside the alphabet"
                )));
            }
            Ok(w.outputs().flatten(&label))
        })
        .collect()
}

/// Reusable SC state for one code length.
pub struct Codec {
    engine: ScEngine,
    plan: TransformPlan,
}

impl Codec {
    pub fn new(spec: &CodeSpec) -> Result<Self> {
        Ok(Codec {
            engine: ScEngine::new(spec.group.clone(), spec.n)?,
            plan: TransformPlan::new(spec.n)?,
        })
    }

    /// Per-index message symbol when a message is imposed. Indices without
    /// message symbols get the identity, which leaves `T_hi` as the free
    /// part in both cases.
    fn message_bases(
        &self,
        spec: &CodeSpec,
        message: Option<&[Element]>,
    ) -> Result<Vec<Option<Element>>> {
        let Some(m) = message else {
            return Ok(vec![None; spec.len()]);
        };
        let idx = spec.message_indices();
        if m.len() != idx.len() {
            return Err(Error::Codec(format!(
                "message has {} symbols, code carries {}",
                m.len(),
                idx.len()
            )));
        }
        let mut out = vec![Some(0); spec.len()];
        for (&i, &mi) in idx.iter().zip(m) {
            if !spec.message_alphabet(i).contains(&mi) {
                return Err(Error::Codec(format!(
                    "message symbol {mi} at index {i} is not a transversal element"
                )));
            }
            out[i] = Some(mi);
        }
        Ok(out)
    }

    /// Samples `a` through `ws`. With `message = None` the message is
    /// whatever the sampled `a` carries; otherwise it is imposed.
    pub fn encode<R: Rng + ?Sized>(
        &mut self,
        spec: &CodeSpec,
        ws_obs: &[usize],
        message: Option<&[Element]>,
        rng: &mut R,
    ) -> Result<EncodeResult> {
        let g = &*spec.group;
        let bases = self.message_bases(spec, message)?;
        let lik = likelihoods(&spec.ws, ws_obs, spec.len())?;
        let mut failures = 0u32;
        let mut weights = Vec::with_capacity(g.order());
        self.engine.set_lenient(true);
        let run = self
            .engine
            .run(&lik, |i, post| {
                let (base, set) = match bases[i] {
                    Some(m) => (g.add(spec.frozen[i], m), spec.outer_transversal(i)),
                    None => (spec.frozen[i], spec.composed(i)),
                };
                weights.clear();
                weights.extend(set.iter().map(|&t| post[g.add(base, t)]));
                let total: f64 = weights.iter().sum();
                let pick = if total > 0.0 {
                    let mut u = rng.gen::<f64>() * total;
                    let mut k = weights.len() - 1;
                    for (j, &w) in weights.iter().enumerate() {
                        if u < w {
                            k = j;
                            break;
                        }
                        u -= w;
                    }
                    while weights[k] == 0.0 {
                        k -= 1;
                    }
                    k
                } else {
                    failures += 1;
                    rng.gen_range(0..set.len())
                };
                Ok(g.add(base, set[pick]))
            })
            .map(<[Element]>::to_vec);
        self.engine.set_lenient(false);
        let a = run?;
        let vanishing_nodes = self.engine.vanished();
        let message = match message {
            Some(m) => m.to_vec(),
            None => extract_message(spec, &a)?,
        };
        let reconstruction = self.reconstruct(g, &spec.dither, &a);
        Ok(EncodeResult {
            a,
            message,
            reconstruction,
            coset_mass_failures: failures,
            vanishing_nodes,
        })
    }

    /// Decodes through `wc`. With `message = None` the message is read off
    /// the decoded `a`.
    pub fn decode(
        &mut self,
        spec: &CodeSpec,
        wc_obs: &[usize],
        message: Option<&[Element]>,
    ) -> Result<DecodeResult> {
        let g = &*spec.group;
        let bases = self.message_bases(spec, message)?;
        let offsets: Vec<Element> = (0..spec.len())
            .map(|i| bases[i].map_or(spec.frozen[i], |m| g.add(spec.frozen[i], m)))
            .collect();
        let a_hat = self.decode_cosets(g, &spec.wc, wc_obs, &offsets, |i| match bases[i] {
            Some(_) => spec.outer_transversal(i),
            None => spec.composed(i),
        })?;
        let message = match message {
            Some(m) => m.to_vec(),
            None => extract_message(spec, &a_hat)?,
        };
        let reconstruction = self.reconstruct(g, &spec.dither, &a_hat);
        Ok(DecodeResult {
            a_hat,
            reconstruction,
            message,
        })
    }

    /// SC decoding where `a_i` is restricted to `offsets[i] + sets(i)`.
    pub fn decode_cosets<'s>(
        &mut self,
        g: &AbelianGroup,
        w: &Dmc,
        obs: &[usize],
        offsets: &[Element],
        sets: impl Fn(usize) -> &'s [Element],
    ) -> Result<Vec<Element>> {
        let lik = likelihoods(w, obs, self.engine.len())?;
        Ok(self
            .engine
            .run(&lik, |i, post| {
                let mut best: Option<(f64, Element)> = None;
                for &t in sets(i) {
                    let c = g.add(offsets[i], t);
                    let p = post[c];
                    best = match best {
                        Some((bp, bc)) if bp > p || (bp == p && bc < c) => Some((bp, bc)),
                        _ => Some((p, c)),
                    };
                }
                match best {
                    Some((p, c)) if p > 0.0 => Ok(c),
                    _ => Err(Error::DecodeFailure { index: i }),
                }
            })?
            .to_vec())
    }

    pub fn reconstruct(&self, g: &AbelianGroup, dither: &[Element], a: &[Element]) -> Vec<Element> {
        sub_blocks(g, dither, &self.plan.transform(g, a))
    }

    pub fn transform(&self, g: &AbelianGroup, a: &[Element]) -> Vec<Element> {
        self.plan.transform(g, a)
    }
}

fn likelihoods(w: &Dmc, obs: &[usize], len: usize) -> Result<Vec<f64>> {
    if obs.len() != len {
        return Err(Error::Codec(format!(
            "observation has length {}, code has {len}",
            obs.len()
        )));
    }
    if let Some(bad) = obs.iter().find(|&&y| y >= w.output_size()) {
        return Err(Error::Codec(format!(
            "output label {bad} is outside the channel alphabet"
        )));
    }
    Ok(observation_likelihoods(w, obs))
}

/// `[a_i]_{T_{lo<=hi}}` at every message index.
pub fn extract_message(spec: &CodeSpec, a: &[Element]) -> Result<Vec<Element>> {
    spec.message_indices()
        .iter()
        .map(|&i| Ok(spec.group.coset_decompose(a[i], spec.lo(i), spec.hi(i))?.1))
        .collect()
}

/// Whether `a_i` has the code's frozen component at every index.
pub fn respects_frozen(spec: &CodeSpec, a: &[Element]) -> bool {
    (0..spec.len()).all(|i| {
        let (lo_part, _, _) = spec
            .group
            .coset_decompose(a[i], spec.lo(i), spec.hi(i))
            .expect("lo <= hi");
        lo_part == spec.frozen[i]
    })
}

pub fn source_encode<R: Rng + ?Sized>(
    spec: &CodeSpec,
    ws_obs: &[usize],
    message: Option<&[Element]>,
    rng: &mut R,
) -> Result<EncodeResult> {
    Codec::new(spec)?.encode(spec, ws_obs, message, rng)
}

pub fn channel_decode(
    spec: &CodeSpec,
    wc_obs: &[usize],
    message: Option<&[Element]>,
) -> Result<DecodeResult> {
    Codec::new(spec)?.decode(spec, wc_obs, message)
}
