//! Per-trial pipelines. Codes and codecs arrive in the terminal order of
//! [`super::terminals`].

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::stats::TrialOutcome;
use super::{ScenarioConfig, ScenarioDesign};
use crate::channels::ScenarioKind;
use crate::codec::{observation_labels, Codec, DecodeResult, EncodeResult};
use crate::design::CodeSpec;
use crate::error::{Error, Result};
use crate::group::{AbelianGroup, Element};
use crate::joint::JointDist;
use crate::polar::add_blocks;
use crate::rng::{stream_rng, streams};

/// Draws i.i.d. tuples from a marginal of the joint.
struct JointSampler {
    sizes: Vec<usize>,
    dist: WeightedIndex<f64>,
}

impl JointSampler {
    fn new(joint: &JointDist, names: &[&str]) -> Result<Self> {
        let m = joint.marginal(names)?;
        let dist = WeightedIndex::new(m.probs()).map_err(|e| Error::Joint(e.to_string()))?;
        Ok(JointSampler {
            sizes: m.sizes(),
            dist,
        })
    }

    /// One sequence of length `len` per variable.
    fn sample<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::with_capacity(len); self.sizes.len()];
        for _ in 0..len {
            let mut idx = self.dist.sample(rng);
            for (col, &m) in cols.iter_mut().zip(&self.sizes).rev() {
                col.push(idx % m);
                idx /= m;
            }
        }
        cols
    }
}

/// Draws `out` given a flattened value of `given`.
struct CondSampler {
    sizes: Vec<usize>,
    rows: Vec<WeightedIndex<f64>>,
}

impl CondSampler {
    fn new(joint: &JointDist, out: &[&str], given: &[&str]) -> Result<Self> {
        let rows = joint
            .conditional(out, given)?
            .iter()
            .map(|r| WeightedIndex::new(r).map_err(|e| Error::Joint(e.to_string())))
            .collect::<Result<_>>()?;
        let sizes = out
            .iter()
            .map(|n| joint.size_of(n))
            .collect::<Result<_>>()?;
        Ok(CondSampler { sizes, rows })
    }

    fn sample<R: Rng>(&self, given: usize, rng: &mut R) -> Vec<usize> {
        let mut idx = self.rows[given].sample(rng);
        let mut out = vec![0; self.sizes.len()];
        for (slot, &m) in out.iter_mut().zip(&self.sizes).rev() {
            *slot = idx % m;
            idx /= m;
        }
        out
    }
}

pub struct Context<'a> {
    cfg: &'a ScenarioConfig,
    codes: &'a [CodeSpec],
    group: &'a AbelianGroup,
    len: usize,
    sizes: BTreeMap<String, usize>,
    source: Option<JointSampler>,
    channel: Option<CondSampler>,
    dist: BTreeMap<String, Vec<Vec<f64>>>,
    gmap: Vec<usize>,
}

/// Mean of `d(src_j, rec_j)`; reconstructions outside the table cost the
/// row maximum.
fn score(d: &[Vec<f64>], src: &[usize], rec: &[usize]) -> f64 {
    let total: f64 = src
        .iter()
        .zip(rec)
        .map(|(&a, &b)| {
            d[a].get(b)
                .copied()
                .unwrap_or_else(|| d[a].iter().copied().fold(0.0, f64::max))
        })
        .sum();
    total / src.len() as f64
}

fn uniform_message<R: Rng>(spec: &CodeSpec, rng: &mut R) -> Vec<Element> {
    spec.message_indices()
        .iter()
        .map(|&i| {
            let alpha = spec.message_alphabet(i);
            alpha[rng.gen_range(0..alpha.len())]
        })
        .collect()
}

fn symbol_errors(a: &[usize], b: &[usize]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ScenarioConfig, design: &'a ScenarioDesign) -> Result<Self> {
        let joint = &design.channels.joint;
        let sizes = joint
            .vars()
            .iter()
            .map(|v| (v.name.clone(), v.size))
            .collect();
        let (source, channel) = match cfg.scenario {
            ScenarioKind::BergerTung | ScenarioKind::KmSum => {
                (Some(JointSampler::new(joint, &["X", "Y"])?), None)
            }
            ScenarioKind::MultipleDescription => (Some(JointSampler::new(joint, &["X"])?), None),
            ScenarioKind::Mac | ScenarioKind::CompMac => {
                (None, Some(CondSampler::new(joint, &["Z"], &["X", "Y"])?))
            }
            ScenarioKind::Broadcast => (None, Some(CondSampler::new(joint, &["Y", "Z"], &["X"])?)),
        };
        let mut dist = BTreeMap::new();
        for key in ["d", "d1", "d2", "d3"] {
            if let Ok(t) = cfg.distortion(key) {
                dist.insert(key.to_string(), t);
            }
        }
        let gmap = match (&cfg.broadcast_map, cfg.scenario) {
            (Some(m), _) => m.clone(),
            (None, ScenarioKind::Broadcast) => {
                crate::channels::default_broadcast_map(joint.size_of("U")?, joint.size_of("V")?)
            }
            _ => Vec::new(),
        };
        let codes = &design.codes[..];
        if matches!(cfg.scenario, ScenarioKind::KmSum | ScenarioKind::CompMac) {
            let (a, b) = (&codes[0], &codes[1]);
            if (0..a.len()).any(|i| a.lo(i) != b.lo(i) || a.hi(i) != b.hi(i)) {
                return Err(Error::Codec(
                    "the two terminals of a sum problem need one index structure".into(),
                ));
            }
        }
        Ok(Context {
            cfg,
            codes,
            group: &design.channels.group,
            len: 1 << cfg.n,
            sizes,
            source,
            channel,
            dist,
            gmap,
        })
    }

    fn size(&self, name: &str) -> usize {
        self.sizes[name]
    }

    pub fn trial(&self, codecs: &mut [Codec], t: u64) -> Result<TrialOutcome> {
        let seed = self.cfg.seed;
        let mut rngs = TrialRngs {
            source: stream_rng(seed, streams::SOURCE, t),
            message: stream_rng(seed, streams::MESSAGE, t),
            encoder: stream_rng(seed, streams::ENCODER, t),
            channel: stream_rng(seed, streams::CHANNEL, t),
        };
        let mut out = TrialOutcome::default();
        match self.cfg.scenario {
            ScenarioKind::BergerTung => self.berger_tung(codecs, &mut rngs, &mut out)?,
            ScenarioKind::KmSum => self.km_sum(codecs, &mut rngs, &mut out)?,
            ScenarioKind::Mac => self.mac(codecs, &mut rngs, &mut out)?,
            ScenarioKind::CompMac => self.comp_mac(codecs, &mut rngs, &mut out)?,
            ScenarioKind::Broadcast => self.broadcast(codecs, &mut rngs, &mut out)?,
            ScenarioKind::MultipleDescription => {
                self.multiple_description(codecs, &mut rngs, &mut out)?
            }
        }
        Ok(out)
    }

    fn encode(
        &self,
        codec: &mut Codec,
        spec: &CodeSpec,
        sides: &[&[usize]],
        message: Option<&[Element]>,
        rng: &mut crate::rng::Rng,
        out: &mut TrialOutcome,
    ) -> Result<EncodeResult> {
        let obs = observation_labels(&spec.ws, sides, &spec.dither)?;
        let enc = codec.encode(spec, &obs, message, rng)?;
        // reconstruction identity: dither = reconstruction + aG
        let x = codec.transform(self.group, &enc.a);
        if (0..self.len).any(|j| self.group.add(enc.reconstruction[j], x[j]) != spec.dither[j]) {
            return Err(Error::Codec(format!(
                "reconstruction identity failed for terminal {}",
                spec.tag
            )));
        }
        out.event("coset_mass_failures", enc.coset_mass_failures as u64);
        out.event("vanishing_nodes", enc.vanishing_nodes as u64);
        Ok(enc)
    }

    /// Decodes through `wc`; impossible observations and side values outside
    /// the channel alphabet count as failures and yield `None`.
    fn decode(
        &self,
        codec: &mut Codec,
        spec: &CodeSpec,
        sides: &[&[usize]],
        message: Option<&[Element]>,
        out: &mut TrialOutcome,
    ) -> Result<Option<DecodeResult>> {
        let comps = &spec.wc.outputs().components;
        if sides
            .iter()
            .zip(comps)
            .any(|(s, (_, m))| s.iter().any(|v| v >= m))
        {
            out.event("side_outside_alphabet", 1);
            return Ok(None);
        }
        let obs = observation_labels(&spec.wc, sides, &spec.dither)?;
        match codec.decode(spec, &obs, message) {
            Ok(d) => Ok(Some(d)),
            Err(Error::DecodeFailure { .. }) => {
                out.event("decode_failures", 1);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    /// Maps values outside an input alphabet to 0, counting them.
    fn clamp(&self, mut seq: Vec<usize>, size: usize, out: &mut TrialOutcome) -> Vec<usize> {
        let mut clamped = 0;
        for v in seq.iter_mut().filter(|v| **v >= size) {
            *v = 0;
            clamped += 1;
        }
        out.event("clamped_inputs", clamped);
        seq
    }

    fn berger_tung(
        &self,
        c: &mut [Codec],
        r: &mut TrialRngs,
        out: &mut TrialOutcome,
    ) -> Result<()> {
        let [cy, cx] = c else { return Err(arity()) };
        let (sy, sx) = (&self.codes[0], &self.codes[1]);
        let cols = self
            .source
            .as_ref()
            .expect("source")
            .sample(self.len, &mut r.source);
        let (xs, ys) = (&cols[0], &cols[1]);
        let enc_y = self.encode(cy, sy, &[ys], None, &mut r.encoder, out)?;
        let dec_y = self.decode(cy, sy, &[], Some(&enc_y.message), out)?;
        let y_ok = dec_y.as_ref().is_some_and(|d| d.a_hat == enc_y.a);
        let v_hat = dec_y.map_or_else(|| vec![0; self.len], |d| d.reconstruction);

        let enc_x = self.encode(cx, sx, &[xs], None, &mut r.encoder, out)?;
        let dec_x = self.decode(cx, sx, &[&v_hat], Some(&enc_x.message), out)?;
        let x_ok = dec_x.as_ref().is_some_and(|d| d.a_hat == enc_x.a);
        let u_hat = dec_x.map_or_else(|| vec![0; self.len], |d| d.reconstruction);

        let (d1, d2) = (&self.dist["d1"], &self.dist["d2"]);
        let d1v = score(d1, xs, &u_hat);
        out.metric("D1", d1v);
        out.metric("D2", score(d2, ys, &v_hat));
        out.metric("D1_encoder", score(d1, xs, &enc_x.reconstruction));
        out.metric("D2_encoder", score(d2, ys, &enc_y.reconstruction));
        if y_ok {
            out.metric("D1_given_Y_ok", d1v);
        } else {
            out.metric("D1_given_Y_failed", d1v);
        }
        out.block("Y", !y_ok);
        out.block("X", !x_ok);
        Ok(())
    }

    fn km_sum(&self, c: &mut [Codec], r: &mut TrialRngs, out: &mut TrialOutcome) -> Result<()> {
        let [cx, cy] = c else { return Err(arity()) };
        let (sx, sy) = (&self.codes[0], &self.codes[1]);
        let g = self.group;
        let cols = self
            .source
            .as_ref()
            .expect("source")
            .sample(self.len, &mut r.source);
        let (xs, ys) = (&cols[0], &cols[1]);
        let enc_x = self.encode(cx, sx, &[xs], None, &mut r.encoder, out)?;
        let enc_y = self.encode(cy, sy, &[ys], None, &mut r.encoder, out)?;
        let w = add_blocks(g, &enc_x.reconstruction, &enc_y.reconstruction);
        let q_sum = add_blocks(g, &sx.dither, &sy.dither);
        let a_sum = add_blocks(g, &enc_x.a, &enc_y.a);
        if cx.reconstruct(g, &q_sum, &a_sum) != w {
            return Err(Error::Codec(
                "sum identity w = (zX + zY) - (aX + aY)G failed".into(),
            ));
        }
        // the decoder knows each terminal's H-component: frozen part plus message
        let hpart = |spec: &CodeSpec, msg: &[Element]| {
            let mut h = spec.frozen.clone();
            for (&i, &m) in spec.message_indices().iter().zip(msg) {
                h[i] = g.add(h[i], m);
            }
            h
        };
        let offsets = add_blocks(g, &hpart(sx, &enc_x.message), &hpart(sy, &enc_y.message));
        let obs = observation_labels(&sx.wc, &[], &q_sum)?;
        let w_hat = match cx.decode_cosets(g, &sx.wc, &obs, &offsets, |i| g.transversal(sx.hi(i))) {
            Ok(a_hat) => cx.reconstruct(g, &q_sum, &a_hat),
            Err(Error::DecodeFailure { .. }) => {
                out.event("decode_failures", 1);
                vec![g.order(); self.len]
            }
            Err(e) => return Err(e),
        };
        let ny = self.size("Y");
        let xy: Vec<usize> = xs.iter().zip(ys).map(|(&x, &y)| x * ny + y).collect();
        out.metric("D", score(&self.dist["d"], &xy, &w_hat));
        out.metric("sum_symbol_error", symbol_errors(&w, &w_hat));
        out.block("sum", w != w_hat);
        Ok(())
    }

    fn mac(&self, c: &mut [Codec], r: &mut TrialRngs, out: &mut TrialOutcome) -> Result<()> {
        let [cy, cx] = c else { return Err(arity()) };
        let (sy, sx) = (&self.codes[0], &self.codes[1]);
        let (m_y, m_x) = (
            uniform_message(sy, &mut r.message),
            uniform_message(sx, &mut r.message),
        );
        let enc_y = self.encode(cy, sy, &[], Some(&m_y), &mut r.encoder, out)?;
        let enc_x = self.encode(cx, sx, &[], Some(&m_x), &mut r.encoder, out)?;
        let ny = self.size("Y");
        let y = self.clamp(enc_y.reconstruction, ny, out);
        let x = self.clamp(enc_x.reconstruction, self.size("X"), out);
        let ch = self.channel.as_ref().expect("channel");
        let z: Vec<usize> = x
            .iter()
            .zip(&y)
            .map(|(&a, &b)| ch.sample(a * ny + b, &mut r.channel)[0])
            .collect();

        let dec_y = self.decode(cy, sy, &[&z], None, out)?;
        let y_ok = dec_y.as_ref().is_some_and(|d| d.message == m_y);
        let y_hat = dec_y.map_or_else(|| vec![0; self.len], |d| d.reconstruction);
        let dec_x = self.decode(cx, sx, &[&y_hat, &z], None, out)?;
        let x_ok = dec_x.as_ref().is_some_and(|d| d.message == m_x);
        out.metric("symbol_error_Y", symbol_errors(&y, &y_hat));
        out.block("Y", !y_ok);
        out.block("X", !x_ok);
        Ok(())
    }

    fn comp_mac(&self, c: &mut [Codec], r: &mut TrialRngs, out: &mut TrialOutcome) -> Result<()> {
        let [cx, cy] = c else { return Err(arity()) };
        let (sx, sy) = (&self.codes[0], &self.codes[1]);
        let g = self.group;
        let (m_x, m_y) = (
            uniform_message(sx, &mut r.message),
            uniform_message(sy, &mut r.message),
        );
        let enc_x = self.encode(cx, sx, &[], Some(&m_x), &mut r.encoder, out)?;
        let enc_y = self.encode(cy, sy, &[], Some(&m_y), &mut r.encoder, out)?;
        let ny = self.size("Y");
        let x = self.clamp(enc_x.reconstruction.clone(), self.size("X"), out);
        let y = self.clamp(enc_y.reconstruction.clone(), ny, out);
        let ch = self.channel.as_ref().expect("channel");
        let z: Vec<usize> = x
            .iter()
            .zip(&y)
            .map(|(&a, &b)| ch.sample(a * ny + b, &mut r.channel)[0])
            .collect();
        let s = add_blocks(g, &x, &y);
        let r_sum = add_blocks(g, &sx.dither, &sy.dither);
        let a_sum = add_blocks(g, &enc_x.a, &enc_y.a);
        if x == enc_x.reconstruction
            && y == enc_y.reconstruction
            && cx.reconstruct(g, &r_sum, &a_sum) != s
        {
            return Err(Error::Codec(
                "sum identity S = (rX + rY) - (aX + aY)G failed".into(),
            ));
        }
        let offsets = add_blocks(g, &sx.frozen, &sy.frozen);
        let obs = observation_labels(&sx.wc, &[&z], &r_sum)?;
        let message_sum = |a: &[Element]| -> Result<Vec<Element>> {
            sx.message_indices()
                .iter()
                .map(|&i| Ok(g.coset_decompose(a[i], sx.lo(i), sx.hi(i))?.1))
                .collect()
        };
        let (s_hat, msg_ok) = match cx.decode_cosets(g, &sx.wc, &obs, &offsets, |i| sx.composed(i))
        {
            Ok(a_hat) => (
                cx.reconstruct(g, &r_sum, &a_hat),
                message_sum(&a_hat)? == message_sum(&a_sum)?,
            ),
            Err(Error::DecodeFailure { .. }) => {
                out.event("decode_failures", 1);
                (vec![g.order(); self.len], false)
            }
            Err(e) => return Err(e),
        };
        out.metric("sum_symbol_error", symbol_errors(&s, &s_hat));
        out.metric("message_sum_error", !msg_ok as u8 as f64);
        out.block("sum", s != s_hat);
        Ok(())
    }

    fn broadcast(&self, c: &mut [Codec], r: &mut TrialRngs, out: &mut TrialOutcome) -> Result<()> {
        let [cz, cy] = c else { return Err(arity()) };
        let (sz, sy) = (&self.codes[0], &self.codes[1]);
        let (m2, m1) = (
            uniform_message(sz, &mut r.message),
            uniform_message(sy, &mut r.message),
        );
        let enc_v = self.encode(cz, sz, &[], Some(&m2), &mut r.encoder, out)?;
        let nv = self.size("V");
        let v = self.clamp(enc_v.reconstruction, nv, out);
        let enc_u = self.encode(cy, sy, &[&v], Some(&m1), &mut r.encoder, out)?;
        let u = self.clamp(enc_u.reconstruction, self.size("U"), out);
        let x: Vec<usize> = u
            .iter()
            .zip(&v)
            .map(|(&a, &b)| self.gmap[a * nv + b])
            .collect();
        let ch = self.channel.as_ref().expect("channel");
        let (ys, zs): (Vec<usize>, Vec<usize>) = x
            .iter()
            .map(|&xi| {
                let yz = ch.sample(xi, &mut r.channel);
                (yz[0], yz[1])
            })
            .unzip();
        let dec_y = self.decode(cy, sy, &[&ys], None, out)?;
        let dec_z = self.decode(cz, sz, &[&zs], None, out)?;
        out.block("Y", !dec_y.is_some_and(|d| d.message == m1));
        out.block("Z", !dec_z.is_some_and(|d| d.message == m2));
        if let Some(cost) = &self.cfg.cost {
            out.metric(
                "cost",
                x.iter().map(|&xi| cost[xi]).sum::<f64>() / self.len as f64,
            );
        }
        Ok(())
    }

    fn multiple_description(
        &self,
        c: &mut [Codec],
        r: &mut TrialRngs,
        out: &mut TrialOutcome,
    ) -> Result<()> {
        let [cv, cu, cw] = c else { return Err(arity()) };
        let (sv, su, sw) = (&self.codes[0], &self.codes[1], &self.codes[2]);
        let xs = self
            .source
            .as_ref()
            .expect("source")
            .sample(self.len, &mut r.source)
            .remove(0);
        let enc_v = self.encode(cv, sv, &[&xs], None, &mut r.encoder, out)?;
        let v = self.clamp(enc_v.reconstruction.clone(), self.size("V"), out);
        let enc_u = self.encode(cu, su, &[&v, &xs], None, &mut r.encoder, out)?;
        let u = self.clamp(enc_u.reconstruction.clone(), self.size("U"), out);
        let enc_w = self.encode(cw, sw, &[&u, &v, &xs], None, &mut r.encoder, out)?;

        let dec_v = self.decode(cv, sv, &[], Some(&enc_v.message), out)?;
        let dec_u = self.decode(cu, su, &[], Some(&enc_u.message), out)?;
        let v_ok = dec_v.as_ref().is_some_and(|d| d.a_hat == enc_v.a);
        let u_ok = dec_u.as_ref().is_some_and(|d| d.a_hat == enc_u.a);
        let v_hat = dec_v.map_or_else(|| vec![0; self.len], |d| d.reconstruction);
        let u_hat = dec_u.map_or_else(|| vec![0; self.len], |d| d.reconstruction);
        let dec_w = self.decode(cw, sw, &[&u_hat, &v_hat], Some(&enc_w.message), out)?;
        let w_ok = dec_w.as_ref().is_some_and(|d| d.a_hat == enc_w.a);
        let w_hat = dec_w.map_or_else(|| vec![0; self.len], |d| d.reconstruction);

        let (d1, d2, d3) = (&self.dist["d1"], &self.dist["d2"], &self.dist["d3"]);
        out.metric("D1", score(d1, &xs, &u_hat));
        out.metric("D2", score(d2, &xs, &v_hat));
        let d3v = score(d3, &xs, &w_hat);
        out.metric("D3", d3v);
        if u_ok && v_ok {
            out.metric("D3_given_UV_ok", d3v);
        }
        out.metric("D1_encoder", score(d1, &xs, &enc_u.reconstruction));
        out.metric("D2_encoder", score(d2, &xs, &enc_v.reconstruction));
        out.metric("D3_encoder", score(d3, &xs, &enc_w.reconstruction));
        out.block("V", !v_ok);
        out.block("U", !u_ok);
        out.block("W", !w_ok);
        Ok(())
    }
}

struct TrialRngs {
    source: crate::rng::Rng,
    message: crate::rng::Rng,
    encoder: crate::rng::Rng,
    channel: crate::rng::Rng,
}

fn arity() -> Error {
    Error::Codec("codec count does not match the scenario".into())
}
