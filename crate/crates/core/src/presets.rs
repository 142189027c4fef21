//! Ready-made joints for the desk-scale examples, and random joints with the
//! structure each scenario requires.

use rand::Rng;

use crate::error::{Error, Result};
use crate::joint::JointDist;

fn flip(p: f64, a: usize, b: usize) -> f64 {
    if a == b {
        1.0 - p
    } else {
        p
    }
}

/// `X` uniform, `Y = X + Bern(p)`, `U = X + Bern(d1)`, `V = Y + Bern(d2)`.
pub fn bt_doubly_symmetric(p: f64, d1: f64, d2: f64) -> Result<JointDist> {
    JointDist::from_fn(&[("X", 2), ("Y", 2), ("U", 2), ("V", 2)], |a| {
        0.5 * flip(p, a[0], a[1]) * flip(d1, a[0], a[2]) * flip(d2, a[1], a[3])
    })
}

/// Binary source `X` with an unusable side terminal: `Y` and `V` are
/// constant, `U = X + Bern(d1)`.
pub fn bt_constant_side(d1: f64) -> Result<JointDist> {
    JointDist::from_fn(&[("X", 2), ("Y", 1), ("U", 2), ("V", 1)], |a| {
        0.5 * flip(d1, a[0], a[2])
    })
}

/// The modulo-two sum problem on the doubly symmetric source. With
/// `d1 = d2 = 0` the quantizers are noiseless.
pub fn km_binary(p: f64, d1: f64, d2: f64) -> Result<JointDist> {
    bt_doubly_symmetric(p, d1, d2)
}

/// Binary inputs with biases `px`, `py`; the receiver sees the real sum
/// `X + Y` in `{0, 1, 2}`, replaced by one of the other two values with
/// total probability `eps`.
pub fn mac_binary(px: f64, py: f64, eps: f64) -> Result<JointDist> {
    JointDist::from_fn(&[("X", 2), ("Y", 2), ("Z", 3)], |a| {
        let pxv = if a[0] == 1 { px } else { 1.0 - px };
        let pyv = if a[1] == 1 { py } else { 1.0 - py };
        let pz = if a[2] == a[0] + a[1] {
            1.0 - eps
        } else {
            eps / 2.0
        };
        pxv * pyv * pz
    })
}

/// Uniform binary inputs, receiver sees `X + Y + Bern(eps)` over `Z_2`.
pub fn comp_mac_xor(eps: f64) -> Result<JointDist> {
    JointDist::from_fn(&[("X", 2), ("Y", 2), ("Z", 2)], |a| {
        0.25 * flip(eps, (a[0] + a[1]) % 2, a[2])
    })
}

/// `U` uniform, `Y = U + Bern(a)`, `V = Y + Bern(b)`, `Z = V + Bern(c)`,
/// and the channel input is `X = 2U + V`.
pub fn broadcast_binary(a: f64, b: f64, c: f64) -> Result<JointDist> {
    JointDist::from_fn(&[("U", 2), ("V", 2), ("X", 4), ("Y", 2), ("Z", 2)], |s| {
        let (u, v, x, y, z) = (s[0], s[1], s[2], s[3], s[4]);
        if x != 2 * u + v {
            return 0.0;
        }
        0.5 * flip(a, u, y) * flip(b, y, v) * flip(c, v, z)
    })
}

/// `X` uniform with three independent binary-symmetric descriptions
/// `U = X + Bern(a)`, `V = X + Bern(b)`, `W = X + Bern(c)`.
pub fn md_binary(a: f64, b: f64, c: f64) -> Result<JointDist> {
    JointDist::from_fn(&[("X", 2), ("U", 2), ("V", 2), ("W", 2)], |s| {
        0.5 * flip(a, s[0], s[1]) * flip(b, s[0], s[2]) * flip(c, s[0], s[3])
    })
}

/// Preset names accepted by [`by_name`], with their parameter lists.
pub const PRESETS: &[(&str, &[&str])] = &[
    ("bt_doubly_symmetric", &["p", "d1", "d2"]),
    ("bt_constant_side", &["d1"]),
    ("km_binary", &["p", "d1", "d2"]),
    ("mac_binary", &["px", "py", "eps"]),
    ("comp_mac_xor", &["eps"]),
    ("broadcast_binary", &["a", "b", "c"]),
    ("md_binary", &["a", "b", "c"]),
];

pub fn by_name(name: &str, params: &[f64]) -> Result<JointDist> {
    let Some((_, names)) = PRESETS.iter().find(|p| p.0 == name) else {
        return Err(Error::config(
            "joint.preset",
            format!("unknown preset {name:?}"),
        ));
    };
    if params.len() != names.len() {
        return Err(Error::config(
            "joint.params",
            format!("{name} takes parameters {names:?}"),
        ));
    }
    if params.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::config(
            "joint.params",
            "parameters are probabilities in [0, 1]",
        ));
    }
    let p = params;
    match name {
        "bt_doubly_symmetric" => bt_doubly_symmetric(p[0], p[1], p[2]),
        "bt_constant_side" => bt_constant_side(p[0]),
        "km_binary" => km_binary(p[0], p[1], p[2]),
        "mac_binary" => mac_binary(p[0], p[1], p[2]),
        "comp_mac_xor" => comp_mac_xor(p[0]),
        "broadcast_binary" => broadcast_binary(p[0], p[1], p[2]),
        _ => md_binary(p[0], p[1], p[2]),
    }
}

/// Random joints with the factorization each scenario assumes. Every
/// group-valued variable has at most `q` values.
pub mod random {
    use super::*;

    pub fn distribution<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..size).map(|_| 0.05 + rng.gen::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    pub fn kernel<R: Rng + ?Sized>(rng: &mut R, from: usize, to: usize) -> Vec<Vec<f64>> {
        (0..from).map(|_| distribution(rng, to)).collect()
    }

    fn size<R: Rng + ?Sized>(rng: &mut R, q: usize) -> usize {
        rng.gen_range(2..=q.clamp(2, 4))
    }

    /// `U <-> X <-> Y <-> V`.
    pub fn source_chain<R: Rng + ?Sized>(rng: &mut R, q: usize) -> Result<JointDist> {
        let (nx, ny) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
        let (nu, nv) = (size(rng, q), size(rng, q));
        let pxy = distribution(rng, nx * ny);
        let (pu, pv) = (kernel(rng, nx, nu), kernel(rng, ny, nv));
        JointDist::from_fn(&[("X", nx), ("Y", ny), ("U", nu), ("V", nv)], |a| {
            pxy[a[0] * ny + a[1]] * pu[a[0]][a[2]] * pv[a[1]][a[3]]
        })
    }

    /// Independent inputs `X`, `Y` and an arbitrary `p(z | x, y)`.
    pub fn mac<R: Rng + ?Sized>(rng: &mut R, q: usize) -> Result<JointDist> {
        let (nx, ny, nz) = (size(rng, q), size(rng, q), rng.gen_range(2..=4));
        let (px, py) = (distribution(rng, nx), distribution(rng, ny));
        let pz = kernel(rng, nx * ny, nz);
        JointDist::from_fn(&[("X", nx), ("Y", ny), ("Z", nz)], |a| {
            px[a[0]] * py[a[1]] * pz[a[0] * ny + a[1]][a[2]]
        })
    }

    /// Computation over a MAC, drawn from one of two families: the receiver
    /// sees both inputs and an independent noise symbol, or both inputs
    /// are uniform and the receiver sees their sum plus group noise.
    pub fn comp_mac<R: Rng + ?Sized>(
        rng: &mut R,
        q: usize,
        add: impl Fn(usize, usize) -> usize,
    ) -> Result<JointDist> {
        if rng.gen_bool(0.5) {
            let (nx, ny) = (size(rng, q), size(rng, q));
            let (px, py, pn) = (
                distribution(rng, nx),
                distribution(rng, ny),
                distribution(rng, 2),
            );
            JointDist::from_fn(&[("X", nx), ("Y", ny), ("Z", nx * ny * 2)], |a| {
                let z = (a[0] * ny + a[1]) * 2;
                if a[2] / 2 * 2 != z {
                    return 0.0;
                }
                px[a[0]] * py[a[1]] * pn[a[2] % 2]
            })
        } else {
            let noise = distribution(rng, q);
            let inv = 1.0 / (q * q) as f64;
            JointDist::from_fn(&[("X", q), ("Y", q), ("Z", q)], |a| {
                let s = add(a[0], a[1]);
                let n = (0..q).find(|&n| add(s, n) == a[2]).expect("group");
                inv * noise[n]
            })
        }
    }

    /// `U -> Y -> V`, `X = U * |V| + V`, and `Z` drawn from `p(z | x)`.
    pub fn broadcast<R: Rng + ?Sized>(rng: &mut R, q: usize) -> Result<JointDist> {
        let (nu, nv, ny, nz) = (
            size(rng, q),
            size(rng, q),
            rng.gen_range(2..=3),
            rng.gen_range(2..=3),
        );
        let nx = nu * nv;
        let pu = distribution(rng, nu);
        let (py, pv, pz) = (
            kernel(rng, nu, ny),
            kernel(rng, ny, nv),
            kernel(rng, nx, nz),
        );
        JointDist::from_fn(
            &[("U", nu), ("V", nv), ("X", nx), ("Y", ny), ("Z", nz)],
            |s| {
                let (u, v, x, y, z) = (s[0], s[1], s[2], s[3], s[4]);
                if x != u * nv + v {
                    return 0.0;
                }
                pu[u] * py[u][y] * pv[y][v] * pz[x][z]
            },
        )
    }

    /// `U`, `V` drawn independently given `X`, and `W` from `p(w | x, u, v)`.
    pub fn multiple_description<R: Rng + ?Sized>(rng: &mut R, q: usize) -> Result<JointDist> {
        let nx = rng.gen_range(2..=3);
        let (nu, nv, nw) = (size(rng, q), size(rng, q), size(rng, q));
        let px = distribution(rng, nx);
        let (pu, pv, pw) = (
            kernel(rng, nx, nu),
            kernel(rng, nx, nv),
            kernel(rng, nx * nu * nv, nw),
        );
        JointDist::from_fn(&[("X", nx), ("U", nu), ("V", nv), ("W", nw)], |s| {
            let (x, u, v, w) = (s[0], s[1], s[2], s[3]);
            px[x] * pu[x][u] * pv[x][v] * pw[(x * nu + u) * nv + v][w]
        })
    }

    /// A fully unstructured joint over the given variables.
    pub fn unstructured<R: Rng + ?Sized>(rng: &mut R, vars: &[(&str, usize)]) -> Result<JointDist> {
        let total = vars.iter().map(|v| v.1).product();
        let p = distribution(rng, total);
        let mut k = 0;
        JointDist::from_fn(vars, |_| {
            k += 1;
            p[k - 1]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{build_scenario_channels, ScenarioKind};
    use crate::group::AbelianGroup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn presets_certify() {
        let z2 = Arc::new(AbelianGroup::new(&[2]).unwrap());
        let z4 = Arc::new(AbelianGroup::new(&[4]).unwrap());
        let cases = [
            (
                ScenarioKind::BergerTung,
                bt_doubly_symmetric(0.1, 0.1, 0.1).unwrap(),
                &z2,
            ),
            (
                ScenarioKind::BergerTung,
                bt_constant_side(0.1).unwrap(),
                &z2,
            ),
            (ScenarioKind::KmSum, km_binary(0.05, 0.0, 0.0).unwrap(), &z2),
            (ScenarioKind::Mac, mac_binary(0.5, 0.5, 0.1).unwrap(), &z2),
            (ScenarioKind::CompMac, comp_mac_xor(0.05).unwrap(), &z2),
            (
                ScenarioKind::Broadcast,
                broadcast_binary(0.05, 0.1, 0.05).unwrap(),
                &z2,
            ),
            (
                ScenarioKind::MultipleDescription,
                md_binary(0.1, 0.2, 0.05).unwrap(),
                &z2,
            ),
        ];
        for (kind, j, g) in cases {
            let ch = build_scenario_channels(kind, &j, g).unwrap();
            ch.require_degraded()
                .unwrap_or_else(|e| panic!("{kind}: {e}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let j = random::comp_mac(&mut rng, 4, |a, b| z4.add(a, b)).unwrap();
            build_scenario_channels(ScenarioKind::CompMac, &j, &z4)
                .unwrap()
                .require_degraded()
                .unwrap();
        }
    }
}
