//! Joint distributions over named finite variables and the information
//! quantities computed from them (all in bits).
//!
//! The text format is line oriented:
//!
//! ```text
//! # optional comments
//! vars: X Y U V
//! sizes: 2 2 2 2
//! probs:
//! 0.2025 0.0225 ...
//! ```
//!
//! Probabilities are listed in row-major order over the declared variable
//! order (the last variable varies fastest).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUM_TOLERANCE: f64 = 1e-12;
/// Tolerance for Markov-chain checks on user-supplied joints.
pub const MARKOV_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    vars: Vec<Variable>,
    probs: Vec<f64>,
}

fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Iterates all assignments of a mixed-radix index space.
fn assignments(sizes: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = sizes.iter().product();
    (0..total).map(move |mut idx| {
        let mut a = vec![0; sizes.len()];
        for (slot, &m) in a.iter_mut().zip(sizes).rev() {
            *slot = idx % m;
            idx /= m;
        }
        a
    })
}

impl JointDist {
    pub fn new(vars: Vec<Variable>, probs: Vec<f64>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::Joint("no variables declared".into()));
        }
        for (i, v) in vars.iter().enumerate() {
            if v.size == 0 {
                return Err(Error::Joint(format!(
                    "variable {} has an empty alphabet",
                    v.name
                )));
            }
            if v.name.is_empty() || v.name.contains(char::is_whitespace) {
                return Err(Error::Joint(format!("bad variable name {:?}", v.name)));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::Joint(format!("variable {} declared twice", v.name)));
            }
        }
        let total: usize = vars.iter().map(|v| v.size).product();
        if probs.len() != total {
            return Err(Error::Joint(format!(
                "expected {total} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Joint(format!(
                "probability {bad} is not a finite nonnegative number"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Joint(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(JointDist { vars, probs })
    }

    /// Builds a joint from a mass function evaluated on every assignment.
    pub fn from_fn(vars: &[(&str, usize)], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let vars: Vec<Variable> = vars
            .iter()
            .map(|&(n, s)| Variable {
                name: n.to_string(),
                size: s,
            })
            .collect();
        let sizes: Vec<usize> = vars.iter().map(|v| v.size).collect();
        let probs = assignments(&sizes).map(|a| f(&a)).collect();
        JointDist::new(vars, probs)
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.size).collect()
    }

    pub fn has(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::Joint(format!("missing variable {name}")))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.vars[self.index_of(name)?].size)
    }

    /// Iterates `(assignment, probability)` over the full product alphabet.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let sizes = self.sizes();
        let total = self.probs.len();
        (0..total).map(move |mut idx| {
            let p = self.probs[idx];
            let mut a = vec![0; sizes.len()];
            for (slot, &m) in a.iter_mut().zip(&sizes).rev() {
                *slot = idx % m;
                idx /= m;
            }
            (a, p)
        })
    }

    /// Marginal over `names`, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<JointDist> {
        if names.is_empty() {
            return Err(Error::Joint("empty marginal".into()));
        }
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<_>>()?;
        let sizes: Vec<usize> = idx.iter().map(|&i| self.vars[i].size).collect();
        let mut out = vec![0.0; sizes.iter().product()];
        for (a, p) in self.iter() {
            let flat = idx
                .iter()
                .zip(&sizes)
                .fold(0, |acc, (&i, &m)| acc * m + a[i]);
            out[flat] += p;
        }
        let vars = idx.iter().map(|&i| self.vars[i].clone()).collect();
        // marginal sums inherit rounding from the parent; renormalize exactly once
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= sum);
        JointDist::new(vars, out)
    }

    /// `H(names)`; the empty set has entropy zero.
    pub fn entropy(&self, names: &[&str]) -> Result<f64> {
        if names.is_empty() {
            return Ok(0.0);
        }
        Ok(entropy_of(&self.marginal(names)?.probs))
    }

    /// `H(a | b)`.
    pub fn cond_entropy(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        let ab: Vec<&str> = a.iter().chain(b).copied().collect();
        Ok(self.entropy(&ab)? - self.entropy(b)?)
    }

    /// `I(a; b)`.
    pub fn mutual_info(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.cond_mutual_info(a, b, &[])
    }

    /// `I(a; b | c)`.
    pub fn cond_mutual_info(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        Ok(self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?)
    }

    /// Largest entrywise deviation of `p(a,b,c) p(b)` from `p(a,b) p(b,c)`;
    /// zero exactly when `a <-> b <-> c` is a Markov chain.
    pub fn markov_gap(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let all: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        let joint = self.marginal(&all)?;
        let size = |names: &[&str]| -> Result<usize> {
            names
                .iter()
                .map(|n| self.size_of(n))
                .product::<Result<usize>>()
        };
        let (sa, sb, sc) = (size(a)?, size(b)?, size(c)?);
        let mut pab = vec![0.0; sa * sb];
        let mut pbc = vec![0.0; sb * sc];
        let mut pb = vec![0.0; sb];
        for (i, &p) in joint.probs.iter().enumerate() {
            let (ia, rest) = (i / (sb * sc), i % (sb * sc));
            let (ib, ic) = (rest / sc, rest % sc);
            pab[ia * sb + ib] += p;
            pbc[ib * sc + ic] += p;
            pb[ib] += p;
        }
        let mut gap: f64 = 0.0;
        for (i, &p) in joint.probs.iter().enumerate() {
            let (ia, rest) = (i / (sb * sc), i % (sb * sc));
            let (ib, ic) = (rest / sc, rest % sc);
            gap = gap.max((p * pb[ib] - pab[ia * sb + ib] * pbc[ib * sc + ic]).abs());
        }
        Ok(gap)
    }

    /// Returns an error naming the chain when `a <-> b <-> c` fails.
    pub fn require_markov(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<()> {
        let gap = self.markov_gap(a, b, c)?;
        if gap > MARKOV_TOLERANCE {
            let condition = if b.is_empty() {
                format!("{} independent of {}", a.join(""), c.join(""))
            } else {
                format!("{} <-> {} <-> {}", a.join(""), b.join(""), c.join(""))
            };
            return Err(Error::Markov { condition, gap });
        }
        Ok(())
    }

    /// Probability of one full assignment.
    pub fn prob(&self, assignment: &[usize]) -> f64 {
        let flat = assignment
            .iter()
            .zip(&self.vars)
            .fold(0, |acc, (&a, v)| acc * v.size + a);
        self.probs[flat]
    }

    /// Appends a variable that is a deterministic function of existing ones.
    pub fn with_function(
        &self,
        name: &str,
        size: usize,
        inputs: &[&str],
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<JointDist> {
        if self.has(name) {
            return Err(Error::Joint(format!("variable {name} already present")));
        }
        let idx: Vec<usize> = inputs
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<_>>()?;
        let mut vars = self.vars.clone();
        vars.push(Variable {
            name: name.to_string(),
            size,
        });
        let mut probs = vec![0.0; self.probs.len() * size];
        for (flat, (a, p)) in self.iter().enumerate() {
            let args: Vec<usize> = idx.iter().map(|&i| a[i]).collect();
            let value = f(&args);
            if value >= size {
                return Err(Error::Joint(format!(
                    "function value {value} outside alphabet of {name}"
                )));
            }
            probs[flat * size + value] = p;
        }
        JointDist::new(vars, probs)
    }

    /// Probability that `name` differs from `f(inputs)`.
    pub fn functional_violation(
        &self,
        name: &str,
        inputs: &[&str],
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<f64> {
        let target = self.index_of(name)?;
        let idx: Vec<usize> = inputs
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<_>>()?;
        Ok(self
            .iter()
            .filter(|(a, _)| {
                let args: Vec<usize> = idx.iter().map(|&i| a[i]).collect();
                a[target] != f(&args)
            })
            .map(|(_, p)| p)
            .sum())
    }

    /// Conditional table `p(out | given)` as rows indexed by the flattened
    /// `given` assignment; rows with zero mass are uniform.
    pub fn conditional(&self, out: &[&str], given: &[&str]) -> Result<Vec<Vec<f64>>> {
        let all: Vec<&str> = given.iter().chain(out).copied().collect();
        let m = self.marginal(&all)?;
        let so: usize = out
            .iter()
            .map(|n| self.size_of(n))
            .product::<Result<usize>>()?;
        let sg: usize = given
            .iter()
            .map(|n| self.size_of(n))
            .product::<Result<usize>>()?;
        let mut rows = Vec::with_capacity(sg);
        for g in 0..sg {
            let row = &m.probs[g * so..(g + 1) * so];
            let s: f64 = row.iter().sum();
            rows.push(if s > 0.0 {
                row.iter().map(|p| p / s).collect()
            } else {
                vec![1.0 / so as f64; so]
            });
        }
        Ok(rows)
    }

    /// `E[d(args)]` for a cost over the listed variables.
    pub fn expectation(&self, names: &[&str], f: impl Fn(&[usize]) -> f64) -> Result<f64> {
        let m = self.marginal(names)?;
        Ok(m.iter()
            .map(|(a, p)| if p > 0.0 { p * f(&a) } else { 0.0 })
            .sum())
    }

    pub fn parse(text: &str) -> Result<JointDist> {
        let mut names: Option<Vec<String>> = None;
        let mut sizes: Option<Vec<usize>> = None;
        let mut probs: Vec<f64> = Vec::new();
        let mut in_probs = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Joint(format!("line {}: {what}", lineno + 1));
            if let Some(rest) = line.strip_prefix("vars:") {
                names = Some(rest.split_whitespace().map(String::from).collect());
                in_probs = false;
            } else if let Some(rest) = line.strip_prefix("sizes:") {
                sizes = Some(
                    rest.split_whitespace()
                        .map(|t| t.parse().map_err(|_| bad("bad alphabet size")))
                        .collect::<Result<_>>()?,
                );
                in_probs = false;
            } else if let Some(rest) = line.strip_prefix("probs:") {
                in_probs = true;
                for t in rest.split_whitespace() {
                    probs.push(t.parse().map_err(|_| bad("bad probability"))?);
                }
            } else if in_probs {
                for t in line.split_whitespace() {
                    probs.push(t.parse().map_err(|_| bad("bad probability"))?);
                }
            } else {
                return Err(bad("expected `vars:`, `sizes:` or `probs:`"));
            }
        }
        let names = names.ok_or_else(|| Error::Joint("missing `vars:` line".into()))?;
        let sizes = sizes.ok_or_else(|| Error::Joint("missing `sizes:` line".into()))?;
        if names.len() != sizes.len() {
            return Err(Error::Joint(format!(
                "{} variables but {} sizes",
                names.len(),
                sizes.len()
            )));
        }
        let vars = names
            .into_iter()
            .zip(sizes)
            .map(|(name, size)| Variable { name, size })
            .collect();
        JointDist::new(vars, probs)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let names: Vec<&str> = self.vars.iter().map(|v| v.name.as_str()).collect();
        let sizes: Vec<String> = self.vars.iter().map(|v| v.size.to_string()).collect();
        let _ = writeln!(s, "vars: {}", names.join(" "));
        let _ = writeln!(s, "sizes: {}", sizes.join(" "));
        let _ = writeln!(s, "probs:");
        let row = self.vars.last().map(|v| v.size).unwrap_or(1);
        for chunk in self.probs.chunks(row) {
            let items: Vec<String> = chunk.iter().map(|p| format!("{p:?}")).collect();
            let _ = writeln!(s, "{}", items.join(" "));
        }
        s
    }
}

/// Binary entropy function in bits.
pub fn h2(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dsbs(p: f64) -> JointDist {
        JointDist::from_fn(&[("X", 2), ("Y", 2)], |a| {
            if a[0] == a[1] {
                (1.0 - p) / 2.0
            } else {
                p / 2.0
            }
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let v = |n: &str, s| Variable {
            name: n.into(),
            size: s,
        };
        assert!(JointDist::new(vec![v("X", 2)], vec![0.5, 0.6]).is_err());
        assert!(JointDist::new(vec![v("X", 2)], vec![1.5, -0.5]).is_err());
        assert!(JointDist::new(vec![v("X", 2)], vec![1.0]).is_err());
        assert!(JointDist::new(vec![v("X", 2), v("X", 2)], vec![0.25; 4]).is_err());
    }

    #[test]
    fn entropies_of_dsbs() {
        let j = dsbs(0.11);
        assert!((j.entropy(&["X"]).unwrap() - 1.0).abs() < 1e-12);
        assert!((j.cond_entropy(&["Y"], &["X"]).unwrap() - h2(0.11)).abs() < 1e-12);
        assert!((j.mutual_info(&["X"], &["Y"]).unwrap() - (1.0 - h2(0.11))).abs() < 1e-12);
    }

    #[test]
    fn marginals_agree_two_ways() {
        let j = JointDist::from_fn(&[("A", 2), ("B", 3), ("C", 2)], |a| {
            (1 + a[0] + 2 * a[1] + 3 * a[2]) as f64 / 60.0
        })
        .unwrap();
        let direct = j.marginal(&["A"]).unwrap();
        let staged = j.marginal(&["A", "B"]).unwrap().marginal(&["A"]).unwrap();
        for (x, y) in direct.probs().iter().zip(staged.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn markov_gap_detects_chains() {
        // A -> B -> C by construction
        let j = JointDist::from_fn(&[("A", 2), ("B", 2), ("C", 2)], |a| {
            let pa = 0.5;
            let pb = if a[0] == a[1] { 0.8 } else { 0.2 };
            let pc = if a[1] == a[2] { 0.7 } else { 0.3 };
            pa * pb * pc
        })
        .unwrap();
        assert!(j.markov_gap(&["A"], &["B"], &["C"]).unwrap() < 1e-15);
        assert!(j.markov_gap(&["A"], &["C"], &["B"]).unwrap() > 1e-3);
        assert!(j.require_markov(&["B"], &["A"], &["C"]).is_err());
    }

    #[test]
    fn text_format_round_trips() {
        let j = dsbs(0.1);
        let back = JointDist::parse(&j.to_text()).unwrap();
        assert_eq!(j, back);
        let parsed =
            JointDist::parse("# dsbs\nvars: X Y\nsizes: 2 2\nprobs:\n0.45 0.05\n0.05 0.45\n")
                .unwrap();
        assert!((parsed.mutual_info(&["X"], &["Y"]).unwrap() - (1.0 - h2(0.1))).abs() < 1e-12);
        assert!(JointDist::parse("vars: X\nprobs: 1\n").is_err());
        assert!(JointDist::parse("sizes: 2\nvars: X\nprobs: 0.5 0.4\n").is_err());
    }

    #[test]
    fn derived_sum_variable() {
        let j = dsbs(0.2)
            .with_function("W", 2, &["X", "Y"], |a| (a[0] + a[1]) % 2)
            .unwrap();
        assert!((j.entropy(&["W"]).unwrap() - h2(0.2)).abs() < 1e-12);
        assert_eq!(
            j.functional_violation("W", &["X", "Y"], |a| (a[0] + a[1]) % 2)
                .unwrap(),
            0.0
        );
    }
}
