//! Finite Abelian groups given as products of cyclic factors.
//!
//! Elements are indexed by their canonical mixed-radix enumeration (last
//! factor varies fastest), so `Element` is a plain `usize` in `0..order`.
//! The full subgroup lattice and the minimal-representative transversals
//! are computed once at construction.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element of a group, as its canonical index.
pub type Element = usize;

/// Largest group order for which the subgroup lattice is enumerated.
pub const MAX_GROUP_ORDER: usize = 64;

/// Position of a subgroup in the lattice of its parent group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgroupId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    members: Vec<Element>,
    mask: u64,
}

impl Subgroup {
    pub fn members(&self) -> &[Element] {
        &self.members
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, g: Element) -> bool {
        self.mask >> g & 1 == 1
    }

    fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.mask & !other.mask == 0
    }
}

/// Minimal-representative transversals for every subgroup.
///
/// The representative of `g + K` is its smallest canonical element; the same
/// rule restricted to `H` gives the transversal of `K` in `H` for `K <= H`.
#[derive(Clone, Debug)]
pub struct TransversalSystem {
    /// `rep[k][g]` is the minimal element of the coset `g + K`.
    rep: Vec<Vec<Element>>,
    /// `of_in[k][h]` lists `T_{K<=H}` (sorted) when `K <= H`.
    of_in: Vec<Vec<Option<Vec<Element>>>>,
}

impl TransversalSystem {
    /// Representative of the coset `g + K`.
    pub fn rep(&self, k: SubgroupId, g: Element) -> Element {
        self.rep[k.0][g]
    }

    /// The transversal of `K` in `H`, or `None` unless `K <= H`.
    pub fn of_in(&self, k: SubgroupId, h: SubgroupId) -> Option<&[Element]> {
        self.of_in[k.0][h.0].as_deref()
    }
}

#[derive(Clone)]
pub struct AbelianGroup {
    factors: Vec<usize>,
    order: usize,
    add: Vec<Element>,
    neg: Vec<Element>,
    subgroups: Vec<Subgroup>,
    by_mask: HashMap<u64, SubgroupId>,
    transversals: TransversalSystem,
}

impl fmt::Debug for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AbelianGroup({})", self)
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|m| format!("Z{m}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl PartialEq for AbelianGroup {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors
    }
}

impl Eq for AbelianGroup {}

/// Builds `Z_{m1} x ... x Z_{mk}` together with its subgroup lattice.
pub fn build_group(factors: &[usize]) -> Result<AbelianGroup> {
    AbelianGroup::new(factors)
}

impl AbelianGroup {
    pub fn new(factors: &[usize]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Group(
                "at least one cyclic factor is required".into(),
            ));
        }
        if let Some(bad) = factors.iter().find(|&&m| m == 0) {
            return Err(Error::Group(format!(
                "cyclic factor must be >= 1, got {bad}"
            )));
        }
        let order = factors
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .filter(|&q| q <= MAX_GROUP_ORDER)
            .ok_or_else(|| {
                Error::Group(format!(
                    "order of {factors:?} exceeds the lattice bound {MAX_GROUP_ORDER}"
                ))
            })?;

        let to_tuple = |mut g: usize| -> Vec<usize> {
            let mut t = vec![0; factors.len()];
            for (slot, &m) in t.iter_mut().zip(factors).rev() {
                *slot = g % m;
                g /= m;
            }
            t
        };
        let from_tuple =
            |t: &[usize]| -> usize { t.iter().zip(factors).fold(0, |acc, (&r, &m)| acc * m + r) };

        let mut add = vec![0; order * order];
        let mut neg = vec![0; order];
        for a in 0..order {
            let ta = to_tuple(a);
            let na: Vec<usize> = ta.iter().zip(factors).map(|(&r, &m)| (m - r) % m).collect();
            neg[a] = from_tuple(&na);
            for b in 0..order {
                let tb = to_tuple(b);
                let s: Vec<usize> = ta
                    .iter()
                    .zip(&tb)
                    .zip(factors)
                    .map(|((&x, &y), &m)| (x + y) % m)
                    .collect();
                add[a * order + b] = from_tuple(&s);
            }
        }

        let mut group = AbelianGroup {
            factors: factors.to_vec(),
            order,
            add,
            neg,
            subgroups: Vec::new(),
            by_mask: HashMap::new(),
            transversals: TransversalSystem {
                rep: Vec::new(),
                of_in: Vec::new(),
            },
        };
        group.enumerate_subgroups();
        group.build_transversals();
        Ok(group)
    }

    fn mask_members(mask: u64) -> Vec<Element> {
        (0..64).filter(|&g| mask >> g & 1 == 1).collect()
    }

    /// Smallest subgroup containing `mask` and `g`.
    fn extend(&self, mask: u64, g: Element) -> u64 {
        let members = Self::mask_members(mask);
        let mut out = mask;
        let mut step = g;
        while step != 0 {
            for &m in &members {
                out |= 1 << self.add(m, step);
            }
            step = self.add(step, g);
        }
        out
    }

    fn enumerate_subgroups(&mut self) {
        let trivial = 1u64;
        let mut seen: HashSet<u64> = HashSet::from([trivial]);
        let mut frontier = vec![trivial];
        while let Some(mask) = frontier.pop() {
            for g in 0..self.order {
                if mask >> g & 1 == 1 {
                    continue;
                }
                let next = self.extend(mask, g);
                if seen.insert(next) {
                    frontier.push(next);
                }
            }
        }
        let mut subs: Vec<Subgroup> = seen
            .into_iter()
            .map(|mask| Subgroup {
                members: Self::mask_members(mask),
                mask,
            })
            .collect();
        subs.sort_by(|a, b| {
            a.order()
                .cmp(&b.order())
                .then_with(|| a.members.cmp(&b.members))
        });
        self.by_mask = subs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.mask, SubgroupId(i)))
            .collect();
        self.subgroups = subs;
    }

    fn build_transversals(&mut self) {
        let count = self.subgroups.len();
        let mut rep = Vec::with_capacity(count);
        for k in &self.subgroups {
            let r: Vec<Element> = (0..self.order)
                .map(|g| k.members.iter().map(|&x| self.add(g, x)).min().unwrap_or(g))
                .collect();
            rep.push(r);
        }
        let mut of_in = vec![vec![None; count]; count];
        for (ki, k) in self.subgroups.iter().enumerate() {
            for (hi, h) in self.subgroups.iter().enumerate() {
                if k.is_subset_of(h) {
                    let mut t: Vec<Element> = h
                        .members
                        .iter()
                        .copied()
                        .filter(|&g| rep[ki][g] == g)
                        .collect();
                    t.sort_unstable();
                    of_in[ki][hi] = Some(t);
                }
            }
        }
        self.transversals = TransversalSystem { rep, of_in };
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn elements(&self) -> std::ops::Range<Element> {
        0..self.order
    }

    #[inline]
    pub fn add(&self, a: Element, b: Element) -> Element {
        self.add[a * self.order + b]
    }

    #[inline]
    pub fn neg(&self, a: Element) -> Element {
        self.neg[a]
    }

    #[inline]
    pub fn sub(&self, a: Element, b: Element) -> Element {
        self.add(a, self.neg[b])
    }

    /// Residue tuple of an element.
    pub fn tuple(&self, mut g: Element) -> Vec<usize> {
        let mut t = vec![0; self.factors.len()];
        for (slot, &m) in t.iter_mut().zip(&self.factors).rev() {
            *slot = g % m;
            g /= m;
        }
        t
    }

    pub fn from_tuple(&self, t: &[usize]) -> Result<Element> {
        if t.len() != self.factors.len() || t.iter().zip(&self.factors).any(|(&r, &m)| r >= m) {
            return Err(Error::Group(format!("{t:?} is not an element of {self}")));
        }
        Ok(t.iter()
            .zip(&self.factors)
            .fold(0, |acc, (&r, &m)| acc * m + r))
    }

    /// Subgroups ordered by order, then by member list.
    pub fn subgroups(&self) -> &[Subgroup] {
        &self.subgroups
    }

    pub fn subgroup_ids(&self) -> impl Iterator<Item = SubgroupId> {
        (0..self.subgroups.len()).map(SubgroupId)
    }

    pub fn subgroup(&self, id: SubgroupId) -> &Subgroup {
        &self.subgroups[id.0]
    }

    pub fn trivial(&self) -> SubgroupId {
        SubgroupId(0)
    }

    pub fn whole(&self) -> SubgroupId {
        SubgroupId(self.subgroups.len() - 1)
    }

    /// Looks a subgroup up by its member set.
    pub fn find_subgroup(&self, members: &[Element]) -> Result<SubgroupId> {
        let mut mask = 0u64;
        for &g in members {
            if g >= self.order {
                return Err(Error::Group(format!("{g} is not an element of {self}")));
            }
            mask |= 1 << g;
        }
        self.by_mask
            .get(&mask)
            .copied()
            .ok_or_else(|| Error::Group(format!("{members:?} is not a subgroup of {self}")))
    }

    pub fn is_subgroup_of(&self, k: SubgroupId, h: SubgroupId) -> bool {
        self.subgroup(k).is_subset_of(self.subgroup(h))
    }

    pub fn meet(&self, a: SubgroupId, b: SubgroupId) -> SubgroupId {
        let mask = self.subgroup(a).mask & self.subgroup(b).mask;
        self.by_mask[&mask]
    }

    pub fn join(&self, a: SubgroupId, b: SubgroupId) -> SubgroupId {
        let mut mask = self.subgroup(a).mask;
        for &g in self.subgroup(b).members() {
            if mask >> g & 1 == 0 {
                mask = self.extend(mask, g);
            }
        }
        self.by_mask[&mask]
    }

    pub fn transversals(&self) -> &TransversalSystem {
        &self.transversals
    }

    /// `T_H`: representatives of the cosets of `H` in the whole group.
    pub fn transversal(&self, h: SubgroupId) -> &[Element] {
        self.transversals.of_in[h.0][self.whole().0]
            .as_deref()
            .expect("every subgroup sits in G")
    }

    /// `T_{K<=H}`.
    pub fn transversal_in(&self, k: SubgroupId, h: SubgroupId) -> Result<&[Element]> {
        self.transversals
            .of_in(k, h)
            .ok_or_else(|| self.not_subgroup(k, h))
    }

    fn not_subgroup(&self, k: SubgroupId, h: SubgroupId) -> Error {
        Error::NotSubgroup {
            inner: self.subgroup(k).members.clone(),
            outer: self.subgroup(h).members.clone(),
        }
    }

    /// Splits `g = gK + gKH + gH` with `gK` in `K`, `gKH` in `T_{K<=H}` and
    /// `gH` in `T_H`.
    pub fn coset_decompose(
        &self,
        g: Element,
        k: SubgroupId,
        h: SubgroupId,
    ) -> Result<(Element, Element, Element)> {
        if !self.is_subgroup_of(k, h) {
            return Err(self.not_subgroup(k, h));
        }
        let g_h = self.transversals.rep(h, g);
        let within = self.sub(g, g_h);
        let g_kh = self.transversals.rep(k, within);
        let g_k = self.sub(within, g_kh);
        Ok((g_k, g_kh, g_h))
    }

    /// Sorted sums `T_{K<=H} + T_H`, a transversal of `K` in the group.
    pub fn composed_transversal(&self, k: SubgroupId, h: SubgroupId) -> Result<Vec<Element>> {
        let inner = self.transversal_in(k, h)?;
        let outer = self.transversal(h);
        let mut out: Vec<Element> = inner
            .iter()
            .flat_map(|&m| outer.iter().map(move |&t| (m, t)))
            .map(|(m, t)| self.add(m, t))
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Whether sum decoding can work componentwise: every transversal is a
    /// subgroup and `T_{K<=H} + T_H` equals `T_K` for all `K <= H`.
    pub fn has_additive_transversals(&self) -> bool {
        let additive = |set: &[Element]| {
            let members: HashSet<Element> = set.iter().copied().collect();
            set.iter()
                .all(|&a| set.iter().all(|&b| members.contains(&self.add(a, b))))
        };
        for k in self.subgroup_ids() {
            for h in self.subgroup_ids() {
                let Some(t_kh) = self.transversals.of_in(k, h) else {
                    continue;
                };
                if !additive(t_kh) {
                    return false;
                }
                match self.composed_transversal(k, h) {
                    Ok(c) if c == self.transversal(k) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Members of a subgroup, for display and serialization.
    pub fn members_of(&self, id: SubgroupId) -> Vec<Element> {
        self.subgroup(id).members.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_subsets_closed(q: usize, g: &AbelianGroup) -> Vec<Vec<Element>> {
        // oracle: exhaustive enumeration of subsets closed under addition
        let mut out = Vec::new();
        for mask in 1u32..(1 << q) {
            if mask & 1 == 0 {
                continue;
            }
            let members: Vec<usize> = (0..q).filter(|&i| mask >> i & 1 == 1).collect();
            let closed = members
                .iter()
                .all(|&a| members.iter().all(|&b| mask >> g.add(a, b) & 1 == 1));
            if closed {
                out.push(members);
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }

    #[test]
    fn z2_has_two_subgroups() {
        let g = build_group(&[2]).unwrap();
        let subs: Vec<_> = g.subgroups().iter().map(|s| s.members().to_vec()).collect();
        assert_eq!(subs, vec![vec![0], vec![0, 1]]);
    }

    #[test]
    fn z4_is_a_chain() {
        let g = build_group(&[4]).unwrap();
        let subs: Vec<_> = g.subgroups().iter().map(|s| s.members().to_vec()).collect();
        assert_eq!(subs, vec![vec![0], vec![0, 2], vec![0, 1, 2, 3]]);
        assert_eq!(subs, all_subsets_closed(4, &g));
    }

    #[test]
    fn klein_group_has_five_subgroups() {
        let g = build_group(&[2, 2]).unwrap();
        assert_eq!(g.subgroups().len(), 5);
        let subs: Vec<_> = g.subgroups().iter().map(|s| s.members().to_vec()).collect();
        assert_eq!(subs, all_subsets_closed(4, &g));
    }

    #[test]
    fn lattices_match_subset_enumeration() {
        for factors in [
            vec![3],
            vec![6],
            vec![8],
            vec![2, 4],
            vec![2, 2, 2],
            vec![3, 3],
            vec![12],
            vec![4, 4],
        ] {
            let g = build_group(&factors).unwrap();
            let subs: Vec<_> = g.subgroups().iter().map(|s| s.members().to_vec()).collect();
            assert_eq!(subs, all_subsets_closed(g.order(), &g), "{factors:?}");
        }
    }

    #[test]
    fn group_axioms_hold_by_exhaustion() {
        for factors in [
            vec![2],
            vec![3],
            vec![4],
            vec![2, 2],
            vec![2, 4],
            vec![4, 4],
            vec![2, 2, 2, 2],
        ] {
            let g = build_group(&factors).unwrap();
            let q = g.order();
            assert_eq!(g.elements().count(), factors.iter().product::<usize>());
            for a in 0..q {
                assert_eq!(g.add(a, 0), a);
                assert_eq!(g.add(a, g.neg(a)), 0);
                for b in 0..q {
                    assert_eq!(g.add(a, b), g.add(b, a));
                    for c in 0..q {
                        assert_eq!(g.add(g.add(a, b), c), g.add(a, g.add(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn subgroups_are_closed_and_divide_the_order() {
        let g = build_group(&[2, 4]).unwrap();
        for s in g.subgroups() {
            assert!(s.contains(0));
            assert_eq!(g.order() % s.order(), 0);
            for &a in s.members() {
                assert!(s.contains(g.neg(a)));
                for &b in s.members() {
                    assert!(s.contains(g.add(a, b)));
                }
            }
        }
    }

    #[test]
    fn lattice_closed_under_intersection() {
        for factors in [vec![4], vec![2, 2], vec![2, 4], vec![4, 4], vec![2, 2, 2]] {
            let g = build_group(&factors).unwrap();
            for a in g.subgroup_ids() {
                for b in g.subgroup_ids() {
                    let m = g.meet(a, b);
                    let expect: Vec<_> = g
                        .subgroup(a)
                        .members()
                        .iter()
                        .copied()
                        .filter(|&x| g.subgroup(b).contains(x))
                        .collect();
                    assert_eq!(g.subgroup(m).members(), &expect[..]);
                    let j = g.join(a, b);
                    assert!(g.is_subgroup_of(a, j) && g.is_subgroup_of(b, j));
                }
            }
        }
    }

    #[test]
    fn decompose_z4_example() {
        let g = build_group(&[4]).unwrap();
        let k = g.find_subgroup(&[0]).unwrap();
        let h = g.find_subgroup(&[0, 2]).unwrap();
        assert_eq!(g.transversal_in(k, h).unwrap(), &[0, 2]);
        assert_eq!(g.transversal(h), &[0, 1]);
        assert_eq!(g.coset_decompose(3, k, h).unwrap(), (0, 2, 1));
    }

    #[test]
    fn decompose_whole_group_absorbs_everything() {
        let g = build_group(&[2, 4]).unwrap();
        let w = g.whole();
        for x in g.elements() {
            assert_eq!(g.coset_decompose(x, w, w).unwrap(), (x, 0, 0));
        }
        for k in g.subgroup_ids() {
            for h in g.subgroup_ids().filter(|&h| g.is_subgroup_of(k, h)) {
                assert_eq!(g.coset_decompose(0, k, h).unwrap(), (0, 0, 0));
            }
        }
    }

    #[test]
    fn decompose_rejects_non_nested_pair() {
        let g = build_group(&[2, 2]).unwrap();
        let a = g.find_subgroup(&[0, 1]).unwrap();
        let b = g.find_subgroup(&[0, 2]).unwrap();
        assert!(matches!(
            g.coset_decompose(3, a, b),
            Err(Error::NotSubgroup { .. })
        ));
    }

    #[test]
    fn decomposition_is_a_bijection() {
        for factors in [
            vec![4],
            vec![2, 2],
            vec![8],
            vec![2, 4],
            vec![4, 4],
            vec![3, 3],
        ] {
            let g = build_group(&factors).unwrap();
            for k in g.subgroup_ids() {
                for h in g.subgroup_ids().filter(|&h| g.is_subgroup_of(k, h)) {
                    let t_kh = g.transversal_in(k, h).unwrap();
                    let t_h = g.transversal(h);
                    let mut seen = HashSet::new();
                    for x in g.elements() {
                        let (a, b, c) = g.coset_decompose(x, k, h).unwrap();
                        assert!(g.subgroup(k).contains(a));
                        assert!(t_kh.contains(&b));
                        assert!(t_h.contains(&c));
                        assert_eq!(g.add(g.add(a, b), c), x);
                        seen.insert((a, b, c));
                    }
                    assert_eq!(seen.len(), g.subgroup(k).order() * t_kh.len() * t_h.len());
                    assert_eq!(seen.len(), g.order());
                }
            }
        }
    }

    #[test]
    fn composed_transversal_hits_every_coset_once() {
        let g = build_group(&[2, 4]).unwrap();
        for k in g.subgroup_ids() {
            for h in g.subgroup_ids().filter(|&h| g.is_subgroup_of(k, h)) {
                let t = g.composed_transversal(k, h).unwrap();
                let reps: HashSet<_> = t.iter().map(|&x| g.transversals().rep(k, x)).collect();
                assert_eq!(reps.len(), t.len());
                assert_eq!(t.len() * g.subgroup(k).order(), g.order());
            }
        }
    }

    #[test]
    fn additive_transversals() {
        assert!(build_group(&[2]).unwrap().has_additive_transversals());
        assert!(build_group(&[3]).unwrap().has_additive_transversals());
        assert!(build_group(&[2, 2]).unwrap().has_additive_transversals());
        assert!(!build_group(&[4]).unwrap().has_additive_transversals());
    }

    #[test]
    fn bounds_and_trivial_group() {
        assert!(build_group(&[]).is_err());
        assert!(build_group(&[0]).is_err());
        assert!(build_group(&[128]).is_err());
        assert!(build_group(&[8, 16]).is_err());
        let t = build_group(&[1]).unwrap();
        assert_eq!(t.order(), 1);
        assert_eq!(t.subgroups().len(), 1);
    }

    #[test]
    fn tuples_round_trip() {
        let g = build_group(&[2, 3]).unwrap();
        assert_eq!(g.tuple(5), vec![1, 2]);
        for x in g.elements() {
            assert_eq!(g.from_tuple(&g.tuple(x)).unwrap(), x);
        }
        assert_eq!(g.to_string(), "Z2xZ3");
    }
}
