//! The polar transform `a -> aG` over an Abelian group, with
//! `G = B_N F^{⊗n}`, `F = [[1, 0], [1, 1]]` and `B_N` the bit-reversal
//! permutation. Index sets elsewhere in the crate always refer to positions
//! of `a` (before the transform).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{AbelianGroup, Element};

pub const MAX_LOG_BLOCK: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformPlan {
    n: u32,
    perm: Vec<usize>,
}

pub fn bit_reverse(i: usize, n: u32) -> usize {
    if n == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - n)
    }
}

impl TransformPlan {
    pub fn new(n: u32) -> Result<Self> {
        if n > MAX_LOG_BLOCK {
            return Err(Error::Infeasible(format!(
                "block length 2^{n} is too large"
            )));
        }
        let perm = (0..1usize << n).map(|i| bit_reverse(i, n)).collect();
        Ok(TransformPlan { n, perm })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    fn check(&self, len: usize) {
        assert_eq!(
            len,
            self.len(),
            "block length does not match the transform plan"
        );
    }

    pub fn transform_in_place(&self, group: &AbelianGroup, a: &mut [Element]) {
        self.check(a.len());
        permute(&self.perm, a);
        let mut h = 1;
        while h < a.len() {
            for block in a.chunks_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (x, &y) in lo.iter_mut().zip(hi.iter()) {
                    *x = group.add(*x, y);
                }
            }
            h *= 2;
        }
    }

    pub fn inverse_in_place(&self, group: &AbelianGroup, s: &mut [Element]) {
        self.check(s.len());
        let mut h = s.len() / 2;
        while h >= 1 {
            for block in s.chunks_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (x, &y) in lo.iter_mut().zip(hi.iter()) {
                    *x = group.sub(*x, y);
                }
            }
            h /= 2;
        }
        permute(&self.perm, s);
    }

    pub fn transform(&self, group: &AbelianGroup, a: &[Element]) -> Vec<Element> {
        let mut out = a.to_vec();
        self.transform_in_place(group, &mut out);
        out
    }

    pub fn inverse(&self, group: &AbelianGroup, s: &[Element]) -> Vec<Element> {
        let mut out = s.to_vec();
        self.inverse_in_place(group, &mut out);
        out
    }
}

fn permute(perm: &[usize], a: &mut [Element]) {
    for (i, &j) in perm.iter().enumerate() {
        if i < j {
            a.swap(i, j);
        }
    }
}

/// A length-`2^n` sequence of group elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    group: Arc<AbelianGroup>,
    data: Vec<Element>,
}

impl Block {
    pub fn new(group: Arc<AbelianGroup>, data: Vec<Element>) -> Result<Self> {
        if !data.len().is_power_of_two() {
            return Err(Error::Codec(format!(
                "block length {} is not a power of two",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&g| g >= group.order()) {
            return Err(Error::Codec(format!("{bad} is not an element of {group}")));
        }
        Ok(Block { group, data })
    }

    pub fn zeros(group: Arc<AbelianGroup>, n: u32) -> Self {
        Block {
            group,
            data: vec![0; 1 << n],
        }
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn data(&self) -> &[Element] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Element> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn log_len(&self) -> u32 {
        self.data.len().trailing_zeros()
    }

    pub fn transform(&self) -> Block {
        let plan = TransformPlan::new(self.log_len()).expect("validated length");
        Block {
            group: self.group.clone(),
            data: plan.transform(&self.group, &self.data),
        }
    }

    pub fn inverse_transform(&self) -> Block {
        let plan = TransformPlan::new(self.log_len()).expect("validated length");
        Block {
            group: self.group.clone(),
            data: plan.inverse(&self.group, &self.data),
        }
    }

    pub fn add(&self, other: &Block) -> Block {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.group.add(a, b))
            .collect();
        Block {
            group: self.group.clone(),
            data,
        }
    }

    pub fn sub(&self, other: &Block) -> Block {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.group.sub(a, b))
            .collect();
        Block {
            group: self.group.clone(),
            data,
        }
    }
}

pub fn add_blocks(group: &AbelianGroup, a: &[Element], b: &[Element]) -> Vec<Element> {
    a.iter().zip(b).map(|(&x, &y)| group.add(x, y)).collect()
}

pub fn sub_blocks(group: &AbelianGroup, a: &[Element], b: &[Element]) -> Vec<Element> {
    a.iter().zip(b).map(|(&x, &y)| group.sub(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn group(f: &[usize]) -> Arc<AbelianGroup> {
        Arc::new(AbelianGroup::new(f).unwrap())
    }

    #[test]
    fn small_butterflies() {
        let g = group(&[2]);
        let b = Block::new(g.clone(), vec![1, 1]).unwrap();
        assert_eq!(b.transform().data(), &[0, 1]);
        assert_eq!(
            Block::new(g.clone(), vec![0, 1])
                .unwrap()
                .inverse_transform()
                .data(),
            &[1, 1]
        );
        assert_eq!(Block::new(g, vec![1]).unwrap().transform().data(), &[1]);
    }

    /// Dense `G_N` built from Kronecker powers and an explicit bit reversal.
    fn dense_generator(n: u32) -> Vec<Vec<usize>> {
        let mut f = vec![vec![1usize]];
        for _ in 0..n {
            let m = f.len();
            let mut next = vec![vec![0; 2 * m]; 2 * m];
            for i in 0..m {
                for j in 0..m {
                    next[i][j] = f[i][j];
                    next[m + i][j] = f[i][j];
                    next[m + i][m + j] = f[i][j];
                }
            }
            f = next;
        }
        let nn = f.len();
        (0..nn).map(|i| f[bit_reverse(i, n)].clone()).collect()
    }

    #[test]
    fn matches_dense_generator_over_z3() {
        let g = group(&[3]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 0..5 {
            let gen = dense_generator(n);
            let plan = TransformPlan::new(n).unwrap();
            for _ in 0..20 {
                let a: Vec<usize> = (0..1 << n).map(|_| rng.gen_range(0..3)).collect();
                let expect: Vec<usize> = (0..1 << n)
                    .map(|j| (0..1 << n).map(|i| a[i] * gen[i][j]).sum::<usize>() % 3)
                    .collect();
                assert_eq!(plan.transform(&g, &a), expect);
            }
        }
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for f in [&[4][..], &[3], &[2, 2]] {
            let g = group(f);
            for n in [2, 3, 8] {
                let plan = TransformPlan::new(n).unwrap();
                for _ in 0..100 {
                    let s: Vec<usize> = (0..1 << n).map(|_| rng.gen_range(0..g.order())).collect();
                    assert_eq!(plan.transform(&g, &plan.inverse(&g, &s)), s);
                    assert_eq!(plan.inverse(&g, &plan.transform(&g, &s)), s);
                }
            }
        }
        let g = group(&[5]);
        let z = Block::zeros(g, 4);
        assert_eq!(z.transform(), z);
    }

    #[test]
    fn permutation_is_an_involution() {
        for n in 0..12 {
            let plan = TransformPlan::new(n).unwrap();
            let p = plan.permutation();
            assert!((0..p.len()).all(|i| p[p[i]] == i));
        }
    }

    #[test]
    fn block_validation() {
        let g = group(&[2]);
        assert!(Block::new(g.clone(), vec![0, 1, 0]).is_err());
        assert!(Block::new(g, vec![0, 2]).is_err());
    }
}
