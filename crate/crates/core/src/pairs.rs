//! Deterministic parallel reductions over unordered index pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Default seed for every sampled computation.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Above this many pairs the flow verifier samples instead of enumerating.
pub const EXHAUSTIVE_PAIR_LIMIT: u64 = 10_000_000;

pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// A minimum value together with the pair attaining it.
///
/// Ties go to the lexicographically smallest `(i, j)`, so merging is
/// associative and commutative and the result does not depend on how work was
/// split across threads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMin {
    pub value: f64,
    pub i: usize,
    pub j: usize,
}

impl PairMin {
    pub fn new(value: f64, i: usize, j: usize) -> Self {
        Self { value, i, j }
    }

    fn beats(&self, other: &PairMin) -> bool {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => (self.i, self.j) < (other.i, other.j),
        }
    }

    pub fn merge(a: Option<PairMin>, b: Option<PairMin>) -> Option<PairMin> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(if b.beats(&a) { b } else { a }),
        }
    }

    pub fn offer(slot: &mut Option<PairMin>, candidate: PairMin) {
        *slot = Self::merge(*slot, Some(candidate));
    }
}

/// Folds `visit(acc, i, j)` over all pairs `i < j < n` in parallel.
///
/// `merge` must be associative and commutative for the result to be
/// independent of the thread count.
pub fn fold_all_pairs<A, Id, V, M>(n: usize, identity: Id, visit: V, merge: M) -> A
where
    A: Send,
    Id: Fn() -> A + Sync + Send,
    V: Fn(&mut A, usize, usize) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .fold(&identity, |mut acc, i| {
            for j in i + 1..n {
                visit(&mut acc, i, j);
            }
            acc
        })
        .reduce(&identity, merge)
}

/// Same as [`fold_all_pairs`] over an explicit pair list.
pub fn fold_pair_list<A, Id, V, M>(pairs: &[(usize, usize)], identity: Id, visit: V, merge: M) -> A
where
    A: Send,
    Id: Fn() -> A + Sync + Send,
    V: Fn(&mut A, usize, usize) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    pairs
        .par_iter()
        .fold(&identity, |mut acc, &(i, j)| {
            visit(&mut acc, i, j);
            acc
        })
        .reduce(&identity, merge)
}

/// `count` uniformly random pairs `i < j` drawn with a seeded generator.
pub fn sample_pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        })
        .collect()
}

/// Pairs of indices whose vectors compare equal (with `-0.0 == 0.0`).
///
/// Members of a group of `k` equal vectors are reported as `k - 1` chained
/// pairs, sorted.
pub fn duplicate_vectors(values: &[Vec2]) -> Vec<(usize, usize)> {
    let key = |v: Vec2| (v.x1 + 0.0, v.x2 + 0.0);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let (a1, a2) = key(values[a]);
        let (b1, b2) = key(values[b]);
        a1.total_cmp(&b1).then(a2.total_cmp(&b2)).then(a.cmp(&b))
    });
    let mut out: Vec<(usize, usize)> = idx
        .windows(2)
        .filter(|w| key(values[w[0]]) == key(values[w[1]]))
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
        .collect();
    out.sort_unstable();
    out
}
