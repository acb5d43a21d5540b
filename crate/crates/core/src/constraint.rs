//! Precedence structure among observations.
//!
//! A vector `u` admits at least one distribution function `F` with
//! `F(l_i) < u_i <= F(r_i)` for all `i` exactly when `u_i < u_j` whenever
//! observation `i` lies entirely before `j` (`r_i <= l_j`). This module
//! materializes that order and answers the conditional range of one
//! coordinate given the others.

use thiserror::Error;

use crate::data::Dataset;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("empty conditional range for coordinate {index}: ({lower}, {upper})")]
    EmptyConditional { index: usize, lower: f64, upper: f64 },
    #[error("u has length {found}, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("u[{index}] = {value} is outside (0, 1)")]
    OutOfRange { index: usize, value: f64 },
    #[error("order violated: observation {before} precedes {after} but u is not increasing")]
    OrderViolated { before: usize, after: usize },
}

/// Predecessor and successor sets, stored as prefix/suffix ranges of two
/// sorted permutations.
///
/// `P(i)` is `by_upper[..pred_len[i]]` and `S(i)` is `by_lower[succ_start[i]..]`.
#[derive(Debug, Clone)]
pub struct PrecedenceIndex {
    by_upper: Vec<usize>,
    by_lower: Vec<usize>,
    upper_rank: Vec<usize>,
    lower_rank: Vec<usize>,
    pred_len: Vec<usize>,
    succ_start: Vec<usize>,
}

fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (pos, &i) in perm.iter().enumerate() {
        inv[i] = pos;
    }
    inv
}

impl PrecedenceIndex {
    pub fn new<T: Scalar>(ds: &Dataset<T>) -> Self {
        let obs = ds.observations();
        let n = obs.len();

        let mut by_upper: Vec<usize> = (0..n).collect();
        by_upper.sort_by(|&a, &b| obs[a].upper_key().cmp_total(&obs[b].upper_key()));
        let mut by_lower: Vec<usize> = (0..n).collect();
        by_lower.sort_by(|&a, &b| obs[a].lower_key().cmp_total(&obs[b].lower_key()));

        let pred_len = obs
            .iter()
            .map(|oi| by_upper.partition_point(|&j| obs[j].upper_key() <= oi.lower_key()))
            .collect();
        let succ_start = obs
            .iter()
            .map(|oi| by_lower.partition_point(|&j| obs[j].lower_key() < oi.upper_key()))
            .collect();

        Self {
            upper_rank: inverse_permutation(&by_upper),
            lower_rank: inverse_permutation(&by_lower),
            by_upper,
            by_lower,
            pred_len,
            succ_start,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.by_upper.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.by_upper.is_empty()
    }

    /// Observations that must carry a smaller `u` than `i`.
    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.by_upper[..self.pred_len[i]]
    }

    /// Observations that must carry a larger `u` than `i`.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.by_lower[self.succ_start[i]..]
    }

    /// `j ∈ P(i)`.
    #[inline]
    pub fn is_predecessor(&self, j: usize, i: usize) -> bool {
        self.upper_rank[j] < self.pred_len[i]
    }

    /// `j ∈ S(i)`.
    #[inline]
    pub fn is_successor(&self, j: usize, i: usize) -> bool {
        self.lower_rank[j] >= self.succ_start[i]
    }

    /// Open range `(a, b)` available to `u_i` given the other coordinates.
    /// Linear scan over `P(i)` and `S(i)`.
    pub fn conditional_bounds<T: Scalar>(
        &self,
        i: usize,
        u: &[T],
    ) -> Result<(T, T), ConstraintError> {
        let a = self
            .predecessors(i)
            .iter()
            .map(|&j| u[j])
            .fold(T::zero(), T::max);
        let b = self
            .successors(i)
            .iter()
            .map(|&j| u[j])
            .fold(T::one(), T::min);
        check_range(i, a, b)
    }

    /// Checks `u ∈ (0,1)^n` and the precedence order in `O(n)`.
    pub fn check_feasible<T: Scalar>(&self, u: &[T]) -> Result<(), ConstraintError> {
        let n = self.len();
        if u.len() != n {
            return Err(ConstraintError::Length {
                expected: n,
                found: u.len(),
            });
        }
        if let Some((index, &value)) = u
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > T::zero() && v < T::one()))
        {
            return Err(ConstraintError::OutOfRange {
                index,
                value: value.to_f64_lossy(),
            });
        }
        // prefix_max[k] = (max u, argmax) over by_upper[..k]
        let mut prefix_max: Vec<(T, usize)> = Vec::with_capacity(n + 1);
        prefix_max.push((T::zero(), usize::MAX));
        for &j in &self.by_upper {
            let (best, arg) = *prefix_max.last().unwrap();
            prefix_max.push(if u[j] > best { (u[j], j) } else { (best, arg) });
        }
        for i in 0..n {
            let (best, arg) = prefix_max[self.pred_len[i]];
            if arg != usize::MAX && best >= u[i] {
                return Err(ConstraintError::OrderViolated {
                    before: arg,
                    after: i,
                });
            }
        }
        Ok(())
    }

    pub fn is_feasible<T: Scalar>(&self, u: &[T]) -> bool {
        self.check_feasible(u).is_ok()
    }
}

/// Convenience wrapper over [`PrecedenceIndex::new`].
pub fn build_index<T: Scalar>(ds: &Dataset<T>) -> PrecedenceIndex {
    PrecedenceIndex::new(ds)
}

#[inline]
fn check_range<T: Scalar>(index: usize, a: T, b: T) -> Result<(T, T), ConstraintError> {
    if a < b {
        Ok((a, b))
    } else {
        Err(ConstraintError::EmptyConditional {
            index,
            lower: a.to_f64_lossy(),
            upper: b.to_f64_lossy(),
        })
    }
}

/// A feasible vector of constrained uniforms.
#[derive(Debug, Clone, PartialEq)]
pub struct UVector<T>(Vec<T>);

impl<T: Scalar> UVector<T> {
    pub fn new(values: Vec<T>, idx: &PrecedenceIndex) -> Result<Self, ConstraintError> {
        idx.check_feasible(&values)?;
        Ok(Self(values))
    }

    /// Wraps values whose feasibility the caller maintains.
    pub(crate) fn from_raw(values: Vec<T>) -> Self {
        Self(values)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Index<usize> for UVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Segment tree over a fixed permutation supporting point updates and
/// prefix/suffix extremum queries.
#[derive(Debug, Clone)]
struct ExtremumTree<T> {
    size: usize,
    nodes: Vec<T>,
    identity: T,
    take_max: bool,
}

impl<T: Scalar> ExtremumTree<T> {
    fn new(leaves: impl ExactSizeIterator<Item = T>, identity: T, take_max: bool) -> Self {
        let size = leaves.len().next_power_of_two().max(1);
        let mut nodes = vec![identity; 2 * size];
        for (k, v) in leaves.enumerate() {
            nodes[size + k] = v;
        }
        let mut tree = Self {
            size,
            nodes,
            identity,
            take_max,
        };
        for k in (1..size).rev() {
            tree.nodes[k] = tree.combine(tree.nodes[2 * k], tree.nodes[2 * k + 1]);
        }
        tree
    }

    #[inline]
    fn combine(&self, a: T, b: T) -> T {
        if self.take_max {
            a.max(b)
        } else {
            a.min(b)
        }
    }

    fn set(&mut self, pos: usize, value: T) {
        let mut k = self.size + pos;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.combine(self.nodes[2 * k], self.nodes[2 * k + 1]);
        }
    }

    /// Extremum over leaf positions `[lo, hi)`.
    fn query(&self, lo: usize, hi: usize) -> T {
        let mut acc = self.identity;
        let (mut l, mut r) = (lo + self.size, hi + self.size);
        while l < r {
            if l & 1 == 1 {
                acc = self.combine(acc, self.nodes[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                acc = self.combine(acc, self.nodes[r]);
            }
            l /= 2;
            r /= 2;
        }
        acc
    }
}

/// Mutable companion of a [`PrecedenceIndex`] answering conditional ranges
/// in `O(log n)` while `u` changes one coordinate at a time.
#[derive(Debug, Clone)]
pub struct BoundTracker<'a, T> {
    idx: &'a PrecedenceIndex,
    max_by_upper: ExtremumTree<T>,
    min_by_lower: ExtremumTree<T>,
}

impl<'a, T: Scalar> BoundTracker<'a, T> {
    pub fn new(idx: &'a PrecedenceIndex, u: &[T]) -> Self {
        let max_by_upper =
            ExtremumTree::new(idx.by_upper.iter().map(|&j| u[j]), T::zero(), true);
        let min_by_lower =
            ExtremumTree::new(idx.by_lower.iter().map(|&j| u[j]), T::one(), false);
        Self {
            idx,
            max_by_upper,
            min_by_lower,
        }
    }

    pub fn bounds(&self, i: usize) -> Result<(T, T), ConstraintError> {
        let a = self.max_by_upper.query(0, self.idx.pred_len[i]);
        let b = self.min_by_lower.query(self.idx.succ_start[i], self.idx.len());
        check_range(i, a, b)
    }

    pub fn update(&mut self, i: usize, value: T) {
        self.max_by_upper.set(self.idx.upper_rank[i], value);
        self.min_by_lower.set(self.idx.lower_rank[i], value);
    }
}
