//! Lower and upper fiducial bound curves of a constrained uniform vector.
//!
//! For a feasible `u`,
//!
//! * `F^U(t) = min { u_i : t < l_i }` with `min ∅ = 1`,
//! * `F^L(t) = max { u_i : t >= r_i }` with `max ∅ = 0`.
//!
//! Both are right-continuous non-decreasing step functions and every
//! distribution function consistent with `u` lies between them.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::constraint::UVector;
use crate::data::{Dataset, TimeGrid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepFunctionError {
    #[error("expected {expected} values for {knots} knots, got {found}")]
    Length {
        knots: usize,
        expected: usize,
        found: usize,
    },
    #[error("knots must be strictly increasing")]
    KnotOrder,
    #[error("values must be non-decreasing and within [0, 1]")]
    Values,
}

/// Right-continuous non-decreasing step function with values in `[0, 1]`.
///
/// `values[0]` applies before the first knot and `values[k]` on
/// `[knots[k-1], knots[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction<T> {
    knots: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(knots: Vec<T>, values: Vec<T>) -> Result<Self, StepFunctionError> {
        if values.len() != knots.len() + 1 {
            return Err(StepFunctionError::Length {
                knots: knots.len(),
                expected: knots.len() + 1,
                found: values.len(),
            });
        }
        if knots.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) || knots.iter().any(|k| k.is_nan()) {
            return Err(StepFunctionError::KnotOrder);
        }
        if values.iter().any(|v| !(*v >= T::zero() && *v <= T::one()))
            || values.windows(2).any(|w| w[0] > w[1])
        {
            return Err(StepFunctionError::Values);
        }
        Ok(Self { knots, values })
    }

    /// Distribution function placing `masses[k]` at `atoms[k]`.
    pub fn from_atoms(atoms: &[T], masses: &[T]) -> Result<Self, StepFunctionError> {
        let mut values = Vec::with_capacity(atoms.len() + 1);
        let mut acc = T::zero();
        values.push(acc);
        for &w in masses {
            acc = (acc + w).min(T::one());
            values.push(acc);
        }
        Self::new(atoms.to_vec(), values)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `F(t)`; `F(inf) = 1` regardless of the last step.
    pub fn eval(&self, t: T) -> T {
        if t.is_infinite() && t > T::zero() {
            return T::one();
        }
        self.values[self.knots.partition_point(|&k| k <= t)]
    }

    /// Left limit `F(t-)`.
    pub fn eval_left(&self, t: T) -> T {
        if t.is_infinite() && t > T::zero() {
            return T::one();
        }
        self.values[self.knots.partition_point(|&k| k < t)]
    }
}

/// Sorted endpoint tables of one `u` for `O(log n)` bound evaluation.
#[derive(Debug, Clone)]
pub struct BoundCurves<T> {
    /// finite right endpoints, ascending
    rights: Vec<T>,
    /// `prefix_max[k]` is the max of `u` over `rights[..k]`
    prefix_max: Vec<T>,
    /// left endpoints, ascending
    lefts: Vec<T>,
    /// `suffix_min[k]` is the min of `u` over `lefts[k..]`
    suffix_min: Vec<T>,
}

impl<T: Scalar> BoundCurves<T> {
    pub fn new(u: &[T], ds: &Dataset<T>) -> Self {
        let obs = ds.observations();
        debug_assert_eq!(u.len(), obs.len());

        let mut by_right: Vec<(T, T)> = obs
            .iter()
            .zip(u)
            .filter(|(o, _)| o.upper().is_finite())
            .map(|(o, &ui)| (o.upper(), ui))
            .collect();
        by_right.sort_by(|a, b| a.0.cmp_total(&b.0));
        let mut prefix_max = Vec::with_capacity(by_right.len() + 1);
        prefix_max.push(T::zero());
        for &(_, ui) in &by_right {
            let last = *prefix_max.last().unwrap();
            prefix_max.push(last.max(ui));
        }

        let mut by_left: Vec<(T, T)> = obs.iter().zip(u).map(|(o, &ui)| (o.lower(), ui)).collect();
        by_left.sort_by(|a, b| a.0.cmp_total(&b.0));
        let mut suffix_min = vec![T::one(); by_left.len() + 1];
        for k in (0..by_left.len()).rev() {
            suffix_min[k] = suffix_min[k + 1].min(by_left[k].1);
        }

        Self {
            rights: by_right.into_iter().map(|p| p.0).collect(),
            prefix_max,
            lefts: by_left.into_iter().map(|p| p.0).collect(),
            suffix_min,
        }
    }

    #[inline]
    pub fn lower_at(&self, t: T) -> T {
        self.prefix_max[self.rights.partition_point(|&r| r <= t)]
    }

    #[inline]
    pub fn upper_at(&self, t: T) -> T {
        self.suffix_min[self.lefts.partition_point(|&l| l <= t)]
    }

    pub fn lower_step(&self) -> StepFunction<T> {
        let (knots, values) = collapse(&self.rights, &self.prefix_max);
        StepFunction { knots, values }
    }

    pub fn upper_step(&self) -> StepFunction<T> {
        let (knots, values) = collapse(&self.lefts, &self.suffix_min);
        StepFunction { knots, values }
    }
}

/// Distinct knots from sorted keys; the value after knot `x` is the table
/// entry just past the last copy of `x`.
fn collapse<T: Scalar>(keys: &[T], table: &[T]) -> (Vec<T>, Vec<T>) {
    let mut knots = Vec::new();
    let mut values = vec![table[0]];
    let mut k = 0;
    while k < keys.len() {
        let x = keys[k];
        while k < keys.len() && keys[k] == x {
            k += 1;
        }
        knots.push(x);
        values.push(table[k]);
    }
    (knots, values)
}

/// `F^U(t)` by direct scan.
pub fn upper_bound<T: Scalar>(u: &[T], ds: &Dataset<T>, t: T) -> T {
    ds.iter()
        .zip(u)
        .filter(|(o, _)| t < o.lower())
        .map(|(_, &ui)| ui)
        .fold(T::one(), T::min)
}

/// `F^L(t)` by direct scan.
pub fn lower_bound<T: Scalar>(u: &[T], ds: &Dataset<T>, t: T) -> T {
    ds.iter()
        .zip(u)
        .filter(|(o, _)| t >= o.upper())
        .map(|(_, &ui)| ui)
        .fold(T::zero(), T::max)
}

/// Evaluates `(F^L, F^U)` at every grid time.
pub fn regrid<T: Scalar>(u: &[T], ds: &Dataset<T>, grid: &TimeGrid<T>) -> (Vec<T>, Vec<T>) {
    let curves = BoundCurves::new(u, ds);
    grid.times()
        .iter()
        .map(|&t| (curves.lower_at(t), curves.upper_at(t)))
        .unzip()
}

/// One fiducial draw: the constrained uniforms and its three curves on the
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FiducialSample<T> {
    pub u: UVector<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub interp: Vec<T>,
    /// an outer value of the smoothing problem hit a degenerate range
    pub pinned_endpoints: bool,
}
