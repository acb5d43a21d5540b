//! Smoothest curve between the lower and upper bounds of one draw.
//!
//! Given bounds `lo ≤ hi` on `m` grid points and fixed values `u_0`,
//! `u_{m+1}` beyond both ends, the interpolated curve minimizes
//! `Σ_{i=1}^{m+1} (u_i − u_{i−1})²` subject to `lo_k ≤ u_k ≤ hi_k`.
//!
//! With unit spacing this is the discrete taut-string problem: the minimizer
//! is the shortest path through the tube, which is simultaneously the
//! minimizer of every strictly convex separable function of the increments.
//! It is computed by pulling the string forward from the left anchor and
//! bending it at the first tube vertex that blocks the straight line.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("bound vectors must be non-empty and of equal length ({lower} vs {upper})")]
    Length { lower: usize, upper: usize },
    #[error("lower bound exceeds upper bound at grid index {0}")]
    Infeasible(usize),
    #[error("bounds must be non-decreasing")]
    NotMonotone,
    #[error("non-finite value in problem data")]
    NonFinite,
}

/// Box-constrained smoothing problem with fixed outer values.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    left: T,
    right: T,
}

impl<T: Scalar> QpProblem<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, left: T, right: T) -> Result<Self, QpError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(QpError::Length {
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        if lower
            .iter()
            .chain(&upper)
            .chain([&left, &right])
            .any(|v| !v.is_finite())
        {
            return Err(QpError::NonFinite);
        }
        if let Some(k) = lower.iter().zip(&upper).position(|(l, h)| l > h) {
            return Err(QpError::Infeasible(k));
        }
        if lower.windows(2).any(|w| w[0] > w[1]) || upper.windows(2).any(|w| w[0] > w[1]) {
            return Err(QpError::NotMonotone);
        }
        Ok(Self {
            lower,
            upper,
            left,
            right,
        })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn left(&self) -> T {
        self.left
    }

    pub fn right(&self) -> T {
        self.right
    }

    /// `Σ (u_i − u_{i−1})²` including both fixed ends.
    pub fn objective(&self, interior: &[T]) -> T {
        let mut prev = self.left;
        let mut acc = T::zero();
        for &x in interior.iter().chain(std::iter::once(&self.right)) {
            acc = acc + (x - prev) * (x - prev);
            prev = x;
        }
        acc
    }

    /// Max-norm projected-gradient residual `|x − Π(x − ∇f(x))|` of a
    /// candidate; zero exactly at the KKT point.
    pub fn kkt_residual(&self, interior: &[T]) -> T {
        let m = self.len();
        let two = T::of(2.0);
        (0..m)
            .map(|k| {
                let prev = if k == 0 { self.left } else { interior[k - 1] };
                let next = if k + 1 == m { self.right } else { interior[k + 1] };
                let x = interior[k];
                let grad = two * (two * x - prev - next);
                let projected = (x - grad).max(self.lower[k]).min(self.upper[k]);
                (x - projected).abs()
            })
            .fold(T::zero(), T::max)
    }
}

/// Exact minimizer of the smoothing problem (the discrete taut string).
pub fn solve_qp<T: Scalar>(p: &QpProblem<T>) -> Vec<T> {
    let m = p.len();
    let last = m + 1;
    // node x in 0..=m+1 has bounds [lo(x), hi(x)]; the outer nodes are fixed
    let lo = |x: usize| -> T {
        if x == last {
            p.right
        } else {
            p.lower[x - 1]
        }
    };
    let hi = |x: usize| -> T {
        if x == last {
            p.right
        } else {
            p.upper[x - 1]
        }
    };

    let mut path = vec![T::zero(); m + 2];
    path[0] = p.left;
    path[last] = p.right;

    let (mut anchor, mut anchor_y) = (0usize, p.left);
    while anchor < last {
        let mut slope_lo = T::neg_infinity();
        let mut slope_hi = T::infinity();
        let (mut arg_lo, mut arg_hi) = (anchor, anchor);
        let mut bend = None;
        for x in anchor + 1..=last {
            let d = T::of((x - anchor) as f64);
            let s_lo = (lo(x) - anchor_y) / d;
            let s_hi = (hi(x) - anchor_y) / d;
            if s_lo > slope_hi {
                bend = Some((arg_hi, hi(arg_hi)));
                break;
            }
            if s_hi < slope_lo {
                bend = Some((arg_lo, lo(arg_lo)));
                break;
            }
            if s_lo >= slope_lo {
                slope_lo = s_lo;
                arg_lo = x;
            }
            if s_hi <= slope_hi {
                slope_hi = s_hi;
                arg_hi = x;
            }
        }
        let (next, next_y) = bend.unwrap_or((last, p.right));
        let span = T::of((next - anchor) as f64);
        for (k, slot) in path.iter_mut().enumerate().take(next).skip(anchor + 1) {
            let w = T::of((k - anchor) as f64) / span;
            *slot = anchor_y + (next_y - anchor_y) * w;
        }
        path[next] = next_y;
        anchor = next;
        anchor_y = next_y;
    }

    // clamp guards the last ulp of interpolation rounding
    path[1..=m]
        .iter()
        .zip(p.lower.iter().zip(&p.upper))
        .map(|(&v, (&l, &h))| v.max(l).min(h))
        .collect()
}

/// Outer values of one smoothing problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints<T> {
    pub left: T,
    pub right: T,
    /// set when a range was degenerate and the value was pinned to its bound
    pub pinned: bool,
}

/// `u_0 = hi_1 · B₁`, `u_{m+1} = lo_m + (1 − lo_m) · B₂`.
pub fn endpoints_from_betas<T: Scalar>(first_upper: T, last_lower: T, b1: T, b2: T) -> Endpoints<T> {
    let mut pinned = false;
    let left = if first_upper <= T::zero() {
        pinned = true;
        T::zero()
    } else {
        first_upper * b1
    };
    let right = if last_lower >= T::one() {
        pinned = true;
        T::one()
    } else {
        last_lower + (T::one() - last_lower) * b2
    };
    Endpoints {
        left,
        right,
        pinned,
    }
}

/// Draws both outer values from independent Beta(1/2, 1/2) variables
/// mapped to `(0, hi_1)` and `(lo_m, 1)`.
pub fn draw_endpoints<T: Scalar, R: Rng + ?Sized>(lower: &[T], upper: &[T], rng: &mut R) -> Endpoints<T> {
    let arcsine = Beta::new(0.5, 0.5).expect("valid shape parameters");
    let b1 = T::of(arcsine.sample(rng));
    let b2 = T::of(arcsine.sample(rng));
    endpoints_from_betas(upper[0], lower[lower.len() - 1], b1, b2)
}

/// Draws endpoints and solves for the interpolated curve.
///
/// Endpoint pairs with `u_0 > u_{m+1}` are redrawn: with monotone bounds
/// the minimizer is non-decreasing exactly when `u_0 ≤ u_{m+1}`. Each
/// attempt succeeds with probability at least 1/2.
pub fn interpolate<T: Scalar, R: Rng + ?Sized>(
    lower: Vec<T>,
    upper: Vec<T>,
    rng: &mut R,
) -> Result<(Vec<T>, Endpoints<T>), QpError> {
    if lower.is_empty() {
        return Err(QpError::Length {
            lower: 0,
            upper: upper.len(),
        });
    }
    let mut ends = draw_endpoints(&lower, &upper, rng);
    for _ in 0..64 {
        if ends.left <= ends.right {
            break;
        }
        ends = draw_endpoints(&lower, &upper, rng);
    }
    if ends.left > ends.right {
        ends.left = ends.right.min(upper[0]);
        ends.pinned = true;
    }
    let problem = QpProblem::new(lower, upper, ends.left, ends.right)?;
    Ok((solve_qp(&problem), ends))
}
