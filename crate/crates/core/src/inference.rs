//! Point estimates, pointwise confidence intervals and plausibility.
//!
//! Empirical quantiles use the inverse-CDF convention: the `q`-quantile of
//! `N` values is the `⌈qN⌉`-th order statistic (the first when `qN < 1`).
//! The point estimate is the pointwise median of the interpolated curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{FiducialSample, StepFunction};
use crate::data::{Dataset, TimeGrid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample curve has {found} points, grid has {expected}")]
    GridMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// quantiles of the lower and upper bound curves
    Conservative,
    /// quantiles of the interpolated curves
    Interpolation,
}

impl CiMethod {
    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Conservative => "conservative",
            CiMethod::Interpolation => "interpolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate<T> {
    pub grid: TimeGrid<T>,
    pub point: Vec<T>,
    pub ci_lower: Vec<T>,
    pub ci_upper: Vec<T>,
    pub alpha: T,
    pub method: CiMethod,
}

impl<T: Scalar> CurveEstimate<T> {
    pub fn widths(&self) -> Vec<T> {
        self.ci_upper
            .iter()
            .zip(&self.ci_lower)
            .map(|(&h, &l)| h - l)
            .collect()
    }
}

/// 1-based rank `⌈qN⌉` clamped to `[1, N]`. A relative slack of `1e-12`
/// absorbs representation error in products such as `0.025 · 1000`.
pub fn quantile_rank(n: usize, q: f64) -> usize {
    let x = q * n as f64;
    let k = (x * (1.0 - 1e-12)).ceil() as usize;
    k.clamp(1, n)
}

/// Inverse-CDF empirical quantile; reorders `values`.
pub fn empirical_quantile<T: Scalar>(values: &mut [T], q: f64) -> T {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let k = quantile_rank(values.len(), q) - 1;
    *values.select_nth_unstable_by(k, |a, b| a.cmp_total(b)).1
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<f64, InferenceError> {
    let a = alpha.to_f64_lossy();
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(InferenceError::Alpha(a))
    }
}

fn check_samples<T: Scalar>(samples: &[FiducialSample<T>], grid: &TimeGrid<T>) -> Result<(), InferenceError> {
    if samples.len() < 2 {
        return Err(InferenceError::TooFewSamples(samples.len()));
    }
    if let Some(s) = samples.iter().find(|s| {
        s.interp.len() != grid.times().len()
            || s.lower.len() != grid.times().len()
            || s.upper.len() != grid.times().len()
    }) {
        return Err(InferenceError::GridMismatch {
            expected: grid.times().len(),
            found: s.interp.len(),
        });
    }
    Ok(())
}

/// Pointwise `q`-quantile of one curve family across samples.
fn pointwise_quantile<T, F>(samples: &[FiducialSample<T>], points: usize, q: f64, curve: F) -> Vec<T>
where
    T: Scalar,
    F: Fn(&FiducialSample<T>) -> &[T],
{
    let mut column = vec![T::zero(); samples.len()];
    (0..points)
        .map(|k| {
            for (slot, s) in column.iter_mut().zip(samples) {
                *slot = curve(s)[k];
            }
            empirical_quantile(&mut column, q)
        })
        .collect()
}

pub fn pointwise_median<T: Scalar>(samples: &[FiducialSample<T>], points: usize) -> Vec<T> {
    pointwise_quantile(samples, points, 0.5, |s| &s.interp)
}

/// Lower limit from the `α/2` quantile of `F^L`, upper from the `1 − α/2`
/// quantile of `F^U`.
pub fn conservative_ci<T: Scalar>(
    samples: &[FiducialSample<T>],
    grid: &TimeGrid<T>,
    alpha: T,
) -> Result<CurveEstimate<T>, InferenceError> {
    let a = check_alpha(alpha)?;
    check_samples(samples, grid)?;
    let m = grid.len();
    Ok(CurveEstimate {
        grid: grid.clone(),
        point: pointwise_median(samples, m),
        ci_lower: pointwise_quantile(samples, m, a / 2.0, |s| &s.lower),
        ci_upper: pointwise_quantile(samples, m, 1.0 - a / 2.0, |s| &s.upper),
        alpha,
        method: CiMethod::Conservative,
    })
}

/// Both limits from quantiles of the interpolated curves `F^I`.
pub fn interpolation_ci<T: Scalar>(
    samples: &[FiducialSample<T>],
    grid: &TimeGrid<T>,
    alpha: T,
) -> Result<CurveEstimate<T>, InferenceError> {
    let a = check_alpha(alpha)?;
    check_samples(samples, grid)?;
    let m = grid.len();
    Ok(CurveEstimate {
        grid: grid.clone(),
        point: pointwise_median(samples, m),
        ci_lower: pointwise_quantile(samples, m, a / 2.0, |s| &s.interp),
        ci_upper: pointwise_quantile(samples, m, 1.0 - a / 2.0, |s| &s.interp),
        alpha,
        method: CiMethod::Interpolation,
    })
}

pub fn estimate<T: Scalar>(
    samples: &[FiducialSample<T>],
    grid: &TimeGrid<T>,
    alpha: T,
    method: CiMethod,
) -> Result<CurveEstimate<T>, InferenceError> {
    match method {
        CiMethod::Conservative => conservative_ci(samples, grid, alpha),
        CiMethod::Interpolation => interpolation_ci(samples, grid, alpha),
    }
}

/// Estimate and interval at a single time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointInterval<T> {
    pub t: T,
    pub point: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> PointInterval<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

/// Interpolation interval at an arbitrary time. Each interpolated curve is
/// piecewise linear on the grid, so it is evaluated at `t` before the
/// quantiles are taken.
pub fn interpolation_interval_at<T: Scalar>(
    samples: &[FiducialSample<T>],
    grid: &TimeGrid<T>,
    t: T,
    alpha: T,
) -> Result<PointInterval<T>, InferenceError> {
    let a = check_alpha(alpha)?;
    check_samples(samples, grid)?;
    let mut values: Vec<T> = samples.iter().map(|s| grid.interpolate(&s.interp, t)).collect();
    Ok(PointInterval {
        t,
        point: empirical_quantile(&mut values, 0.5),
        lower: empirical_quantile(&mut values, a / 2.0),
        upper: empirical_quantile(&mut values, 1.0 - a / 2.0),
    })
}

/// `Σ log(F(r_i) − F(l_i))`, the log of the fiducial probability that `F`
/// is compatible with the data. An exact time `t` contributes the jump
/// `F(t) − F(t−)`.
pub fn log_plausibility<T: Scalar>(f: &StepFunction<T>, ds: &Dataset<T>) -> T {
    let mut acc = T::zero();
    for o in ds {
        let hi = f.eval(o.upper());
        let lo = if o.is_exact() {
            f.eval_left(o.lower())
        } else {
            f.eval(o.lower())
        };
        let factor = hi - lo;
        if factor <= T::zero() {
            return T::neg_infinity();
        }
        acc = acc + factor.ln();
    }
    acc
}

pub fn plausibility<T: Scalar>(f: &StepFunction<T>, ds: &Dataset<T>) -> T {
    log_plausibility(f, ds).exp()
}
