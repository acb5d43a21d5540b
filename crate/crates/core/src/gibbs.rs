//! Gibbs sampler for uniforms constrained by the observation order.
//!
//! The target is the uniform distribution on
//! `{u ∈ (0,1)^n : u_i < u_j whenever observation i precedes j}`. Each full
//! sweep redraws every coordinate, in index order, uniformly on the open
//! range left by the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::{BoundTracker, ConstraintError, PrecedenceIndex, UVector};
use crate::curves::{regrid, FiducialSample};
use crate::data::{Dataset, TimeGrid};
use crate::interp::{interpolate, QpError};
use crate::scalar::Scalar;

/// Generator used for every chain.
pub type ChainRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GibbsError {
    #[error("n_mcmc must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error("range ({lower}, {upper}) for coordinate {index} holds no representable value")]
    Degenerate { index: usize, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub n_burn: usize,
    pub n_mcmc: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            n_burn: 100,
            n_mcmc: 1000,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<(), GibbsError> {
        if self.n_mcmc == 0 {
            return Err(GibbsError::NoSamples);
        }
        Ok(())
    }
}

/// Uniform draw on the open interval `(a, b)`.
fn open_uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, index: usize, a: T, b: T) -> Result<T, GibbsError> {
    for _ in 0..64 {
        let v: f64 = rng.random();
        let x = a + (b - a) * T::of(v);
        if x > a && x < b {
            return Ok(x);
        }
    }
    Err(GibbsError::Degenerate {
        index,
        lower: a.to_f64_lossy(),
        upper: b.to_f64_lossy(),
    })
}

/// Starting point: iid uniforms assigned in the order of the interval
/// midpoints. Right-censored observations use `l + t_max / 2` as
/// midpoint; ties keep input order.
pub fn initialize<T: Scalar, R: Rng + ?Sized>(ds: &Dataset<T>, rng: &mut R) -> Result<UVector<T>, GibbsError> {
    let n = ds.len();
    let mut draws = (0..n)
        .map(|i| open_uniform(rng, i, T::zero(), T::one()))
        .collect::<Result<Vec<T>, _>>()?;
    draws.sort_by(|a, b| a.cmp_total(b));

    let t_max = ds.max_finite_endpoint();
    let midpoints: Vec<T> = ds.iter().map(|o| o.midpoint(t_max)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| midpoints[a].cmp_total(&midpoints[b]));

    let mut u = vec![T::zero(); n];
    for (rank, &i) in order.iter().enumerate() {
        u[i] = draws[rank];
    }
    Ok(UVector::from_raw(u))
}

/// Chain position after a number of completed sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState<T> {
    pub u: UVector<T>,
    pub sweep_count: usize,
}

/// One sweep using linear-scan conditional ranges.
pub fn sweep<T: Scalar, R: Rng + ?Sized>(
    state: &mut ChainState<T>,
    idx: &PrecedenceIndex,
    rng: &mut R,
) -> Result<(), GibbsError> {
    let mut u = std::mem::replace(&mut state.u, UVector::from_raw(Vec::new())).into_inner();
    for i in 0..u.len() {
        let (a, b) = idx.conditional_bounds(i, &u)?;
        u[i] = open_uniform(rng, i, a, b)?;
    }
    debug_assert!(idx.is_feasible(&u));
    state.u = UVector::from_raw(u);
    state.sweep_count += 1;
    Ok(())
}

/// A running chain with `O(log n)` conditional range queries.
#[derive(Debug, Clone)]
pub struct GibbsChain<'a, T> {
    idx: &'a PrecedenceIndex,
    tracker: BoundTracker<'a, T>,
    u: Vec<T>,
    sweep_count: usize,
}

impl<'a, T: Scalar> GibbsChain<'a, T> {
    pub fn new(idx: &'a PrecedenceIndex, start: UVector<T>) -> Result<Self, GibbsError> {
        idx.check_feasible(start.as_slice())?;
        let u = start.into_inner();
        Ok(Self {
            idx,
            tracker: BoundTracker::new(idx, &u),
            u,
            sweep_count: 0,
        })
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(), GibbsError> {
        for i in 0..self.u.len() {
            let (a, b) = self.tracker.bounds(i)?;
            let v = open_uniform(rng, i, a, b)?;
            self.u[i] = v;
            self.tracker.update(i, v);
        }
        debug_assert!(self.idx.is_feasible(&self.u));
        self.sweep_count += 1;
        Ok(())
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn state(&self) -> ChainState<T> {
        ChainState {
            u: UVector::from_raw(self.u.clone()),
            sweep_count: self.sweep_count,
        }
    }
}

/// Runs the full sampler: burn-in, then `n_mcmc` sweeps each recorded with
/// its bound curves and interpolated curve on `grid`.
pub fn run<T: Scalar>(
    ds: &Dataset<T>,
    grid: &TimeGrid<T>,
    cfg: &GibbsConfig,
) -> Result<Vec<FiducialSample<T>>, GibbsError> {
    cfg.validate()?;
    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    run_with_rng(ds, grid, cfg.n_burn, cfg.n_mcmc, &mut rng)
}

pub fn run_with_rng<T: Scalar, R: Rng + ?Sized>(
    ds: &Dataset<T>,
    grid: &TimeGrid<T>,
    n_burn: usize,
    n_mcmc: usize,
    rng: &mut R,
) -> Result<Vec<FiducialSample<T>>, GibbsError> {
    if n_mcmc == 0 {
        return Err(GibbsError::NoSamples);
    }
    let idx = PrecedenceIndex::new(ds);
    let start = initialize(ds, rng)?;
    let mut chain = GibbsChain::new(&idx, start)?;
    for _ in 0..n_burn {
        chain.sweep(rng)?;
    }
    let mut samples = Vec::with_capacity(n_mcmc);
    for _ in 0..n_mcmc {
        chain.sweep(rng)?;
        let (lower, upper) = regrid(chain.u(), ds, grid);
        let (interp, ends) = interpolate(lower.clone(), upper.clone(), rng)?;
        samples.push(FiducialSample {
            u: UVector::from_raw(chain.u().to_vec()),
            lower,
            upper,
            interp,
            pinned_endpoints: ends.pinned,
        });
    }
    Ok(samples)
}
