//! Monte Carlo coverage and accuracy study over four censoring scenarios.
//!
//! | id | event time    | inspection scheme                                    | grid    |
//! |----|---------------|------------------------------------------------------|---------|
//! | 1  | Exp(1)        | current status, `C ~ Exp(1)`                         | [0, 5]  |
//! | 2  | Gamma(3, 1)   | current status, `C ~ Unif(0, 5)`                     | [0, 5]  |
//! | 3  | Gamma(2, 1)   | case II, `C1 ~ Unif(0,2)`, `C2 = C1 + 0.5 + Unif(0,2)` | [0, 5] |
//! | 4  | Exp(1)        | `K ~ Unif{1..4}` sorted `Unif(0, 3)` inspections      | [0, 3]  |
//!
//! Each study evaluates `F(t0)` at the median `t0` of the event time, so the
//! target value is always `0.5`. Replicate `r` draws from stream `r` of a
//! generator keyed by the master seed, which makes results independent of
//! the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, Gamma, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;
use thiserror::Error;

use crate::data::{Dataset, Observation, TimeGrid};
use crate::gibbs::{run_with_rng, ChainRng, GibbsError};
use crate::inference::{interpolation_interval_at, InferenceError};
use crate::npmle::{fit_em, EmOptions, EvalRule};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("unknown scenario {0}; expected 1-4")]
    UnknownScenario(u8),
    #[error("reps must be at least 1")]
    NoReplicates,
    #[error("n must be at least 1")]
    EmptySample,
    #[error("replicate {index}: {source}")]
    Sampler {
        index: usize,
        #[source]
        source: GibbsError,
    },
    #[error("replicate {index}: {source}")]
    Inference {
        index: usize,
        #[source]
        source: InferenceError,
    },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "1")]
    S1,
    #[serde(rename = "2")]
    S2,
    #[serde(rename = "3")]
    S3,
    #[serde(rename = "4")]
    S4,
}

/// Median of Gamma(shape, 1) by bisection on the regularized lower
/// incomplete gamma function.
pub fn gamma_median(shape: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, shape + 10.0);
    while gamma_lr(shape, hi) < 0.5 {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if gamma_lr(shape, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(0, c]` if the event happened by `c`, else `(c, inf)`.
pub fn censor_current_status(t: f64, c: f64) -> Observation<f64> {
    censor_inspections(t, &[c])
}

/// Bracketing interval among inspections `c1 < c2`.
pub fn censor_case2(t: f64, c1: f64, c2: f64) -> Observation<f64> {
    censor_inspections(t, &[c1, c2])
}

/// Interval between the consecutive sorted inspection times that bracket `t`.
pub fn censor_inspections(t: f64, inspections: &[f64]) -> Observation<f64> {
    debug_assert!(inspections.windows(2).all(|w| w[0] <= w[1]));
    let k = inspections.partition_point(|&c| c < t);
    let lower = if k == 0 { 0.0 } else { inspections[k - 1] };
    let upper = inspections.get(k).copied().unwrap_or(f64::INFINITY);
    Observation::new(lower, upper).expect("inspection times are non-negative and sorted")
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4];

    pub fn from_id(id: u8) -> Result<Self, SimulationError> {
        match id {
            1 => Ok(Scenario::S1),
            2 => Ok(Scenario::S2),
            3 => Ok(Scenario::S3),
            4 => Ok(Scenario::S4),
            other => Err(SimulationError::UnknownScenario(other)),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Scenario::S1 => 1,
            Scenario::S2 => 2,
            Scenario::S3 => 3,
            Scenario::S4 => 4,
        }
    }

    /// Median of the event-time distribution.
    pub fn t0(self) -> f64 {
        match self {
            Scenario::S1 | Scenario::S4 => std::f64::consts::LN_2,
            Scenario::S2 => gamma_median(3.0),
            Scenario::S3 => gamma_median(2.0),
        }
    }

    /// `F(t0)`.
    pub fn truth(self) -> f64 {
        0.5
    }

    /// Event-time distribution function.
    pub fn event_cdf(self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Scenario::S1 | Scenario::S4 => 1.0 - (-t).exp(),
            Scenario::S2 => gamma_lr(3.0, t),
            Scenario::S3 => gamma_lr(2.0, t),
        }
    }

    pub fn grid_end(self) -> f64 {
        match self {
            Scenario::S4 => 3.0,
            _ => 5.0,
        }
    }

    pub fn grid(self, points: usize) -> TimeGrid<f64> {
        TimeGrid::uniform(0.0, self.grid_end(), points).expect("fixed positive span")
    }

    pub fn sample_event<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Scenario::S1 | Scenario::S4 => Exp1.sample(rng),
            Scenario::S2 => Gamma::new(3.0, 1.0).unwrap().sample(rng),
            Scenario::S3 => Gamma::new(2.0, 1.0).unwrap().sample(rng),
        }
    }

    /// One censored observation.
    pub fn sample_observation<R: Rng + ?Sized>(self, rng: &mut R) -> Observation<f64> {
        let t = self.sample_event(rng);
        match self {
            Scenario::S1 => censor_current_status(t, Exp1.sample(rng)),
            Scenario::S2 => censor_current_status(t, Uniform::new(0.0, 5.0).unwrap().sample(rng)),
            Scenario::S3 => {
                let u = Uniform::new(0.0, 2.0).unwrap();
                let c1 = u.sample(rng);
                let c2 = c1 + 0.5 + u.sample(rng);
                censor_case2(t, c1, c2)
            }
            Scenario::S4 => {
                let k = rng.random_range(1..=4usize);
                let u = Uniform::new(0.0, 3.0).unwrap();
                let mut cs: Vec<f64> = (0..k).map(|_| u.sample(rng)).collect();
                cs.sort_by(f64::total_cmp);
                censor_inspections(t, &cs)
            }
        }
    }

    pub fn generate<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Result<Dataset<f64>, SimulationError> {
        if n == 0 {
            return Err(SimulationError::EmptySample);
        }
        let obs = (0..n).map(|_| self.sample_observation(rng)).collect();
        Ok(Dataset::new(obs).expect("n >= 1"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub reps: usize,
    pub n_burn: usize,
    pub n_mcmc: usize,
    pub seed: u64,
    pub alpha: f64,
    pub grid_points: usize,
    pub em_tol: f64,
    pub em_max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 100,
            reps: 1000,
            n_burn: 100,
            n_mcmc: 1000,
            seed: 0,
            alpha: 0.05,
            grid_points: 101,
            em_tol: EmOptions::default().tol,
            em_max_iter: EmOptions::default().max_iter,
        }
    }
}

/// Per-replicate estimates of `F(t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub fiducial: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub npmle_interpolation: f64,
    pub npmle_left: f64,
    pub npmle_right: f64,
    pub npmle_converged: bool,
}

/// Aggregates over replicates. Rates are fractions in `[0, 1]`; mean
/// squared errors are raw (multiply by `1e4` for the usual table units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub n: usize,
    pub reps: usize,
    pub t0: f64,
    /// truth below the lower limit
    pub lr: f64,
    /// truth above the upper limit
    pub ur: f64,
    pub width: f64,
    pub mse_fiducial: f64,
    pub mse_npmle_i: f64,
    pub mse_npmle_l: f64,
    pub mse_npmle_r: f64,
    pub npmle_nonconverged: usize,
}

fn replicate_rng(seed: u64, index: usize) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn run_replicate(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    grid: &TimeGrid<f64>,
    index: usize,
) -> Result<ReplicateResult, SimulationError> {
    let mut rng = replicate_rng(cfg.seed, index);
    let ds = scenario.generate(cfg.n, &mut rng)?;
    let t0 = scenario.t0();

    let samples = run_with_rng(&ds, grid, cfg.n_burn, cfg.n_mcmc, &mut rng)
        .map_err(|source| SimulationError::Sampler { index, source })?;
    let pi = interpolation_interval_at(&samples, grid, t0, cfg.alpha)
        .map_err(|source| SimulationError::Inference { index, source })?;

    let fit = fit_em(
        &ds,
        EmOptions {
            tol: cfg.em_tol,
            max_iter: cfg.em_max_iter,
            ..EmOptions::default()
        },
    );
    Ok(ReplicateResult {
        fiducial: pi.point,
        ci_lower: pi.lower,
        ci_upper: pi.upper,
        npmle_interpolation: fit.evaluate(t0, EvalRule::Interpolation),
        npmle_left: fit.evaluate(t0, EvalRule::Left),
        npmle_right: fit.evaluate(t0, EvalRule::Right),
        npmle_converged: fit.converged,
    })
}

pub fn summarize(scenario: Scenario, cfg: &ExperimentConfig, reps: &[ReplicateResult]) -> ExperimentResult {
    let truth = scenario.truth();
    let count = reps.len() as f64;
    let mean = |f: &dyn Fn(&ReplicateResult) -> f64| reps.iter().map(f).sum::<f64>() / count;
    let sq = |x: f64| (x - truth) * (x - truth);
    ExperimentResult {
        scenario,
        n: cfg.n,
        reps: reps.len(),
        t0: scenario.t0(),
        lr: mean(&|r| f64::from(u8::from(truth < r.ci_lower))),
        ur: mean(&|r| f64::from(u8::from(truth > r.ci_upper))),
        width: mean(&|r| r.ci_upper - r.ci_lower),
        mse_fiducial: mean(&|r| sq(r.fiducial)),
        mse_npmle_i: mean(&|r| sq(r.npmle_interpolation)),
        mse_npmle_l: mean(&|r| sq(r.npmle_left)),
        mse_npmle_r: mean(&|r| sq(r.npmle_right)),
        npmle_nonconverged: reps.iter().filter(|r| !r.npmle_converged).count(),
    }
}

/// Runs every replicate, in parallel on `jobs` threads (all cores when
/// `None`), and returns the per-replicate results in replicate order.
pub fn run_replicates(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<Vec<ReplicateResult>, SimulationError> {
    if cfg.reps == 0 {
        return Err(SimulationError::NoReplicates);
    }
    if cfg.n == 0 {
        return Err(SimulationError::EmptySample);
    }
    let grid = scenario.grid(cfg.grid_points);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?;
    pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|r| run_replicate(scenario, cfg, &grid, r))
            .collect()
    })
}

pub fn run_experiment(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<ExperimentResult, SimulationError> {
    let reps = run_replicates(scenario, cfg, jobs)?;
    Ok(summarize(scenario, cfg, &reps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CensoringKind;

    #[test]
    fn current_status_rule() {
        let o = censor_current_status(0.5, 1.0);
        assert_eq!((o.lower(), o.upper()), (0.0, 1.0));
        let o = censor_current_status(1.5, 1.0);
        assert_eq!(o.lower(), 1.0);
        assert_eq!(o.kind(), CensoringKind::RightCensored);
    }

    #[test]
    fn case2_bracketing() {
        let c1 = 1.0;
        let c2 = c1 + 0.5 + 0.2;
        let o = censor_case2(2.0, c1, c2);
        assert!((o.lower() - 1.7).abs() < 1e-15);
        assert!(o.upper().is_infinite());
        let o = censor_case2(1.2, c1, c2);
        assert_eq!((o.lower(), o.upper()), (1.0, c2));
        let o = censor_case2(0.3, c1, c2);
        assert_eq!((o.lower(), o.upper()), (0.0, 1.0));
    }

    #[test]
    fn mixed_case_bracketing() {
        let o = censor_inspections(1.5, &[0.8, 2.1]);
        assert_eq!((o.lower(), o.upper()), (0.8, 2.1));
        let o = censor_inspections(2.1, &[0.8, 2.1]);
        assert_eq!((o.lower(), o.upper()), (0.8, 2.1));
    }

    #[test]
    fn gamma_medians() {
        assert!((gamma_median(1.0) - std::f64::consts::LN_2).abs() < 1e-10);
        assert!((gamma_median(2.0) - 1.678_346_99).abs() < 1e-7);
        for s in Scenario::ALL {
            assert!((s.event_cdf(s.t0()) - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn scenario_ids() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::from_id(s.id()).unwrap(), s);
        }
        assert!(matches!(Scenario::from_id(5), Err(SimulationError::UnknownScenario(5))));
    }

    #[test]
    fn single_replicate_rates_are_binary() {
        let cfg = ExperimentConfig {
            n: 30,
            reps: 1,
            n_mcmc: 200,
            n_burn: 20,
            seed: 3,
            ..Default::default()
        };
        let reps = run_replicates(Scenario::S1, &cfg, Some(1)).unwrap();
        let res = summarize(Scenario::S1, &cfg, &reps);
        assert!(res.lr == 0.0 || res.lr == 1.0);
        assert!(res.ur == 0.0 || res.ur == 1.0);
        assert_eq!(res.width, reps[0].ci_upper - reps[0].ci_lower);
        assert!(res.width > 0.0);
    }

    #[test]
    fn zero_replicates_rejected() {
        let cfg = ExperimentConfig { reps: 0, ..Default::default() };
        assert!(matches!(run_experiment(Scenario::S1, &cfg, None), Err(SimulationError::NoReplicates)));
    }
}
