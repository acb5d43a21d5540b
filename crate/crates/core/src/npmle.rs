//! Turnbull nonparametric maximum likelihood estimate.
//!
//! The likelihood `∏ (F(r_i) − F(l_i))` only depends on the mass `F` puts
//! on the innermost (Turnbull) intervals, so the estimate is a mass vector
//! over those intervals, fitted by the self-consistency iteration
//!
//! ```text
//! w_j ← (1/n) Σ_i α_ij w_j / Σ_k α_ik w_k,   α_ij = 1 iff interval j ⊆ (l_i, r_i].
//! ```
//!
//! Each observation covers a contiguous run of Turnbull intervals, so one
//! iteration costs `O(n + J)` with prefix sums.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::curves::StepFunction;
use crate::data::{Dataset, Endpoint};
use crate::scalar::Scalar;

/// An innermost interval `(left, right]`, or the single point `{left}` for
/// an atom created by exact observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnbullInterval<T> {
    pub left: T,
    pub right: T,
    pub atom: bool,
}

impl<T: Scalar> TurnbullInterval<T> {
    fn left_key(&self) -> Endpoint<T> {
        Endpoint {
            value: self.left,
            tier: if self.atom { 0 } else { 2 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TurnbullIntervals<T>(Vec<TurnbullInterval<T>>);

impl<T: Scalar> TurnbullIntervals<T> {
    pub fn as_slice(&self) -> &[TurnbullInterval<T>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Half-open range `[first, end)` of intervals contained in `(l, r]`.
    fn covered_by(&self, lower: Endpoint<T>, upper: T) -> (usize, usize) {
        let first = self.0.partition_point(|j| j.left_key() < lower);
        let end = self.0.partition_point(|j| j.right <= upper);
        (first, end)
    }
}

/// Innermost intervals: every left endpoint immediately followed by a right
/// endpoint in the sorted endpoint sequence. At equal values the order is
/// exact open end, then closing ends, then regular open ends.
pub fn turnbull_intervals<T: Scalar>(ds: &Dataset<T>) -> TurnbullIntervals<T> {
    let mut ends: Vec<(Endpoint<T>, bool)> = ds
        .iter()
        .flat_map(|o| [(o.lower_key(), true), (o.upper_key(), false)])
        .collect();
    ends.sort_by(|a, b| a.0.cmp_total(&b.0));
    let intervals = ends
        .windows(2)
        .filter(|w| w[0].1 && !w[1].1)
        .map(|w| TurnbullInterval {
            left: w[0].0.value,
            right: w[1].0.value,
            atom: w[0].0.tier == 0,
        })
        .collect();
    TurnbullIntervals(intervals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalRule {
    /// linear between the values bounding a non-unique region
    Interpolation,
    /// largest `F(t)` in a non-unique region
    Left,
    /// smallest `F(t)` in a non-unique region
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpmleFit<T> {
    pub intervals: TurnbullIntervals<T>,
    pub masses: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: T,
    /// log-likelihood before each update, then at the returned masses
    #[serde(skip)]
    pub trace: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub tol: f64,
    /// cap on self-consistency updates
    pub max_iter: usize,
    pub accelerate: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100_000,
            accelerate: true,
        }
    }
}

/// Coverage ranges of every observation.
fn coverage<T: Scalar>(ds: &Dataset<T>, intervals: &TurnbullIntervals<T>) -> Vec<(usize, usize)> {
    ds.iter()
        .map(|o| {
            let range = intervals.covered_by(o.lower_key(), o.upper());
            debug_assert!(range.0 < range.1, "observation covers no Turnbull interval");
            range
        })
        .collect()
}

fn prefix_sums<T: Scalar>(w: &[T]) -> Vec<T> {
    let mut s = Vec::with_capacity(w.len() + 1);
    s.push(T::zero());
    for &x in w {
        let last = *s.last().unwrap();
        s.push(last + x);
    }
    s
}

/// `Σ_i log Σ_{j ⊆ I_i} w_j`.
pub fn log_likelihood<T: Scalar>(ds: &Dataset<T>, intervals: &TurnbullIntervals<T>, masses: &[T]) -> T {
    log_likelihood_from_cover(&coverage(ds, intervals), masses)
}

/// One self-consistency update `w_j ↦ w_j d_j` with
/// `d_j = (1/n) Σ_{i: j ⊆ I_i} 1 / P_i(w)`, written to `out`; `d` goes to
/// `grad`. Returns the log-likelihood at `w`.
fn em_map<T: Scalar>(w: &[T], cover: &[(usize, usize)], diff: &mut [T], grad: &mut [T], out: &mut [T]) -> T {
    let s = prefix_sums(w);
    diff.iter_mut().for_each(|d| *d = T::zero());
    let mut ll = T::zero();
    for &(a, b) in cover {
        let denom = s[b] - s[a];
        ll = ll + denom.ln();
        let inv = T::one() / denom;
        diff[a] = diff[a] + inv;
        diff[b] = diff[b] - inv;
    }
    let n = T::of(cover.len() as f64);
    let mut acc = T::zero();
    let mut total = T::zero();
    for j in 0..w.len() {
        acc = acc + diff[j];
        grad[j] = acc / n;
        out[j] = w[j] * grad[j];
        total = total + out[j];
    }
    out.iter_mut().for_each(|x| *x = *x / total);
    ll
}

fn max_change<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

fn normalize<T: Scalar>(w: &mut [T]) {
    let total = w.iter().fold(T::zero(), |acc, &x| acc + x);
    w.iter_mut().for_each(|x| *x = *x / total);
}

/// Masses below this are candidates for removal once the iteration settles.
const PRUNE_MASS: f64 = 1e-6;
/// A removed interval is restored when its gradient ratio exceeds `1 + KKT_SLACK`.
const KKT_SLACK: f64 = 1e-9;

struct Em<'a, T> {
    cover: &'a [(usize, usize)],
    opts: EmOptions,
    w1: Vec<T>,
    w2: Vec<T>,
    cand: Vec<T>,
    diff: Vec<T>,
    grad: Vec<T>,
    trace: Vec<T>,
    iterations: usize,
}

impl<'a, T: Scalar> Em<'a, T> {
    fn new(cover: &'a [(usize, usize)], j_count: usize, opts: EmOptions) -> Self {
        let z = vec![T::zero(); j_count];
        Self {
            cover,
            opts,
            w1: z.clone(),
            w2: z.clone(),
            cand: z.clone(),
            diff: vec![T::zero(); j_count + 1],
            grad: z,
            trace: Vec::new(),
            iterations: 0,
        }
    }

    fn record(&mut self, ll: T) {
        if let Some(&prev) = self.trace.last() {
            let slack = T::of(1e-10) * (T::one() + ll.abs());
            debug_assert!(ll >= prev - slack, "EM log-likelihood decreased: {prev} -> {ll}");
        }
        self.trace.push(ll);
    }

    /// Gradient ratios `d_j` at `w`.
    fn gradient(&mut self, w: &[T]) -> &[T] {
        em_map(w, self.cover, &mut self.diff, &mut self.grad, &mut self.w1);
        &self.grad
    }

    /// Iterates from `w` until an iteration moves no mass by `tol`; false
    /// when the update budget runs out first.
    fn run(&mut self, w: &mut [T]) -> bool {
        let tol = T::of(self.opts.tol);
        let two = T::of(2.0);
        while self.iterations < self.opts.max_iter {
            let ll0 = em_map(w, self.cover, &mut self.diff, &mut self.grad, &mut self.w1);
            self.record(ll0);
            self.iterations += 1;
            if !self.opts.accelerate || self.iterations >= self.opts.max_iter {
                let change = max_change(w, &self.w1);
                w.copy_from_slice(&self.w1);
                if change < tol {
                    return true;
                }
                continue;
            }

            let ll1 = em_map(&self.w1, self.cover, &mut self.diff, &mut self.grad, &mut self.w2);
            self.record(ll1);
            self.iterations += 1;

            let r: Vec<T> = self.w1.iter().zip(w.iter()).map(|(&a, &b)| a - b).collect();
            let v: Vec<T> = (0..w.len()).map(|j| self.w2[j] - self.w1[j] - r[j]).collect();
            let (nr, nv) = (norm(&r), norm(&v));
            let mut alpha = if nv > T::zero() { -(nr / nv) } else { -T::one() };
            // differences below this are rounding in a sum of n logarithms
            let slack = T::of(64.0) * T::epsilon() * (T::one() + ll1.abs());
            let accepted = loop {
                if alpha.partial_cmp(&-T::one()) != Some(Ordering::Less) {
                    break false;
                }
                for j in 0..w.len() {
                    self.cand[j] = w[j] - two * alpha * r[j] + alpha * alpha * v[j];
                }
                let positive = self
                    .cand
                    .iter()
                    .zip(&self.w2)
                    .all(|(&c, &b)| c > T::zero() || b == T::zero());
                if positive {
                    self.cand.iter_mut().for_each(|x| *x = x.max(T::zero()));
                    normalize(&mut self.cand);
                    break log_likelihood_from_cover(self.cover, &self.cand) >= ll1 - slack;
                }
                alpha = (alpha - T::one()) / two;
            };
            let next = if accepted { &self.cand } else { &self.w2 };
            let change = max_change(w, next);
            w.copy_from_slice(next);
            if change < tol {
                return true;
            }
        }
        false
    }
}

/// Self-consistency iteration from uniform masses; stops when an
/// iteration moves no mass by `opts.tol` or more.
///
/// Masses that vanish at the optimum decay only like `1/k` under the plain
/// update. With `opts.accelerate`, an iteration is two updates followed by a
/// squared extrapolation along their increments, shortened until all masses
/// stay positive and kept only if the log-likelihood does not drop by more
/// than rounding. After convergence, masses below `1e-6` whose gradient
/// ratio is at most 1 are set to zero and the iteration is resumed on the
/// remaining support; removed intervals whose ratio then exceeds 1 are
/// restored. The result satisfies the same fixed-point conditions as the
/// plain iteration.
pub fn fit_em<T: Scalar>(ds: &Dataset<T>, opts: EmOptions) -> NpmleFit<T> {
    let intervals = turnbull_intervals(ds);
    let cover = coverage(ds, &intervals);
    let j_count = intervals.len();
    let mut w = vec![T::one() / T::of(j_count as f64); j_count];
    let mut em = Em::new(&cover, j_count, opts);
    let mut converged = em.run(&mut w);

    if opts.accelerate && converged {
        let prune = T::of(PRUNE_MASS);
        let kkt = T::one() + T::of(KKT_SLACK);
        let mut keep = vec![false; j_count];
        for _ in 0..=j_count {
            let grad = em.gradient(&w).to_vec();
            let mut changed = false;
            for j in 0..j_count {
                if w[j] == T::zero() && grad[j] > kkt {
                    w[j] = prune;
                    keep[j] = true;
                    changed = true;
                } else if !keep[j] && w[j] > T::zero() && w[j] < prune && grad[j] <= T::one() {
                    w[j] = T::zero();
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            normalize(&mut w);
            converged = em.run(&mut w);
            if !converged {
                break;
            }
        }
    }

    let log_likelihood = log_likelihood(ds, &intervals, &w);
    em.record(log_likelihood);
    NpmleFit {
        intervals,
        masses: w,
        converged,
        iterations: em.iterations,
        log_likelihood,
        trace: em.trace,
    }
}

fn log_likelihood_from_cover<T: Scalar>(cover: &[(usize, usize)], w: &[T]) -> T {
    let s = prefix_sums(w);
    cover.iter().fold(T::zero(), |acc, &(a, b)| {
        let d = s[b] - s[a];
        acc + if d > T::zero() { d.ln() } else { T::neg_infinity() }
    })
}

impl<T: Scalar> NpmleFit<T> {
    /// Cumulative masses `C_0 = 0, C_j = w_1 + … + w_j`.
    fn cumulative(&self) -> Vec<T> {
        prefix_sums(&self.masses)
    }

    /// `F(t)`: unique outside the interiors of Turnbull intervals, resolved
    /// by `rule` inside them.
    pub fn evaluate(&self, t: T, rule: EvalRule) -> T {
        let cum = self.cumulative();
        let ivs = self.intervals.as_slice();
        let done = ivs.partition_point(|j| j.right <= t);
        let below = cum[done].min(T::one());
        match ivs.get(done) {
            Some(j) if !j.atom && j.left < t => {
                let above = cum[done + 1].min(T::one());
                match rule {
                    EvalRule::Left => above,
                    EvalRule::Right => below,
                    EvalRule::Interpolation if j.right.is_finite() => {
                        below + (above - below) * (t - j.left) / (j.right - j.left)
                    }
                    EvalRule::Interpolation => below,
                }
            }
            _ => below,
        }
    }

    /// Distribution function with each interval's mass at its right end;
    /// mass on `(p, inf)` is left implicit in `F(inf) = 1`.
    pub fn to_step_function(&self) -> StepFunction<T> {
        step_function_from_masses(&self.intervals, &self.masses)
    }
}

/// See [`NpmleFit::to_step_function`].
pub fn step_function_from_masses<T: Scalar>(intervals: &TurnbullIntervals<T>, masses: &[T]) -> StepFunction<T> {
    let (atoms, w): (Vec<T>, Vec<T>) = intervals
        .as_slice()
        .iter()
        .zip(masses)
        .filter(|(j, _)| j.right.is_finite())
        .map(|(j, &m)| (j.right, m))
        .unzip();
    StepFunction::from_atoms(&atoms, &w).expect("Turnbull right ends are increasing")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(pairs: &[(f64, f64)]) -> Dataset<f64> {
        Dataset::from_pairs(pairs.iter().copied()).unwrap()
    }

    fn bounds(t: &TurnbullIntervals<f64>) -> Vec<(f64, f64)> {
        t.as_slice().iter().map(|j| (j.left, j.right)).collect()
    }

    #[test]
    fn disjoint_observations_are_their_own_intervals() {
        assert_eq!(bounds(&turnbull_intervals(&ds(&[(0.0, 1.0), (2.0, 3.0)]))), vec![(0.0, 1.0), (2.0, 3.0)]);
    }

    #[test]
    fn overlap_gives_intersection() {
        assert_eq!(bounds(&turnbull_intervals(&ds(&[(0.0, 2.0), (1.0, 3.0)]))), vec![(1.0, 2.0)]);
    }

    #[test]
    fn right_censored_alone() {
        let t = turnbull_intervals(&ds(&[(1.5, f64::INFINITY)]));
        assert_eq!(t.len(), 1);
        assert_eq!(t.as_slice()[0].left, 1.5);
        assert!(t.as_slice()[0].right.is_infinite());
    }

    #[test]
    fn touching_intervals_do_not_merge() {
        let t = turnbull_intervals(&ds(&[(0.0, 1.0), (1.0, 2.0)]));
        assert_eq!(bounds(&t), vec![(0.0, 1.0), (1.0, 2.0)]);
    }

    #[test]
    fn exact_times_are_atoms() {
        let t = turnbull_intervals(&ds(&[(1.0, 1.0), (0.0, 1.0), (1.0, 1.0), (1.0, f64::INFINITY)]));
        let ivs = t.as_slice();
        assert_eq!(ivs.len(), 2);
        assert!(ivs[0].atom && ivs[0].left == 1.0 && ivs[0].right == 1.0);
        assert!(!ivs[1].atom && ivs[1].left == 1.0);
    }

    #[test]
    fn identical_observations() {
        let fit = fit_em(&ds(&[(0.0, 1.0); 5]), EmOptions::default());
        assert_eq!(fit.masses, vec![1.0]);
        assert!(fit.converged);
    }

    #[test]
    fn evaluation_rules() {
        let fit = NpmleFit {
            intervals: TurnbullIntervals(vec![
                TurnbullInterval { left: 0.0, right: 1.0, atom: false },
                TurnbullInterval { left: 2.0, right: 4.0, atom: false },
                TurnbullInterval { left: 5.0, right: f64::INFINITY, atom: false },
            ]),
            masses: vec![0.2, 0.2, 0.6],
            converged: true,
            iterations: 0,
            log_likelihood: 0.0,
            trace: vec![],
        };
        assert!((fit.evaluate(3.0, EvalRule::Interpolation) - 0.3).abs() < 1e-15);
        assert!((fit.evaluate(3.0, EvalRule::Left) - 0.4).abs() < 1e-15);
        assert!((fit.evaluate(3.0, EvalRule::Right) - 0.2).abs() < 1e-15);
        assert!((fit.evaluate(4.5, EvalRule::Left) - 0.4).abs() < 1e-15);
        assert_eq!(fit.evaluate(-1.0, EvalRule::Left), 0.0);
        assert_eq!(fit.evaluate(0.0, EvalRule::Left), 0.0);
        assert_eq!(fit.evaluate(6.0, EvalRule::Right), 0.4);
        assert_eq!(fit.evaluate(6.0, EvalRule::Left), 1.0);
        assert_eq!(fit.evaluate(f64::INFINITY, EvalRule::Right), 1.0);
    }

    #[test]
    fn value_past_all_data_is_one() {
        let fit = fit_em(&ds(&[(0.0, 1.0), (0.5, 2.0), (1.5, 3.0)]), EmOptions::default());
        for rule in [EvalRule::Interpolation, EvalRule::Left, EvalRule::Right] {
            assert!((fit.evaluate(10.0, rule) - 1.0).abs() < 1e-12);
            assert_eq!(fit.evaluate(0.0, rule), 0.0);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let data = ds(&[(0.0, 1.0), (0.5, f64::INFINITY), (0.0, 2.0), (1.5, f64::INFINITY), (0.2, 0.8)]);
        let fit = fit_em(&data, EmOptions { tol: 0.0, max_iter: 3, accelerate: false });
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 3);
        assert!((fit.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn likelihood_matches_plausibility_of_step_function() {
        let data = ds(&[(0.0, 1.0), (0.5, f64::INFINITY), (1.0, 1.0), (0.2, 3.0), (2.0, 4.0)]);
        let fit = fit_em(&data, EmOptions::default());
        let lp = crate::inference::log_plausibility(&fit.to_step_function(), &data);
        assert!((lp - fit.log_likelihood).abs() < 1e-12);
    }
}
