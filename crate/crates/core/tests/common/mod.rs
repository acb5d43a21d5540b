//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use fiducial_core::Dataset;
use rand::Rng;

/// `i` must carry a smaller uniform than `j`. Exact times are `(t-, t]`, so
/// two observations ending and starting at the same `t` are unordered only
/// when the later one is exact.
pub fn must_precede(ds: &Dataset, i: usize, j: usize) -> bool {
    let (a, b) = (&ds.observations()[i], &ds.observations()[j]);
    if a.upper() < b.lower() {
        return true;
    }
    a.upper() == b.lower() && b.lower() != b.upper()
}

pub fn order_pairs(ds: &Dataset) -> Vec<(usize, usize)> {
    let n = ds.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && must_precede(ds, i, j) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Exact draws from the uniform distribution on the ordered region.
pub fn rejection_draws<R: Rng>(ds: &Dataset, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let pairs = order_pairs(ds);
    let mut out = Vec::with_capacity(count);
    let mut u = vec![0.0; ds.len()];
    while out.len() < count {
        for x in u.iter_mut() {
            *x = rng.random::<f64>();
        }
        if pairs.iter().all(|&(i, j)| u[i] < u[j]) {
            out.push(u.clone());
        }
    }
    out
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Projected gradient with step `1/8` (the Hessian norm is below 8) until
/// the unit-step projected-gradient residual drops below `tol`.
pub fn projected_gradient_qp(lo: &[f64], hi: &[f64], left: f64, right: f64, tol: f64) -> (Vec<f64>, f64) {
    let m = lo.len();
    let mut x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let grad = |x: &[f64], k: usize| {
        let prev = if k == 0 { left } else { x[k - 1] };
        let next = if k + 1 == m { right } else { x[k + 1] };
        2.0 * (2.0 * x[k] - prev - next)
    };
    let residual = |x: &[f64]| {
        (0..m)
            .map(|k| (x[k] - (x[k] - grad(x, k)).clamp(lo[k], hi[k])).abs())
            .fold(0.0, f64::max)
    };
    let mut y = x.clone();
    let mut x_prev = x.clone();
    let mut t = 1.0f64;
    for _ in 0..5_000_000 {
        if residual(&x) < tol {
            break;
        }
        // accelerated projected gradient with restart on ascent direction
        let g: Vec<f64> = (0..m).map(|k| grad(&y, k)).collect();
        let next: Vec<f64> = (0..m).map(|k| (y[k] - g[k] / 8.0).clamp(lo[k], hi[k])).collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let restart = (0..m).map(|k| g[k] * (next[k] - x[k])).sum::<f64>() > 0.0;
        x_prev.clone_from(&x);
        x = next;
        if restart {
            t = 1.0;
            y.clone_from(&x);
        } else {
            let beta = (t - 1.0) / t_next;
            y = (0..m).map(|k| x[k] + beta * (x[k] - x_prev[k])).collect();
            t = t_next;
        }
    }
    let r = residual(&x);
    (x, r)
}

/// Product-limit estimate `F(t)` at each distinct event time, for data of
/// exact times and `(c, inf)` censorings. A censoring at an event time
/// stays in the risk set there.
pub fn kaplan_meier(ds: &Dataset) -> Vec<(f64, f64)> {
    let mut events: Vec<f64> = ds.iter().filter(|o| o.is_exact()).map(|o| o.lower()).collect();
    events.sort_by(f64::total_cmp);
    events.dedup();
    let mut surv = 1.0;
    events
        .into_iter()
        .map(|t| {
            let at_risk = ds
                .iter()
                .filter(|o| o.lower() >= t)
                .count() as f64;
            let deaths = ds.iter().filter(|o| o.is_exact() && o.lower() == t).count() as f64;
            surv *= 1.0 - deaths / at_risk;
            (t, 1.0 - surv)
        })
        .collect()
}

/// Weighted pool-adjacent-violators fit of `y` (non-decreasing).
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi, wi, 1));
        while blocks.len() > 1 {
            let (v2, w2, c2) = blocks[blocks.len() - 1];
            let (v1, w1, c1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, c1 + c2));
        }
    }
    blocks.into_iter().flat_map(|(v, _, c)| std::iter::repeat_n(v, c)).collect()
}

/// Current-status NPMLE of `F` at the distinct inspection times: isotonic
/// regression of the indicators `T <= C`.
pub fn current_status_npmle(ds: &Dataset) -> Vec<(f64, f64)> {
    let mut rows: Vec<(f64, f64)> = ds
        .iter()
        .map(|o| {
            if o.lower() == 0.0 {
                (o.upper(), 1.0)
            } else {
                (o.lower(), 0.0)
            }
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    // a tie between (0, c] and (c, inf) gives both the same F(c)
    let mut times: Vec<f64> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for (c, d) in rows {
        if times.last() == Some(&c) {
            *sums.last_mut().unwrap() += d;
            *counts.last_mut().unwrap() += 1.0;
        } else {
            times.push(c);
            sums.push(d);
            counts.push(1.0);
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
    times.into_iter().zip(pava(&means, &counts)).collect()
}

/// Every mass vector on `k` cells that is a multiple of `step`.
pub fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, steps: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(left as f64 / steps as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in 0..=left {
            cur.push(a as f64 / steps as f64);
            rec(k - 1, left - a, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Composite Simpson rule.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Gamma(shape, 1) distribution function by quadrature of the density.
pub fn gamma_cdf_quadrature(shape: f64, x: f64) -> f64 {
    let norm = integer_gamma(shape);
    simpson(|t| t.powf(shape - 1.0) * (-t).exp(), 0.0, x, 20_000) / norm
}

/// `Γ(k)` for integer `k`.
fn integer_gamma(shape: f64) -> f64 {
    assert!(shape.fract() == 0.0 && shape >= 1.0);
    (1..shape as u64).map(|k| k as f64).product()
}

/// Root of `F(x) = 0.5` by bisection against the quadrature CDF.
pub fn gamma_median_quadrature(shape: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 20.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gamma_cdf_quadrature(shape, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov tail `P(K > λ)` for the limiting law of `sqrt(n m / (n + m)) D`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}
