//! Stationarity, empirical convergence rates and the Taylor remainder check.

use std::ops::Range;

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::driver::IterateTrace;
use crate::error::{check_dim, NhotaError, Result};
use crate::problem::{CompositeProblem, SmoothOracle, Vector};
use crate::taylor::{ModelCenter, Order};

/// Leading iterations excluded from rate fits.
pub const TRANSIENT: usize = 3;

/// Minimum window length for a fit.
pub const MIN_WINDOW: usize = 5;

/// `|r²_lin − r²_pow|` below which [`kl_probe`] declines to classify.
pub const INCONCLUSIVE_BAND: f64 = 0.02;

/// Safety factor on the sampled Lipschitz estimate.
pub const LIPSCHITZ_SAFETY: f64 = 1.05;

/// Number of random point pairs used to estimate the local Lipschitz constant.
pub const LIPSCHITZ_PAIRS: usize = 200;

/// Number of base points whose difference direction is refined by power
/// iteration in [`estimate_lipschitz`].
pub const DIRECTED_STARTS: usize = 20;

const POWER_STEPS: usize = 12;

/// `S_f(x) = dist(0, ∇F(x) + ∂h(x))`.
pub fn stationarity(problem: &CompositeProblem, x: &Vector) -> Result<f64> {
    check_dim(problem.dim(), x.len())?;
    let g = problem.smooth().gradient(x);
    problem.nonsmooth().subdiff_dist(&g, x)
}

/// Running minimum of a series.
pub fn min_prefix(series: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    series
        .iter()
        .map(|&v| {
            best = best.min(v);
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: Range<usize>,
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(b, a, r²)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        1.0 - sse / syy
    } else {
        1.0
    };
    (slope, intercept, r2)
}

fn check_window(series: &[f64], window: &Range<usize>) -> Result<()> {
    if window.end > series.len() || window.len() < MIN_WINDOW {
        return Err(NhotaError::InvalidArgument(format!(
            "window {window:?} must lie inside a series of length {} and span at least {MIN_WINDOW} points",
            series.len()
        )));
    }
    if let Some(v) = series[window.clone()]
        .iter()
        .find(|v| !(**v > 0.0) || !v.is_finite())
    {
        return Err(NhotaError::InvalidArgument(format!(
            "series must be positive and finite on the window, found {v}"
        )));
    }
    Ok(())
}

/// Least-squares fit of `log(series_k)` against `log(k)` over `window`.
/// Index 0 is excluded since `log 0` is undefined.
pub fn rate_fit(series: &[f64], window: Range<usize>) -> Result<RateFit> {
    if window.start == 0 {
        return Err(NhotaError::InvalidArgument(
            "power-law window must start at k ≥ 1".into(),
        ));
    }
    check_window(series, &window)?;
    let xs: Vec<f64> = window.clone().map(|k| (k as f64).ln()).collect();
    let ys: Vec<f64> = series[window.clone()].iter().map(|v| v.ln()).collect();
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(RateFit {
        slope,
        intercept,
        r2,
        window,
    })
}

/// Window `[TRANSIENT, end)` where `end` is one past the last strict decrease
/// of the running minimum; later entries sit on a plateau and carry no rate
/// information.
pub fn decay_window(series: &[f64]) -> Range<usize> {
    let mp = min_prefix(series);
    let mut end = TRANSIENT.min(mp.len());
    for k in 1..mp.len() {
        if mp[k] < mp[k - 1] && mp[k] > 0.0 {
            end = k + 1;
        }
    }
    TRANSIENT..end.max(TRANSIENT)
}

#[derive(Debug, Clone, PartialEq)]
pub enum KlClass {
    /// `δ_k ≈ C·ρ^k`.
    Linear {
        rho: f64,
        r2: f64,
    },
    /// `δ_k ≈ C·k^{−β}`.
    Sublinear {
        beta: f64,
        r2: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl KlClass {
    pub fn is_linear(&self) -> bool {
        matches!(self, KlClass::Linear { .. })
    }
}

/// Classify the decay of `δ_k` (indexed by `k`) as geometric or power law by
/// comparing goodness of fit on `[TRANSIENT, end)`, where `end` stops before
/// the first non-positive entry.
pub fn kl_probe_series(deltas: &[f64]) -> KlClass {
    let end = (TRANSIENT..deltas.len())
        .find(|&k| !(deltas[k] > 0.0) || !deltas[k].is_finite())
        .unwrap_or(deltas.len());
    if end < TRANSIENT + MIN_WINDOW {
        return KlClass::Inconclusive {
            reason: format!("only {} usable points", end.saturating_sub(TRANSIENT)),
        };
    }
    let window = TRANSIENT..end;
    let ys: Vec<f64> = deltas[window.clone()].iter().map(|v| v.ln()).collect();
    let ks: Vec<f64> = window.clone().map(|k| k as f64).collect();
    let log_ks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let (lin_slope, _, lin_r2) = least_squares(&ks, &ys);
    let (pow_slope, _, pow_r2) = least_squares(&log_ks, &ys);
    if (lin_r2 - pow_r2).abs() < INCONCLUSIVE_BAND {
        return KlClass::Inconclusive {
            reason: format!("r² geometric {lin_r2:.4} vs power {pow_r2:.4}"),
        };
    }
    if lin_r2 > pow_r2 {
        KlClass::Linear {
            rho: lin_slope.exp(),
            r2: lin_r2,
        }
    } else {
        KlClass::Sublinear {
            beta: -pow_slope,
            r2: pow_r2,
        }
    }
}

/// [`kl_probe_series`] applied to `δ_k = f(x_k) − f*`. Entries within
/// floating-point resolution of `f*` end the window.
pub fn kl_probe(trace: &IterateTrace, f_star: f64) -> KlClass {
    let floor = 64.0 * f64::EPSILON * f_star.abs().max(1.0);
    let deltas: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| {
            let d = r.f - f_star;
            if d > floor {
                d
            } else {
                0.0
            }
        })
        .collect();
    kl_probe_series(&deltas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemainderReport {
    pub passed: bool,
    /// Worst `bound − |F(y) − T_p(y; x)|` over the samples.
    pub margin: f64,
    /// Worst `bound − ‖∇F(y) − ∇T_p(y; x)‖` for the gradient remainder.
    pub gradient_margin: f64,
    pub l_hat: f64,
}

fn sample_ball(center: &Vector, radius: f64, rng: &mut ChaCha8Rng) -> Vector {
    let n = center.len();
    let dir = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
    let norm = dir.norm().max(f64::MIN_POSITIVE);
    let u: f64 = Uniform::new(0.0, 1.0).unwrap().sample(rng);
    center + dir * (radius * u.powf(1.0 / n as f64) / norm)
}

fn derivative_gap(oracle: &dyn SmoothOracle, u: &Vector, v: &Vector, order: Order) -> Result<f64> {
    Ok(match order {
        Order::First => (oracle.gradient(u) - oracle.gradient(v)).norm(),
        Order::Second => {
            let dh = oracle.hessian(u)? - oracle.hessian(v)?;
            SymmetricEigen::new(dh).eigenvalues.amax()
        }
    })
}

/// Direction approximately maximizing `‖D^{p+1}F(u)[w]‖`, by power iteration
/// on finite differences of the gradient.
fn steepest_direction(
    oracle: &dyn SmoothOracle,
    u: &Vector,
    w: Vector,
    eps: f64,
    order: Order,
) -> Vector {
    let mut w = w;
    for _ in 0..POWER_STEPS {
        let gp = oracle.gradient(&(u + &w * eps));
        let gm = oracle.gradient(&(u - &w * eps));
        let next = match order {
            // ∇²F(u)·w
            Order::First => (gp - gm) / (2.0 * eps),
            // D³F(u)[w, w, ·]
            Order::Second => (gp - oracle.gradient(u) * 2.0 + gm) / (eps * eps),
        };
        let norm = next.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        w = next / norm;
    }
    w
}

/// Largest sampled `‖D^pF(u) − D^pF(v)‖ / ‖u − v‖` over points in the ball.
///
/// Uses `pairs` random pairs plus [`DIRECTED_STARTS`] short pairs
/// `(u, u + εw)` whose direction `w` is refined by power iteration, since
/// random directions see only a small part of the worst case in high
/// dimension. Every sample is an actual difference quotient, so the result
/// never exceeds the true constant on the ball.
pub fn estimate_lipschitz(
    oracle: &dyn SmoothOracle,
    x: &Vector,
    radius: f64,
    order: Order,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let u = sample_ball(x, radius, &mut rng);
        let v = sample_ball(x, radius, &mut rng);
        let dist = (&u - &v).norm();
        if dist == 0.0 {
            continue;
        }
        best = best.max(derivative_gap(oracle, &u, &v, order)? / dist);
    }
    let eps = 1e-3 * radius;
    for _ in 0..DIRECTED_STARTS {
        let u = sample_ball(x, radius - 2.0 * eps, &mut rng);
        let w0 = sample_ball(&Vector::zeros(x.len()), 1.0, &mut rng);
        let n0 = w0.norm();
        if n0 == 0.0 {
            continue;
        }
        let w = steepest_direction(oracle, &u, w0 / n0, eps, order);
        let v = &u + &w * eps;
        best = best.max(derivative_gap(oracle, &v, &u, order)? / eps);
    }
    Ok(best)
}

/// Check `|F(y) − T_p(y; x)| ≤ 1.05·L̂/(p+1)!·‖y − x‖^{p+1}` for `samples`
/// points `y` drawn from the ball of `radius` around `x`, with `L̂` estimated
/// by [`estimate_lipschitz`] on the same ball. The matching gradient bound
/// is reported separately in `gradient_margin`.
pub fn remainder_check(
    problem: &CompositeProblem,
    x: &Vector,
    radius: f64,
    samples: usize,
    order: Order,
    seed: u64,
) -> Result<RemainderReport> {
    if !(radius > 0.0) {
        return Err(NhotaError::InvalidArgument(
            "radius must be positive".into(),
        ));
    }
    if samples < 50 {
        return Err(NhotaError::InvalidArgument(
            "need at least 50 samples".into(),
        ));
    }
    check_dim(problem.dim(), x.len())?;
    let oracle = problem.smooth();
    let l_hat = estimate_lipschitz(oracle, x, radius, order, LIPSCHITZ_PAIRS, seed)?;
    let l_bound = LIPSCHITZ_SAFETY * l_hat;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let center = ModelCenter::new(oracle, x.clone(), order)?;
    let mut margin = f64::INFINITY;
    let mut gradient_margin = f64::INFINITY;
    for _ in 0..samples {
        let y = sample_ball(x, radius, &mut rng);
        let r = (&y - x).norm();
        let fy = oracle.value(&y);
        let gy = oracle.gradient(&y);
        let t = center.taylor_value(&y)?;
        let tg = center.taylor_grad(&y)?;
        let value_slack = 1e-12 * fy.abs().max(t.abs()).max(1.0);
        let grad_slack = 1e-12 * gy.norm().max(1.0);
        let bound = l_bound / order.next_factorial() * order.pow_next(r);
        let gbound = l_bound / order.factorial() * order.pow(r);
        margin = margin.min(bound + value_slack - (fy - t).abs());
        gradient_margin = gradient_margin.min(gbound + grad_slack - (gy - tg).norm());
    }
    Ok(RemainderReport {
        passed: margin >= 0.0,
        margin,
        gradient_margin,
        l_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let series: Vec<f64> = (0..60)
            .map(|k| (k.max(1) as f64).powf(-2.0 / 3.0))
            .collect();
        let fit = rate_fit(&series, 1..60).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 1e-6);
        assert!((fit.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let fit = rate_fit(&[3.0; 20], 1..20).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn slope_matches_two_point_secant() {
        for &(c, b) in &[(2.0, 0.5), (0.3, 1.0), (7.0, 2.0), (1.0, 2.0 / 3.0)] {
            let series: Vec<f64> = (0..50).map(|k| c * (k.max(1) as f64).powf(-b)).collect();
            let fit = rate_fit(&series, 5..50).unwrap();
            let (k1, k2) = (5.0f64, 49.0f64);
            let secant = (series[49].ln() - series[5].ln()) / (k2.ln() - k1.ln());
            assert!((fit.slope - secant).abs() < 1e-3);
        }
    }

    #[test]
    fn bound_sequence_exponent_recovered() {
        for p in [1.0, 2.0] {
            let e = -p / (p + 1.0);
            let series: Vec<f64> = (0..200).map(|k| 4.2 * (k.max(1) as f64).powf(e)).collect();
            let fit = rate_fit(&series, TRANSIENT..200).unwrap();
            assert!((fit.slope - e).abs() < 1e-6);
        }
    }

    #[test]
    fn rate_fit_rejects_bad_input() {
        assert!(rate_fit(&[1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0], 1..7).is_err());
        assert!(rate_fit(&[1.0; 10], 0..10).is_err());
        assert!(rate_fit(&[1.0; 4], 1..4).is_err());
    }

    #[test]
    fn min_prefix_is_nonincreasing() {
        let mp = min_prefix(&[3.0, 4.0, 1.0, 2.0, 0.5]);
        assert_eq!(mp, vec![3.0, 3.0, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn decay_window_stops_at_plateau() {
        let s = [5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.25, 0.25, 0.3, 0.25];
        assert_eq!(decay_window(&s), 3..7);
    }

    #[test]
    fn kl_probe_synthetic_sequences() {
        let geometric: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
        match kl_probe_series(&geometric) {
            KlClass::Linear { rho, .. } => assert!((rho - 0.5).abs() < 1e-9),
            other => panic!("expected linear, got {other:?}"),
        }
        let power: Vec<f64> = (0..40).map(|k| (k.max(1) as f64).powi(-2)).collect();
        match kl_probe_series(&power) {
            KlClass::Sublinear { beta, .. } => assert!((beta - 2.0).abs() < 1e-9),
            other => panic!("expected sublinear, got {other:?}"),
        }
    }

    #[test]
    fn kl_probe_short_window_is_inconclusive() {
        let short = [1.0, 0.5, 0.25, 0.125, 0.0625];
        assert!(matches!(
            kl_probe_series(&short),
            KlClass::Inconclusive { .. }
        ));
    }
}
