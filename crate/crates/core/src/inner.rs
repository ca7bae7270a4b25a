//! Certified inexact minimization of `model(y) + h(y)` by proximal gradient.
//!
//! A returned step satisfies two conditions relative to the center `x`:
//! the model plus `h` does not exceed `f(x)`, and the stationarity residual of
//! the model at the step is at most `θ·‖y − x‖^p`.

use crate::error::{NhotaError, Result};
use crate::problem::{ensure_finite_scalar, CompositeProblem, Vector};
use crate::taylor::ModelCenter;

/// Relative displacement below which a step is treated as `y = x`.
pub const DEGENERATE_STEP_RTOL: f64 = 1e-14;

const MAX_HALVINGS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerLimits {
    pub max_inner: usize,
    /// Initial prox-gradient step length.
    pub step_guess: f64,
}

impl Default for InnerLimits {
    fn default() -> Self {
        Self {
            max_inner: 500,
            step_guess: 1.0,
        }
    }
}

/// Evidence that a candidate meets both acceptance conditions of the inner
/// problem, recomputed from oracle data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCertificate {
    /// `model(y) + h(y) ≤ f(x)`.
    pub decrease_ok: bool,
    /// `dist(0, ∇model(y) + ∂h(y))`, or `‖∇model(y) + p‖` for the prox witness `p`
    /// when `h` cannot measure its subdifferential exactly.
    pub residual: f64,
    /// `θ·‖y − x‖^p`.
    pub threshold: f64,
    /// `‖y − x‖`.
    pub witness_norm: f64,
    pub inner_iters: usize,
}

impl StepCertificate {
    pub fn is_valid(&self) -> bool {
        self.decrease_ok && self.residual <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub y: Vector,
    /// Subgradient `p ∈ ∂h(y)` produced by the last prox step.
    pub witness: Vector,
    pub certificate: StepCertificate,
    /// `f(x) − (model(y) + h(y))`, nonnegative.
    pub model_decrease: f64,
    /// Set when the iteration returned to the center; the certificate is
    /// then valid only if the center is stationary.
    pub degenerate: bool,
}

fn is_degenerate(d: &Vector, x: &Vector) -> bool {
    d.norm() <= DEGENERATE_STEP_RTOL * (1.0 + x.norm())
}

/// Recompute both inner conditions at `y` from scratch.
///
/// When `h` reports an exact subdifferential distance it is used for the
/// residual; otherwise the residual is `‖∇model(y) + witness‖`.
pub fn certify(
    problem: &CompositeProblem,
    center: &ModelCenter,
    y: &Vector,
    m: f64,
    theta: f64,
    witness: &Vector,
) -> Result<StepCertificate> {
    let d = y - center.x();
    let grad = center.model_grad(y, m)?;
    let h = problem.nonsmooth();
    let total = center.model_delta(&d, m) + h.value_diff(y, center.x());
    let residual = match h.subdiff_dist(&grad, y) {
        Ok(dist) => dist,
        Err(_) => (&grad + witness).norm(),
    };
    let r = d.norm();
    Ok(StepCertificate {
        decrease_ok: total <= 0.0,
        residual,
        threshold: theta * center.order().pow(r),
        witness_norm: r,
        inner_iters: 0,
    })
}

/// Prox-gradient iteration on `model(y) + h(y)` started at `warm_start` if it
/// does not exceed `f(x)`, else at the center.
///
/// Fails with [`NhotaError::InnerFailure`] when `limits.max_inner` iterations
/// pass without a certificate.
pub fn solve_subproblem(
    problem: &CompositeProblem,
    center: &ModelCenter,
    m: f64,
    theta: f64,
    limits: &InnerLimits,
    warm_start: Option<&Vector>,
) -> Result<SubproblemSolution> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(NhotaError::InvalidArgument(format!(
            "M must be positive, got {m}"
        )));
    }
    if !(theta > 0.0) {
        return Err(NhotaError::InvalidArgument(format!(
            "theta must be positive, got {theta}"
        )));
    }
    if !(limits.step_guess > 0.0) || limits.max_inner == 0 {
        return Err(NhotaError::InvalidArgument("invalid inner limits".into()));
    }
    let h = problem.nonsmooth();
    let x = center.x();
    let order = center.order();
    ensure_finite_scalar(h.value(x), "h")?;

    // Objective tracked relative to f(x): model_delta(d) + h(y) − h(x).
    let mut y = x.clone();
    let mut d = Vector::zeros(x.len());
    let mut total = 0.0;
    if let Some(w) = warm_start {
        let dw = w - x;
        let tw = center.model_delta(&dw, m) + h.value_diff(w, x);
        if tw.is_finite() && tw <= 0.0 {
            y = w.clone();
            d = dw;
            total = tw;
        }
    }
    let (mut smooth, mut grad) = center.model_delta_and_grad(&d, m);

    let mut alpha = limits.step_guess;
    let mut last = (f64::INFINITY, 0.0);
    let mut iters = 0;
    for iter in 1..=limits.max_inner {
        iters = iter;
        let mut a = (2.0 * alpha).min(limits.step_guess);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let v = &y - &grad * a;
            let y_new = h.prox(&v, a)?;
            let step = &y_new - &y;
            let d_new = &y_new - x;
            let smooth_new = center.model_delta(&d_new, m);
            let upper = smooth + grad.dot(&step) + step.norm_squared() / (2.0 * a);
            let total_new = smooth_new + h.value_diff(&y_new, x);
            if smooth_new <= upper && total_new <= total {
                accepted = Some((v, y_new, d_new, total_new));
                break;
            }
            a *= 0.5;
        }
        let Some((v, y_new, d_new, total_new)) = accepted else {
            // No representable decrease left at this scale.
            break;
        };
        alpha = a;
        let witness = (&v - &y_new) / a;
        y = y_new;
        d = d_new;
        total = total_new;
        (smooth, grad) = center.model_delta_and_grad(&d, m);
        if !smooth.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(NhotaError::OracleFailure { what: "model" });
        }

        if is_degenerate(&d, x) {
            let y0 = x.clone();
            let mut certificate = certify(problem, center, &y0, m, theta, &witness)?;
            certificate.inner_iters = iter;
            return Ok(SubproblemSolution {
                y: y0,
                witness,
                certificate,
                model_decrease: 0.0,
                degenerate: true,
            });
        }

        let residual = match h.subdiff_dist(&grad, &y) {
            Ok(dist) => dist,
            Err(_) => (&grad + &witness).norm(),
        };
        let threshold = theta * order.pow(d.norm());
        last = (residual, threshold);
        if residual <= threshold {
            let mut certificate = certify(problem, center, &y, m, theta, &witness)?;
            certificate.inner_iters = iter;
            return Ok(SubproblemSolution {
                y,
                witness,
                certificate,
                model_decrease: -total,
                degenerate: false,
            });
        }
    }
    Err(NhotaError::InnerFailure {
        iters,
        residual: last.0,
        threshold: last.1,
        model_decrease: -total,
    })
}
