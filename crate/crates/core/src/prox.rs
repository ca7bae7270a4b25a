//! The `λ‖·‖₁` term: soft-thresholding prox and exact subdifferential distance.

use crate::error::{check_dim, NhotaError, Result};
use crate::problem::{NonsmoothTerm, Vector};

/// Coordinatewise soft-threshold `sign(vᵢ)·max(|vᵢ| − τ, 0)`.
///
/// This is the prox of `τ‖·‖₁`; callers fold the weight `λ` into `tau`.
pub fn prox_l1(v: &Vector, tau: f64) -> Result<Vector> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(NhotaError::InvalidArgument(format!(
            "prox parameter must be positive and finite, got {tau}"
        )));
    }
    Ok(v.map(|vi| soft_threshold(vi, tau)))
}

#[inline]
pub(crate) fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// `dist(0, g + λ∂‖x‖₁)`, computed exactly coordinate by coordinate.
pub fn subdiff_dist_l1(g: &Vector, x: &Vector, lambda: f64) -> Result<f64> {
    check_dim(g.len(), x.len())?;
    if !(lambda >= 0.0) {
        return Err(NhotaError::InvalidArgument(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let sq: f64 = g
        .iter()
        .zip(x.iter())
        .map(|(&gi, &xi)| {
            let r = if xi != 0.0 {
                gi + lambda * xi.signum()
            } else {
                gi.signum() * (gi.abs() - lambda).max(0.0)
            };
            r * r
        })
        .sum();
    Ok(sq.sqrt())
}

/// `h(x) = λ‖x‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    lambda: f64,
}

impl L1Norm {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(NhotaError::InvalidArgument(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl NonsmoothTerm for L1Norm {
    fn value(&self, x: &Vector) -> f64 {
        self.lambda * x.lp_norm(1)
    }

    fn value_diff(&self, y: &Vector, x: &Vector) -> f64 {
        self.lambda
            * y.iter()
                .zip(x.iter())
                .map(|(a, b)| a.abs() - b.abs())
                .sum::<f64>()
    }

    fn prox(&self, v: &Vector, tau: f64) -> Result<Vector> {
        if self.lambda == 0.0 {
            if !(tau > 0.0) {
                return Err(NhotaError::InvalidArgument(format!(
                    "prox parameter must be positive, got {tau}"
                )));
            }
            return Ok(v.clone());
        }
        prox_l1(v, tau * self.lambda)
    }

    fn subdiff_dist(&self, g: &Vector, x: &Vector) -> Result<f64> {
        subdiff_dist_l1(g, x, self.lambda)
    }

    fn affine_minorant(&self, dim: usize) -> Option<(Vector, f64)> {
        Some((Vector::zeros(dim), 0.0))
    }
}

/// `h ≡ 0`, turning the problem into smooth minimization.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroTerm;

impl NonsmoothTerm for ZeroTerm {
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn prox(&self, v: &Vector, tau: f64) -> Result<Vector> {
        if !(tau > 0.0) {
            return Err(NhotaError::InvalidArgument(format!(
                "prox parameter must be positive, got {tau}"
            )));
        }
        Ok(v.clone())
    }

    fn subdiff_dist(&self, g: &Vector, x: &Vector) -> Result<f64> {
        check_dim(g.len(), x.len())?;
        Ok(g.norm())
    }

    fn affine_minorant(&self, dim: usize) -> Option<(Vector, f64)> {
        Some((Vector::zeros(dim), 0.0))
    }
}
