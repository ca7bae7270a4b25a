//! Oracle contracts for composite problems `f(x) = F(x) + h(x)`.
//!
//! All norms are Euclidean; primal and dual norms coincide.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, NhotaError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Tolerance on `dist(0, ∇F(x*) + ∂h(x*))` for a declared optimum.
pub const KNOWN_OPT_TOL: f64 = 1e-8;

/// Smooth part `F` with derivatives up to [`SmoothOracle::order`].
///
/// Implementations must be deterministic and free of side effects, since the
/// solver and the diagnostics call them from several threads.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Highest derivative order available (1 or 2).
    fn order(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// Dense symmetric Hessian. Only required when `order() >= 2`.
    fn hessian(&self, _x: &Vector) -> Result<Matrix> {
        Err(NhotaError::Capability(
            "Hessian requested from a first-order oracle".into(),
        ))
    }
}

/// Proper, lower semicontinuous, convex term `h` accessed through its prox.
pub trait NonsmoothTerm: Send + Sync {
    /// `h(x)`, possibly `+∞`.
    fn value(&self, x: &Vector) -> f64;

    /// `h(y) − h(x)`. Terms that can evaluate the difference without
    /// cancellation should override this.
    fn value_diff(&self, y: &Vector, x: &Vector) -> f64 {
        self.value(y) - self.value(x)
    }

    /// `argmin_y h(y) + ‖y − v‖² / (2τ)`.
    fn prox(&self, v: &Vector, tau: f64) -> Result<Vector>;

    /// Exact `dist(0, g + ∂h(x))` when the term knows its subdifferential.
    fn subdiff_dist(&self, _g: &Vector, _x: &Vector) -> Result<f64> {
        Err(NhotaError::Capability(
            "nonsmooth term has no exact subdifferential distance".into(),
        ))
    }

    /// An affine minorant `(a, b)` with `h(x) ≥ ⟨a, x⟩ + b` for all `x`.
    fn affine_minorant(&self, dim: usize) -> Option<(Vector, f64)>;
}

/// A point with `dist(0, ∂f(x)) ≈ 0` and the optimal value, for test problems.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub x: Vector,
    pub f: f64,
}

/// `f = F + h` bundled with optional ground truth.
#[derive(Clone)]
pub struct CompositeProblem {
    smooth: Arc<dyn SmoothOracle>,
    nonsmooth: Arc<dyn NonsmoothTerm>,
    known_opt: Option<KnownOptimum>,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("order", &self.smooth.order())
            .field("known_opt", &self.known_opt)
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(smooth: Arc<dyn SmoothOracle>, nonsmooth: Arc<dyn NonsmoothTerm>) -> Self {
        Self {
            smooth,
            nonsmooth,
            known_opt: None,
        }
    }

    /// Attach a known optimum. When `h` exposes its subdifferential the
    /// point is checked for stationarity.
    pub fn with_known_optimum(mut self, x: Vector, f: f64) -> Result<Self> {
        check_dim(self.dim(), x.len())?;
        match self.nonsmooth.subdiff_dist(&self.smooth.gradient(&x), &x) {
            Ok(d) if d > KNOWN_OPT_TOL => {
                return Err(NhotaError::InvalidArgument(format!(
                    "declared optimum is not stationary: dist(0, ∂f(x*)) = {d:e}"
                )))
            }
            _ => {}
        }
        self.known_opt = Some(KnownOptimum { x, f });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn smooth(&self) -> &dyn SmoothOracle {
        self.smooth.as_ref()
    }

    pub fn nonsmooth(&self) -> &dyn NonsmoothTerm {
        self.nonsmooth.as_ref()
    }

    pub fn known_opt(&self) -> Option<&KnownOptimum> {
        self.known_opt.as_ref()
    }

    /// `f(x) = F(x) + h(x)`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.smooth.value(x) + self.nonsmooth.value(x))
    }
}

pub(crate) fn ensure_finite_scalar(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NhotaError::OracleFailure { what })
    }
}

pub(crate) fn ensure_finite_vec(v: Vector, what: &'static str) -> Result<Vector> {
    if v.iter().all(|e| e.is_finite()) {
        Ok(v)
    } else {
        Err(NhotaError::OracleFailure { what })
    }
}

pub(crate) fn ensure_finite_mat(m: Matrix, what: &'static str) -> Result<Matrix> {
    if m.iter().all(|e| e.is_finite()) {
        Ok(m)
    } else {
        Err(NhotaError::OracleFailure { what })
    }
}
