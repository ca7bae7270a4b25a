//! Taylor expansions of `F` and the regularized model
//! `T_p(y; x) + M/(p+1)!·‖y − x‖^{p+1}` for `p ∈ {1, 2}`.
//!
//! The model deliberately excludes `h`; callers add `h(y)` at trial points.

use crate::error::{check_dim, NhotaError, Result};
use crate::problem::{
    ensure_finite_mat, ensure_finite_scalar, ensure_finite_vec, Matrix, SmoothOracle, Vector,
};

/// Order `p` of the Taylor model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_usize(p: usize) -> Result<Self> {
        match p {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(NhotaError::InvalidArgument(format!(
                "Taylor order must be 1 or 2, got {p}"
            ))),
        }
    }

    pub fn get(self) -> usize {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    /// `p!`
    pub fn factorial(self) -> f64 {
        match self {
            Order::First => 1.0,
            Order::Second => 2.0,
        }
    }

    /// `(p+1)!`
    pub fn next_factorial(self) -> f64 {
        match self {
            Order::First => 2.0,
            Order::Second => 6.0,
        }
    }

    /// `r^p`
    pub fn pow(self, r: f64) -> f64 {
        match self {
            Order::First => r,
            Order::Second => r * r,
        }
    }

    /// `r^{p+1}`
    pub fn pow_next(self, r: f64) -> f64 {
        match self {
            Order::First => r * r,
            Order::Second => r * r * r,
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.get())
    }
}

/// `M/(p+1)!·r^{p+1}`
pub fn regularizer(m: f64, r: f64, order: Order) -> f64 {
    m / order.next_factorial() * order.pow_next(r)
}

fn check_m(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(NhotaError::InvalidArgument(format!(
            "regularization M must be positive, got {m}"
        )))
    }
}

/// Derivatives of `F` cached at the expansion point.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCenter {
    x: Vector,
    fx: f64,
    gx: Vector,
    hx: Option<Matrix>,
    order: Order,
}

impl ModelCenter {
    /// Query the oracle once at `x` for every derivative up to `order`.
    pub fn new(oracle: &dyn SmoothOracle, x: Vector, order: Order) -> Result<Self> {
        check_dim(oracle.dim(), x.len())?;
        if order.get() > oracle.order() {
            return Err(NhotaError::Capability(format!(
                "model of order {order} needs derivatives the oracle (order {}) lacks",
                oracle.order()
            )));
        }
        let fx = ensure_finite_scalar(oracle.value(&x), "F")?;
        let gx = ensure_finite_vec(oracle.gradient(&x), "∇F")?;
        check_dim(x.len(), gx.len())?;
        let hx = match order {
            Order::First => None,
            Order::Second => Some(ensure_finite_mat(oracle.hessian(&x)?, "∇²F")?),
        };
        Self::from_parts(x, fx, gx, hx, order)
    }

    /// Build a center from precomputed derivatives.
    pub fn from_parts(
        x: Vector,
        fx: f64,
        gx: Vector,
        hx: Option<Matrix>,
        order: Order,
    ) -> Result<Self> {
        check_dim(x.len(), gx.len())?;
        match (order, &hx) {
            (Order::First, _) => {}
            (Order::Second, Some(h)) => {
                if h.nrows() != x.len() || h.ncols() != x.len() {
                    return Err(NhotaError::DimensionMismatch {
                        expected: x.len(),
                        got: h.nrows(),
                    });
                }
            }
            (Order::Second, None) => {
                return Err(NhotaError::InvalidArgument(
                    "second-order center needs a Hessian".into(),
                ))
            }
        }
        let hx = if order == Order::First { None } else { hx };
        Ok(Self {
            x,
            fx,
            gx,
            hx,
            order,
        })
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn gx(&self) -> &Vector {
        &self.gx
    }

    pub fn hessian(&self) -> Option<&Matrix> {
        self.hx.as_ref()
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn displacement(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.x.len(), y.len())?;
        Ok(y - &self.x)
    }

    /// `T_p(y; x)`.
    pub fn taylor_value(&self, y: &Vector) -> Result<f64> {
        let d = self.displacement(y)?;
        Ok(self.fx + self.taylor_delta(&d))
    }

    /// `∇T_p(y; x)`.
    pub fn taylor_grad(&self, y: &Vector) -> Result<Vector> {
        let d = self.displacement(y)?;
        Ok(self.taylor_grad_at(&d))
    }

    /// Smooth model value `T_p(y; x) + M/(p+1)!·‖y − x‖^{p+1}`.
    pub fn model_value(&self, y: &Vector, m: f64) -> Result<f64> {
        check_m(m)?;
        let d = self.displacement(y)?;
        Ok(self.fx + self.model_delta(&d, m))
    }

    /// Gradient of the smooth model: `∇T_p(y; x) + M/p!·‖y − x‖^{p−1}(y − x)`.
    pub fn model_grad(&self, y: &Vector, m: f64) -> Result<Vector> {
        check_m(m)?;
        let d = self.displacement(y)?;
        Ok(self.model_delta_and_grad(&d, m).1)
    }

    /// `T_p(x + d; x) − F(x)`.
    pub(crate) fn taylor_delta(&self, d: &Vector) -> f64 {
        let lin = self.gx.dot(d);
        match &self.hx {
            Some(h) => lin + 0.5 * d.dot(&(h * d)),
            None => lin,
        }
    }

    pub(crate) fn taylor_grad_at(&self, d: &Vector) -> Vector {
        match &self.hx {
            Some(h) => &self.gx + h * d,
            None => self.gx.clone(),
        }
    }

    /// Model value minus `F(x)` at displacement `d`. Working with the
    /// difference keeps small decreases resolvable when `|F(x)|` is large.
    pub(crate) fn model_delta(&self, d: &Vector, m: f64) -> f64 {
        self.taylor_delta(d) + regularizer(m, d.norm(), self.order)
    }

    pub(crate) fn model_delta_and_grad(&self, d: &Vector, m: f64) -> (f64, Vector) {
        let r = d.norm();
        let lin = self.gx.dot(d);
        let (delta, mut grad) = match &self.hx {
            Some(h) => {
                let hd = h * d;
                (lin + 0.5 * d.dot(&hd), &self.gx + hd)
            }
            None => (lin, self.gx.clone()),
        };
        // M/p!·‖d‖^{p−1}·d; for p = 1 the power is taken as 1 even at d = 0.
        let coef = m / self.order.factorial()
            * match self.order {
                Order::First => 1.0,
                Order::Second => r,
            };
        grad.axpy(coef, d, 1.0);
        (delta + regularizer(m, r, self.order), grad)
    }
}
