use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, NhotaError, Result};
use crate::problem::{CompositeProblem, Matrix, SmoothOracle, Vector};
use crate::prox::{soft_threshold, L1Norm};

/// `F(x) = ½·Σ dᵢ(xᵢ − cᵢ)²` with `dᵢ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagQuadData {
    pub d: Vector,
    pub c: Vector,
    pub lambda: f64,
}

impl DiagQuadData {
    pub fn new(d: Vector, c: Vector, lambda: f64) -> Result<Self> {
        check_dim(d.len(), c.len())?;
        if d.is_empty() || d.iter().any(|&di| !(di > 0.0) || !di.is_finite()) {
            return Err(NhotaError::InvalidArgument(
                "curvatures must be positive and finite".into(),
            ));
        }
        if !(lambda >= 0.0) {
            return Err(NhotaError::InvalidArgument(
                "lambda must be nonnegative".into(),
            ));
        }
        Ok(Self { d, c, lambda })
    }
}

#[derive(Debug, Clone)]
pub struct DiagQuad {
    data: Arc<DiagQuadData>,
}

impl DiagQuad {
    pub fn new(data: Arc<DiagQuadData>) -> Self {
        Self { data }
    }
}

impl SmoothOracle for DiagQuad {
    fn dim(&self) -> usize {
        self.data.d.len()
    }

    fn order(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector) -> f64 {
        let DiagQuadData { d, c, .. } = &*self.data;
        0.5 * (0..d.len())
            .map(|i| d[i] * (x[i] - c[i]).powi(2))
            .sum::<f64>()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let DiagQuadData { d, c, .. } = &*self.data;
        Vector::from_fn(d.len(), |i, _| d[i] * (x[i] - c[i]))
    }

    fn hessian(&self, _x: &Vector) -> Result<Matrix> {
        Ok(Matrix::from_diagonal(&self.data.d))
    }
}

/// Closed-form minimizer: `x*ᵢ = sign(cᵢ)·max(|cᵢ| − λ/dᵢ, 0)`.
pub fn exact_solution_diag(data: &DiagQuadData) -> (Vector, f64) {
    let x = Vector::from_fn(data.d.len(), |i, _| {
        soft_threshold(data.c[i], data.lambda / data.d[i])
    });
    let f = DiagQuad::new(Arc::new(data.clone())).value(&x) + data.lambda * x.lp_norm(1);
    (x, f)
}

#[derive(Debug, Clone)]
pub struct DiagQuadInstance {
    pub problem: CompositeProblem,
    pub data: Arc<DiagQuadData>,
    pub x0: Vector,
}

impl DiagQuadInstance {
    /// Wrap given data; the closed-form optimum is attached to the problem.
    pub fn from_data(data: DiagQuadData, x0: Vector) -> Result<Self> {
        check_dim(data.d.len(), x0.len())?;
        let data = Arc::new(data);
        let (x_star, f_star) = exact_solution_diag(&data);
        let problem = CompositeProblem::new(
            Arc::new(DiagQuad::new(data.clone())),
            Arc::new(L1Norm::new(data.lambda)?),
        )
        .with_known_optimum(x_star, f_star)?;
        Ok(Self { problem, data, x0 })
    }
}

/// Sample `dᵢ ~ U[1, 10]`, then `cᵢ ~ N(0, 1)`, then `x₀ ~ N(0, 4)`.
pub fn gen_diag_quad(n: usize, seed: u64, lambda: f64) -> Result<DiagQuadInstance> {
    if n == 0 {
        return Err(NhotaError::InvalidArgument("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Vector::from_fn(n, |_, _| rng.random_range(1.0..10.0));
    let c = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let x0 = Vector::from_fn(n, |_, _| {
        let s: f64 = StandardNormal.sample(&mut rng);
        2.0 * s
    });
    DiagQuadInstance::from_data(DiagQuadData::new(d, c, lambda)?, x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(d: f64, c: f64, lambda: f64) -> DiagQuadData {
        DiagQuadData::new(
            Vector::from_element(1, d),
            Vector::from_element(1, c),
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn scalar_optimum() {
        let (x, f) = exact_solution_diag(&data(1.0, 2.0, 0.5));
        assert_eq!(x[0], 1.5);
        assert!((f - 0.875).abs() < 1e-15);
    }

    #[test]
    fn no_regularization_recovers_centers() {
        let (x, f) = exact_solution_diag(&data(3.0, -1.25, 0.0));
        assert_eq!(x[0], -1.25);
        assert_eq!(f, 0.0);
    }

    #[test]
    fn zero_centers_give_zero() {
        let (x, f) = exact_solution_diag(&data(2.0, 0.0, 0.7));
        assert_eq!(x[0], 0.0);
        assert_eq!(f, 0.0);
    }

    #[test]
    fn generated_optimum_is_stationary() {
        let inst = gen_diag_quad(50, 3, 0.1).unwrap();
        let opt = inst.problem.known_opt().unwrap();
        let g = inst.problem.smooth().gradient(&opt.x);
        let dist = inst.problem.nonsmooth().subdiff_dist(&g, &opt.x).unwrap();
        assert!(dist <= 1e-12);
        assert!(
            opt.x.iter().any(|&v| v == 0.0),
            "expected some zeroed coordinates"
        );
    }

    #[test]
    fn rejects_nonpositive_curvature() {
        assert!(DiagQuadData::new(Vector::from_element(1, 0.0), Vector::zeros(1), 0.1).is_err());
    }
}
