use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, NhotaError, Result};
use crate::problem::{CompositeProblem, Matrix, SmoothOracle, Vector};
use crate::prox::L1Norm;

/// Variance of the sensing vectors and of the ground truth.
pub const DEFAULT_A_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Standard deviation of the additive measurement noise.
    pub noise_scale: f64,
    pub lambda: f64,
    /// Variance of the entries of `aᵢ` and `z`.
    pub a_variance: f64,
}

impl PhaseParams {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            seed,
            noise_scale: 1.0,
            lambda: 1e-5,
            a_variance: DEFAULT_A_VARIANCE,
        }
    }

    pub fn noise_scale(mut self, s: f64) -> Self {
        self.noise_scale = s;
        self
    }

    pub fn lambda(mut self, l: f64) -> Self {
        self.lambda = l;
        self
    }
}

/// Measurements `yᵢ = (aᵢᵀz)² + nᵢ` together with everything needed to
/// replay a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRetrievalData {
    pub params: PhaseParams,
    /// `m × n`, row `i` is `aᵢ`.
    pub a: Matrix,
    pub y: Vector,
    pub z: Vector,
    pub noise: Vector,
    pub x0: Vector,
}

impl PhaseRetrievalData {
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }
}

/// `F(x) = (1/2m)·Σ (yᵢ − (aᵢᵀx)²)²`.
#[derive(Debug, Clone)]
pub struct PhaseRetrieval {
    data: Arc<PhaseRetrievalData>,
    order: usize,
}

impl PhaseRetrieval {
    pub fn new(data: Arc<PhaseRetrievalData>) -> Self {
        Self { data, order: 2 }
    }

    /// Oracle that refuses Hessian requests.
    pub fn first_order(data: Arc<PhaseRetrievalData>) -> Self {
        Self { data, order: 1 }
    }

    pub fn data(&self) -> &PhaseRetrievalData {
        &self.data
    }

    fn projections(&self, x: &Vector) -> Vector {
        &self.data.a * x
    }
}

impl SmoothOracle for PhaseRetrieval {
    fn dim(&self) -> usize {
        self.data.n()
    }

    fn order(&self) -> usize {
        self.order
    }

    fn value(&self, x: &Vector) -> f64 {
        let s = self.projections(x);
        let sum: f64 = s
            .iter()
            .zip(self.data.y.iter())
            .map(|(si, yi)| {
                let r = yi - si * si;
                r * r
            })
            .sum();
        sum / (2.0 * self.data.m() as f64)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        // (2/m)·Σ ((aᵢᵀx)² − yᵢ)(aᵢᵀx)·aᵢ
        let s = self.projections(x);
        let scale = 2.0 / self.data.m() as f64;
        let w = s.zip_map(&self.data.y, |si, yi| scale * (si * si - yi) * si);
        self.data.a.tr_mul(&w)
    }

    fn hessian(&self, x: &Vector) -> Result<Matrix> {
        if self.order < 2 {
            return Err(NhotaError::Capability(
                "phase-retrieval oracle configured as first order".into(),
            ));
        }
        check_dim(self.dim(), x.len())?;
        // (2/m)·Σ (3(aᵢᵀx)² − yᵢ)·aᵢaᵢᵀ
        let s = self.projections(x);
        let scale = 2.0 / self.data.m() as f64;
        let w = s.zip_map(&self.data.y, |si, yi| scale * (3.0 * si * si - yi));
        let mut weighted = self.data.a.clone();
        for (mut row, wi) in weighted.row_iter_mut().zip(w.iter()) {
            row *= *wi;
        }
        let mut h = self.data.a.tr_mul(&weighted);
        let n = h.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                h[(i, j)] = h[(j, i)];
            }
        }
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct PhaseRetrievalInstance {
    pub problem: CompositeProblem,
    pub data: Arc<PhaseRetrievalData>,
    pub x0: Vector,
}

/// Sample a phase-retrieval instance with `h = λ‖·‖₁`.
///
/// Stream order: `A` row by row, then `z`, then the noise, then `x₀`. Entries
/// of `A` and `z` are `N(0, a_variance)`, noise is `noise_scale·N(0, 1)` and
/// `x₀` is `N(0, 1)`.
pub fn gen_phase_retrieval(params: PhaseParams) -> Result<PhaseRetrievalInstance> {
    let PhaseParams {
        n,
        m,
        seed,
        noise_scale,
        lambda: _,
        a_variance,
    } = params;
    if n == 0 || m == 0 {
        return Err(NhotaError::InvalidArgument(
            "n and m must be positive".into(),
        ));
    }
    if !(noise_scale >= 0.0) || !(a_variance > 0.0) {
        return Err(NhotaError::InvalidArgument(
            "noise_scale must be nonnegative and a_variance positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let sd = a_variance.sqrt();

    let mut a = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = sd * normal();
        }
    }
    let z = Vector::from_fn(n, |_, _| sd * normal());
    let noise = Vector::from_fn(m, |_, _| noise_scale * normal());
    let x0 = Vector::from_fn(n, |_, _| normal());
    let az = &a * &z;
    let y = az.zip_map(&noise, |s, e| s * s + e);

    let data = Arc::new(PhaseRetrievalData {
        params,
        a,
        y,
        z,
        noise,
        x0: x0.clone(),
    });
    let problem = phase_problem(data.clone())?;
    Ok(PhaseRetrievalInstance { problem, data, x0 })
}

/// Wrap existing data (e.g. an imported bundle) as a composite problem.
pub(crate) fn phase_problem(data: Arc<PhaseRetrievalData>) -> Result<CompositeProblem> {
    let h = L1Norm::new(data.params.lambda)?;
    Ok(CompositeProblem::new(
        Arc::new(PhaseRetrieval::new(data)),
        Arc::new(h),
    ))
}

impl PhaseRetrievalData {
    pub fn problem(self: &Arc<Self>) -> Result<CompositeProblem> {
        phase_problem(self.clone())
    }
}
