//! Nonmonotone outer loop.
//!
//! Each iteration solves the regularized Taylor subproblem, doubling `M` until
//! the candidate satisfies `f(y) ≤ R_k − M̃/(p+1)!·‖y − x_k‖^{p+1}`, then relaxes
//! `M ← max(M/2, M₀)` and moves the reference value
//! `R_{k+1} = (1 − u)·R_k + u·f(x_{k+1})`.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::error::{check_dim, NhotaError, Result};
use crate::inner::{solve_subproblem, InnerLimits, StepCertificate, SubproblemSolution};
use crate::problem::{ensure_finite_scalar, CompositeProblem, Vector};
use crate::taylor::{regularizer, ModelCenter, Order};

/// Stationarity below which a point is reported as exactly stationary.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Residual below which a degenerate (zero) step marks the center stationary.
pub const DEGENERATE_RESIDUAL_TOL: f64 = 1e-10;

/// Choice of `u_{k+1}` in the reference update.
#[derive(Clone)]
pub enum USchedule {
    Constant(f64),
    /// Called with `k + 1`.
    PerIteration(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl USchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            USchedule::Constant(u) => *u,
            USchedule::PerIteration(f) => f(k),
        }
    }
}

impl fmt::Debug for USchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            USchedule::Constant(u) => write!(f, "Constant({u})"),
            USchedule::PerIteration(_) => f.write_str("PerIteration(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub order: Order,
    pub m0: f64,
    /// `M̃` in the acceptance test.
    pub m_tilde: f64,
    pub theta: f64,
    pub u: USchedule,
    pub u_min: f64,
    pub max_outer: usize,
    /// Stop once `f(x_k) ≤ stop_f`.
    pub stop_f: f64,
    /// Stop once the stationarity measure is `≤ stop_stat`.
    pub stop_stat: f64,
    /// Seed of the problem instance, carried for bookkeeping.
    pub seed: u64,
    pub inner: InnerLimits,
    /// Maximum number of `M` doublings per outer iteration.
    pub max_doublings: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            order: Order::Second,
            m0: 1e-2,
            m_tilde: 1e-2,
            theta: 0.1,
            u: USchedule::Constant(0.5),
            u_min: 1e-3,
            max_outer: 1000,
            stop_f: 1e-3,
            stop_stat: 1e-3,
            seed: 7,
            inner: InnerLimits::default(),
            max_doublings: 60,
        }
    }
}

impl RunConfig {
    /// Disable the `f` and stationarity stopping rules.
    pub fn without_stopping(mut self) -> Self {
        self.stop_f = f64::NEG_INFINITY;
        self.stop_stat = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(NhotaError::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("M0", self.m0)?;
        positive("Mtilde", self.m_tilde)?;
        positive("theta", self.theta)?;
        positive("step_guess", self.inner.step_guess)?;
        if !(self.u_min > 0.0 && self.u_min < 1.0) {
            return Err(NhotaError::InvalidArgument(format!(
                "u_min must lie in (0, 1), got {}",
                self.u_min
            )));
        }
        if let USchedule::Constant(u) = self.u {
            self.check_u(u)?;
        }
        if self.inner.max_inner == 0 {
            return Err(NhotaError::InvalidArgument(
                "max_inner must be positive".into(),
            ));
        }
        Ok(())
    }

    fn check_u(&self, u: f64) -> Result<f64> {
        if u > self.u_min && u <= 1.0 {
            Ok(u)
        } else {
            Err(NhotaError::InvalidArgument(format!(
                "u = {u} outside ({}, 1]",
                self.u_min
            )))
        }
    }
}

/// `(1 − u)·R + u·f_new`.
pub fn update_reference(r: f64, f_new: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(NhotaError::InvalidArgument(format!(
            "u = {u} outside (0, 1]"
        )));
    }
    if u == 1.0 {
        return Ok(f_new);
    }
    Ok((1.0 - u) * r + u * f_new)
}

/// `f_cand ≤ R − M̃/(p+1)!·step_norm^{p+1}`.
pub fn accept_test(r: f64, f_cand: f64, step_norm: f64, m_tilde: f64, order: Order) -> bool {
    f_cand <= r - regularizer(m_tilde, step_norm, order)
}

/// Signature of the acceptance rule used by [`Runner`].
pub type AcceptRule = dyn Fn(f64, f64, f64, f64, Order) -> bool + Send + Sync;
type RowObserver<'a> = dyn FnMut(&TraceRow) + 'a;
type StepObserver<'a> = dyn FnMut(AcceptedStep<'_>) + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Stationarity hit [`STATIONARY_TOL`], or a zero step certified it.
    Stationary,
    MaxIters,
    /// `stop_f` or `stop_stat` fired.
    StoppedByCriterion,
    /// The model decrease fell below the resolution of `f` while the
    /// acceptance test still failed; no further progress is representable.
    Stalled,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Stationary => "stationary",
            Status::MaxIters => "max_iters",
            Status::StoppedByCriterion => "stopped_by_criterion",
            Status::Stalled => "stalled",
        })
    }
}

/// State at iterate `k` and the step that produced it. Row 0 has a zero step
/// and `m = M₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub f: f64,
    pub r: f64,
    /// `M` at acceptance of the step into `x_k`.
    pub m: f64,
    /// `‖x_k − x_{k−1}‖`.
    pub step_norm: f64,
    pub stationarity: f64,
    /// `stationarity` is an upper bound rather than `dist(0, ∂f(x_k))`.
    pub stationarity_is_bound: bool,
    pub inner_iters: usize,
    /// Number of `M` doublings `i_k`.
    pub backtracks: usize,
    pub wall_millis: f64,
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub rows: Vec<TraceRow>,
    pub status: Status,
    pub order: Order,
    pub m_tilde: f64,
    pub u_min: f64,
    pub x_final: Vector,
    /// Certificate of each accepted step, aligned with `rows[1..]`.
    pub certificates: Vec<StepCertificate>,
}

impl IterateTrace {
    /// Largest `M` used at acceptance.
    pub fn m_max(&self) -> f64 {
        self.rows.iter().map(|r| r.m).fold(0.0, f64::max)
    }

    pub fn f_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f).collect()
    }

    pub fn stationarity(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.stationarity).collect()
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace always has the initial row")
    }

    /// Iterations at which the reference-value invariants fail, with relative
    /// slack `rel_slack`: `R_k ≥ f(x_k)`, `R` nonincreasing, and
    /// `R_{k+1} ≤ R_k − u_min·M̃/(p+1)!·‖x_{k+1} − x_k‖^{p+1}`.
    pub fn reference_violations(&self, rel_slack: f64) -> Vec<String> {
        reference_violations(&self.rows, self.u_min, self.m_tilde, self.order, rel_slack)
    }
}

/// See [`IterateTrace::reference_violations`].
pub fn reference_violations(
    rows: &[TraceRow],
    u_min: f64,
    m_tilde: f64,
    order: Order,
    rel_slack: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let slack = rel_slack * row.r.abs().max(1.0);
        if row.r < row.f - slack {
            out.push(format!("k={}: R={:e} < f={:e}", row.k, row.r, row.f));
        }
        if i == 0 {
            continue;
        }
        let prev = &rows[i - 1];
        let slack = rel_slack * prev.r.abs().max(1.0);
        if row.r > prev.r + slack {
            out.push(format!(
                "k={}: R increased {:e} -> {:e}",
                row.k, prev.r, row.r
            ));
        }
        let bound = prev.r - u_min * regularizer(m_tilde, row.step_norm, order);
        if row.r > bound + slack {
            out.push(format!(
                "k={}: R={:e} exceeds descent bound {:e}",
                row.k, row.r, bound
            ));
        }
    }
    out
}

/// A run that aborted, with the iterate where it happened.
#[derive(Debug, Clone, Error)]
#[error("run failed at iterate {}: {source}", trace.rows.len() - 1)]
pub struct RunFailure {
    #[source]
    pub source: NhotaError,
    pub x: Vector,
    pub trace: IterateTrace,
}

/// Outcome of one backtracking search on `M`.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted {
        y: Vector,
        f_y: f64,
        m_used: f64,
        backtracks: usize,
        inner_iters: usize,
        solution: SubproblemSolution,
    },
    /// The step collapsed onto the center with a residual below
    /// [`DEGENERATE_RESIDUAL_TOL`].
    Stationary {
        inner_iters: usize,
    },
    Stalled {
        inner_iters: usize,
    },
}

/// Solve the subproblem at increasing `M = 2^i·m_in` until the acceptance
/// rule holds.
pub fn try_step(
    problem: &CompositeProblem,
    center: &ModelCenter,
    f_center: f64,
    r: f64,
    m_in: f64,
    config: &RunConfig,
) -> Result<StepOutcome> {
    try_step_with(problem, center, f_center, r, m_in, config, &accept_test, 0)
}

#[allow(clippy::too_many_arguments)]
fn try_step_with(
    problem: &CompositeProblem,
    center: &ModelCenter,
    f_center: f64,
    r: f64,
    m_in: f64,
    config: &RunConfig,
    accept: &AcceptRule,
    iteration: usize,
) -> Result<StepOutcome> {
    let order = center.order();
    let floor = 16.0 * f64::EPSILON * f_center.abs().max(1.0);
    let mut m = m_in;
    let mut warm: Option<Vector> = None;
    let mut inner_iters = 0;
    for i in 0..=config.max_doublings {
        match solve_subproblem(
            problem,
            center,
            m,
            config.theta,
            &config.inner,
            warm.as_ref(),
        ) {
            Ok(sol) => {
                inner_iters += sol.certificate.inner_iters;
                if sol.degenerate {
                    if sol.certificate.residual <= DEGENERATE_RESIDUAL_TOL {
                        return Ok(StepOutcome::Stationary { inner_iters });
                    }
                } else {
                    let f_y = problem.value(&sol.y)?;
                    if f_y.is_nan() {
                        return Err(NhotaError::OracleFailure { what: "f" });
                    }
                    let step_norm = (&sol.y - center.x()).norm();
                    if accept(r, f_y, step_norm, config.m_tilde, order) {
                        return Ok(StepOutcome::Accepted {
                            y: sol.y.clone(),
                            f_y,
                            m_used: m,
                            backtracks: i,
                            inner_iters,
                            solution: sol,
                        });
                    }
                    if sol.model_decrease <= floor {
                        return Ok(StepOutcome::Stalled { inner_iters });
                    }
                    warm = Some(sol.y);
                }
            }
            Err(NhotaError::InnerFailure {
                iters,
                model_decrease,
                ..
            }) => {
                inner_iters += iters;
                // Larger M only shrinks the attainable decrease.
                if model_decrease <= floor {
                    return Ok(StepOutcome::Stalled { inner_iters });
                }
            }
            Err(e) => return Err(e),
        }
        m *= 2.0;
    }
    Err(NhotaError::LineSearchFailure {
        iteration,
        doublings: config.max_doublings,
        m,
    })
}

/// Measure stationarity at `x` given `∇F(x)`. Falls back to the prox-gradient
/// residual `‖x − prox_h(x − ∇F(x))‖` (flagged as a bound) when `h` cannot
/// measure its subdifferential.
fn measure_stationarity(problem: &CompositeProblem, x: &Vector, g: &Vector) -> Result<(f64, bool)> {
    match problem.nonsmooth().subdiff_dist(g, x) {
        Ok(d) => Ok((d, false)),
        Err(NhotaError::Capability(_)) => {
            let p = problem.nonsmooth().prox(&(x - g), 1.0)?;
            Ok(((x - p).norm(), true))
        }
        Err(e) => Err(e),
    }
}

/// An accepted step as seen by [`Runner::step_observer`].
#[derive(Debug, Clone, Copy)]
pub struct AcceptedStep<'s> {
    /// Index of the new iterate.
    pub k: usize,
    pub center: &'s Vector,
    pub y: &'s Vector,
    pub m: f64,
    pub witness: &'s Vector,
    pub certificate: &'s StepCertificate,
}

/// Configurable front end for the outer loop.
pub struct Runner<'a> {
    problem: &'a CompositeProblem,
    config: RunConfig,
    accept: Box<AcceptRule>,
    observer: Option<Box<RowObserver<'a>>>,
    step_observer: Option<Box<StepObserver<'a>>>,
}

impl<'a> Runner<'a> {
    pub fn new(problem: &'a CompositeProblem, config: RunConfig) -> Self {
        Self {
            problem,
            config,
            accept: Box::new(accept_test),
            observer: None,
            step_observer: None,
        }
    }

    /// Called with every row as soon as it is recorded.
    pub fn observer(mut self, f: impl FnMut(&TraceRow) + 'a) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    /// Called with every accepted step before the center moves.
    pub fn step_observer(mut self, f: impl FnMut(AcceptedStep<'_>) + 'a) -> Self {
        self.step_observer = Some(Box::new(f));
        self
    }

    /// Replace the acceptance rule. Intended for fault injection in
    /// self-tests of the invariant checks.
    pub fn acceptance_rule(
        mut self,
        rule: impl Fn(f64, f64, f64, f64, Order) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.accept = Box::new(rule);
        self
    }

    pub fn run(mut self, x0: Vector) -> std::result::Result<IterateTrace, RunFailure> {
        let config = self.config.clone();
        let order = config.order;
        let mut trace = IterateTrace {
            rows: Vec::new(),
            status: Status::MaxIters,
            order,
            m_tilde: config.m_tilde,
            u_min: config.u_min,
            x_final: x0.clone(),
            certificates: Vec::new(),
        };
        let fail = |source: NhotaError, x: &Vector, trace: &IterateTrace| RunFailure {
            source,
            x: x.clone(),
            trace: trace.clone(),
        };
        if let Err(e) = config
            .validate()
            .and_then(|_| check_dim(self.problem.dim(), x0.len()))
        {
            return Err(fail(e, &x0, &trace));
        }

        let start = Instant::now();
        let problem = self.problem;
        let mut x = x0;
        let mut f_x = match problem
            .value(&x)
            .and_then(|f| ensure_finite_scalar(f, "f(x0)"))
        {
            Ok(f) => f,
            Err(e) => return Err(fail(e, &x, &trace)),
        };
        let mut center = match ModelCenter::new(problem.smooth(), x.clone(), order) {
            Ok(c) => c,
            Err(e) => return Err(fail(e, &x, &trace)),
        };
        let mut r = f_x;
        let mut m = config.m0;
        let (mut stat, mut stat_bound) = match measure_stationarity(problem, &x, center.gx()) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, &x, &trace)),
        };

        let mut row = TraceRow {
            k: 0,
            f: f_x,
            r,
            m,
            step_norm: 0.0,
            stationarity: stat,
            stationarity_is_bound: stat_bound,
            inner_iters: 0,
            backtracks: 0,
            wall_millis: start.elapsed().as_secs_f64() * 1e3,
        };
        let mut k = 0;
        loop {
            trace.rows.push(row);
            if let Some(obs) = self.observer.as_mut() {
                obs(&row);
            }
            if stat <= STATIONARY_TOL && !stat_bound {
                trace.status = Status::Stationary;
                break;
            }
            if f_x <= config.stop_f || stat <= config.stop_stat {
                trace.status = Status::StoppedByCriterion;
                break;
            }
            if k >= config.max_outer {
                trace.status = Status::MaxIters;
                break;
            }

            let outcome = match try_step_with(
                problem,
                &center,
                f_x,
                r,
                m,
                &config,
                self.accept.as_ref(),
                k,
            ) {
                Ok(o) => o,
                Err(e) => return Err(fail(e, &x, &trace)),
            };
            let (y, f_y, m_used, backtracks, inner_iters, solution) = match outcome {
                StepOutcome::Accepted {
                    y,
                    f_y,
                    m_used,
                    backtracks,
                    inner_iters,
                    solution,
                } => (y, f_y, m_used, backtracks, inner_iters, solution),
                StepOutcome::Stationary { .. } => {
                    trace.status = Status::Stationary;
                    break;
                }
                StepOutcome::Stalled { .. } => {
                    trace.status = Status::Stalled;
                    break;
                }
            };

            let step_norm = (&y - &x).norm();
            if let Some(obs) = self.step_observer.as_mut() {
                obs(AcceptedStep {
                    k: k + 1,
                    center: &x,
                    y: &y,
                    m: m_used,
                    witness: &solution.witness,
                    certificate: &solution.certificate,
                });
            }
            let u = match config.check_u(config.u.at(k + 1)) {
                Ok(u) => u,
                Err(e) => return Err(fail(e, &x, &trace)),
            };
            r = match update_reference(r, f_y, u) {
                Ok(r) => r,
                Err(e) => return Err(fail(e, &x, &trace)),
            };
            m = (m_used / 2.0).max(config.m0);
            center = match ModelCenter::new(problem.smooth(), y.clone(), order) {
                Ok(c) => c,
                Err(e) => return Err(fail(e, &y, &trace)),
            };
            (stat, stat_bound) = match problem.nonsmooth().subdiff_dist(center.gx(), &y) {
                Ok(d) => (d, false),
                // ‖∇F(y) + p‖ with p ∈ ∂h(y) from the prox step bounds dist(0, ∂f(y)).
                Err(_) => ((center.gx() + &solution.witness).norm(), true),
            };
            trace.certificates.push(solution.certificate);
            x = y;
            f_x = f_y;
            k += 1;
            row = TraceRow {
                k,
                f: f_x,
                r,
                m: m_used,
                step_norm,
                stationarity: stat,
                stationarity_is_bound: stat_bound,
                inner_iters,
                backtracks,
                wall_millis: start.elapsed().as_secs_f64() * 1e3,
            };
        }
        trace.x_final = x;
        Ok(trace)
    }
}

/// Run the outer loop from `x0` with the standard acceptance rule.
pub fn nhota_run(
    problem: &CompositeProblem,
    x0: Vector,
    config: &RunConfig,
) -> std::result::Result<IterateTrace, RunFailure> {
    Runner::new(problem, config.clone()).run(x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{exact_solution_diag, gen_diag_quad, DiagQuad, DiagQuadData};
    use crate::prox::ZeroTerm;

    fn quad_1d(d: f64, c: f64) -> CompositeProblem {
        let data =
            DiagQuadData::new(Vector::from_element(1, d), Vector::from_element(1, c), 0.0).unwrap();
        CompositeProblem::new(Arc::new(DiagQuad::new(Arc::new(data))), Arc::new(ZeroTerm))
    }

    #[test]
    fn reference_update_examples() {
        assert_eq!(update_reference(10.0, 6.0, 0.25).unwrap(), 9.0);
        assert_eq!(update_reference(1e300, 0.1, 1.0).unwrap(), 0.1);
        for u in [0.01, 0.3, 0.77, 1.0] {
            assert_eq!(update_reference(5.0, 5.0, u).unwrap(), 5.0);
        }
        assert!(update_reference(1.0, 0.0, 0.0).is_err());
        assert!(update_reference(1.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn acceptance_examples() {
        assert!(accept_test(10.0, 9.0, 1.0, 6.0, Order::Second));
        assert!(!accept_test(10.0, 9.5, 1.0, 6.0, Order::Second));
        assert!(accept_test(10.0, 10.0, 0.0, 6.0, Order::Second));
        assert!(!accept_test(10.0, 10.0 + 1e-12, 0.0, 6.0, Order::Second));
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = [
            RunConfig {
                m0: 0.0,
                ..Default::default()
            },
            RunConfig {
                m_tilde: -1.0,
                ..Default::default()
            },
            RunConfig {
                theta: 0.0,
                ..Default::default()
            },
            RunConfig {
                u_min: 1.0,
                ..Default::default()
            },
            RunConfig {
                u: USchedule::Constant(1e-4),
                ..Default::default()
            },
            RunConfig {
                u: USchedule::Constant(1.1),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn stationary_start_terminates_immediately() {
        let inst = gen_diag_quad(20, 4, 0.3).unwrap();
        let x_star = inst.problem.known_opt().unwrap().x.clone();
        let trace = nhota_run(
            &inst.problem,
            x_star,
            &RunConfig::default().without_stopping(),
        )
        .unwrap();
        assert_eq!(trace.status, Status::Stationary);
        assert_eq!(trace.rows.len(), 1);
    }

    #[test]
    fn over_regularized_step_accepted_first_trial() {
        let problem = quad_1d(2.0, 1.0);
        let center = ModelCenter::new(problem.smooth(), Vector::zeros(1), Order::Second).unwrap();
        let f0 = problem.value(center.x()).unwrap();
        let out = try_step(&problem, &center, f0, f0, 1e6, &RunConfig::default()).unwrap();
        match out {
            StepOutcome::Accepted {
                y,
                f_y,
                backtracks,
                m_used,
                ..
            } => {
                assert_eq!(backtracks, 0);
                assert_eq!(m_used, 1e6);
                assert!(y[0] > 0.0 && y[0] < 0.1);
                assert!(f_y < f0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stationary_center_yields_stationary_outcome() {
        let problem = quad_1d(2.0, 1.0);
        let center = ModelCenter::new(
            problem.smooth(),
            Vector::from_element(1, 1.0),
            Order::Second,
        )
        .unwrap();
        let out = try_step(&problem, &center, 0.0, 0.0, 1.0, &RunConfig::default()).unwrap();
        assert!(matches!(out, StepOutcome::Stationary { .. }), "{out:?}");
    }

    #[test]
    fn small_initial_regularization_backtracks() {
        let inst = gen_diag_quad(50, 1, 0.1).unwrap();
        // The second-order model of a quadratic is exact, so only p = 1 sees
        // curvature beyond the regularization.
        let config = RunConfig {
            order: Order::First,
            m0: 1e-3,
            ..Default::default()
        };
        let trace = nhota_run(&inst.problem, inst.x0.clone(), &config).unwrap();
        assert!(trace.rows.iter().any(|r| r.backtracks >= 1));
        assert!(trace.m_max() > 1e-3);
    }

    #[test]
    fn converges_on_diagonal_quadratic() {
        let inst = gen_diag_quad(50, 2, 0.1).unwrap();
        let (_, f_star) = exact_solution_diag(&inst.data);
        let config = RunConfig {
            max_outer: 50,
            ..Default::default()
        }
        .without_stopping();
        let trace = nhota_run(&inst.problem, inst.x0.clone(), &config).unwrap();
        assert!(
            trace.last().f - f_star <= 1e-8,
            "gap {}",
            trace.last().f - f_star
        );
        let f0 = trace.rows[0].f;
        assert!(trace.rows.iter().all(|r| r.f <= f0));
        assert!(trace.reference_violations(1e-9).is_empty());
        assert_eq!(trace.certificates.len(), trace.rows.len() - 1);
        assert!(trace.certificates.iter().all(|c| c.is_valid()));
    }

    #[test]
    fn full_weight_is_monotone() {
        for order in [Order::First, Order::Second] {
            let inst = gen_diag_quad(30, 5, 0.2).unwrap();
            let config = RunConfig {
                order,
                u: USchedule::Constant(1.0),
                max_outer: 200,
                ..Default::default()
            };
            let trace = nhota_run(&inst.problem, inst.x0.clone(), &config).unwrap();
            for w in trace.rows.windows(2) {
                assert!(w[1].f <= w[0].f);
            }
            assert!(trace.rows.iter().all(|r| r.r == r.f));
        }
    }

    #[test]
    fn observers_see_every_row_and_step() {
        let inst = gen_diag_quad(10, 6, 0.1).unwrap();
        let mut rows = Vec::new();
        let mut steps = Vec::new();
        let trace = Runner::new(&inst.problem, RunConfig::default())
            .observer(|r| rows.push(*r))
            .step_observer(|s| steps.push((s.k, (s.y - s.center).norm())))
            .run(inst.x0.clone())
            .unwrap();
        assert_eq!(rows, trace.rows);
        assert_eq!(steps.len(), trace.rows.len() - 1);
        for (k, norm) in steps {
            assert_eq!(trace.rows[k].step_norm, norm);
        }
    }

    #[test]
    fn violation_checker_flags_broken_rows() {
        let row = |k, f, r, step_norm| TraceRow {
            k,
            f,
            r,
            m: 1.0,
            step_norm,
            stationarity: 1.0,
            stationarity_is_bound: false,
            inner_iters: 0,
            backtracks: 0,
            wall_millis: 0.0,
        };
        let ok = [row(0, 10.0, 10.0, 0.0), row(1, 5.0, 7.5, 1.0)];
        assert!(reference_violations(&ok, 0.5, 6.0, Order::Second, 1e-9).is_empty());
        let below = [row(0, 10.0, 10.0, 0.0), row(1, 9.0, 8.0, 0.0)];
        assert_eq!(
            reference_violations(&below, 0.5, 6.0, Order::Second, 1e-9).len(),
            1
        );
        let rising = [row(0, 10.0, 10.0, 0.0), row(1, 9.0, 11.0, 0.0)];
        assert_eq!(
            reference_violations(&rising, 0.5, 6.0, Order::Second, 1e-9).len(),
            2
        );
        // 9.9 > 10 − 0.5·6/6·1³
        let shallow = [row(0, 10.0, 10.0, 0.0), row(1, 9.0, 9.9, 1.0)];
        assert_eq!(
            reference_violations(&shallow, 0.5, 6.0, Order::Second, 1e-9).len(),
            1
        );
    }

    #[test]
    fn bad_inputs_fail_with_trace() {
        let inst = gen_diag_quad(5, 1, 0.1).unwrap();
        let err = nhota_run(&inst.problem, Vector::zeros(4), &RunConfig::default()).unwrap_err();
        assert!(matches!(err.source, NhotaError::DimensionMismatch { .. }));
        assert!(err.trace.rows.is_empty());

        let config = RunConfig {
            u: USchedule::PerIteration(Arc::new(|k| if k < 2 { 0.5 } else { 2.0 })),
            ..Default::default()
        }
        .without_stopping();
        let err = nhota_run(&inst.problem, inst.x0.clone(), &config).unwrap_err();
        assert!(matches!(err.source, NhotaError::InvalidArgument(_)));
        assert_eq!(err.trace.rows.len(), 2);
    }

    #[test]
    fn status_names() {
        assert_eq!(Status::Stationary.to_string(), "stationary");
        assert_eq!(Status::MaxIters.to_string(), "max_iters");
        assert_eq!(
            Status::StoppedByCriterion.to_string(),
            "stopped_by_criterion"
        );
        assert_eq!(Status::Stalled.to_string(), "stalled");
    }
}
