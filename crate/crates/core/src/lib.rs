//! Nonmonotone higher-order Taylor approximation (NHOTA) for composite
//! problems `min F(x) + h(x)` with smooth `F` and convex, possibly
//! nonsmooth `h`.
//!
//! Each outer step approximately minimizes a regularized `p`-th order Taylor
//! model of `F` plus `h`, accepting the candidate against a reference value
//! that is a running convex combination of past objective values rather than
//! the last one. `u = 1` recovers a monotone method.
//!
//! ```no_run
//! use nhota_core::{gen_phase_retrieval, nhota_run, PhaseParams, RunConfig};
//!
//! let inst = gen_phase_retrieval(PhaseParams::new(20, 200, 7)).unwrap();
//! let trace = nhota_run(&inst.problem, inst.x0.clone(), &RunConfig::default()).unwrap();
//! println!("{} after {} iterations", trace.status, trace.rows.len() - 1);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod driver;
pub mod error;
pub mod inner;
pub mod metrics;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod taylor;

pub use driver::{
    accept_test, nhota_run, try_step, update_reference, AcceptedStep, IterateTrace, RunConfig,
    RunFailure, Runner, Status, StepOutcome, TraceRow, USchedule,
};
pub use error::{NhotaError, Result};
pub use inner::{certify, solve_subproblem, InnerLimits, StepCertificate, SubproblemSolution};
pub use metrics::{
    kl_probe, kl_probe_series, rate_fit, remainder_check, stationarity, KlClass, RateFit,
    RemainderReport,
};
pub use problem::{CompositeProblem, KnownOptimum, Matrix, NonsmoothTerm, SmoothOracle, Vector};
pub use problems::{
    exact_solution_diag, gen_diag_quad, gen_phase_retrieval, DiagQuadData, DiagQuadInstance,
    PhaseParams, PhaseRetrievalData, PhaseRetrievalInstance,
};
pub use prox::{prox_l1, subdiff_dist_l1, L1Norm, ZeroTerm};
pub use taylor::{ModelCenter, Order};
