//! Seeded test problems.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` in a fixed
//! order, so instances are bit-identical across runs and platforms.

mod bundle;
mod diag_quad;
mod phase_retrieval;

pub use bundle::{read_bundle, write_bundle};
pub use diag_quad::{exact_solution_diag, gen_diag_quad, DiagQuad, DiagQuadData, DiagQuadInstance};
pub use phase_retrieval::{
    gen_phase_retrieval, PhaseParams, PhaseRetrieval, PhaseRetrievalData, PhaseRetrievalInstance,
    DEFAULT_A_VARIANCE,
};
