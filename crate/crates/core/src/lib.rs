//! Uniform sampling of bipartite quantum states by hit-and-run, and volume
//! ratios of the states that pass common separability criteria.
//!
//! The pieces, bottom up:
//!
//! - [`basis`]: orthonormal generalized Gell-Mann bases and their products;
//! - [`states`]: state families as affine coordinate spaces, membership,
//!   partial trace and partial transpose;
//! - [`sampler`]: the hit-and-run chain;
//! - [`criteria`]: PPT, reduction, majorization and Rényi-entropy checks;
//! - [`estimator`]: multi-chain ratio estimates with standard errors;
//! - [`slice`]: the exact Bell-diagonal line scan.

pub mod basis;
pub mod criteria;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod sampler;
pub mod slice;
pub mod states;

pub use basis::{build_generator_basis, build_product_basis, GeneratorBasis, ProductBasis};
pub use criteria::{
    check_majorization, check_ppt, check_reduction, check_renyi, evaluate_all, renyi_entropy,
    Alpha, CriterionVerdict, Verdict,
};
pub use error::{Error, Result};
pub use estimator::{
    merge, run_chain, run_experiment, Checkpoint, Criterion, Experiment, ExperimentConfig,
    RatioEstimate,
};
pub use linalg::CMatrix;
pub use sampler::{HrChain, HrConfig};
pub use states::{
    partial_trace, partial_transpose, BlochVector, DensityMatrix, FamilyKind, StateFamily,
    Subsystem, EPS_PSD,
};
