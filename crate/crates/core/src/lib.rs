//! First-order (DB) operator laboratory for divergence-form elliptic problems
//! `-div A ∇u = 0` on the periodic upper half-space `(0, ∞) × 𝕋ⁿ`, `n ∈ {1, 2}`.
//!
//! Operators act on the discrete curl-free space ℋ⁰ and are stored as dense
//! matrices in V-coordinates: a vector of length `2M` holding the nonzero Fourier
//! modes of the normal scalar `p⊥` followed by those of the tangential scalar `p∥`,
//! with `F = [p⊥; -ℛ p∥]`.

pub mod boundary;
pub mod coeff;
pub mod corpus;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod norms;
pub mod operator;
pub mod oracle;
pub mod sobolev;
pub mod solvers;

pub use boundary::{
    gamma_dn, gamma_minus, gamma_nd, key_lemma_check, rellich_constant, sgn_blocks, KeyLemmaReport,
    RellichConstants, SgnBlocks,
};
pub use coeff::{BlockClass, CoefficientField, FamilyKind, FamilyParams};
pub use error::{Error, Result};
pub use grid::{BoundaryField, GridSpec, ModeTable, Representation};
pub use linalg::{c64, CMat};
pub use norms::WhitneyParams;
pub use operator::{OperatorMatrix, SignMethod, Space, SpectralDecomposition};
pub use oracle::StripMesh;
pub use sobolev::{PsiSpec, QuadratureConfig};
pub use solvers::{SolutionHandle, SolutionKind, StripField};

/// Restrict dense kernels to one thread so results do not depend on the
/// machine; callers parallelize over independent items instead.
pub fn init_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}
