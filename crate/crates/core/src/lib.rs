//! Finite-dimensional laboratory for the geometry of tensor-product norms.
//!
//! The crate computes injective and projective tensor norms with
//! re-checkable certificates, estimates octahedrality defects of finite
//! families of unit vectors or tensors, builds the constructive witnesses
//! that force those defects towards 2 (shift, interval compression,
//! rank-one, and ⊕₁-extension), and produces LP-based cut-cone certificates
//! of non-embeddability into L₁ that cap defects from above.
//!
//! Everything is deterministic: sampling runs on seeded counter-based
//! streams and all parallel reductions are order-independent, so results
//! are identical regardless of thread count.

pub mod embeddability;
pub mod error;
pub mod lp;
pub mod mat;
pub mod octahedral;
pub mod rng;
pub mod spaces;
pub mod tensor_norms;
pub mod textio;
pub mod witnesses;

pub use error::Error;
pub use mat::Mat;
pub use spaces::NormedSpace;
pub use tensor_norms::{NormCertificate, Tensor};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
