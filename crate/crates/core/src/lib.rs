//! Affine Cartesian codes `C_X(ρ)` used as batch codes, with buckets given by
//! the cosets of a subspace `V ⊆ F_q^μ`.
//!
//! * [`gf`]: finite fields and matrices over them.
//! * [`code`]: evaluation domains, polynomials and the code itself.
//! * [`recovery`]: axis-line recovery sets and Lagrange recovery.
//! * [`buckets`]: coset bucket configurations and merging.
//! * [`batch`]: the constructive query solver.
//! * [`validator`]: brute-force checks used to certify the solver.

pub mod batch;
pub mod buckets;
pub mod code;
pub mod gf;
pub mod recovery;
pub mod validator;

pub use batch::{BatchCode, BatchError, Query, QueryRecoverySet};
pub use buckets::{BucketConfig, BucketError, BucketId, Subspace};
pub use code::{CartesianCode, CodeError, EvaluationDomain, Point, Polynomial};
pub use gf::{Field, FieldElement, GfError, Matrix};
pub use recovery::{RecoveryDirection, RecoveryError, RecoverySetInstance};
pub use validator::{Mode, ValidateOptions, ValidationReport};
