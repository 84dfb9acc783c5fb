//! Lower bound on the anisotropic energy of planar three-phase conducting composites
//! (`k1 < k2`, `k3 = ∞`) and the laminates that attain it.
//!
//! The loading is `E0 = diag(1, r)` with `0 ≤ r ≤ 1`. All energies use the doubled
//! convention `W = λ1 + r²λ2` for an effective tensor `diag(λ1, λ2)`.

pub mod bounds;
pub mod error;
pub mod exec;
pub mod field;
pub mod gclosure;
pub mod laminate;
pub mod optim;
pub mod translation;
pub mod verify;

pub use error::{Error, Result};
