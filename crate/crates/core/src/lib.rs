//! Limiting-absorption toolkit for finite-dimensional self-adjoint operators.
//!
//! The crate works with a Hermitian operator `H0` on a state space and an
//! invertible rigging `F` into an auxiliary space. Around these it provides:
//!
//! * sandwiched resolvents `T_z(H) = F (H - z)^{-1} F*` and the coupling line
//!   `H_r = H0 + r F*F` ([`operator`]),
//! * numerical detection of the boundary value `T_{λ+i0}` along a geometric
//!   ladder of imaginary parts ([`probe`]),
//! * coupling resonance sets at a spectral point ([`resonance`]),
//! * the kernel of the homogeneous Lippmann–Schwinger operator
//!   `1 - r T_{λ+i0}(H0 + r F*JF) J` and bound-state extraction ([`ls`]),
//! * checks of the resolvent identities and of the identification of that
//!   kernel with `F`-images of shrinking spectral subspaces ([`verifier`]).
//!
//! Fixtures with controllable spectra live in [`models`].

pub mod error;
pub mod linalg;
pub mod matrix_io;
pub mod models;
pub mod operator;
pub mod probe;
pub mod resonance;
pub mod rng;
pub mod subspace;
pub mod ls;
pub mod verifier;

pub use error::{LapError, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use operator::{ComplexEnergy, DirectionOperator, HermitianOperator, Rigging, StorageKind};
pub use probe::{LapProbeResult, PointClass, Verdict, YLadder};
pub use resonance::ResonanceSet;
pub use subspace::SubspaceBasis;
pub use ls::LsProblem;
