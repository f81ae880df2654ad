//! Exact character calculus for the parafermion cosets of the simple affine
//! sl(2) vertex algebras at negative admissible levels, and for their
//! infinite-order simple-current extensions.
//!
//! The crate is organised around an exact q-series engine ([`qseries`]) with
//! rational exponents and rational coefficients.  On top of it sit
//!
//! - [`minmod`]: Virasoro minimal model data (Kac table, conformal weights,
//!   characters, fusion, modular S-matrix),
//! - [`affine`]: admissible-level data and weight-graded sl(2) characters,
//!   spectral flow and Grothendieck fusion,
//! - [`coset`]: the parafermion coset modules, their exact characters and
//!   (Grothendieck) fusion ring,
//! - [`extension`]: the extended coset — lattice theta functions, the
//!   weight-one parts of the atypical characters, module enumeration, and
//!   all S/T modular data,
//! - [`modcheck`]: a numerical harness that verifies the modular
//!   transformation laws and the exact series identities at high precision.
//!
//! All series arithmetic is exact; floating point enters only through
//! [`precision`] when a finished series is evaluated at a point `tau` in the
//! upper half-plane.
//!
//! ```
//! use pfcoset_core::affine::Level;
//! use pfcoset_core::coset::{parse_coset_label, Coset, Route};
//! use pfcoset_core::qseries::{rat, rat_int};
//!
//! let level = Level::new(4, 3)?;                  // k = -2/3
//! let coset = Coset::new(level);
//! let vacuum = parse_coset_label(&level, "C[0;1]")?;
//! let ch = coset.character(&vacuum, &rat_int(4), Route::Primary)?;
//! // the expansion starts at q^{-c~/24} = q^{5/48} with coefficient 1
//! assert_eq!(ch.leading().unwrap().0, rat(5, 48));
//! assert_eq!(ch.coeff(&(rat_int(2) + rat(5, 48))), rat_int(1));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod affine;
pub mod coset;
pub mod extension;
pub mod fusion;
pub mod minmod;
pub mod modcheck;
pub mod precision;
pub mod qseries;

pub use affine::{weights, AffineKind, AffineLabel, Level, WeightedCharacter};
pub use coset::{Coset, CosetKind, CosetLabel};
pub use extension::{ExtLabel, ExtLattice, Extension};
pub use fusion::FusionElement;
pub use minmod::{KacLabel, MinimalModel};
pub use modcheck::{CheckKind, CheckParams, CheckReport};
pub use qseries::{eta, eta_inverse, QSeries, Rat, Tau};
