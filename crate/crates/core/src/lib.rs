//! Exact-arithmetic toolkit for semistable models of the projective line over
//! p-adic integer rings.
//!
//! Everything is computed either over the truncated ring `o/ϖʲ` (an unramified
//! extension of `Z/pʲ`) or over exact rationals; there is no floating point and
//! no lossy truncation anywhere. The crate is organized around:
//!
//! * [`ringlab`] — truncated-ring arithmetic and chain-ring linear algebra
//!   (Howell forms, Smith-style diagonalization, module invariants),
//! * [`bttree`] — the Bruhat–Tits tree of PGL₂ with its GL₂-action,
//! * [`models`] — blow-up models of P¹ as explicit chart atlases, with line
//!   bundles as transition cocycles,
//! * [`cech`] — a Čech cohomology engine over `o/ϖʲ` with degree cutoffs and a
//!   special-fiber cross-check oracle,
//! * [`liealg`] / [`dpalg`] — exact universal-enveloping-algebra arithmetic
//!   for gl₂ and its divided-power integral forms,
//! * [`diffops`] — twisted tangent sheaves, graded global sections, and the
//!   map from the divided-power algebra to global differential operators,
//! * [`congruence`] — congruence group schemes as explicit Hopf data,
//! * [`repx`] — Verma modules, the rank-one BGG sequence, and skyscraper
//!   localization checks at desk scale.
//!
//! All values are immutable after construction and all operations are pure
//! functions, so any fan-out over independent inputs is safe.

pub mod bttree;
pub mod cech;
pub mod congruence;
pub mod diffops;
pub mod dpalg;
pub mod error;
pub mod liealg;
pub mod models;
pub mod repx;
pub mod ringlab;

pub use error::CoreError;
pub use ringlab::{ModuleInvariants, RingElt, TruncRing};
