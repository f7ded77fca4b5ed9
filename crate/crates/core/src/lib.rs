//! Completely positive maps between full matrix algebras.
//!
//! A map `φ: M_{d_in}(ℂ) → M_{d_out}(ℂ)` is stored through its Choi matrix
//! `[φ(E_ij)]` and, optionally, a list of Kraus factors with the convention
//!
//! ```text
//! φ(X) = Σ_j L_j* X L_j,    L_j of shape d_in × d_out.
//! ```
//!
//! On top of that representation the crate provides
//!
//! * [`numerics`]: Hermitian eigendecomposition, pseudo-inverses, range
//!   projections and kernels with explicit tolerances;
//! * [`cpmap`]: Choi/Kraus conversion, CP tests and classification;
//! * [`stinespring`]: minimal dilations, cyclic subspaces, domination and
//!   Radon–Nikodym derivatives;
//! * [`quasipure`]: the quasi-purity decision pipeline, with an exact pencil
//!   test for two Kraus factors and a brute-force grid oracle;
//! * [`completion`]: positive block completion and minimal CP completion by
//!   two independent constructions;
//! * [`equivalence`]: support projections, R-equivalence, the decomposition
//!   along `R`, rigidity of quasi-pure maps and the counterexample builder;
//! * [`sample`]: seeded generators for random instances.

pub mod completion;
pub mod cpmap;
pub mod equivalence;
mod error;
pub mod numerics;
pub mod quasipure;
pub mod sample;
pub mod stinespring;

pub use completion::{BlockCompletionProblem, NecessaryConditions, PartialCpMap};
pub use cpmap::{CpMap, EbForm, MapClass};
pub use equivalence::{
    Counterexample, DecompositionResult, EquivalenceContext, Hypothesis, RigidityVerdict,
};
pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, HermitianMatrix, Tolerance, C64};
pub use quasipure::{Method, QuasiPurityOptions, QuasiPurityVerdict, Status};
pub use stinespring::{RnDerivative, StinespringTriple};
