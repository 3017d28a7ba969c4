//! Discrete distributional de Rham complexes on simplicial meshes.
//!
//! The crate is layered bottom-up:
//!
//! * [`mesh`] — oriented simplicial complexes relative to a subcomplex, exact Betti numbers,
//!   element patches and skeletons;
//! * [`polyforms`] — polynomial differential forms on one simplex in barycentric coordinates;
//! * [`assembly`] — broken spaces over strata, the operators `D`, `T` and `d`, Gram matrices;
//! * [`hilbert`] — harmonic spaces, Hodge decomposition and pseudoinverses of finite complexes;
//! * [`distrib`] — the complex families, regularizers and isomorphism checks built on top.
//!
//! Numerical code is generic over [`Scalar`] (`f32`, `f64`); the aliases below fix `f64`.

pub mod assembly;
pub mod distrib;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod mesh;
pub mod polyforms;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RelativePairF64 = mesh::RelativePair<f64>;
pub type BarycentricFormF64 = polyforms::BarycentricForm<f64>;
pub type SimplexGeometryF64 = polyforms::SimplexGeometry<f64>;
pub type BrokenSpaceF64 = assembly::BrokenSpace<f64>;
pub type LinearOpF64 = assembly::LinearOp<f64>;
pub type ComplexInstanceF64 = hilbert::ComplexInstance<f64>;
pub type ContextF64 = distrib::Context<f64>;

pub type RelativePairF32 = mesh::RelativePair<f32>;
pub type ContextF32 = distrib::Context<f32>;
