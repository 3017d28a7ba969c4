//! Polynomial differential forms on a single simplex.

pub mod checks;
pub mod form;
pub mod geometry;
pub mod spaces;

pub use checks::{
    check_geometric_decomposition, check_local_conditions, check_local_exactness, check_trace_surjectivity,
    LocalConditions,
};
pub use form::{BarycentricForm, Frame, Term, Terms};
pub use geometry::SimplexGeometry;
pub use spaces::{ElementSpace, Extension, ExtensionRule, Family, LocalTables};
