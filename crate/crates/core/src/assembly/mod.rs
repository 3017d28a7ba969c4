//! Broken spaces over strata of a mesh, the operators `D`, `T` and the graded
//! distributional derivative `d`, mesh-weighted Gram matrices and kernel subspaces.
//!
//! A broken space is a list of components `(stratum s, degree q)`, each the direct
//! sum of `Λ^q(C)` over the unmarked `s`-simplices `C`. Components are ordered by
//! descending stratum, simplices lexicographically within a stratum.

mod assembler;
mod export;
mod operator;

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Whitener;
use crate::mesh::SimplexId;
use crate::scalar::Scalar;

pub use assembler::{metric_kernel, Assembler, Which, LEAK_TOL};
pub use export::{parse_sparse, read_sparse, sparse_text, write_sparse, SPARSE_DROP_TOL};
pub use operator::{LinearOp, INCLUSION_TOL};

/// Inner product on broken spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `Σ_C h_C^{n - dim C} ⟨ω_C, η_C⟩_{L²}`.
    #[default]
    Weighted,
    /// Plain sum of the L² products.
    Unweighted,
}

/// `Λ^degree_{-1}(𝒯^stratum)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Component {
    pub stratum: usize,
    pub degree: usize,
}

impl Component {
    pub fn new(stratum: usize, degree: usize) -> Self {
        Self { stratum, degree }
    }

    pub fn is_valid(&self) -> bool {
        self.degree <= self.stratum
    }
}

/// Components of `Λ^k_{-b}(𝒯^m) = ⊕_{j<b} Λ^{k-j}_{-1}(𝒯^{m-j})` that exist.
pub fn lambda_components(m: usize, k: usize, b: usize) -> Vec<Component> {
    (0..b)
        .filter(|&j| j <= m && j <= k)
        .map(|j| Component::new(m - j, k - j))
        .filter(Component::is_valid)
        .collect()
}

/// Components of `Γ^k_{-b}(𝒯^m) = ⊕_{j<b} Λ^{k+j}_{-1}(𝒯^{m+j})` below stratum `n`.
pub fn gamma_components(m: usize, k: usize, b: usize, n: usize) -> Vec<Component> {
    (0..b)
        .filter(|&j| m + j <= n)
        .map(|j| Component::new(m + j, k + j))
        .filter(Component::is_valid)
        .collect()
}

/// Canonical order: stratum descending, then degree descending.
pub fn normalize_components(mut comps: Vec<Component>) -> Vec<Component> {
    comps.retain(Component::is_valid);
    comps.sort_by(|a, b| b.stratum.cmp(&a.stratum).then(b.degree.cmp(&a.degree)));
    comps.dedup();
    comps
}

/// One simplex block inside a broken space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub simplex: SimplexId,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct BrokenSpace<T: Scalar> {
    components: Vec<Component>,
    ranges: Vec<Range<usize>>,
    blocks: Vec<Vec<Block>>,
    dim: usize,
    gram: DMatrix<T>,
    whitener: Whitener<T>,
    label: String,
}

impl<T: Scalar> BrokenSpace<T> {
    pub(crate) fn from_parts(
        components: Vec<Component>,
        ranges: Vec<Range<usize>>,
        blocks: Vec<Vec<Block>>,
        gram: DMatrix<T>,
        label: String,
    ) -> Result<Self> {
        let dim = gram.nrows();
        let whitener = Whitener::new(&gram)?;
        Ok(Self { components, ranges, blocks, dim, gram, whitener, label })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    pub fn whitener(&self) -> &Whitener<T> {
        &self.whitener
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn position(&self, c: Component) -> Option<usize> {
        self.components.iter().position(|&x| x == c)
    }

    /// Row range of a component, if present.
    pub fn range(&self, c: Component) -> Option<Range<usize>> {
        self.position(c).map(|i| self.ranges[i].clone())
    }

    pub fn blocks(&self, c: Component) -> &[Block] {
        match self.position(c) {
            Some(i) => &self.blocks[i],
            None => &[],
        }
    }

    /// Same components in the same order (the index-level identity of two spaces).
    pub fn same_layout(&self, other: &Self) -> bool {
        self.components == other.components && self.ranges == other.ranges
    }

    /// Rows of `x` belonging to component `c` (empty if absent).
    pub fn extract(&self, x: &DMatrix<T>, c: Component) -> DMatrix<T> {
        match self.range(c) {
            Some(r) => x.rows(r.start, r.len()).into_owned(),
            None => DMatrix::zeros(0, x.ncols()),
        }
    }

    /// Place component coefficients into a full vector of this space.
    pub fn embed(&self, y: &DMatrix<T>, c: Component) -> Result<DMatrix<T>> {
        let r = self
            .range(c)
            .ok_or_else(|| Error::DegreeMismatch(format!("component {c:?} not in {}", self.label)))?;
        if y.nrows() != r.len() {
            return Err(Error::DegreeMismatch("component length mismatch".into()));
        }
        let mut out = DMatrix::zeros(self.dim, y.ncols());
        out.rows_mut(r.start, r.len()).copy_from(y);
        Ok(out)
    }

    /// `⟨x, y⟩` in the space's metric.
    pub fn inner(&self, x: &DMatrix<T>, y: &DMatrix<T>) -> DMatrix<T> {
        x.transpose() * &self.gram * y
    }

    pub fn norm(&self, x: &DMatrix<T>) -> T {
        self.inner(x, x).trace().max(T::zero()).sqrt()
    }
}

/// A subspace of a broken space with a gram-orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace<T: Scalar> {
    ambient: Arc<BrokenSpace<T>>,
    basis: DMatrix<T>,
    label: String,
}

impl<T: Scalar> Subspace<T> {
    pub fn new(ambient: Arc<BrokenSpace<T>>, basis: DMatrix<T>, label: impl Into<String>) -> Self {
        Self { ambient, basis, label: label.into() }
    }

    pub fn ambient(&self) -> &Arc<BrokenSpace<T>> {
        &self.ambient
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `‖Bᵀ G B − I‖_F`.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.basis.transpose() * self.ambient.gram() * &self.basis;
        let d = g - DMatrix::identity(self.dim(), self.dim());
        if d.is_empty() {
            T::zero()
        } else {
            d.norm()
        }
    }
}

/// A space in a complex: a broken space or a subspace of one.
#[derive(Debug, Clone)]
pub enum FormSpace<T: Scalar> {
    Broken(Arc<BrokenSpace<T>>),
    Sub(Arc<Subspace<T>>),
}

impl<T: Scalar> FormSpace<T> {
    pub fn dim(&self) -> usize {
        match self {
            FormSpace::Broken(b) => b.dim(),
            FormSpace::Sub(s) => s.dim(),
        }
    }

    /// Gram matrix in this space's coordinates (identity for subspaces).
    pub fn gram(&self) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => b.gram().clone(),
            FormSpace::Sub(s) => DMatrix::identity(s.dim(), s.dim()),
        }
    }

    pub fn ambient(&self) -> &Arc<BrokenSpace<T>> {
        match self {
            FormSpace::Broken(b) => b,
            FormSpace::Sub(s) => s.ambient(),
        }
    }

    /// Coordinates → ambient coordinates.
    pub fn to_ambient(&self) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => DMatrix::identity(b.dim(), b.dim()),
            FormSpace::Sub(s) => s.basis().clone(),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            FormSpace::Broken(b) => b.label(),
            FormSpace::Sub(s) => s.label(),
        }
    }

    pub fn is_sub(&self) -> bool {
        matches!(self, FormSpace::Sub(_))
    }

    /// Index-level identity: same ambient layout and (for subspaces) the same basis object.
    pub fn same_as(&self, other: &Self) -> bool {
        match (self, other) {
            (FormSpace::Broken(a), FormSpace::Broken(b)) => Arc::ptr_eq(a, b) || a.same_layout(b),
            (FormSpace::Sub(a), FormSpace::Sub(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}
