use nalgebra::DMatrix;

use super::FormSpace;
use crate::error::{Error, Result};
use crate::linalg::fro;
use crate::scalar::{lit, Scalar};

/// Relative tolerance for subspace containment in [`LinearOp::inclusion`].
pub const INCLUSION_TOL: f64 = 1e-8;

impl<T: Scalar> FormSpace<T> {
    /// `Lᵀ x` (orthonormal frame coordinates).
    pub fn whiten(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => b.whitener().whiten(x),
            FormSpace::Sub(_) => x.clone(),
        }
    }

    /// `L^{-T} y`.
    pub fn unwhiten(&self, y: &DMatrix<T>) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => b.whitener().unwhiten(y),
            FormSpace::Sub(_) => y.clone(),
        }
    }

    /// `L^{-1} x`.
    pub fn whiten_dual(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => b.whitener().whiten_dual(x),
            FormSpace::Sub(_) => x.clone(),
        }
    }

    /// `L x`.
    pub fn unwhiten_dual(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => b.whitener().unwhiten_dual(x),
            FormSpace::Sub(_) => x.clone(),
        }
    }

    /// `G^{-1} x`.
    pub fn solve_gram(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => b.whitener().solve(x),
            FormSpace::Sub(_) => x.clone(),
        }
    }

    pub fn inner(&self, x: &DMatrix<T>, y: &DMatrix<T>) -> DMatrix<T> {
        match self {
            FormSpace::Broken(b) => b.inner(x, y),
            FormSpace::Sub(_) => x.transpose() * y,
        }
    }

    pub fn norm(&self, x: &DMatrix<T>) -> T {
        fro(&self.whiten(x))
    }
}

/// A linear map between two spaces, as a matrix in their coordinates.
#[derive(Debug, Clone)]
pub struct LinearOp<T: Scalar> {
    domain: FormSpace<T>,
    codomain: FormSpace<T>,
    matrix: DMatrix<T>,
}

impl<T: Scalar> LinearOp<T> {
    pub fn new(domain: FormSpace<T>, codomain: FormSpace<T>, matrix: DMatrix<T>) -> Result<Self> {
        if matrix.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::DegreeMismatch(format!(
                "operator of shape {:?} between spaces of dimension {} and {}",
                matrix.shape(),
                domain.dim(),
                codomain.dim()
            )));
        }
        Ok(Self { domain, codomain, matrix })
    }

    pub fn zero(domain: FormSpace<T>, codomain: FormSpace<T>) -> Self {
        let matrix = DMatrix::zeros(codomain.dim(), domain.dim());
        Self { domain, codomain, matrix }
    }

    pub fn identity(space: FormSpace<T>) -> Self {
        let n = space.dim();
        Self { domain: space.clone(), codomain: space, matrix: DMatrix::identity(n, n) }
    }

    pub fn domain(&self) -> &FormSpace<T> {
        &self.domain
    }

    pub fn codomain(&self) -> &FormSpace<T> {
        &self.codomain
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        &self.matrix * x
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearOp<T>) -> Result<LinearOp<T>> {
        if other.codomain.dim() != self.domain.dim() {
            return Err(Error::DegreeMismatch("composition of incompatible operators".into()));
        }
        Ok(LinearOp {
            domain: other.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Adjoint with respect to the two inner products: `G_dom^{-1} Aᵀ G_cod`.
    pub fn adjoint(&self) -> LinearOp<T> {
        let at_g = self.matrix.transpose() * self.codomain.gram();
        LinearOp {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            matrix: self.domain.solve_gram(&at_g),
        }
    }

    /// Matrix between orthonormal frames: `L_codᵀ A L_dom^{-T}`.
    pub fn whitened(&self) -> DMatrix<T> {
        if self.matrix.is_empty() {
            return self.matrix.clone();
        }
        let right = self.domain.whiten_dual(&self.matrix.transpose()).transpose();
        self.codomain.whiten(&right)
    }

    /// Inverse of [`LinearOp::whitened`] for a map `dom → cod` given in orthonormal frames.
    pub fn from_whitened(domain: FormSpace<T>, codomain: FormSpace<T>, w: &DMatrix<T>) -> Result<Self> {
        let matrix = if w.is_empty() {
            DMatrix::zeros(codomain.dim(), domain.dim())
        } else {
            // L_cod^{-T} W L_domᵀ
            let left = codomain.unwhiten(w);
            domain.unwhiten_dual(&left.transpose()).transpose()
        };
        Self::new(domain, codomain, matrix)
    }

    /// Inclusion of `dom` into `cod`, where every component of `dom` carrying a nonzero
    /// part is a component of `cod` and, for a subspace codomain, the image lies in it.
    pub fn inclusion(dom: &FormSpace<T>, cod: &FormSpace<T>) -> Result<Self> {
        let src = dom.ambient();
        let dst = cod.ambient();
        let x = dom.to_ambient();
        let mut y = DMatrix::zeros(dst.dim(), x.ncols());
        for &c in src.components() {
            let xc = src.extract(&x, c);
            match dst.range(c) {
                Some(r) => y.rows_mut(r.start, r.len()).copy_from(&xc),
                None if xc.is_empty() || fro(&xc) == T::zero() => {}
                None => {
                    return Err(Error::DegreeMismatch(format!(
                        "{} is not contained in {}: component ({},{}) missing",
                        dom.label(),
                        cod.label(),
                        c.stratum,
                        c.degree
                    )))
                }
            }
        }
        let matrix = match cod {
            FormSpace::Broken(_) => y,
            FormSpace::Sub(s) => {
                let coeff = s.basis().transpose() * dst.gram() * &y;
                let resid = &y - s.basis() * &coeff;
                let yn = dst.norm(&y);
                if dst.norm(&resid) > lit::<T>(T::tol(INCLUSION_TOL)) * yn.max(T::one()) {
                    return Err(Error::DegreeMismatch(format!("{} is not contained in {}", dom.label(), cod.label())));
                }
                coeff
            }
        };
        Self::new(dom.clone(), cod.clone(), matrix)
    }

    /// Operator norm between the metric spaces.
    pub fn norm(&self) -> T {
        crate::linalg::spectral_norm(&self.whitened())
    }

    /// Frobenius norm of the whitened matrix.
    pub fn fro_norm(&self) -> T {
        fro(&self.whitened())
    }
}
