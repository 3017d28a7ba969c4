//! Finite-dimensional Hilbert complexes: harmonic spaces, Hodge decomposition,
//! the Hodge Laplacian and metric pseudoinverses.
//!
//! Everything is computed in whitened coordinates, where the inner products
//! are Euclidean and the adjoint of a differential is its transpose.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::assembly::{FormSpace, LinearOp};
use crate::error::{Error, Result};
use crate::linalg::{column_space, fro, null_space, pinv, rank, spectral_norm, RANK_RTOL};
use crate::scalar::{lit, Scalar};

/// Relative tolerance for `d ∘ d = 0` at construction.
pub const COMPLEX_TOL: f64 = 1e-10;

/// A finite sequence of spaces and differentials `d_i : X^i → X^{i+1}`.
#[derive(Debug, Clone)]
pub struct ComplexInstance<T: Scalar> {
    spaces: Vec<FormSpace<T>>,
    diffs: Vec<LinearOp<T>>,
    whitened: Vec<DMatrix<T>>,
    harmonic: Vec<OnceLock<DMatrix<T>>>,
    label: String,
}

/// `x = exact + coexact + harmonic`.
#[derive(Debug, Clone)]
pub struct HodgeParts<T: Scalar> {
    pub exact: DMatrix<T>,
    pub coexact: DMatrix<T>,
    pub harmonic: DMatrix<T>,
}

impl<T: Scalar> ComplexInstance<T> {
    /// Build from consecutive operators; checks composability and `d ∘ d = 0`.
    pub fn new(diffs: Vec<LinearOp<T>>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if diffs.is_empty() {
            return Err(Error::InvalidParams("a complex needs at least one differential".into()));
        }
        let mut spaces = vec![diffs[0].domain().clone()];
        for (i, d) in diffs.iter().enumerate() {
            if d.domain().dim() != spaces[i].dim() {
                return Err(Error::DegreeMismatch(format!("{label}: differential {i} does not compose")));
            }
            spaces.push(d.codomain().clone());
        }
        let whitened: Vec<DMatrix<T>> = diffs.iter().map(|d| d.whitened()).collect();
        let harmonic = spaces.iter().map(|_| OnceLock::new()).collect();
        let cx = Self { spaces, diffs, whitened, harmonic, label };
        let r = cx.dd_residual();
        if r > T::tol(COMPLEX_TOL) {
            return Err(Error::Verification(format!("{}: d∘d = {r:.3e} (relative)", cx.label)));
        }
        Ok(cx)
    }

    /// Single space with no differential, as `0 → X → 0`.
    pub fn single(space: FormSpace<T>, label: impl Into<String>) -> Self {
        Self {
            spaces: vec![space],
            diffs: Vec::new(),
            whitened: Vec::new(),
            harmonic: vec![OnceLock::new()],
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn space(&self, i: usize) -> &FormSpace<T> {
        &self.spaces[i]
    }

    pub fn spaces(&self) -> &[FormSpace<T>] {
        &self.spaces
    }

    pub fn diff(&self, i: usize) -> Option<&LinearOp<T>> {
        self.diffs.get(i)
    }

    pub fn diffs(&self) -> &[LinearOp<T>] {
        &self.diffs
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.dim()).collect()
    }

    /// Whitened `d_i`, or an empty map at the ends.
    fn w_out(&self, i: usize) -> DMatrix<T> {
        match self.whitened.get(i) {
            Some(a) => a.clone(),
            None => DMatrix::zeros(0, self.spaces[i].dim()),
        }
    }

    /// Whitened `d_{i-1}`, or an empty map at the start.
    fn w_in(&self, i: usize) -> DMatrix<T> {
        if i == 0 {
            DMatrix::zeros(self.spaces[0].dim(), 0)
        } else {
            self.whitened[i - 1].clone()
        }
    }

    /// `max_i ‖d_{i+1} d_i‖ / (‖d_{i+1}‖ ‖d_i‖)` in whitened frames.
    pub fn dd_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.whitened.windows(2) {
            let p = &w[1] * &w[0];
            let s = fro(&w[1]) * fro(&w[0]);
            if s > T::zero() {
                worst = worst.max((fro(&p) / s).as_f64());
            }
        }
        worst
    }

    pub fn rank(&self, i: usize) -> usize {
        self.whitened.get(i).map(|a| rank(a, RANK_RTOL)).unwrap_or(0)
    }

    /// `dim ker d_i − rank d_{i−1}`.
    pub fn homology_dim(&self, i: usize) -> usize {
        let kernel = self.spaces[i].dim() - self.rank(i);
        let incoming = if i == 0 { 0 } else { self.rank(i - 1) };
        kernel.saturating_sub(incoming)
    }

    /// Gram-orthonormal basis of `ker d_i ∩ ker d*_{i-1}`.
    pub fn harmonic_space(&self, i: usize) -> DMatrix<T> {
        self.harmonic[i].get_or_init(|| self.compute_harmonic(i)).clone()
    }

    fn compute_harmonic(&self, i: usize) -> DMatrix<T> {
        let n = self.spaces[i].dim();
        let a = self.w_out(i);
        let bt = self.w_in(i).transpose();
        let stacked = crate::linalg::vstack(n, &[&a, &bt]);
        let z = if stacked.nrows() == 0 {
            DMatrix::identity(n, n)
        } else {
            null_space(&stacked, RANK_RTOL)
        };
        self.spaces[i].unwhiten(&z)
    }

    pub fn harmonic_dim(&self, i: usize) -> usize {
        self.harmonic_space(i).ncols()
    }

    /// Hodge Laplacian `d*_i d_i + d_{i-1} d*_{i-1}` on `X^i`.
    pub fn hodge_laplacian(&self, i: usize) -> Result<LinearOp<T>> {
        let lw = self.laplacian_whitened(i);
        LinearOp::from_whitened(self.spaces[i].clone(), self.spaces[i].clone(), &lw)
    }

    fn laplacian_whitened(&self, i: usize) -> DMatrix<T> {
        let a = self.w_out(i);
        let b = self.w_in(i);
        a.transpose() * &a + &b * b.transpose()
    }

    /// Basis of the Laplacian kernel (cross-check for [`ComplexInstance::harmonic_space`]).
    pub fn laplacian_kernel(&self, i: usize) -> DMatrix<T> {
        let lw = self.laplacian_whitened(i);
        let n = lw.nrows();
        let z = if n == 0 || fro(&lw) == T::zero() {
            DMatrix::identity(n, n)
        } else {
            // singular values of the Laplacian are squares; use the square of the threshold
            null_space(&lw, RANK_RTOL * 1e-3)
        };
        self.spaces[i].unwhiten(&z)
    }

    /// Split columns of `x` into exact, coexact and harmonic parts.
    pub fn hodge_decompose(&self, i: usize, x: &DMatrix<T>) -> HodgeParts<T> {
        let sp = &self.spaces[i];
        let y = sp.whiten(x);
        let proj = |q: &DMatrix<T>| -> DMatrix<T> {
            if q.ncols() == 0 {
                DMatrix::zeros(y.nrows(), y.ncols())
            } else {
                q * (q.transpose() * &y)
            }
        };
        let qe = column_space(&self.w_in(i), RANK_RTOL);
        let qc = column_space(&self.w_out(i).transpose(), RANK_RTOL);
        let ye = proj(&qe);
        let yc = proj(&qc);
        let yh = &y - &ye - &yc;
        HodgeParts { exact: sp.unwhiten(&ye), coexact: sp.unwhiten(&yc), harmonic: sp.unwhiten(&yh) }
    }

    /// Solve `Δ u = f − p` with `p` the harmonic part of `f` and `u ⊥ 𝔥`.
    pub fn laplace_solve(&self, i: usize, f: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
        let sp = &self.spaces[i];
        let h = self.harmonic_space(i);
        let p = if h.ncols() == 0 {
            DMatrix::zeros(f.nrows(), f.ncols())
        } else {
            &h * sp.inner(&h, f)
        };
        let lw = self.laplacian_whitened(i);
        let rhs = sp.whiten(&(f - &p));
        let uw = pinv(&lw, RANK_RTOL * 1e-3) * rhs;
        (sp.unwhiten(&uw), p)
    }
}

/// Metric Moore–Penrose inverse: `L_dom^{-T} Ã⁺ L_codᵀ`.
pub fn pseudoinverse<T: Scalar>(op: &LinearOp<T>) -> LinearOp<T> {
    let w = op.whitened();
    let wp = pinv(&w, RANK_RTOL);
    LinearOp::from_whitened(op.codomain().clone(), op.domain().clone(), &wp)
        .expect("shapes agree by construction")
}

/// Relative residuals of the four Penrose identities, in whitened frames.
pub fn penrose_residuals<T: Scalar>(a: &LinearOp<T>, p: &LinearOp<T>) -> [f64; 4] {
    let aw = a.whitened();
    let pw = p.whitened();
    let na = spectral_norm(&aw);
    let np = spectral_norm(&pw);
    let r = |x: DMatrix<T>, s: T| -> f64 {
        if s == T::zero() {
            fro(&x).as_f64()
        } else {
            (fro(&x) / s).as_f64()
        }
    };
    let apa = &aw * &pw * &aw - &aw;
    let pap = &pw * &aw * &pw - &pw;
    let ap = &aw * &pw;
    let pa = &pw * &aw;
    [
        r(apa, na),
        r(pap, np),
        r(&ap - ap.transpose(), lit::<T>(1.0)),
        r(&pa - pa.transpose(), lit::<T>(1.0)),
    ]
}
