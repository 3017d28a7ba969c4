//! Scalar abstraction shared by all floating-point modules.

use std::fmt;

use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type usable by the form calculus and the Hilbert-complex machinery.
///
/// Implemented for `f32` and `f64`. Exact computations (Betti numbers) do not go
/// through this trait; they use integer elimination in [`crate::linalg::exact_rank`].
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::Debug + Send + Sync + 'static
{
    /// Machine epsilon of the type, as `f64`.
    const EPSILON_F64: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `tol`, but never below the roundoff floor `64 ε` of the type.
    fn tol(tol: f64) -> f64 {
        tol.max(64.0 * Self::EPSILON_F64)
    }

    /// Full SVD `a = U Σ Vᵀ`: `U` is `rows × rows`, `V` is `cols × cols`, and the
    /// `min(rows, cols)` singular values come in descending order. `None` if the
    /// iteration fails to converge.
    fn svd(a: &DMatrix<Self>) -> Option<(DMatrix<Self>, Vec<Self>, DMatrix<Self>)>;

    /// Singular values only, descending.
    fn singular_values(a: &DMatrix<Self>) -> Option<Vec<Self>>;
}

// nalgebra's bidiagonal SVD can lose accuracy badly on matrices with many exact
// zeros (observed reconstruction errors around 1e-4 on whitened D matrices), so
// dense factorizations go through faer.
macro_rules! faer_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EPSILON_F64: f64 = <$t>::EPSILON as f64;

            fn svd(a: &DMatrix<$t>) -> Option<(DMatrix<$t>, Vec<$t>, DMatrix<$t>)> {
                let m = faer::Mat::<$t>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
                let svd = m.svd().ok()?;
                let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
                let u = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]);
                let v = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]);
                let s = (0..s.nrows()).map(|i| s[i]).collect();
                Some((u, s, v))
            }

            fn singular_values(a: &DMatrix<$t>) -> Option<Vec<$t>> {
                let m = faer::Mat::<$t>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
                m.singular_values().ok()
            }
        }
    };
}

faer_scalar!(f32);
faer_scalar!(f64);

/// Shorthand for `T::lit`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}
