//! Dense linear-algebra kernels: SVD-based ranks and null spaces, metric
//! whitening, pseudoinverses, and exact integer rank.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Default relative threshold: singular values below `RANK_RTOL * sigma_max` count as zero.
pub const RANK_RTOL: f64 = 1e-9;

/// SVD pieces `(u, sigma, v)`: `sigma` holds `p = min(rows, cols)` values in
/// descending order, `u` the matching `p` left vectors and `v` is `cols x cols`
/// (a complete orthonormal basis of the domain).
fn svd_full<T: Scalar>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<T>, DMatrix<T>) {
    let (rows, cols) = a.shape();
    let p = rows.min(cols);
    if p == 0 {
        return (DMatrix::zeros(rows, 0), Vec::new(), DMatrix::identity(cols, cols));
    }
    if let Some((u, sigma, v)) = T::svd(a) {
        return (u.columns(0, p).into_owned(), sigma, v);
    }
    // rare non-convergence: nalgebra with a tight tolerance, padded so V is square
    let padded = if rows < cols { a.clone().insert_rows(rows, cols - rows, T::zero()) } else { a.clone() };
    let svd = padded
        .try_svd(true, true, lit::<T>(T::EPSILON_F64 * 0.5), 100_000)
        .expect("SVD failed to converge");
    let sv = &svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&x, &y| sv[y].partial_cmp(&sv[x]).unwrap_or(std::cmp::Ordering::Equal));
    let u = svd.u.as_ref().expect("u requested").rows(0, rows).into_owned();
    let v = svd.v_t.as_ref().expect("v requested").transpose();
    let sigma = idx.iter().take(p).map(|&k| sv[k]).collect();
    (select_columns(&u, &idx[..p]), sigma, select_columns(&v, &idx))
}

fn threshold<T: Scalar>(sigma: &[T], rtol: f64) -> T {
    let smax = sigma.iter().copied().fold(T::zero(), |a, b| a.max(b));
    // never below the roundoff floor of the scalar type
    smax * lit::<T>(T::tol(rtol))
}

/// Numerical rank with relative threshold `rtol`.
pub fn rank<T: Scalar>(a: &DMatrix<T>, rtol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sigma = singular_values(a);
    let thr = threshold(&sigma, rtol);
    sigma.iter().filter(|&&s| s > thr && s > T::zero()).count()
}

/// Orthonormal basis (Euclidean) of the null space of `a`.
pub fn null_space<T: Scalar>(a: &DMatrix<T>, rtol: f64) -> DMatrix<T> {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return DMatrix::identity(cols, cols);
    }
    let (_, sigma, v) = svd_full(a);
    let thr = threshold(&sigma, rtol);
    let keep: Vec<usize> = (0..cols)
        .filter(|&j| {
            let s = sigma.get(j).copied().unwrap_or(T::zero());
            !(s > thr && s > T::zero())
        })
        .collect();
    select_columns(&v, &keep)
}

/// Null space with an absolute singular-value threshold, for blocks cut out of
/// matrices with orthonormal columns where a relative cut would amplify roundoff.
pub fn null_space_atol<T: Scalar>(a: &DMatrix<T>, atol: f64) -> DMatrix<T> {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return DMatrix::identity(cols, cols);
    }
    let (_, sigma, v) = svd_full(a);
    let thr = lit::<T>(atol);
    let keep: Vec<usize> = (0..cols)
        .filter(|&j| sigma.get(j).copied().unwrap_or(T::zero()) <= thr)
        .collect();
    select_columns(&v, &keep)
}

/// Orthonormal basis (Euclidean) of the column space of `a`.
pub fn column_space<T: Scalar>(a: &DMatrix<T>, rtol: f64) -> DMatrix<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let (u, sigma, _) = svd_full(a);
    let thr = threshold(&sigma, rtol);
    let keep: Vec<usize> = (0..sigma.len())
        .filter(|&j| sigma[j] > thr && sigma[j] > T::zero())
        .collect();
    select_columns(&u, &keep)
}

/// Moore-Penrose pseudoinverse in the Euclidean metric.
pub fn pinv<T: Scalar>(a: &DMatrix<T>, rtol: f64) -> DMatrix<T> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let (u, sigma, v) = svd_full(a);
    let thr = threshold(&sigma, rtol);
    let keep: Vec<usize> = (0..sigma.len()).filter(|&j| sigma[j] > thr && sigma[j] > T::zero()).collect();
    let mut vs = select_columns(&v, &keep);
    for (c, &j) in keep.iter().enumerate() {
        let inv = T::one() / sigma[j];
        vs.column_mut(c).scale_mut(inv);
    }
    vs * select_columns(&u, &keep).transpose()
}

/// Singular values of `a`, descending.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s = match T::singular_values(a) {
        Some(s) => s,
        None => svd_full(a).1,
    };
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Spectral norm.
pub fn spectral_norm<T: Scalar>(a: &DMatrix<T>) -> T {
    singular_values(a).first().copied().unwrap_or(T::zero())
}

pub fn select_columns<T: Scalar>(a: &DMatrix<T>, cols: &[usize]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        out.set_column(dst, &a.column(src));
    }
    out
}

/// Stack matrices vertically (all must share the column count).
pub fn vstack<T: Scalar>(cols: usize, blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Stack matrices horizontally (all must share the row count).
pub fn hstack<T: Scalar>(rows: usize, blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Frobenius norm, zero for empty matrices.
pub fn fro<T: Scalar>(a: &DMatrix<T>) -> T {
    if a.is_empty() {
        T::zero()
    } else {
        a.norm()
    }
}

/// Symmetric whitening of an inner product: `gram = L L^T`.
///
/// Coordinates `x` map to whitened coordinates `y = L^T x`, in which the
/// inner product is Euclidean.
#[derive(Debug, Clone)]
pub struct Whitener<T: Scalar> {
    l: DMatrix<T>,
    chol: Option<Cholesky<T, Dyn>>,
}

impl<T: Scalar> Whitener<T> {
    pub fn new(gram: &DMatrix<T>) -> Result<Self> {
        let n = gram.nrows();
        if n == 0 {
            return Ok(Self {
                l: DMatrix::zeros(0, 0),
                chol: None,
            });
        }
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::Verification("gram matrix is not positive definite".into()))?;
        Ok(Self {
            l: chol.l(),
            chol: Some(chol),
        })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `L^T x`
    pub fn whiten(&self, x: &DMatrix<T>) -> DMatrix<T> {
        if self.dim() == 0 {
            return DMatrix::zeros(0, x.ncols());
        }
        self.l.transpose() * x
    }

    /// `L^{-T} y`
    pub fn unwhiten(&self, y: &DMatrix<T>) -> DMatrix<T> {
        if self.dim() == 0 {
            return DMatrix::zeros(0, y.ncols());
        }
        let lt = self.l.transpose();
        lt.solve_upper_triangular(y).expect("cholesky factor is invertible")
    }

    /// `L^{-1} x`, the whitening applied to dual (covector) coordinates.
    pub fn whiten_dual(&self, x: &DMatrix<T>) -> DMatrix<T> {
        if self.dim() == 0 {
            return DMatrix::zeros(0, x.ncols());
        }
        self.l.solve_lower_triangular(x).expect("cholesky factor is invertible")
    }

    /// `L x`, inverse of [`Whitener::whiten_dual`].
    pub fn unwhiten_dual(&self, x: &DMatrix<T>) -> DMatrix<T> {
        if self.dim() == 0 {
            return DMatrix::zeros(0, x.ncols());
        }
        &self.l * x
    }

    /// `gram^{-1} x`
    pub fn solve(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match &self.chol {
            None => DMatrix::zeros(0, x.ncols()),
            Some(c) => c.solve(x),
        }
    }

    /// Operator `a: dom -> cod` expressed between whitened frames: `L_cod^T a L_dom^{-T}`.
    pub fn whiten_operator(a: &DMatrix<T>, dom: &Whitener<T>, cod: &Whitener<T>) -> DMatrix<T> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return DMatrix::zeros(a.nrows(), a.ncols());
        }
        // a L_dom^{-T} = (L_dom^{-1} a^T)^T
        let right = dom.whiten_dual(&a.transpose()).transpose();
        cod.whiten(&right)
    }

    /// Inverse of [`Whitener::whiten_operator`].
    pub fn unwhiten_operator(a: &DMatrix<T>, dom: &Whitener<T>, cod: &Whitener<T>) -> DMatrix<T> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return DMatrix::zeros(a.nrows(), a.ncols());
        }
        // L_cod^{-T} a L_dom^T
        let left = cod.unwhiten(a);
        dom.whiten(&left.transpose()).transpose()
    }
}

/// Gram-orthonormal basis of the span of `basis` (columns), dropping dependent directions.
pub fn gram_orthonormalize<T: Scalar>(
    basis: &DMatrix<T>,
    gram: &DMatrix<T>,
    rtol: f64,
) -> Result<DMatrix<T>> {
    let w = Whitener::new(gram)?;
    let y = w.whiten(basis);
    let q = column_space(&y, rtol);
    Ok(w.unwhiten(&q))
}

/// Sine of the largest principal angle between two gram-orthonormal bases of equal size.
///
/// Returns 1 when the dimensions differ.
pub fn subspace_distance<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, gram: &DMatrix<T>) -> T {
    if a.ncols() != b.ncols() {
        return T::one();
    }
    if a.ncols() == 0 {
        return T::zero();
    }
    let gb = gram * b;
    let coeff = gb.transpose() * a;
    let resid = a - b * coeff;
    // gram norm of the residual
    let m = resid.transpose() * gram * &resid;
    let m = (&m + m.transpose()) * lit::<T>(0.5);
    let ev = m.symmetric_eigenvalues();
    let top = ev.iter().copied().fold(T::zero(), |x, y| x.max(y));
    top.max(T::zero()).sqrt()
}

/// Relative residual `|x - P x| / |x|` of projecting columns of `x` onto the span of
/// a gram-orthonormal basis, in the gram norm (max over columns).
pub fn projection_residual<T: Scalar>(x: &DMatrix<T>, basis: &DMatrix<T>, gram: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for j in 0..x.ncols() {
        let col: DVector<T> = x.column(j).into_owned();
        let nrm = (col.transpose() * gram * &col)[(0, 0)].max(T::zero()).sqrt();
        if nrm == T::zero() {
            continue;
        }
        let proj = if basis.ncols() == 0 {
            DVector::zeros(col.len())
        } else {
            basis * (basis.transpose() * (gram * &col))
        };
        let r = &col - proj;
        let rn = (r.transpose() * gram * &r)[(0, 0)].max(T::zero()).sqrt();
        worst = worst.max(rn / nrm);
    }
    worst
}

/// Exact rank of an integer matrix by fraction-free row reduction over `BigInt`.
pub fn exact_rank(a: &DMatrix<i64>) -> usize {
    let rows: Vec<Vec<BigInt>> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| BigInt::from(a[(i, j)])).collect())
        .collect();
    integer_rank(rows, a.ncols())
}

/// Exact rank of a matrix over any integer type, by gcd-normalised elimination.
pub fn integer_rank<I>(mut rows: Vec<Vec<I>>, cols: usize) -> usize
where
    I: Integer + Signed + Clone,
{
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        let Some(p) = pivot else { continue };
        rows.swap(rank, p);
        let prow = rows[rank].clone();
        for r in (rank + 1)..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let a = prow[col].clone();
            let b = rows[r][col].clone();
            let g = a.gcd(&b);
            let fa = a / g.clone();
            let fb = b / g;
            let mut content = I::zero();
            for c in col..cols {
                let v = rows[r][c].clone() * fa.clone() - prow[c].clone() * fb.clone();
                content = content.gcd(&v);
                rows[r][c] = v;
            }
            if !content.is_zero() && !content.is_one() {
                for c in col..cols {
                    rows[r][c] = rows[r][c].clone() / content.clone();
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}
