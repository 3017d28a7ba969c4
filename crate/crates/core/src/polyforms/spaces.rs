//! Finite element families on a single simplex, their bubble spaces, the
//! local derivative and trace matrices, and extension operators.
//!
//! Everything here is affine invariant: the matrices depend on the simplex
//! dimension and on vertex positions only, never on coordinates. A space is
//! stored as a Euclidean-orthonormal basis in canonical frame coordinates, and
//! local operators act on coefficients with respect to those bases.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::form::{
    formal_d, formal_relabel, formal_trace, multi_indices, subsets, whitney_terms, BarycentricForm, Frame, Term,
    Terms,
};
use super::geometry::SimplexGeometry;
use crate::error::{Error, Result};
use crate::linalg::{column_space, fro, null_space, null_space_atol, pinv, select_columns, vstack, RANK_RTOL};
use crate::scalar::Scalar;

/// A family of polynomial form spaces `Λ^k(C)`, one for every simplex dimension and degree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Full polynomials, `P_{r-k} Λ^k` in degree `k` (empty for `k > r`).
    FullP(u32),
    /// Trimmed polynomials `P_r^- Λ^k`; `TrimmedP(1)` are the Whitney forms.
    TrimmedP(u32),
    /// `base` with its last `drop` basis forms removed on `dim`-simplices in degree `degree`.
    /// Breaks the local conditions on purpose.
    Truncated {
        base: Box<Family>,
        dim: usize,
        degree: usize,
        drop: usize,
    },
}

impl Family {
    pub fn whitney() -> Self {
        Family::TrimmedP(1)
    }

    /// `whitney`, `trimmed` / `trimmed_p_minus`, `full` / `full_p`.
    pub fn parse(name: &str, r: u32) -> Result<Self> {
        let f = match name.to_ascii_lowercase().as_str() {
            "whitney" => {
                if r != 1 {
                    return Err(Error::Family(format!("whitney forms have degree 1, got {r}")));
                }
                Family::TrimmedP(1)
            }
            "trimmed" | "trimmed_p_minus" | "p_minus" => Family::TrimmedP(r),
            "full" | "full_p" | "p" => Family::FullP(r),
            other => return Err(Error::Family(format!("unknown family `{other}`"))),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Family::FullP(r) | Family::TrimmedP(r) if *r == 0 => {
                Err(Error::Family("polynomial degree must be at least 1".into()))
            }
            Family::Truncated { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }

    fn untruncated(&self) -> &Family {
        match self {
            Family::Truncated { base, .. } => base.untruncated(),
            f => f,
        }
    }

    /// Polynomial degree of the frame holding degree-`k` forms.
    pub fn frame_degree(&self, k: usize) -> u32 {
        match self.untruncated() {
            Family::FullP(r) => r.saturating_sub(k as u32),
            Family::TrimmedP(r) => *r,
            Family::Truncated { .. } => unreachable!(),
        }
    }

    /// Formal spanning set of `Λ^k` on an `m`-simplex, homogeneous of the frame degree.
    pub fn generators<T: Scalar>(&self, m: usize, k: usize) -> Vec<Terms<T>> {
        let mut out = Vec::new();
        if k > m {
            return out;
        }
        match self.untruncated() {
            Family::FullP(r) => {
                if (k as u32) > *r {
                    return out;
                }
                for alpha in multi_indices(m + 1, r - k as u32) {
                    for sigma in subsets(0, m, k) {
                        let mut t = Terms::new();
                        t.insert(Term { alpha: alpha.clone(), sigma }, T::one());
                        out.push(t);
                    }
                }
            }
            Family::TrimmedP(r) => {
                for alpha in multi_indices(m + 1, r - 1) {
                    for sigma in subsets(0, m, k + 1) {
                        let mut mono = Terms::new();
                        mono.insert(Term { alpha: alpha.clone(), sigma: Vec::new() }, T::one());
                        out.push(super::form::formal_wedge(&mono, &whitney_terms(m, &sigma)));
                    }
                }
            }
            Family::Truncated { .. } => unreachable!(),
        }
        out
    }

    fn dropped(&self, m: usize, k: usize) -> usize {
        match self {
            Family::Truncated { base, dim, degree, drop } => {
                let here = if *dim == m && *degree == k { *drop } else { 0 };
                here + base.dropped(m, k)
            }
            _ => 0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::TrimmedP(1) => write!(f, "whitney"),
            Family::TrimmedP(r) => write!(f, "trimmed({r})"),
            Family::FullP(r) => write!(f, "full({r})"),
            Family::Truncated { base, dim, degree, drop } => {
                write!(f, "truncated({base}; dim {dim}, degree {degree}, drop {drop})")
            }
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// `whitney`, `trimmed(2)`, `full(3)`, or `name:r`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(open) = s.find(['(', ':']) {
            let name = &s[..open];
            let arg = s[open + 1..].trim_end_matches(')');
            let r = arg
                .trim()
                .parse::<u32>()
                .map_err(|_| Error::Family(format!("bad degree in `{s}`")))?;
            Family::parse(name, r)
        } else {
            Family::parse(s, 1)
        }
    }
}

/// `Λ^k(C)` on an `m`-simplex: orthonormal coefficient columns over a canonical frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpace<T: Scalar> {
    dim: usize,
    degree: usize,
    frame: Frame,
    basis: DMatrix<T>,
}

impl<T: Scalar> ElementSpace<T> {
    pub fn build(family: &Family, m: usize, k: usize) -> Result<Self> {
        family.validate()?;
        if k > m {
            return Err(Error::DegreeMismatch(format!("{k}-forms on a {m}-simplex")));
        }
        let frame = Frame::new(m, k, family.frame_degree(k), false);
        let gens = family.generators::<T>(m, k);
        let mut g = DMatrix::zeros(frame.len(), gens.len());
        for (j, t) in gens.iter().enumerate() {
            g.set_column(j, &frame.coords(t)?);
        }
        let mut basis = column_space(&g, RANK_RTOL);
        let drop = family.dropped(m, k);
        if drop > 0 {
            let keep = basis.ncols().saturating_sub(drop);
            basis = select_columns(&basis, &(0..keep).collect::<Vec<_>>());
        }
        Ok(Self { dim: m, degree: k, frame, basis })
    }

    /// Trace-free subspace (as coefficient columns), a space in its own right.
    pub fn bubble(&self, bubble_coeffs: &DMatrix<T>) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            frame: self.frame.clone(),
            basis: &self.basis * bubble_coeffs,
        }
    }

    pub fn simplex_dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn basis_form(&self, j: usize) -> Result<BarycentricForm<T>> {
        BarycentricForm::from_vector(&self.frame, &self.basis.column(j).into_owned())
    }

    pub fn form(&self, coeffs: &DVector<T>) -> Result<BarycentricForm<T>> {
        if coeffs.len() != self.len() {
            return Err(Error::Form("coefficient vector length mismatch".into()));
        }
        BarycentricForm::from_vector(&self.frame, &(&self.basis * coeffs))
    }

    /// Coefficients of the orthogonal (frame-Euclidean) projection, and the relative residual.
    pub fn coefficients(&self, form: &BarycentricForm<T>) -> Result<(DVector<T>, T)> {
        let v = form.to_vector(&self.frame)?;
        let c = self.basis.transpose() * &v;
        let r = &v - &self.basis * &c;
        let n = v.norm();
        let rel = if n > T::zero() { r.norm() / n } else { T::zero() };
        Ok((c, rel))
    }

    /// L² Gram matrix of the basis on a concrete simplex.
    pub fn gram(&self, geo: &SimplexGeometry<T>) -> DMatrix<T> {
        let g = geo.frame_gram(&self.frame);
        self.basis.transpose() * g * &self.basis
    }
}

/// How bubbles of a face are extended into a containing simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionRule {
    /// Literal reinterpretation of a representative in which every term involves all
    /// vertices of the face (`λ^α dλ_σ` with `supp α ∪ σ` the whole face).
    SupportComplete,
    /// Literal reinterpretation of the canonical representative. Not a valid extension
    /// for most families (a vertex bubble `1` extends to `1`); kept as a control.
    CanonicalLiteral,
}

/// An extension operator in matrix form.
#[derive(Debug, Clone)]
pub struct Extension<T: Scalar> {
    /// Bubble coefficients of the face → canonical frame coordinates on the cell.
    pub frame_matrix: DMatrix<T>,
    /// Bubble coefficients of the face → space coefficients on the cell.
    pub matrix: DMatrix<T>,
    /// Relative amount of the extended forms lying outside the cell's space.
    pub containment_residual: f64,
    /// How well the chosen representative reproduces the bubbles (relative).
    pub representation_residual: f64,
}

/// Geometry-free matrices of one family up to a given simplex dimension.
#[derive(Debug, Clone)]
pub struct LocalTables<T: Scalar> {
    family: Family,
    max_dim: usize,
    spaces: Vec<Vec<ElementSpace<T>>>,
    bubbles: Vec<Vec<DMatrix<T>>>,
    d_local: Vec<Vec<DMatrix<T>>>,
    d_residual: Vec<Vec<f64>>,
    trace_local: Vec<Vec<Vec<DMatrix<T>>>>,
    trace_residual: Vec<Vec<Vec<f64>>>,
}

fn rel_residual<T: Scalar>(full: &DMatrix<T>, basis: &DMatrix<T>) -> f64 {
    let n = fro(full);
    if n == T::zero() {
        return 0.0;
    }
    let proj = if basis.ncols() == 0 {
        DMatrix::zeros(full.nrows(), full.ncols())
    } else {
        basis * (basis.transpose() * full)
    };
    (fro(&(full - proj)) / n).as_f64()
}

impl<T: Scalar> LocalTables<T> {
    pub fn new(family: &Family, max_dim: usize) -> Result<Self> {
        let mut spaces = Vec::new();
        for m in 0..=max_dim {
            let row: Result<Vec<_>> = (0..=m).map(|k| ElementSpace::build(family, m, k)).collect();
            spaces.push(row?);
        }
        let mut d_local = Vec::new();
        let mut d_residual = Vec::new();
        for m in 0..=max_dim {
            let mut ds = Vec::new();
            let mut rs = Vec::new();
            for k in 0..m {
                let (a, b) = (&spaces[m][k], &spaces[m][k + 1]);
                let dm = a.frame.matrix_of::<T, _>(&b.frame, |t| formal_d(t))?;
                let img = dm * &a.basis;
                rs.push(rel_residual(&img, &b.basis));
                ds.push(b.basis.transpose() * img);
            }
            d_local.push(ds);
            d_residual.push(rs);
        }
        let mut trace_local = vec![Vec::new()];
        let mut trace_residual = vec![Vec::new()];
        let mut bubbles = vec![vec![DMatrix::identity(spaces[0][0].len(), spaces[0][0].len())]];
        for m in 1..=max_dim {
            let mut tl = Vec::new();
            let mut tr = Vec::new();
            let mut bb = Vec::new();
            for k in 0..=m {
                let c = &spaces[m][k];
                let mut per_j = Vec::new();
                let mut res_j = Vec::new();
                let mut raw = Vec::new();
                if k < m {
                    let f = &spaces[m - 1][k];
                    for j in 0..=m {
                        let face: Vec<usize> = (0..=m).filter(|&p| p != j).collect();
                        let tm = c.frame.matrix_of::<T, _>(&f.frame, |t| formal_trace(t, &face))?;
                        let img = tm * &c.basis;
                        res_j.push(rel_residual(&img, &f.basis));
                        per_j.push(f.basis.transpose() * &img);
                        raw.push(img);
                    }
                }
                let refs: Vec<&DMatrix<T>> = raw.iter().collect();
                let stacked = vstack(c.len(), &refs);
                bb.push(null_space(&stacked, RANK_RTOL));
                tl.push(per_j);
                tr.push(res_j);
            }
            trace_local.push(tl);
            trace_residual.push(tr);
            bubbles.push(bb);
        }
        Ok(Self {
            family: family.clone(),
            max_dim,
            spaces,
            bubbles,
            d_local,
            d_residual,
            trace_local,
            trace_residual,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn space(&self, m: usize, k: usize) -> &ElementSpace<T> {
        &self.spaces[m][k]
    }

    pub fn dim(&self, m: usize, k: usize) -> usize {
        self.spaces[m][k].len()
    }

    /// Bubble coefficients (columns) inside `Λ^k` of an `m`-simplex.
    pub fn bubble(&self, m: usize, k: usize) -> &DMatrix<T> {
        &self.bubbles[m][k]
    }

    /// Local derivative `Λ^k → Λ^{k+1}` on an `m`-simplex (`k < m`).
    pub fn d_local(&self, m: usize, k: usize) -> &DMatrix<T> {
        &self.d_local[m][k]
    }

    pub fn d_residual(&self, m: usize, k: usize) -> f64 {
        self.d_residual[m][k]
    }

    /// Trace of `Λ^k` on an `m`-simplex onto the facet omitting vertex position `j` (`k < m`).
    pub fn trace_local(&self, m: usize, k: usize, j: usize) -> &DMatrix<T> {
        &self.trace_local[m][k][j]
    }

    pub fn trace_residual(&self, m: usize, k: usize, j: usize) -> f64 {
        self.trace_residual[m][k][j]
    }

    /// Trace onto an arbitrary face, in canonical frame coordinates of the face.
    pub fn face_trace_frame(&self, m: usize, k: usize, face: &[usize]) -> Result<DMatrix<T>> {
        let f = face.len() - 1;
        let c = &self.spaces[m][k];
        if k > f {
            return Ok(DMatrix::zeros(0, c.len()));
        }
        let target = &self.spaces[f][k].frame;
        Ok(c.frame.matrix_of::<T, _>(target, |t| formal_trace(t, face))? * &c.basis)
    }

    /// Extension of the bubbles of the face at positions `face` into `Λ^k` of an `m`-simplex.
    pub fn extension(&self, m: usize, k: usize, face: &[usize], rule: ExtensionRule) -> Result<Extension<T>> {
        let f = face.len() - 1;
        if f > m || face.iter().any(|&p| p > m) || face.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NotAFace { face: face.to_vec(), cell: (0..=m).collect() });
        }
        let cell = &self.spaces[m][k];
        if k > f {
            return Ok(Extension {
                frame_matrix: DMatrix::zeros(cell.frame.len(), 0),
                matrix: DMatrix::zeros(cell.len(), 0),
                containment_residual: 0.0,
                representation_residual: 0.0,
            });
        }
        let fs = &self.spaces[f][k];
        let bubbles = &fs.basis * &self.bubbles[f][k];
        let (frame_matrix, representation_residual) = match rule {
            // the cell's own bubbles need no extension
            _ if f == m => (bubbles, 0.0),
            ExtensionRule::CanonicalLiteral => {
                let r = fs.frame.matrix_of::<T, _>(&cell.frame, |t| formal_relabel(t, face, m))?;
                (r * &bubbles, 0.0)
            }
            ExtensionRule::SupportComplete => {
                let formal = Frame::new(f, k, fs.frame.poly, true);
                let gens = self.family.generators::<T>(f, k);
                let mut g = DMatrix::zeros(formal.len(), gens.len());
                for (j, t) in gens.iter().enumerate() {
                    g.set_column(j, &formal.coords(t)?);
                }
                let w = column_space(&g, RANK_RTOL);
                let outside: Vec<usize> = formal
                    .terms
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| {
                        (0..=f).any(|v| t.alpha[v] == 0 && !t.sigma.contains(&v))
                    })
                    .map(|(i, _)| i)
                    .collect();
                let y = if outside.is_empty() || w.ncols() == 0 {
                    w.clone()
                } else {
                    let rows = DMatrix::from_fn(outside.len(), w.ncols(), |i, j| w[(outside[i], j)]);
                    &w * null_space_atol(&rows, RANK_RTOL)
                };
                let pi = formal.matrix_of::<T, _>(&fs.frame, |t| t.clone())?;
                let py = &pi * &y;
                let z = &y * (pinv(&py, RANK_RTOL) * &bubbles);
                let rep = {
                    let n = fro(&bubbles);
                    if n == T::zero() {
                        0.0
                    } else {
                        (fro(&(&pi * &z - &bubbles)) / n).as_f64()
                    }
                };
                let r = formal.matrix_of::<T, _>(&cell.frame, |t| formal_relabel(t, face, m))?;
                (r * z, rep)
            }
        };
        let containment_residual = rel_residual(&frame_matrix, &cell.basis);
        let matrix = cell.basis.transpose() * &frame_matrix;
        Ok(Extension { frame_matrix, matrix, containment_residual, representation_residual })
    }
}
