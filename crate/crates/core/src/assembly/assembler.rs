use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{normalize_components, Block, BrokenSpace, Component, FormSpace, LinearOp, Metric, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{fro, null_space, RANK_RTOL};
use crate::mesh::{orientation_sign, RelativePair, SimplexId};
use crate::polyforms::{LocalTables, SimplexGeometry};
use crate::scalar::{lit, Scalar};

/// Relative size below which a component of `d` that has no place in the codomain
/// (or a part outside a codomain subspace) counts as zero.
pub const LEAK_TOL: f64 = 1e-8;

/// Which kernel a kernel space is: `ker T` (conforming, `Λ^k(𝒯^m)`) or `ker D` (`Γ^k(𝒯^m)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Vertical,
    Horizontal,
}

type Cache<K, V> = Mutex<HashMap<K, Arc<V>>>;

/// Assembles spaces and operators of one family on one relative pair.
#[derive(Debug)]
pub struct Assembler<T: Scalar> {
    pair: Arc<RelativePair<T>>,
    tables: Arc<LocalTables<T>>,
    metric: Metric,
    /// `[m][k]`: block position of each simplex of stratum `m` (None if marked).
    positions: Vec<Vec<Option<usize>>>,
    /// `[m][k][active block]`: weighted local Gram matrices.
    grams: Vec<Vec<Vec<DMatrix<T>>>>,
    d_cache: Cache<Component, DMatrix<T>>,
    t_cache: Cache<Component, DMatrix<T>>,
    spaces: Cache<Vec<Component>, BrokenSpace<T>>,
    kernels: Cache<(Component, Which), Subspace<T>>,
}

fn sign<T: Scalar>(even: bool) -> T {
    if even {
        T::one()
    } else {
        -T::one()
    }
}

impl<T: Scalar> Assembler<T> {
    pub fn new(pair: Arc<RelativePair<T>>, tables: Arc<LocalTables<T>>, metric: Metric) -> Result<Self> {
        let n = pair.top_dim();
        if tables.max_dim() < n {
            return Err(Error::Family(format!(
                "local tables built up to dimension {}, mesh needs {n}",
                tables.max_dim()
            )));
        }
        let mut positions = Vec::new();
        let mut grams = Vec::new();
        for m in 0..=n {
            let mut pos = Vec::new();
            let mut next = 0;
            let mut per_k: Vec<Vec<DMatrix<T>>> = vec![Vec::new(); m + 1];
            for index in 0..pair.num_simplices(m) {
                let id = SimplexId { dim: m, index };
                if pair.is_marked(id) {
                    pos.push(None);
                    continue;
                }
                pos.push(Some(next));
                next += 1;
                let geo = SimplexGeometry::new(pair.simplex_coords(id), pair.simplex(id).sign)?;
                let w = match metric {
                    Metric::Weighted => pair.mesh_weight(id)?,
                    Metric::Unweighted => T::one(),
                };
                for (k, slot) in per_k.iter_mut().enumerate() {
                    slot.push(tables.space(m, k).gram(&geo) * w);
                }
            }
            positions.push(pos);
            grams.push(per_k);
        }
        Ok(Self {
            pair,
            tables,
            metric,
            positions,
            grams,
            d_cache: Mutex::default(),
            t_cache: Mutex::default(),
            spaces: Mutex::default(),
            kernels: Mutex::default(),
        })
    }

    pub fn pair(&self) -> &Arc<RelativePair<T>> {
        &self.pair
    }

    pub fn tables(&self) -> &Arc<LocalTables<T>> {
        &self.tables
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn top_dim(&self) -> usize {
        self.pair.top_dim()
    }

    fn check(&self, c: Component) -> Result<()> {
        if c.stratum > self.top_dim() || !c.is_valid() {
            return Err(Error::OutOfRange(format!(
                "component (stratum {}, degree {}) on a {}-dimensional mesh",
                c.stratum,
                c.degree,
                self.top_dim()
            )));
        }
        Ok(())
    }

    /// Broken space with the given components (normalized order).
    pub fn space(&self, comps: &[Component]) -> Result<Arc<BrokenSpace<T>>> {
        let comps = normalize_components(comps.to_vec());
        for &c in &comps {
            self.check(c)?;
        }
        if let Some(s) = self.spaces.lock().expect("cache").get(&comps) {
            return Ok(s.clone());
        }
        let mut ranges = Vec::new();
        let mut blocks = Vec::new();
        let mut offset = 0;
        for &c in &comps {
            let len = self.tables.dim(c.stratum, c.degree);
            let start = offset;
            let mut bl = Vec::new();
            for (index, p) in self.positions[c.stratum].iter().enumerate() {
                if p.is_some() {
                    bl.push(Block { simplex: SimplexId { dim: c.stratum, index }, offset, len });
                    offset += len;
                }
            }
            ranges.push(start..offset);
            blocks.push(bl);
        }
        let mut gram = DMatrix::zeros(offset, offset);
        for (ci, &c) in comps.iter().enumerate() {
            for (b, blk) in blocks[ci].iter().enumerate() {
                let g = &self.grams[c.stratum][c.degree][b];
                gram.view_mut((blk.offset, blk.offset), (blk.len, blk.len)).copy_from(g);
            }
        }
        let label = comps
            .iter()
            .map(|c| format!("({},{})", c.stratum, c.degree))
            .collect::<Vec<_>>()
            .join("+");
        let space = Arc::new(BrokenSpace::from_parts(comps.clone(), ranges, blocks, gram, label)?);
        self.spaces.lock().expect("cache").insert(comps, space.clone());
        Ok(space)
    }

    pub fn component_space(&self, stratum: usize, degree: usize) -> Result<Arc<BrokenSpace<T>>> {
        self.space(&[Component::new(stratum, degree)])
    }

    /// `Λ^k_{-b}(𝒯^m)`.
    pub fn lambda_space(&self, m: usize, k: usize, b: usize) -> Result<Arc<BrokenSpace<T>>> {
        self.space(&super::lambda_components(m, k, b))
    }

    /// `Γ^k_{-b}(𝒯^m)`.
    pub fn gamma_space(&self, m: usize, k: usize, b: usize) -> Result<Arc<BrokenSpace<T>>> {
        self.space(&super::gamma_components(m, k, b, self.top_dim()))
    }

    /// `D^s_q : Λ^q_{-1}(𝒯^s) → Λ^{q+1}_{-1}(𝒯^s)` as a matrix (`q < s`).
    pub fn d_matrix(&self, s: usize, q: usize) -> Result<Arc<DMatrix<T>>> {
        let c = Component::new(s, q);
        self.check(c)?;
        if q >= s {
            return Err(Error::OutOfRange(format!("D on top-degree forms ({s},{q})")));
        }
        if let Some(m) = self.d_cache.lock().expect("cache").get(&c) {
            return Ok(m.clone());
        }
        let dom = self.component_space(s, q)?;
        let cod = self.component_space(s, q + 1)?;
        let local = self.tables.d_local(s, q);
        let mut a = DMatrix::zeros(cod.dim(), dom.dim());
        for (bd, bc) in dom.blocks(c).iter().zip(cod.blocks(Component::new(s, q + 1))) {
            a.view_mut((bc.offset, bd.offset), (bc.len, bd.len)).copy_from(local);
        }
        let a = Arc::new(a);
        self.d_cache.lock().expect("cache").insert(c, a.clone());
        Ok(a)
    }

    /// `T^s_q : Λ^q_{-1}(𝒯^s) → Λ^q_{-1}(𝒯^{s-1})` as a matrix (`1 ≤ s`, `q < s`).
    pub fn t_matrix(&self, s: usize, q: usize) -> Result<Arc<DMatrix<T>>> {
        let c = Component::new(s, q);
        self.check(c)?;
        if s == 0 || q >= s {
            return Err(Error::OutOfRange(format!("T on ({s},{q})")));
        }
        if let Some(m) = self.t_cache.lock().expect("cache").get(&c) {
            return Ok(m.clone());
        }
        let dom = self.component_space(s, q)?;
        let fc = Component::new(s - 1, q);
        let cod = self.component_space(s - 1, q)?;
        let flen = self.tables.dim(s - 1, q);
        let mut a = DMatrix::zeros(cod.dim(), dom.dim());
        for blk in dom.blocks(c) {
            let cell = self.pair.simplex(blk.simplex);
            for (j, fid) in self.pair.facets(blk.simplex).into_iter().enumerate() {
                let Some(fpos) = self.positions[s - 1][fid.index] else { continue };
                let face = self.pair.simplex(fid);
                let o = orientation_sign(face, cell)?;
                let local = self.tables.trace_local(s, q, j) * lit::<T>(o as f64);
                let row = cod.blocks(fc)[fpos].offset;
                let mut v = a.view_mut((row, blk.offset), (flen, blk.len));
                v += &local;
            }
        }
        let a = Arc::new(a);
        self.t_cache.lock().expect("cache").insert(c, a.clone());
        Ok(a)
    }

    /// `D^s_q` as an operator between component spaces.
    pub fn op_d(&self, s: usize, q: usize) -> Result<LinearOp<T>> {
        LinearOp::new(
            FormSpace::Broken(self.component_space(s, q)?),
            FormSpace::Broken(self.component_space(s, q + 1)?),
            (*self.d_matrix(s, q)?).clone(),
        )
    }

    /// `T^s_q` as an operator between component spaces.
    pub fn op_t(&self, s: usize, q: usize) -> Result<LinearOp<T>> {
        LinearOp::new(
            FormSpace::Broken(self.component_space(s, q)?),
            FormSpace::Broken(self.component_space(s - 1, q)?),
            (*self.t_matrix(s, q)?).clone(),
        )
    }

    /// Contributions of the graded derivative of component `c`:
    /// `(-1)^i D` into `(s, q+1)` and `-(-1)^i T` into `(s-1, q)`, `i = n - s`.
    fn graded_parts(&self, c: Component) -> Result<Vec<(Component, DMatrix<T>)>> {
        let n = self.top_dim();
        let even = (n - c.stratum).is_multiple_of(2);
        let mut out = Vec::new();
        if c.degree < c.stratum {
            out.push((Component::new(c.stratum, c.degree + 1), (*self.d_matrix(c.stratum, c.degree)?).clone() * sign::<T>(even)));
            out.push((Component::new(c.stratum - 1, c.degree), (*self.t_matrix(c.stratum, c.degree)?).clone() * sign::<T>(!even)));
        }
        Ok(out)
    }

    /// Graded distributional derivative from `dom` into `cod`.
    ///
    /// Parts of the image in components absent from `cod`, or outside a codomain
    /// subspace, must vanish; otherwise the two spaces do not form a complex step.
    pub fn d_between(&self, dom: &FormSpace<T>, cod: &FormSpace<T>) -> Result<LinearOp<T>> {
        let amb = dom.ambient().clone();
        let x = dom.to_ambient();
        let camb = cod.ambient().clone();
        let mut y = DMatrix::zeros(camb.dim(), x.ncols());
        let mut scale = T::zero();
        let mut leaks: HashMap<Component, (DMatrix<T>, T)> = HashMap::new();
        for &c in amb.components() {
            let xc = amb.extract(&x, c);
            for (target, a) in self.graded_parts(c)? {
                let img = &a * &xc;
                let sc = fro(&a) * fro(&xc);
                scale += sc;
                match camb.range(target) {
                    Some(r) => {
                        let mut v = y.rows_mut(r.start, r.len());
                        v += &img;
                    }
                    None => {
                        let e = leaks.entry(target).or_insert((DMatrix::zeros(img.nrows(), img.ncols()), T::zero()));
                        e.0 += &img;
                        e.1 += sc;
                    }
                }
            }
        }
        let tol = lit::<T>(T::tol(LEAK_TOL));
        for (c, (img, sc)) in &leaks {
            if fro(img) > tol * *sc {
                return Err(Error::Verification(format!(
                    "d from {} has a nonzero part in component ({},{}) outside {} (relative size {:.3e})",
                    dom.label(),
                    c.stratum,
                    c.degree,
                    cod.label(),
                    (fro(img) / *sc).as_f64()
                )));
            }
        }
        let matrix = match cod {
            FormSpace::Broken(_) => y,
            FormSpace::Sub(s) => {
                let b = s.basis();
                let coeff = b.transpose() * camb.gram() * &y;
                let resid = &y - b * &coeff;
                let rn = camb.norm(&resid);
                let yn = camb.norm(&y);
                if rn > tol * scale {
                    return Err(Error::Verification(format!(
                        "d from {} does not map into {} (relative residual {:.3e})",
                        dom.label(),
                        cod.label(),
                        (rn / yn.max(scale)).as_f64()
                    )));
                }
                coeff
            }
        };
        LinearOp::new(dom.clone(), cod.clone(), matrix)
    }

    /// `Λ^q(𝒯^s) = ker T^s_q` (vertical) or `Γ^q(𝒯^s) = ker D^s_q` (horizontal).
    pub fn kernel_space(&self, s: usize, q: usize, which: Which) -> Result<Arc<Subspace<T>>> {
        let c = Component::new(s, q);
        self.check(c)?;
        if let Some(k) = self.kernels.lock().expect("cache").get(&(c, which)) {
            return Ok(k.clone());
        }
        let space = self.component_space(s, q)?;
        let a = match which {
            Which::Vertical if s >= 1 && q < s => Some(self.t_matrix(s, q)?),
            Which::Horizontal if q < s => Some(self.d_matrix(s, q)?),
            _ => None,
        };
        let fs = FormSpace::Broken(space.clone());
        let basis = match a {
            Some(a) => metric_kernel(&a, &fs),
            None => fs.unwhiten(&DMatrix::identity(space.dim(), space.dim())),
        };
        let label = match which {
            Which::Vertical => format!("ker T({s},{q})"),
            Which::Horizontal => format!("ker D({s},{q})"),
        };
        let sub = Arc::new(Subspace::new(space, basis, label));
        self.kernels.lock().expect("cache").insert((c, which), sub.clone());
        Ok(sub)
    }
}

/// Gram-orthonormal basis (in `dom` coordinates) of the kernel of `a`.
pub fn metric_kernel<T: Scalar>(a: &DMatrix<T>, dom: &FormSpace<T>) -> DMatrix<T> {
    let n = dom.dim();
    if a.nrows() == 0 || n == 0 {
        return dom.unwhiten(&DMatrix::identity(n, n));
    }
    // a L^{-T}
    let aw = dom.whiten_dual(&a.transpose()).transpose();
    dom.unwhiten(&null_space(&aw, RANK_RTOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::catalog::{generate, MarkMode};
    use crate::polyforms::checks::constant_coefficients;
    use crate::polyforms::Family;

    fn asm(key: &str, mode: MarkMode) -> Assembler<f64> {
        let pair = Arc::new(generate::<f64>(key, mode).unwrap());
        let tables = Arc::new(LocalTables::new(&Family::whitney(), pair.top_dim()).unwrap());
        Assembler::new(pair, tables, Metric::Weighted).unwrap()
    }

    #[test]
    fn single_triangle_dimensions() {
        let a = asm("triangle", MarkMode::None);
        assert_eq!(a.component_space(2, 1).unwrap().dim(), 3);
        assert_eq!(a.component_space(1, 0).unwrap().dim(), 6);
        let f = asm("triangle", MarkMode::Full);
        assert_eq!(f.component_space(1, 0).unwrap().dim(), 0);
    }

    #[test]
    fn interval_jump_signs() {
        // two cells [v0,v1], [v1,v2]; indicator of the first cell
        let a = asm("interval(2)", MarkMode::None);
        let t = a.t_matrix(1, 0).unwrap();
        let dom = a.component_space(1, 0).unwrap();
        let c = constant_coefficients(a.tables(), 1).unwrap();
        let cv = constant_coefficients(a.tables(), 0).unwrap()[0];
        let mut x = DMatrix::zeros(dom.dim(), 1);
        x.view_mut((dom.blocks(Component::new(1, 0))[0].offset, 0), (c.len(), 1)).copy_from(&c);
        let y = &*t * x;
        let v: Vec<f64> = y.iter().map(|x| x / cv).collect();
        assert!((v[0] + 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12 && v[2].abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn conforming_kernel_counts() {
        // unmarked boundary faces impose essential conditions
        let a = asm("square_grid(1)", MarkMode::None);
        assert_eq!(a.kernel_space(2, 0, Which::Vertical).unwrap().dim(), 0);
        let f = asm("square_grid(1)", MarkMode::Full);
        assert_eq!(f.kernel_space(2, 0, Which::Vertical).unwrap().dim(), 4);
        assert_eq!(a.kernel_space(1, 0, Which::Horizontal).unwrap().dim(), 5);
    }

    #[test]
    fn kernel_bases_are_orthonormal() {
        let a = asm("square_grid(2)", MarkMode::Half);
        for (s, q) in [(2, 0), (2, 1), (1, 0)] {
            let k = a.kernel_space(s, q, Which::Vertical).unwrap();
            assert!(k.orthonormality_defect() < 1e-10);
        }
    }

    fn rel(a: &DMatrix<f64>, s: f64) -> f64 {
        if s == 0.0 { a.norm() } else { a.norm() / s }
    }

    #[test]
    fn d_and_t_are_differentials_and_commute() {
        let pair = Arc::new(generate::<f64>("cube_tet", MarkMode::Half).unwrap());
        let tables = Arc::new(LocalTables::new(&Family::TrimmedP(2), 3).unwrap());
        let a = Assembler::new(pair, tables, Metric::Weighted).unwrap();
        for s in 0..=3 {
            for q in 0..=s {
                if q + 1 < s {
                    let (d1, d2) = (a.d_matrix(s, q).unwrap(), a.d_matrix(s, q + 1).unwrap());
                    assert!(rel(&(&*d2 * &*d1), d2.norm() * d1.norm()) < 1e-12);
                }
                if s >= 2 && q < s - 1 {
                    let (t1, t2) = (a.t_matrix(s, q).unwrap(), a.t_matrix(s - 1, q).unwrap());
                    assert!(rel(&(&*t2 * &*t1), t2.norm() * t1.norm()) < 1e-12);
                }
                if s >= 1 && q + 1 < s {
                    let td = &*a.t_matrix(s, q + 1).unwrap() * &*a.d_matrix(s, q).unwrap();
                    let dt = &*a.d_matrix(s - 1, q).unwrap() * &*a.t_matrix(s, q).unwrap();
                    assert!(rel(&(&td - &dt), td.norm().max(1.0)) < 1e-12, "({s},{q})");
                }
            }
        }
    }

    #[test]
    fn graded_d_squares_to_zero() {
        let a = asm("tetrahedron", MarkMode::Half);
        for k in 0..2 {
            for b in 1..=3 {
                let x = FormSpace::Broken(a.lambda_space(3, k, b).unwrap());
                let y = FormSpace::Broken(a.lambda_space(3, k + 1, b + 1).unwrap());
                let z = FormSpace::Broken(a.lambda_space(3, k + 2, b + 2).unwrap());
                let d1 = a.d_between(&x, &y).unwrap();
                let d2 = a.d_between(&y, &z).unwrap();
                let dd = d2.compose(&d1).unwrap();
                assert!(rel(dd.matrix(), d2.matrix().norm() * d1.matrix().norm()) < 1e-12, "k={k} b={b}");
            }
        }
    }

    #[test]
    fn graded_d_on_conforming_kernel_is_d() {
        let a = asm("square_grid(2)", MarkMode::Full);
        let k0 = FormSpace::Sub(a.kernel_space(2, 0, Which::Vertical).unwrap());
        let k1 = FormSpace::Sub(a.kernel_space(2, 1, Which::Vertical).unwrap());
        let d = a.d_between(&k0, &k1).unwrap();
        assert_eq!(d.matrix().shape(), (k1.dim(), k0.dim()));
        // into the broken space the image is just D
        let full = FormSpace::Broken(a.component_space(2, 1).unwrap());
        let db = a.d_between(&k0, &full).unwrap();
        let expect = &*a.d_matrix(2, 0).unwrap() * k0.to_ambient();
        assert!((db.matrix() - expect).norm() < 1e-12);
    }

    #[test]
    fn graded_d_rejects_leaks() {
        let a = asm("triangle", MarkMode::None);
        let x = FormSpace::Broken(a.component_space(2, 0).unwrap());
        let y = FormSpace::Broken(a.component_space(2, 1).unwrap());
        assert!(matches!(a.d_between(&x, &y), Err(Error::Verification(_))));
    }

    #[test]
    fn adjoint_matches_inner_products() {
        let a = asm("square_grid(2)", MarkMode::Half);
        let op = a.op_t(2, 1).unwrap();
        let adj = op.adjoint();
        let x = DMatrix::from_fn(op.domain().dim(), 1, |i, _| ((i * 7 + 3) % 11) as f64 - 5.0);
        let y = DMatrix::from_fn(op.codomain().dim(), 1, |i, _| ((i * 5 + 1) % 13) as f64 - 6.0);
        let lhs = op.codomain().inner(&op.apply(&x), &y)[(0, 0)];
        let rhs = op.domain().inner(&x, &adj.apply(&y))[(0, 0)];
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
