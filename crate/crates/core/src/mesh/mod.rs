//! Oriented simplicial complexes relative to a subcomplex.
//!
//! Simplices are stored with strictly increasing vertex lists. The positive
//! orientation is the ascending order, except for top-dimensional cells that
//! fill their ambient space: those carry `sign = -1` when the ascending order
//! has negative Euclidean volume.

pub mod catalog;

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{exact_rank, integer_rank};
use crate::scalar::{lit, Scalar};

/// Position of a simplex in its stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimplexId {
    pub dim: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    /// +1 if ascending vertex order is the stored orientation, -1 otherwise.
    pub sign: i8,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Whether `self` is a face of `other` (not necessarily proper).
    pub fn is_face_of(&self, other: &Simplex) -> bool {
        is_subset(&self.vertices, &other.vertices)
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// A finite simplicial complex `T` with a subcomplex `U` and vertex coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativePair<T: Scalar> {
    ambient_dim: usize,
    top_dim: usize,
    coords: Vec<Vec<T>>,
    strata: Vec<Vec<Simplex>>,
    marked: Vec<Vec<bool>>,
    lookup: HashMap<Vec<usize>, SimplexId>,
}

/// `(-1)^j` where `j` is the position in `cell` of the vertex missing from `face`.
///
/// Both vertex lists must be ascending; this ignores stored orientation signs.
pub fn omitted_position(face: &[usize], cell: &[usize]) -> Option<usize> {
    if face.len() + 1 != cell.len() {
        return None;
    }
    let mut j = 0;
    while j < face.len() && face[j] == cell[j] {
        j += 1;
    }
    if face[j..] == cell[j + 1..] {
        Some(j)
    } else {
        None
    }
}

/// Relative orientation `o(F, C)` of a codimension-one face.
pub fn orientation_sign(face: &Simplex, cell: &Simplex) -> Result<i8> {
    let j = omitted_position(&face.vertices, &cell.vertices).ok_or_else(|| Error::NotAFace {
        face: face.vertices.clone(),
        cell: cell.vertices.clone(),
    })?;
    let parity = if j % 2 == 0 { 1 } else { -1 };
    Ok(parity * face.sign * cell.sign)
}

fn sorted_cell(cell: &[usize], nverts: usize) -> Result<Vec<usize>> {
    if cell.is_empty() {
        return Err(Error::NotASimplex(cell.to_vec(), "empty vertex list".into()));
    }
    for &v in cell {
        if v >= nverts {
            return Err(Error::IndexOutOfRange {
                cell: cell.to_vec(),
                index: v,
                count: nverts,
            });
        }
    }
    let mut s = cell.to_vec();
    s.sort_unstable();
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::NotASimplex(cell.to_vec(), "repeated vertex".into()));
    }
    Ok(s)
}

/// All nonempty subsets of an ascending list, by size.
fn subfaces(v: &[usize]) -> Vec<Vec<usize>> {
    let n = v.len();
    let mut out = Vec::with_capacity((1 << n) - 1);
    for mask in 1u32..(1u32 << n) {
        out.push(
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| v[i])
                .collect(),
        );
    }
    out
}

fn edge_matrix<T: Scalar>(coords: &[Vec<T>], verts: &[usize]) -> DMatrix<T> {
    let n = coords[verts[0]].len();
    let m = verts.len() - 1;
    let mut e = DMatrix::zeros(n, m);
    for j in 0..m {
        for i in 0..n {
            e[(i, j)] = coords[verts[j + 1]][i] - coords[verts[0]][i];
        }
    }
    e
}

impl<T: Scalar> RelativePair<T> {
    /// Closure of `cells` relative to the closure of `marked`.
    pub fn build(vertices: Vec<Vec<T>>, cells: &[Vec<usize>], marked: &[Vec<usize>]) -> Result<Self> {
        Self::build_with_top(vertices, cells, marked, None)
    }

    fn build_with_top(
        vertices: Vec<Vec<T>>,
        cells: &[Vec<usize>],
        marked: &[Vec<usize>],
        top_override: Option<usize>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("no cells".into()));
        }
        let nverts = vertices.len();
        let ambient_dim = vertices.first().map(|v| v.len()).unwrap_or(0);
        if vertices.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::InvalidMesh("vertex coordinates of unequal length".into()));
        }
        let mut seen = BTreeSet::new();
        let mut all: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut top_dim = 0;
        for c in cells {
            let s = sorted_cell(c, nverts)?;
            if !seen.insert(s.clone()) {
                return Err(Error::DuplicateCell(c.clone()));
            }
            if s.len() - 1 > ambient_dim {
                return Err(Error::NotASimplex(
                    c.clone(),
                    format!("dimension {} exceeds ambient dimension {ambient_dim}", s.len() - 1),
                ));
            }
            top_dim = top_dim.max(s.len() - 1);
            all.extend(subfaces(&s));
        }
        if let Some(t) = top_override {
            top_dim = t;
        }
        let mut strata: Vec<Vec<Simplex>> = vec![Vec::new(); top_dim + 1];
        // BTreeSet iteration is lexicographic, so each stratum comes out sorted.
        for v in all {
            let d = v.len() - 1;
            strata[d].push(Simplex { vertices: v, sign: 1 });
        }
        for cell in seen.iter() {
            let e = edge_matrix(&vertices, cell);
            let g = e.transpose() * &e;
            let det = if g.nrows() == 0 { T::one() } else { g.determinant() };
            let scale = e.iter().fold(T::zero(), |a, x| a.max(x.abs()));
            let m = cell.len() - 1;
            if m > 0 && det <= lit::<T>(1e-24) * scale.powi(2 * m as i32) {
                return Err(Error::DegenerateSimplex(cell.clone()));
            }
        }
        if ambient_dim == top_dim {
            for s in strata[top_dim].iter_mut() {
                if s.vertices.len() == 1 {
                    continue;
                }
                let det = edge_matrix(&vertices, &s.vertices).determinant();
                if det < T::zero() {
                    s.sign = -1;
                }
            }
        }
        let mut lookup = HashMap::new();
        for (d, st) in strata.iter().enumerate() {
            for (i, s) in st.iter().enumerate() {
                lookup.insert(s.vertices.clone(), SimplexId { dim: d, index: i });
            }
        }
        let mut flags: Vec<Vec<bool>> = strata.iter().map(|s| vec![false; s.len()]).collect();
        for mk in marked {
            let s = sorted_cell(mk, nverts)?;
            let id = *lookup
                .get(&s)
                .ok_or_else(|| Error::MarkedNotInComplex(mk.clone()))?;
            flags[id.dim][id.index] = true;
            for f in subfaces(&s) {
                let fid = lookup[&f];
                flags[fid.dim][fid.index] = true;
            }
        }
        Ok(Self {
            ambient_dim,
            top_dim,
            coords: vertices,
            strata,
            marked: flags,
            lookup,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn top_dim(&self) -> usize {
        self.top_dim
    }

    pub fn coords(&self) -> &[Vec<T>] {
        &self.coords
    }

    pub fn stratum(&self, m: usize) -> &[Simplex] {
        self.strata.get(m).map(|s| s.as_slice()).unwrap_or(&[])
    }

    pub fn simplex(&self, id: SimplexId) -> &Simplex {
        &self.strata[id.dim][id.index]
    }

    pub fn find(&self, vertices: &[usize]) -> Option<SimplexId> {
        let mut v = vertices.to_vec();
        v.sort_unstable();
        self.lookup.get(&v).copied()
    }

    pub fn is_marked(&self, id: SimplexId) -> bool {
        self.marked[id.dim][id.index]
    }

    pub fn num_simplices(&self, m: usize) -> usize {
        self.stratum(m).len()
    }

    /// Ids of the unmarked `m`-simplices, in lexicographic order.
    pub fn active(&self, m: usize) -> Vec<SimplexId> {
        (0..self.num_simplices(m))
            .map(|index| SimplexId { dim: m, index })
            .filter(|id| !self.is_marked(*id))
            .collect()
    }

    /// Marked simplices as vertex lists, all dimensions.
    pub fn marked_simplices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for (d, st) in self.strata.iter().enumerate() {
            for (i, s) in st.iter().enumerate() {
                if self.marked[d][i] {
                    out.push(s.vertices.clone());
                }
            }
        }
        out
    }

    /// Number of simplices in the subcomplex, per dimension.
    pub fn marked_counts(&self) -> Vec<usize> {
        self.marked.iter().map(|f| f.iter().filter(|&&b| b).count()).collect()
    }

    /// Relative boundary matrix `m`-chains -> `(m-1)`-chains on unmarked simplices.
    pub fn boundary_matrix(&self, m: usize) -> Result<DMatrix<i64>> {
        if m == 0 || m > self.top_dim {
            return Err(Error::OutOfRange(format!("boundary dimension {m}")));
        }
        let cols = self.active(m);
        let rows = self.active(m - 1);
        let row_of: HashMap<usize, usize> =
            rows.iter().enumerate().map(|(r, id)| (id.index, r)).collect();
        let mut b = DMatrix::zeros(rows.len(), cols.len());
        for (c, id) in cols.iter().enumerate() {
            let cell = self.simplex(*id);
            for j in 0..=m {
                let mut f = cell.vertices.clone();
                f.remove(j);
                let fid = self.lookup[&f];
                if let Some(&r) = row_of.get(&fid.index) {
                    b[(r, c)] = orientation_sign(self.simplex(fid), cell)? as i64;
                }
            }
        }
        Ok(b)
    }

    /// Relative Betti numbers `b_0 .. b_n`, from exact integer ranks.
    pub fn betti_numbers(&self) -> Vec<usize> {
        let n = self.top_dim;
        let ranks: Vec<usize> = (0..=n + 1)
            .map(|m| {
                if m == 0 || m > n {
                    0
                } else {
                    exact_rank(&self.boundary_matrix(m).expect("in range"))
                }
            })
            .collect();
        (0..=n)
            .map(|m| self.active(m).len() - ranks[m] - ranks[m + 1])
            .collect()
    }

    /// Element patch `(M_F, N_F)` of a simplex.
    pub fn patch_pair(&self, face: &[usize]) -> Result<RelativePair<T>> {
        let fid = self
            .find(face)
            .ok_or_else(|| Error::UnknownSimplex(face.to_vec()))?;
        let f = self.simplex(fid).clone();
        let n = self.top_dim;
        let cells: Vec<Vec<usize>> = self
            .stratum(n)
            .iter()
            .filter(|c| f.is_face_of(c))
            .map(|c| c.vertices.clone())
            .collect();
        if cells.is_empty() {
            // F lies in no n-simplex: the patch is empty.
            return Ok(Self {
                ambient_dim: self.ambient_dim,
                top_dim: n,
                coords: self.coords.clone(),
                strata: vec![Vec::new(); n + 1],
                marked: vec![Vec::new(); n + 1],
                lookup: HashMap::new(),
            });
        }
        let mut members: BTreeSet<Vec<usize>> = BTreeSet::new();
        for c in &cells {
            members.extend(subfaces(c));
        }
        let marked: Vec<Vec<usize>> = members
            .iter()
            .filter(|g| g.len() <= n)
            .filter(|g| {
                let gid = self.lookup[*g];
                !f.is_face_of(self.simplex(gid)) || self.is_marked(gid)
            })
            .cloned()
            .collect();
        let mut p = Self::build_with_top(self.coords.clone(), &cells, &marked, Some(n))?;
        // keep the orientation of the parent complex
        for d in 0..=n {
            for s in p.strata[d].iter_mut() {
                s.sign = self.simplex(self.lookup[&s.vertices]).sign;
            }
        }
        Ok(p)
    }

    /// Per-simplex local patch condition: `b_m(M_F, N_F) = 0` for `m < n`.
    pub fn check_local_patch_condition(&self) -> PatchReport {
        let n = self.top_dim;
        let mut entries = Vec::new();
        for d in 0..=n {
            for s in self.stratum(d) {
                let betti = self
                    .patch_pair(&s.vertices)
                    .map(|p| p.betti_numbers())
                    .unwrap_or_else(|_| vec![0; n + 1]);
                let pass = betti.iter().take(n).all(|&b| b == 0);
                entries.push(PatchEntry {
                    simplex: s.vertices.clone(),
                    betti,
                    pass,
                });
            }
        }
        let pass = entries.iter().all(|e| e.pass);
        PatchReport { entries, pass }
    }

    /// The `m`-skeleton with marked `m`-simplices removed, relative to the marked `(m-1)`-skeleton.
    pub fn skeleton_pair(&self, m: usize) -> Result<RelativePair<T>> {
        if m > self.top_dim {
            return Err(Error::OutOfRange(format!("skeleton dimension {m}")));
        }
        if m == self.top_dim {
            return Ok(self.clone());
        }
        let mut cells = Vec::new();
        let mut marked = Vec::new();
        for d in 0..=m {
            for id in (0..self.num_simplices(d)).map(|index| SimplexId { dim: d, index }) {
                let s = &self.simplex(id).vertices;
                if d == m && self.is_marked(id) {
                    continue;
                }
                cells.push(s.clone());
                if d < m && self.is_marked(id) {
                    marked.push(s.clone());
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::InvalidMesh(format!("{m}-skeleton is empty")));
        }
        Self::build_with_top(self.coords.clone(), &cells, &marked, Some(m))
    }

    /// Diameter of a simplex; for vertices, the mean length of adjacent edges.
    pub fn diameter(&self, id: SimplexId) -> Result<T> {
        let s = self.simplex(id);
        let dist = |a: usize, b: usize| -> T {
            let pa = DVector::from_vec(self.coords[a].clone());
            let pb = DVector::from_vec(self.coords[b].clone());
            (pa - pb).norm()
        };
        if s.vertices.len() == 1 {
            let v = s.vertices[0];
            let lens: Vec<T> = self
                .stratum(1)
                .iter()
                .filter(|e| e.vertices.contains(&v))
                .map(|e| dist(e.vertices[0], e.vertices[1]))
                .collect();
            if lens.is_empty() {
                return Err(Error::IsolatedVertex(v));
            }
            let sum = lens.iter().fold(T::zero(), |a, &b| a + b);
            return Ok(sum / lit::<T>(lens.len() as f64));
        }
        let mut h = T::zero();
        for (i, &a) in s.vertices.iter().enumerate() {
            for &b in &s.vertices[i + 1..] {
                h = h.max(dist(a, b));
            }
        }
        Ok(h)
    }

    /// Mesh weight `h_C^(n - dim C)`.
    pub fn mesh_weight(&self, id: SimplexId) -> Result<T> {
        let e = self.top_dim - id.dim;
        if e == 0 {
            return Ok(T::one());
        }
        Ok(self.diameter(id)?.powi(e as i32))
    }

    /// Coordinates of the vertices of a simplex, in stored order.
    pub fn simplex_coords(&self, id: SimplexId) -> Vec<Vec<T>> {
        self.simplex(id)
            .vertices
            .iter()
            .map(|&v| self.coords[v].clone())
            .collect()
    }

    /// Ids of the codimension-one faces of an `m`-simplex, indexed by omitted position.
    pub fn facets(&self, id: SimplexId) -> Vec<SimplexId> {
        let s = self.simplex(id);
        (0..s.vertices.len())
            .map(|j| {
                let mut f = s.vertices.clone();
                f.remove(j);
                self.lookup[&f]
            })
            .collect()
    }

    /// Convert to the serialisable mesh-file representation (cells = top simplices of each maximal face).
    pub fn to_mesh_file(&self) -> MeshFile {
        let mut cells = Vec::new();
        for d in (0..=self.top_dim).rev() {
            for s in self.stratum(d) {
                let covered = self
                    .strata
                    .get(d + 1)
                    .map(|up| up.iter().any(|c| s.is_face_of(c)))
                    .unwrap_or(false);
                if !covered {
                    cells.push(s.vertices.clone());
                }
            }
        }
        MeshFile {
            ambient_dim: self.ambient_dim,
            vertices: self
                .coords
                .iter()
                .map(|p| p.iter().map(|x| x.as_f64()).collect())
                .collect(),
            cells,
            marked: self.marked_simplices(),
        }
    }
}

/// Exact Betti numbers of a generic integer chain complex given its boundary maps.
pub fn chain_betti(dims: &[usize], boundaries: &[DMatrix<i64>]) -> Vec<usize> {
    let ranks: Vec<usize> = boundaries
        .iter()
        .map(|b| {
            let rows = (0..b.nrows())
                .map(|i| (0..b.ncols()).map(|j| num_bigint::BigInt::from(b[(i, j)])).collect())
                .collect();
            integer_rank(rows, b.ncols())
        })
        .collect();
    (0..dims.len())
        .map(|m| {
            let out = if m == 0 { 0 } else { ranks[m - 1] };
            let inn = ranks.get(m).copied().unwrap_or(0);
            dims[m] - out - inn
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchEntry {
    pub simplex: Vec<usize>,
    pub betti: Vec<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchReport {
    pub entries: Vec<PatchEntry>,
    pub pass: bool,
}

impl PatchReport {
    pub fn failures(&self) -> impl Iterator<Item = &PatchEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// On-disk mesh description. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub ambient_dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default)]
    pub marked: Vec<Vec<usize>>,
}

impl MeshFile {
    pub fn into_pair<T: Scalar>(self) -> Result<RelativePair<T>> {
        for (i, v) in self.vertices.iter().enumerate() {
            if v.len() != self.ambient_dim {
                return Err(Error::Parse(format!(
                    "vertex {i} has {} coordinates, expected ambient_dim = {}",
                    v.len(),
                    self.ambient_dim
                )));
            }
        }
        let coords = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|&x| lit::<T>(x)).collect())
            .collect();
        RelativePair::build(coords, &self.cells, &self.marked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]
    }

    #[test]
    fn closure_of_one_triangle() {
        let p = RelativePair::build(tri(), &[vec![0, 1, 2]], &[]).unwrap();
        assert_eq!(
            (p.num_simplices(0), p.num_simplices(1), p.num_simplices(2)),
            (3, 3, 1)
        );
        assert!(p.marked_simplices().is_empty());
    }

    #[test]
    fn marked_edges_close_over_vertices() {
        let p = RelativePair::build(tri(), &[vec![0, 1, 2]], &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        assert_eq!(p.marked_counts(), vec![3, 3, 0]);
    }

    #[test]
    fn negative_volume_cell_is_flipped() {
        let v = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let p = RelativePair::build(v, &[vec![0, 1, 2, 3]], &[]).unwrap();
        assert_eq!(p.stratum(3)[0].sign, -1);
        assert!(p.stratum(2).iter().all(|s| s.sign == 1));
    }

    #[test]
    fn orientation_signs_of_triangle_edges() {
        let c = Simplex { vertices: vec![0, 1, 2], sign: 1 };
        let f = |v: Vec<usize>| Simplex { vertices: v, sign: 1 };
        assert_eq!(orientation_sign(&f(vec![1, 2]), &c).unwrap(), 1);
        assert_eq!(orientation_sign(&f(vec![0, 2]), &c).unwrap(), -1);
        assert_eq!(orientation_sign(&f(vec![0, 1]), &c).unwrap(), 1);
        assert!(orientation_sign(&f(vec![0]), &c).is_err());
    }

    #[test]
    fn boundary_of_triangle() {
        let p = RelativePair::build(tri(), &[vec![0, 1, 2]], &[]).unwrap();
        let b1 = p.boundary_matrix(1).unwrap();
        assert_eq!(b1.shape(), (3, 3));
        assert_eq!(exact_rank(&b1), 2);
        for c in 0..3 {
            let col: Vec<i64> = b1.column(c).iter().copied().collect();
            assert_eq!(col.iter().filter(|&&x| x != 0).count(), 2);
            assert_eq!(col.iter().sum::<i64>(), 0);
        }
        let full = RelativePair::build(tri(), &[vec![0, 1, 2]], &[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        assert_eq!(full.boundary_matrix(2).unwrap().shape(), (0, 1));
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(
            RelativePair::build(tri(), &[vec![0, 1, 5]], &[]),
            Err(Error::IndexOutOfRange { index: 5, .. })
        ));
        assert!(matches!(
            RelativePair::build(tri(), &[vec![0, 1, 2], vec![2, 1, 0]], &[]),
            Err(Error::DuplicateCell(_))
        ));
        assert!(matches!(
            RelativePair::build(tri(), &[vec![0, 1]], &[vec![1, 2]]),
            Err(Error::MarkedNotInComplex(_))
        ));
        let flat = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        assert!(matches!(
            RelativePair::build(flat, &[vec![0, 1, 2]], &[]),
            Err(Error::DegenerateSimplex(_))
        ));
    }

    #[test]
    fn patch_of_top_cell_is_its_boundary() {
        let p = RelativePair::build(tri(), &[vec![0, 1, 2]], &[]).unwrap();
        let q = p.patch_pair(&[0, 1, 2]).unwrap();
        assert_eq!(q.marked_counts(), vec![3, 3, 0]);
        assert_eq!(q.betti_numbers(), vec![0, 0, 1]);
    }

    #[test]
    fn marked_face_is_in_its_own_patch_boundary() {
        let p = RelativePair::build(tri(), &[vec![0, 1, 2]], &[vec![0, 1]]).unwrap();
        let q = p.patch_pair(&[0, 1]).unwrap();
        assert!(q.is_marked(q.find(&[0, 1]).unwrap()));
    }

    #[test]
    fn vertex_weight_uses_mean_adjacent_edge() {
        let v = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]];
        let p = RelativePair::<f64>::build(v, &[vec![0, 1], vec![0, 2]], &[]).unwrap();
        // top_dim is 1 here; rebuild a 2D pair to exercise the exponent
        let id = p.find(&[0]).unwrap();
        assert!((p.diameter(id).unwrap() - 1.5).abs() < 1e-14);
        let v2 = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]];
        let p2 = RelativePair::<f64>::build(v2, &[vec![0, 1, 2]], &[]).unwrap();
        let e = p2.find(&[0, 1]).unwrap();
        assert!((p2.mesh_weight(e).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(p2.mesh_weight(p2.find(&[0, 1, 2]).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn skeleton_identity_and_idempotence() {
        let p = catalog::generate::<f64>("tetrahedron", catalog::MarkMode::Full).unwrap();
        assert_eq!(p.skeleton_pair(3).unwrap(), p);
        let s = p.skeleton_pair(2).unwrap();
        assert_eq!(s.top_dim(), 2);
        assert_eq!(s.skeleton_pair(2).unwrap(), s);
        // all triangles were marked, so the 2-skeleton pair has no top cells
        assert_eq!(s.num_simplices(2), 0);
        let z = catalog::generate::<f64>("triangle", catalog::MarkMode::Half)
            .unwrap()
            .skeleton_pair(0)
            .unwrap();
        assert_eq!(z.active(0).len(), 1);
    }
}
