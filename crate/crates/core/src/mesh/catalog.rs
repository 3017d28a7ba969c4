//! Small generated meshes with known topology.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RelativePair;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Which part of the boundary goes into the subcomplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkMode {
    None,
    /// The whole boundary.
    Full,
    /// Boundary facets lying in the hyperplane `x_0 = min x_0`.
    Half,
}

impl FromStr for MarkMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "full" => Ok(Self::Full),
            "half" => Ok(Self::Half),
            _ => Err(Error::InvalidParams(format!("unknown mark mode `{s}`"))),
        }
    }
}

/// Catalog entry after parameter parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CatalogMesh {
    Interval(usize),
    Triangle,
    Tetrahedron,
    SquareGrid(usize),
    CubeTet,
    Annulus(usize),
    SolidRing(usize),
    SphereBoundary(usize),
    /// Two triangles sharing a single vertex.
    Pinched,
}

impl FromStr for CatalogMesh {
    type Err = Error;

    /// Accepts `name` or `name(p)`, e.g. `annulus(2)`.
    fn from_str(key: &str) -> Result<Self> {
        let key = key.trim();
        let (name, param) = match key.find('(') {
            Some(i) => {
                let inner = key[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::InvalidParams(format!("unbalanced parameter in `{key}`")))?;
                let p = inner
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParams(format!("bad parameter in `{key}`")))?;
                (&key[..i], Some(p))
            }
            None => (key, None),
        };
        let need = |d: usize| -> Result<usize> {
            let p = param.unwrap_or(d);
            if p == 0 {
                Err(Error::InvalidParams(format!("`{name}` needs a positive parameter")))
            } else {
                Ok(p)
            }
        };
        let none = || -> Result<()> {
            match param {
                None => Ok(()),
                Some(_) => Err(Error::InvalidParams(format!("`{name}` takes no parameter"))),
            }
        };
        match name {
            "interval" => Ok(Self::Interval(need(1)?)),
            "triangle" => none().map(|_| Self::Triangle),
            "tetrahedron" => none().map(|_| Self::Tetrahedron),
            "square_grid" | "square" => Ok(Self::SquareGrid(need(1)?)),
            "cube_tet" => none().map(|_| Self::CubeTet),
            "annulus" => Ok(Self::Annulus(need(1)?)),
            "solid_ring" => Ok(Self::SolidRing(need(1)?)),
            "sphere_boundary" => Ok(Self::SphereBoundary(param.unwrap_or(2))),
            "pinched" => none().map(|_| Self::Pinched),
            _ => Err(Error::UnknownCatalog(key.to_string())),
        }
    }
}

struct Raw {
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
}

fn interval(k: usize) -> Raw {
    Raw {
        vertices: (0..=k).map(|i| vec![i as f64 / k as f64]).collect(),
        cells: (0..k).map(|i| vec![i, i + 1]).collect(),
    }
}

fn square_grid(s: usize) -> Raw {
    let id = |i: usize, j: usize| j * (s + 1) + i;
    let mut vertices = Vec::new();
    for j in 0..=s {
        for i in 0..=s {
            vertices.push(vec![i as f64 / s as f64, j as f64 / s as f64]);
        }
    }
    let mut cells = Vec::new();
    for j in 0..s {
        for i in 0..s {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            cells.push(vec![a, b, d]);
            cells.push(vec![a, c, d]);
        }
    }
    Raw { vertices, cells }
}

fn cube_tet() -> Raw {
    let mut vertices = Vec::new();
    for z in 0..2 {
        for y in 0..2 {
            for x in 0..2 {
                vertices.push(vec![x as f64, y as f64, z as f64]);
            }
        }
    }
    // Kuhn subdivision: one tetrahedron per monotone path from 000 to 111.
    let mut cells = Vec::new();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for p in perms {
        let mut v = 0usize;
        let mut cell = vec![v];
        for axis in p {
            v |= 1 << axis;
            cell.push(v);
        }
        cells.push(cell);
    }
    Raw { vertices, cells }
}

fn annulus(s: usize) -> Raw {
    let segs = 4 * s;
    let mut vertices = Vec::new();
    for i in 0..segs {
        let t = 2.0 * PI * i as f64 / segs as f64;
        vertices.push(vec![t.cos(), t.sin()]);
        vertices.push(vec![2.0 * t.cos(), 2.0 * t.sin()]);
    }
    let inner = |i: usize| 2 * (i % segs);
    let outer = |i: usize| 2 * (i % segs) + 1;
    let mut cells = Vec::new();
    for i in 0..segs {
        cells.push(vec![inner(i), outer(i), outer(i + 1)]);
        cells.push(vec![inner(i), outer(i + 1), inner(i + 1)]);
    }
    Raw { vertices, cells }
}

fn solid_ring(s: usize) -> Raw {
    let secs = 4 * s;
    // triangular cross-section in the (r, z) half-plane
    let profile = [(1.0, 0.0), (2.0, 0.0), (1.5, 1.0)];
    let mut vertices = Vec::new();
    for i in 0..secs {
        let t = 2.0 * PI * i as f64 / secs as f64;
        for (r, z) in profile {
            vertices.push(vec![r * t.cos(), r * t.sin(), z]);
        }
    }
    let v = |i: usize, p: usize| 3 * (i % secs) + p;
    let mut cells = Vec::new();
    for i in 0..secs {
        let (a0, a1, a2) = (v(i, 0), v(i, 1), v(i, 2));
        let (b0, b1, b2) = (v(i + 1, 0), v(i + 1, 1), v(i + 1, 2));
        cells.push(vec![a0, a1, a2, b2]);
        cells.push(vec![a0, a1, b1, b2]);
        cells.push(vec![a0, b0, b1, b2]);
    }
    Raw { vertices, cells }
}

fn sphere_boundary(n: usize) -> Raw {
    let mut vertices = vec![vec![0.0; n + 1]];
    for i in 0..=n {
        let mut e = vec![0.0; n + 1];
        e[i] = 1.0;
        vertices.push(e);
    }
    let cells = (0..n + 2)
        .map(|skip| (0..n + 2).filter(|&v| v != skip).collect())
        .collect();
    Raw { vertices, cells }
}

fn pinched() -> Raw {
    Raw {
        vertices: vec![
            vec![-1.0, 0.0],
            vec![-1.0, 1.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, -1.0],
        ],
        cells: vec![vec![0, 1, 2], vec![2, 3, 4]],
    }
}

/// Generate a catalog mesh and mark its boundary according to `mode`.
pub fn build<T: Scalar>(mesh: CatalogMesh, mode: MarkMode) -> Result<RelativePair<T>> {
    let raw = match mesh {
        CatalogMesh::Interval(k) => interval(k),
        CatalogMesh::Triangle => Raw {
            vertices: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            cells: vec![vec![0, 1, 2]],
        },
        CatalogMesh::Tetrahedron => Raw {
            vertices: vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            cells: vec![vec![0, 1, 2, 3]],
        },
        CatalogMesh::SquareGrid(s) => square_grid(s),
        CatalogMesh::CubeTet => cube_tet(),
        CatalogMesh::Annulus(s) => annulus(s),
        CatalogMesh::SolidRing(s) => solid_ring(s),
        CatalogMesh::SphereBoundary(n) => sphere_boundary(n),
        CatalogMesh::Pinched => pinched(),
    };
    let coords: Vec<Vec<T>> = raw
        .vertices
        .iter()
        .map(|v| v.iter().map(|&x| lit::<T>(x)).collect())
        .collect();
    let bare = RelativePair::build(coords.clone(), &raw.cells, &[])?;
    let marked = boundary_marks(&bare, &raw.vertices, mode);
    RelativePair::build(coords, &raw.cells, &marked)
}

/// Parse `key` (see [`CatalogMesh`]) and build it.
pub fn generate<T: Scalar>(key: &str, mode: MarkMode) -> Result<RelativePair<T>> {
    build(key.parse()?, mode)
}

/// Rebuild `pair` with its subcomplex replaced by the boundary part selected by `mode`.
pub fn remark<T: Scalar>(pair: &RelativePair<T>, mode: MarkMode) -> Result<RelativePair<T>> {
    let n = pair.top_dim();
    let cells: Vec<Vec<usize>> = pair.stratum(n).iter().map(|s| s.vertices.clone()).collect();
    let verts: Vec<Vec<f64>> = pair.coords().iter().map(|v| v.iter().map(|x| x.as_f64()).collect()).collect();
    let bare = RelativePair::build(pair.coords().to_vec(), &cells, &[])?;
    let marked = boundary_marks(&bare, &verts, mode);
    RelativePair::build(pair.coords().to_vec(), &cells, &marked)
}

/// Facets of the top stratum that lie in exactly one top simplex.
pub fn boundary_facets<T: Scalar>(pair: &RelativePair<T>) -> Vec<Vec<usize>> {
    let n = pair.top_dim();
    if n == 0 {
        return Vec::new();
    }
    let mut count = vec![0usize; pair.num_simplices(n - 1)];
    for c in 0..pair.num_simplices(n) {
        for f in pair.facets(super::SimplexId { dim: n, index: c }) {
            count[f.index] += 1;
        }
    }
    pair.stratum(n - 1)
        .iter()
        .zip(count)
        .filter(|(_, c)| *c == 1)
        .map(|(s, _)| s.vertices.clone())
        .collect()
}

fn boundary_marks<T: Scalar>(pair: &RelativePair<T>, verts: &[Vec<f64>], mode: MarkMode) -> Vec<Vec<usize>> {
    match mode {
        MarkMode::None => Vec::new(),
        MarkMode::Full => boundary_facets(pair),
        MarkMode::Half => {
            let xmin = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            boundary_facets(pair)
                .into_iter()
                .filter(|f| f.iter().all(|&v| (verts[v][0] - xmin).abs() < 1e-12))
                .collect()
        }
    }
}

/// Catalog keys accepted by [`generate`], with their default parameters.
pub const KEYS: &[&str] = &[
    "interval(k)",
    "triangle",
    "tetrahedron",
    "square_grid(s)",
    "cube_tet",
    "annulus(s)",
    "solid_ring(s)",
    "sphere_boundary(n)",
    "pinched",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn betti(key: &str, mode: MarkMode) -> Vec<usize> {
        generate::<f64>(key, mode).unwrap().betti_numbers()
    }

    #[test]
    fn remarking_matches_generation() {
        let bare = generate::<f64>("annulus(1)", MarkMode::None).unwrap();
        for mode in [MarkMode::None, MarkMode::Full, MarkMode::Half] {
            let a = remark(&bare, mode).unwrap();
            let b = generate::<f64>("annulus(1)", mode).unwrap();
            assert_eq!(a.marked_simplices(), b.marked_simplices());
        }
    }

    #[test]
    fn parses_keys() {
        assert_eq!("annulus(2)".parse::<CatalogMesh>().unwrap(), CatalogMesh::Annulus(2));
        assert_eq!("triangle".parse::<CatalogMesh>().unwrap(), CatalogMesh::Triangle);
        assert!(matches!("blob".parse::<CatalogMesh>(), Err(Error::UnknownCatalog(_))));
        assert!(matches!("annulus(0)".parse::<CatalogMesh>(), Err(Error::InvalidParams(_))));
        assert!(matches!("triangle(3)".parse::<CatalogMesh>(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn square_grid_one() {
        let p = generate::<f64>("square_grid(1)", MarkMode::None).unwrap();
        assert_eq!(p.num_simplices(2), 2);
        assert_eq!(p.betti_numbers(), vec![1, 0, 0]);
    }

    #[test]
    fn catalog_topology() {
        assert_eq!(betti("annulus(2)", MarkMode::None), vec![1, 1, 0]);
        assert_eq!(betti("annulus(1)", MarkMode::Full), vec![0, 1, 1]);
        assert_eq!(betti("solid_ring(1)", MarkMode::None), vec![1, 1, 0, 0]);
        assert_eq!(betti("solid_ring(1)", MarkMode::Full), vec![0, 0, 1, 1]);
        assert_eq!(betti("cube_tet", MarkMode::None), vec![1, 0, 0, 0]);
        assert_eq!(betti("interval(3)", MarkMode::Full), vec![0, 1]);
        assert_eq!(betti("sphere_boundary(1)", MarkMode::None), vec![1, 1]);
        assert_eq!(betti("triangle", MarkMode::Half), vec![0, 0, 0]);
        assert_eq!(betti("square_grid(2)", MarkMode::Half), vec![0, 0, 0]);
    }

    #[test]
    fn solid_ring_counts() {
        let p = generate::<f64>("solid_ring(1)", MarkMode::None).unwrap();
        let counts: Vec<usize> = (0..4).map(|m| p.num_simplices(m)).collect();
        assert_eq!(counts, vec![12, 36, 36, 12]);
    }

    #[test]
    fn top_cells_are_positively_oriented_after_correction() {
        for key in ["square_grid(2)", "annulus(1)", "cube_tet", "solid_ring(1)"] {
            let p = generate::<f64>(key, MarkMode::None).unwrap();
            let n = p.top_dim();
            for (i, s) in p.stratum(n).iter().enumerate() {
                let c = p.simplex_coords(super::super::SimplexId { dim: n, index: i });
                let e = nalgebra::DMatrix::from_fn(n, n, |r, k| c[k + 1][r] - c[0][r]);
                assert!(e.determinant() * s.sign as f64 > 0.0, "{key}");
            }
        }
    }
}
