//! Local conditions on a family: exactness of the polynomial sequence on a
//! simplex, geometric decomposition into extended bubbles, trace surjectivity.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::form::{subsets, BarycentricForm};
use super::spaces::{ExtensionRule, LocalTables};
use crate::linalg::{fro, hstack, rank, RANK_RTOL};
use crate::scalar::Scalar;

/// Identities are accepted below this relative residual.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct ExactnessEntry {
    pub degree: usize,
    pub dim: usize,
    /// Rank of the derivative arriving at this degree.
    pub incoming_rank: usize,
    /// Dimension of the kernel of the derivative leaving this degree.
    pub kernel: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactnessReport {
    pub simplex_dim: usize,
    pub entries: Vec<ExactnessEntry>,
    /// `ker d^0` is spanned by the constant function.
    pub constants_kernel: bool,
    /// Worst relative residual of `d Λ^k ⊆ Λ^{k+1}`.
    pub containment_residual: f64,
    pub pass: bool,
}

/// Exactness of `0 → ℝ → Λ^0 → … → Λ^m → 0` on an `m`-simplex.
pub fn check_local_exactness<T: Scalar>(tables: &LocalTables<T>, m: usize) -> ExactnessReport {
    let ranks: Vec<usize> = (0..m).map(|k| rank(tables.d_local(m, k), RANK_RTOL)).collect();
    let mut entries = Vec::new();
    for k in 0..=m {
        let dim = tables.dim(m, k);
        let out = if k < m { ranks[k] } else { 0 };
        let kernel = dim - out;
        let incoming_rank = if k == 0 { 0 } else { ranks[k - 1] };
        let exact = if k == 0 { kernel == 1 } else { kernel == incoming_rank };
        entries.push(ExactnessEntry { degree: k, dim, incoming_rank, kernel, exact });
    }
    let constants_kernel = {
        let sp = tables.space(m, 0);
        match sp.coefficients(&BarycentricForm::constant(m, T::one())) {
            Ok((c, res)) if res.as_f64() < T::tol(IDENTITY_TOL) => {
                m == 0 || fro(&(tables.d_local(m, 0) * DMatrix::from_column_slice(c.len(), 1, c.as_slice()))).as_f64()
                    < T::tol(IDENTITY_TOL)
            }
            _ => false,
        }
    };
    let containment_residual = (0..m).map(|k| tables.d_residual(m, k)).fold(0.0, f64::max);
    let pass = entries.iter().all(|e| e.exact) && constants_kernel && containment_residual < T::tol(IDENTITY_TOL);
    ExactnessReport { simplex_dim: m, entries, constants_kernel, containment_residual, pass }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub simplex_dim: usize,
    pub degree: usize,
    pub space_dim: usize,
    /// `Σ_{F ⊴ C} dim Λ̊^k(F)`.
    pub bubble_sum: usize,
    /// Rank of the stacked extension images.
    pub extension_rank: usize,
    /// `tr_{C,F} ext_{F,C} = Id`.
    pub identity_residual: f64,
    /// `tr_{C,G} ext_{F,C} = ext_{F,G}` for `F ⊴ G ⊴ C`.
    pub composition_residual: f64,
    /// `tr_{C,G} ext_{F,C} = 0` for `F ⋬ G`.
    pub vanishing_residual: f64,
    /// Extensions land in `Λ^k(C)`.
    pub containment_residual: f64,
    pub pass: bool,
}

fn rel(a: &DMatrix<f64>, scale: f64) -> f64 {
    let n = if a.is_empty() { 0.0 } else { a.norm() };
    if scale > 0.0 {
        n / scale
    } else {
        n
    }
}

fn to_f64<T: Scalar>(a: &DMatrix<T>) -> DMatrix<f64> {
    a.map(|x| x.as_f64())
}

/// Positions of `sub` inside `sup` (both ascending position lists).
fn relative_positions(sub: &[usize], sup: &[usize]) -> Option<Vec<usize>> {
    sub.iter().map(|v| sup.iter().position(|w| w == v)).collect()
}

/// Geometric decomposition of `Λ^k` on an `m`-simplex with the given extension rule.
pub fn check_geometric_decomposition<T: Scalar>(
    tables: &LocalTables<T>,
    m: usize,
    k: usize,
    rule: ExtensionRule,
) -> crate::Result<DecompositionReport> {
    let space_dim = tables.dim(m, k);
    let faces: Vec<Vec<usize>> = (k..=m).flat_map(|f| subsets(0, m, f + 1)).collect();
    let mut bubble_sum = 0;
    let mut images = Vec::new();
    let mut identity_residual: f64 = 0.0;
    let mut composition_residual: f64 = 0.0;
    let mut vanishing_residual: f64 = 0.0;
    let mut containment_residual: f64 = 0.0;
    for face in &faces {
        let f = face.len() - 1;
        let nb = tables.bubble(f, k).ncols();
        bubble_sum += nb;
        if nb == 0 {
            continue;
        }
        let ext = tables.extension(m, k, face, rule)?;
        containment_residual = containment_residual.max(ext.containment_residual);
        images.push(ext.matrix.clone());
        let bubbles = to_f64(&(tables.space(f, k).basis() * tables.bubble(f, k)));
        let scale = bubbles.norm();
        for g in &faces {
            let gd = g.len() - 1;
            if gd < k {
                continue;
            }
            // trace the extended forms (frame coordinates) onto G
            let frame_cell = tables.space(m, k).frame();
            let trm = frame_cell.matrix_of::<T, _>(tables.space(gd, k).frame(), |t| super::form::formal_trace(t, g))?;
            let tr = to_f64(&(trm * &ext.frame_matrix));
            match relative_positions(face, g) {
                Some(pos) if gd == f => {
                    let _ = pos;
                    identity_residual = identity_residual.max(rel(&(&tr - &bubbles), scale));
                }
                Some(pos) => {
                    let inner = tables.extension(gd, k, &pos, rule)?;
                    let d = &tr - to_f64(&inner.frame_matrix);
                    composition_residual = composition_residual.max(rel(&d, scale));
                }
                None => {
                    vanishing_residual = vanishing_residual.max(rel(&tr, scale));
                }
            }
        }
    }
    let refs: Vec<&DMatrix<T>> = images.iter().collect();
    let stacked = hstack(space_dim, &refs);
    let extension_rank = rank(&stacked, RANK_RTOL);
    let pass = bubble_sum == space_dim
        && extension_rank == space_dim
        && identity_residual < T::tol(IDENTITY_TOL)
        && composition_residual < T::tol(IDENTITY_TOL)
        && vanishing_residual < T::tol(IDENTITY_TOL)
        && containment_residual < T::tol(IDENTITY_TOL);
    Ok(DecompositionReport {
        simplex_dim: m,
        degree: k,
        space_dim,
        bubble_sum,
        extension_rank,
        identity_residual,
        composition_residual,
        vanishing_residual,
        containment_residual,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub simplex_dim: usize,
    pub degree: usize,
    /// `(facet position, rank, target dimension)`.
    pub facets: Vec<(usize, usize, usize)>,
    pub containment_residual: f64,
    pub pass: bool,
}

/// `tr_{C,F} Λ^k(C) = Λ^k(F)` for every facet of an `m`-simplex, `k < m`.
pub fn check_trace_surjectivity<T: Scalar>(tables: &LocalTables<T>, m: usize, k: usize) -> TraceReport {
    let target = tables.dim(m - 1, k);
    let mut facets = Vec::new();
    let mut res: f64 = 0.0;
    for j in 0..=m {
        facets.push((j, rank(tables.trace_local(m, k, j), RANK_RTOL), target));
        res = res.max(tables.trace_residual(m, k, j));
    }
    let pass = facets.iter().all(|&(_, r, t)| r == t) && res < T::tol(IDENTITY_TOL);
    TraceReport { simplex_dim: m, degree: k, facets, containment_residual: res, pass }
}

/// All three local conditions for every simplex dimension up to `n`.
#[derive(Debug, Clone, Serialize)]
pub struct LocalConditions {
    pub exactness: Vec<ExactnessReport>,
    pub decomposition: Vec<DecompositionReport>,
    pub traces: Vec<TraceReport>,
    pub pass: bool,
}

pub fn check_local_conditions<T: Scalar>(
    tables: &LocalTables<T>,
    n: usize,
    rule: ExtensionRule,
) -> crate::Result<LocalConditions> {
    let exactness: Vec<_> = (0..=n).map(|m| check_local_exactness(tables, m)).collect();
    let mut decomposition = Vec::new();
    let mut traces = Vec::new();
    for m in 0..=n {
        for k in 0..=m {
            decomposition.push(check_geometric_decomposition(tables, m, k, rule)?);
            if k < m {
                traces.push(check_trace_surjectivity(tables, m, k));
            }
        }
    }
    let pass = exactness.iter().all(|r| r.pass)
        && decomposition.iter().all(|r| r.pass)
        && traces.iter().all(|r| r.pass);
    Ok(LocalConditions { exactness, decomposition, traces, pass })
}

/// Coefficients of the constant function, if it belongs to `Λ^0`.
pub fn constant_coefficients<T: Scalar>(tables: &LocalTables<T>, m: usize) -> Option<DVector<T>> {
    let (c, r) = tables.space(m, 0).coefficients(&BarycentricForm::constant(m, T::one())).ok()?;
    (r.as_f64() < T::tol(IDENTITY_TOL)).then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyforms::Family;

    #[test]
    fn whitney_on_tetrahedron_is_locally_exact() {
        let t = LocalTables::<f64>::new(&Family::whitney(), 3).unwrap();
        for m in 0..=3 {
            assert!(check_local_exactness(&t, m).pass, "m = {m}");
        }
    }

    #[test]
    fn truncated_space_breaks_exactness() {
        let f = Family::Truncated { base: Box::new(Family::whitney()), dim: 3, degree: 1, drop: 1 };
        let t = LocalTables::<f64>::new(&f, 3).unwrap();
        assert!(!check_local_exactness(&t, 3).pass);
    }

    #[test]
    fn decomposition_counts() {
        let t = LocalTables::<f64>::new(&Family::whitney(), 2).unwrap();
        let r = check_geometric_decomposition(&t, 2, 1, ExtensionRule::SupportComplete).unwrap();
        assert_eq!((r.space_dim, r.bubble_sum, r.extension_rank), (3, 3, 3));
        assert!(r.pass, "{r:?}");
        let t2 = LocalTables::<f64>::new(&Family::TrimmedP(2), 2).unwrap();
        let r = check_geometric_decomposition(&t2, 2, 1, ExtensionRule::SupportComplete).unwrap();
        assert_eq!((r.space_dim, r.bubble_sum), (8, 8));
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn canonical_literal_extension_fails_vanishing() {
        let t = LocalTables::<f64>::new(&Family::whitney(), 2).unwrap();
        let r = check_geometric_decomposition(&t, 2, 1, ExtensionRule::CanonicalLiteral).unwrap();
        assert!(!r.pass);
        assert!(r.vanishing_residual > 0.1);
    }

    #[test]
    fn traces_are_onto() {
        let t = LocalTables::<f64>::new(&Family::TrimmedP(2), 3).unwrap();
        for m in 1..=3 {
            for k in 0..m {
                assert!(check_trace_surjectivity(&t, m, k).pass);
            }
        }
    }
}
