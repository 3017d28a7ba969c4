use ddforms::polyforms::form::subsets;
use ddforms::polyforms::{
    check_geometric_decomposition, check_local_conditions, check_trace_surjectivity, BarycentricForm, ElementSpace,
    ExtensionRule, Family, Frame, LocalTables, SimplexGeometry,
};
use nalgebra::{DMatrix, DVector};
use num_integer::binomial;
use proptest::prelude::*;

type F = BarycentricForm<f64>;

fn simplex(m: usize, noise: &[f64]) -> Option<SimplexGeometry<f64>> {
    let coords: Vec<Vec<f64>> = (0..=m)
        .map(|v| (0..m).map(|i| if v == i + 1 { 1.0 } else { 0.0 } + noise[(v * m + i) % noise.len()]).collect())
        .collect();
    let g = SimplexGeometry::new(coords, if noise[0] < 0.0 { -1 } else { 1 }).ok()?;
    // stay away from nearly flat simplices
    (g.volume() > 0.05).then_some(g)
}

fn form(m: usize, k: usize, r: u32, c: &[f64]) -> F {
    let frame = Frame::new(m, k, r, false);
    let v = DVector::from_fn(frame.len(), |i, _| c[i % c.len()] * (1.0 + i as f64).sqrt().fract());
    F::from_vector(&frame, &v).unwrap()
}

fn noise() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.25f64..0.25, 12)
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..24)
}

fn sign(p: usize) -> f64 {
    if p.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_squares_to_zero(m in 1usize..4, k in 0usize..3, r in 0u32..4, c in coeffs()) {
        let k = k.min(m);
        let w = form(m, k, r, &c);
        prop_assert!(w.d().d().max_abs() < 1e-12);
    }

    #[test]
    fn trace_commutes_with_d(m in 1usize..4, k in 0usize..3, r in 1u32..4, c in coeffs(), drop in 0usize..4) {
        let k = k.min(m - 1);
        let w = form(m, k, r, &c);
        let face: Vec<usize> = (0..=m).filter(|&p| p != drop.min(m)).collect();
        let lhs = w.d().trace(&face).unwrap();
        let rhs = w.trace(&face).unwrap().d();
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn star_squares_to_sign(m in 1usize..4, k in 0usize..4, r in 0u32..3, c in coeffs(), z in noise()) {
        let k = k.min(m);
        let Some(g) = simplex(m, &z) else { return Ok(()) };
        let w = form(m, k, r, &c);
        let ss = g.star(&g.star(&w).unwrap()).unwrap();
        let s = sign(k * (m - k));
        prop_assert!(ss.distance(&w.scale(s)).unwrap() < 1e-10 * (1.0 + w.max_abs()));
    }

    #[test]
    fn wedge_star_is_symmetric(m in 1usize..4, k in 0usize..4, c in coeffs(), e in coeffs(), z in noise()) {
        let k = k.min(m);
        let Some(g) = simplex(m, &z) else { return Ok(()) };
        let (a, b) = (form(m, k, 1, &c), form(m, k, 2, &e));
        let ab = a.wedge(&g.star(&b).unwrap()).unwrap();
        let ba = b.wedge(&g.star(&a).unwrap()).unwrap();
        prop_assert!(ab.distance(&ba).unwrap() < 1e-10 * (1.0 + ab.max_abs()));
        let int = g.integrate(&ab).unwrap();
        prop_assert!((int - g.inner(&a, &b).unwrap()).abs() < 1e-10 * (1.0 + int.abs()));
    }

    #[test]
    fn codifferential_squares_to_zero(m in 2usize..4, k in 2usize..4, r in 1u32..4, c in coeffs(), z in noise()) {
        let k = k.min(m);
        let Some(g) = simplex(m, &z) else { return Ok(()) };
        let w = form(m, k, r, &c);
        let dd = g.codifferential(&g.codifferential(&w).unwrap()).unwrap();
        prop_assert!(dd.max_abs() < 1e-9 * (1.0 + w.max_abs()));
    }

    #[test]
    fn normal_trace_commutes_with_codifferential(m in 2usize..4, k in 2usize..4, r in 1u32..3, c in coeffs(), z in noise(), drop in 0usize..4) {
        let k = k.min(m);
        let Some(g) = simplex(m, &z) else { return Ok(()) };
        let face: Vec<usize> = (0..=m).filter(|&p| p != drop.min(m)).collect();
        // δ lowers the degree and a facet normal trace needs degree ≥ 1
        let fg = g.face(&face).unwrap();
        let w = form(m, k, r, &c);
        let lhs = g.normal_trace(&g.codifferential(&w).unwrap(), &face).unwrap();
        let rhs = fg.codifferential(&g.normal_trace(&w, &face).unwrap()).unwrap();
        prop_assert!(lhs.distance(&rhs.scale(-1.0)).unwrap() < 1e-9 * (1.0 + lhs.max_abs()), "{:?} vs {:?}", lhs, rhs);
    }

    #[test]
    fn integration_by_parts(m in 1usize..4, k in 0usize..3, r in 0u32..3, c in coeffs(), e in coeffs(), z in noise()) {
        let k = k.min(m - 1);
        let Some(g) = simplex(m, &z) else { return Ok(()) };
        let (w, eta) = (form(m, k, r + 1, &c), form(m, k + 1, r, &e));
        let (l, rhs) = g.stokes_sides(&w, &eta).unwrap();
        prop_assert!((l - rhs).abs() < 1e-10 * (1.0 + l.abs() + rhs.abs()), "{} {}", l, rhs);
    }

    #[test]
    fn inner_product_matches_quadrature(m in 1usize..4, k in 0usize..4, c in coeffs(), e in coeffs(), z in noise()) {
        let k = k.min(m);
        let Some(g) = simplex(m, &z) else { return Ok(()) };
        let (a, b) = (form(m, k, 1, &c), form(m, k, 2, &e));
        let exact = quadrature_inner(&g, &a, &b, 3);
        let ip = g.inner(&a, &b).unwrap();
        prop_assert!((ip - exact).abs() < 1e-11 * (1.0 + exact.abs()), "{} {}", ip, exact);
    }

    #[test]
    fn element_grams_are_positive_definite(m in 1usize..4, k in 0usize..4, fam in 0usize..3, z in noise()) {
        let k = k.min(m);
        let Some(g) = simplex(m, &z) else { return Ok(()) };
        let family = [Family::whitney(), Family::TrimmedP(2), Family::FullP(2)][fam].clone();
        let sp = ElementSpace::<f64>::build(&family, m, k).unwrap();
        if sp.is_empty() {
            return Ok(());
        }
        let gram = sp.gram(&g);
        prop_assert!((&gram - gram.transpose()).amax() < 1e-12 * gram.amax());
        prop_assert!(gram.cholesky().is_some());
    }
}

/// Grundmann–Möller rule on the simplex, exact for polynomials of degree `2s + 1`.
fn grundmann_moller(m: usize, s: usize) -> Vec<(Vec<f64>, f64)> {
    let d = 2 * s + 1;
    let fact = |n: usize| (1..=n).fold(1.0, |a, k| a * k as f64);
    let mut out = Vec::new();
    for i in 0..=s {
        let denom = (d + m - 2 * i) as f64;
        let w = sign(i) * 2f64.powi(-2 * s as i32) * denom.powi(d as i32) / (fact(i) * fact(d + m - i)) * fact(m);
        for beta in ddforms::polyforms::form::multi_indices(m + 1, (s - i) as u32) {
            let p = beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect();
            out.push((p, w));
        }
    }
    out
}

/// `∫ ⟨a, b⟩` from pointwise components on the coordinate basis `dx_I`.
fn quadrature_inner(g: &SimplexGeometry<f64>, a: &F, b: &F, s: usize) -> f64 {
    let m = g.dim();
    let k = a.degree();
    let x = g.coords();
    // barycentric gradients: rows of the inverse of [x_j; 1]
    let amat = DMatrix::from_fn(m + 1, m + 1, |i, j| if i < m { x[j][i] } else { 1.0 });
    let inv = amat.try_inverse().unwrap();
    let grad = DMatrix::from_fn(m + 1, m, |i, j| inv[(i, j)]);
    let comps = |f: &F, bary: &[f64]| -> Vec<f64> {
        subsets(0, m - 1, k)
            .iter()
            .map(|idx| {
                f.terms()
                    .iter()
                    .map(|(t, &c)| {
                        let mono: f64 = t.alpha.iter().zip(bary).map(|(&p, &l)| l.powi(p as i32)).product();
                        let minor = DMatrix::from_fn(k, k, |i, j| grad[(t.sigma[i], idx[j])]);
                        let det = if k == 0 { 1.0 } else { minor.determinant() };
                        c * mono * det
                    })
                    .sum()
            })
            .collect()
    };
    let scale = g.volume();
    grundmann_moller(m, s)
        .iter()
        .map(|(p, w)| {
            let (ca, cb) = (comps(a, p), comps(b, p));
            w * ca.iter().zip(&cb).map(|(u, v)| u * v).sum::<f64>()
        })
        .sum::<f64>()
        * scale
}

#[test]
fn quadrature_integrates_monomials() {
    let g = SimplexGeometry::new(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.2, 0.0], vec![0.1, 1.0, 0.0], vec![0.0, 0.3, 1.1]], 1)
        .unwrap();
    for alpha in ddforms::polyforms::form::multi_indices(4, 5) {
        let q: f64 = grundmann_moller(3, 3)
            .iter()
            .map(|(p, w)| w * alpha.iter().zip(p).map(|(&a, &l)| l.powi(a as i32)).product::<f64>())
            .sum::<f64>()
            * g.volume();
        approx::assert_relative_eq!(q, g.integrate_monomial(&alpha), max_relative = 1e-12);
    }
}

fn dim_full(m: usize, r: usize, k: usize) -> usize {
    binomial(r + m, r + k) * binomial(r + k, k)
}

fn dim_trimmed(m: usize, r: usize, k: usize) -> usize {
    if k == 0 {
        return binomial(r + m, m);
    }
    binomial(r + k - 1, k) * binomial(m + r, m - k)
}

#[test]
fn space_dimensions_match_closed_forms() {
    for r in 1..=3u32 {
        let full = LocalTables::<f64>::new(&Family::FullP(r), 3).unwrap();
        let trimmed = LocalTables::<f64>::new(&Family::TrimmedP(r), 3).unwrap();
        for m in 0..=3 {
            for k in 0..=m {
                let rk = (r as usize).checked_sub(k);
                let expect = rk.map_or(0, |rk| dim_full(m, rk, k));
                assert_eq!(full.dim(m, k), expect, "P{r}-{k} on {m}-simplex");
                assert_eq!(trimmed.dim(m, k), dim_trimmed(m, r as usize, k), "P{r}- {k} on {m}-simplex");
            }
        }
    }
}

#[test]
fn standard_families_satisfy_local_conditions() {
    for family in [Family::whitney(), Family::TrimmedP(2), Family::TrimmedP(3), Family::FullP(3)] {
        let tables = LocalTables::<f64>::new(&family, 3).unwrap();
        let lc = check_local_conditions(&tables, 3, ExtensionRule::SupportComplete).unwrap();
        assert!(lc.pass, "{family:?}");
        for e in &lc.exactness {
            assert!(e.containment_residual < 1e-10);
        }
    }
}

#[test]
fn constant_forms_below_top_degree_have_no_decomposition() {
    // P_0Λ^k with k < m has more face bubbles than dimensions
    for r in 1..=2u32 {
        let tables = LocalTables::<f64>::new(&Family::FullP(r), 3).unwrap();
        let lc = check_local_conditions(&tables, 3, ExtensionRule::SupportComplete).unwrap();
        assert!(lc.exactness.iter().all(|e| e.pass));
        assert!(lc.traces.iter().all(|e| e.pass));
        for d in &lc.decomposition {
            let degenerate = d.degree == r as usize && d.degree < d.simplex_dim;
            assert_eq!(d.pass, !degenerate, "P{r}: {d:?}");
            if degenerate {
                assert!(d.bubble_sum > d.space_dim);
            }
        }
    }
}

#[test]
fn canonical_literal_extension_is_not_a_decomposition() {
    // the Whitney edge bubble's canonical representative is (λ0 + λ1) dλ1
    let tables = LocalTables::<f64>::new(&Family::whitney(), 2).unwrap();
    let bad = check_geometric_decomposition(&tables, 2, 1, ExtensionRule::CanonicalLiteral).unwrap();
    assert!(!bad.pass);
    for k in 0..=2 {
        let good = check_geometric_decomposition(&tables, 2, k, ExtensionRule::SupportComplete).unwrap();
        assert!(good.pass);
        assert_eq!(good.extension_rank, good.space_dim);
        assert_eq!(good.bubble_sum, good.space_dim);
    }
}

#[test]
fn truncated_family_breaks_trace_surjectivity() {
    let family = Family::Truncated { base: Box::new(Family::whitney()), dim: 1, degree: 0, drop: 1 };
    let tables = LocalTables::<f64>::new(&family, 2).unwrap();
    assert!(!check_trace_surjectivity(&tables, 2, 0).pass);
    assert!(!check_local_conditions(&tables, 2, ExtensionRule::SupportComplete).unwrap().pass);
}

#[test]
fn single_precision_identities() {
    let g = SimplexGeometry::<f32>::new(vec![vec![0.0, 0.0], vec![1.0, 0.1], vec![0.2, 0.9]], 1).unwrap();
    let w = BarycentricForm::<f32>::monomial(2, &[1, 1, 0], &[1], 0.7).unwrap();
    let ss = g.star(&g.star(&w).unwrap()).unwrap();
    assert!(ss.distance(&w.scale(-1.0)).unwrap() < 1e-5);
    assert!(w.d().d().max_abs() < 1e-6);
}
