use ddforms::assembly::Metric;
use ddforms::distrib::{Context, FamilySpec};
use ddforms::mesh::catalog::{boundary_facets, generate, MarkMode};
use ddforms::mesh::RelativePair;
use ddforms::polyforms::Family;
use proptest::prelude::*;

fn remark(pair: &RelativePair<f64>, pick: &[bool]) -> RelativePair<f64> {
    let n = pair.top_dim();
    let cells: Vec<Vec<usize>> = pair.stratum(n).iter().map(|s| s.vertices.clone()).collect();
    let marked: Vec<Vec<usize>> = boundary_facets(pair)
        .into_iter()
        .zip(pick.iter().cycle())
        .filter(|(_, &p)| p)
        .map(|(f, _)| f)
        .collect();
    RelativePair::build(pair.coords().to_vec(), &cells, &marked).unwrap()
}

fn context(key: &str, mode: MarkMode) -> Context<f64> {
    Context::new(generate::<f64>(key, mode).unwrap(), &Family::whitney(), Metric::Weighted).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chains_follow_betti_numbers_for_any_marking(
        key in prop::sample::select(&["square_grid(2)", "annulus(1)", "cube_tet"][..]),
        pick in prop::collection::vec(any::<bool>(), 1..7),
    ) {
        let pair = remark(&generate::<f64>(key, MarkMode::None).unwrap(), &pick);
        // arbitrary markings can pinch the relative boundary; the chain needs the patch condition
        prop_assume!(pair.check_local_patch_condition().pass);
        let betti = pair.betti_numbers();
        let n = pair.top_dim();
        let ctx = Context::new(pair, &Family::whitney(), Metric::Weighted).unwrap();
        for r in ctx.verify_all_chains().unwrap() {
            prop_assert_eq!(r.betti, betti[n - r.k]);
            prop_assert!(r.pass, "{} k={}: {:?}", key, r.k, r.steps);
            for s in &r.spaces {
                prop_assert_eq!(s.dim, betti[n - r.k], "{}", s.label);
            }
        }
        let dc = ctx.verify_double_complex().unwrap();
        prop_assert!(dc.pass, "{:?}", dc.failures().collect::<Vec<_>>());
    }
}

#[test]
fn redirected_complexes_nest() {
    for (key, mode) in [("square_grid(2)", MarkMode::Half), ("cube_tet", MarkMode::None), ("annulus(1)", MarkMode::Full)] {
        let ctx = context(key, mode);
        for k0 in 1..=ctx.top_dim() + 1 {
            let r = ctx.nesting(k0).unwrap();
            assert!(r.pass, "{key} k0={k0}: {:e}", r.residual);
        }
    }
}

#[test]
fn preimage_witnesses_pair_to_the_norm() {
    for (key, mode) in [("annulus(1)", MarkMode::Full), ("solid_ring(1)", MarkMode::None), ("square_grid(2)", MarkMode::None)] {
        let ctx = context(key, mode);
        let n = ctx.top_dim();
        for k in 1..=n {
            for b in 2..=k + 1 {
                let w = ctx.witness_check(k, b).unwrap();
                assert!(w.pass, "{key} k={k} b={b}: {:e}", w.residual);
            }
        }
    }
}

#[test]
fn skeleton_degree_zero_splits() {
    for (key, mode) in [("solid_ring(1)", MarkMode::None), ("cube_tet", MarkMode::Half), ("annulus(1)", MarkMode::Full)] {
        for line in context(key, mode).skeleton_zero_forms().unwrap() {
            assert!(line.pass, "{key} {mode:?}: {line:?}");
        }
    }
}

#[test]
fn pinched_relative_boundary_breaks_the_chain() {
    // every other boundary facet of the cube: the marked part touches itself at vertices
    let base = generate::<f64>("cube_tet", MarkMode::None).unwrap();
    let pair = remark(&base, &[true, false]);
    assert!(!pair.check_local_patch_condition().pass);
    let ctx = Context::new(pair, &Family::whitney(), Metric::Weighted).unwrap();
    assert!(ctx.verify_all_chains().unwrap().iter().any(|r| !r.pass));
}

#[test]
fn harmonic_family_is_orthonormal() {
    let ctx = context("annulus(1)", MarkMode::None);
    let r = ctx.harmonic_family().unwrap();
    assert!(r.orthonormality_defect < 1e-10);
    // every graded degree of the annulus carries b_{n-k}
    let betti = ctx.pair().betti_numbers();
    for &(k, _, dim) in &r.lambda {
        assert_eq!(dim, betti[2 - k]);
    }
}

#[test]
fn truncated_family_breaks_the_double_complex() {
    let family = Family::Truncated { base: Box::new(Family::whitney()), dim: 2, degree: 1, drop: 1 };
    let ctx = Context::<f64>::new(generate("square_grid(1)", MarkMode::None).unwrap(), &family, Metric::Weighted).unwrap();
    assert!(ctx.local_conditions().map(|lc| !lc.pass).unwrap_or(true));
    let dc = ctx.verify_double_complex().unwrap();
    assert!(!dc.pass);
    assert!(dc.failures().any(|l| l.sequence == "row"));
}

#[test]
fn single_precision_reproduces_dimensions() {
    let pair32 = generate::<f32>("annulus(1)", MarkMode::Full).unwrap();
    let ctx32 = Context::<f32>::new(pair32, &Family::whitney(), Metric::Weighted).unwrap();
    let ctx64 = context("annulus(1)", MarkMode::Full);
    for spec in [FamilySpec::Conforming { m: 2 }, FamilySpec::Chainlike { k: 0 }, FamilySpec::TotalLambda] {
        let a = ctx32.build(spec).unwrap();
        let b = ctx64.build(spec).unwrap();
        let da: Vec<usize> = (0..a.len()).map(|i| a.harmonic_dim(i)).collect();
        let db: Vec<usize> = (0..b.len()).map(|i| b.harmonic_dim(i)).collect();
        assert_eq!(da, db, "{spec}");
    }
    for r in ctx32.verify_all_chains().unwrap() {
        assert!(r.pass, "k={}: {:?}", r.k, r.steps);
    }
}
