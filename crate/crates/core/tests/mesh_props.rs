use ddforms::linalg::{rank, RANK_RTOL};
use ddforms::mesh::catalog::{boundary_facets, generate, MarkMode};
use ddforms::mesh::{orientation_sign, RelativePair, SimplexId};
use nalgebra::DMatrix;
use proptest::prelude::*;

const MANIFOLDS: &[&str] = &[
    "interval(3)",
    "triangle",
    "tetrahedron",
    "square_grid(2)",
    "cube_tet",
    "annulus(1)",
    "solid_ring(1)",
];

fn modes() -> [MarkMode; 3] {
    [MarkMode::None, MarkMode::Full, MarkMode::Half]
}

/// Same mesh, marking the closure of a chosen subset of boundary facets.
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

/// Betti numbers from floating-point ranks, independent of the exact elimination.
fn float_betti(pair: &RelativePair<f64>) -> Vec<usize> {
    let n = pair.top_dim();
    let r: Vec<usize> = (0..=n + 1)
        .map(|m| {
            if m == 0 || m > n {
                return 0;
            }
            let b = pair.boundary_matrix(m).unwrap();
            if b.is_empty() {
                0
            } else {
                rank(&b.map(|x| x as f64), RANK_RTOL)
            }
        })
        .collect();
    (0..=n).map(|m| pair.active(m).len() - r[m] - r[m + 1]).collect()
}

fn same_pair(a: &RelativePair<f64>, b: &RelativePair<f64>) -> bool {
    a.top_dim() == b.top_dim()
        && (0..=a.top_dim()).all(|m| a.num_simplices(m) == b.num_simplices(m))
        && a.marked_simplices() == b.marked_simplices()
        && a.betti_numbers() == b.betti_numbers()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boundary_of_boundary_vanishes(key in prop::sample::select(MANIFOLDS), pick in prop::collection::vec(any::<bool>(), 1..9)) {
        let pair = remark(&generate::<f64>(key, MarkMode::None).unwrap(), &pick);
        for m in 2..=pair.top_dim() {
            let prod: DMatrix<i64> = pair.boundary_matrix(m - 1).unwrap() * pair.boundary_matrix(m).unwrap();
            prop_assert!(prod.iter().all(|&x| x == 0), "m = {}", m);
        }
    }

    #[test]
    fn exact_and_float_betti_agree(key in prop::sample::select(MANIFOLDS), pick in prop::collection::vec(any::<bool>(), 1..9)) {
        let pair = remark(&generate::<f64>(key, MarkMode::None).unwrap(), &pick);
        let betti = pair.betti_numbers();
        prop_assert_eq!(&betti, &float_betti(&pair));
        // Euler characteristic of the relative chain complex
        let chi: i64 = (0..=pair.top_dim()).map(|m| (-1i64).pow(m as u32) * pair.active(m).len() as i64).sum();
        let chi_b: i64 = betti.iter().enumerate().map(|(m, &b)| (-1i64).pow(m as u32) * b as i64).sum();
        prop_assert_eq!(chi, chi_b);
    }

    #[test]
    fn skeleton_pairs_are_idempotent(key in prop::sample::select(MANIFOLDS), pick in prop::collection::vec(any::<bool>(), 1..9), m in 0usize..4) {
        let pair = remark(&generate::<f64>(key, MarkMode::None).unwrap(), &pick);
        let n = pair.top_dim();
        prop_assert!(same_pair(&pair.skeleton_pair(n).unwrap(), &pair));
        let m = m.min(n);
        if let Ok(sk) = pair.skeleton_pair(m) {
            prop_assert_eq!(sk.top_dim(), m);
            prop_assert!(same_pair(&sk.skeleton_pair(m).unwrap(), &sk));
        }
    }
}

#[test]
fn orientation_signs_cancel_across_codimension_two() {
    for key in MANIFOLDS {
        let pair = generate::<f64>(key, MarkMode::None).unwrap();
        for m in 2..=pair.top_dim() {
            for cell in pair.stratum(m) {
                for skip in 0..=m {
                    for skip2 in skip + 1..=m {
                        let g: Vec<usize> = (0..=m).filter(|&p| p != skip && p != skip2).map(|p| cell.vertices[p]).collect();
                        let g = pair.simplex(pair.find(&g).unwrap());
                        let mut sum = 0i32;
                        for s in [skip, skip2] {
                            let f: Vec<usize> = (0..=m).filter(|&p| p != s).map(|p| cell.vertices[p]).collect();
                            let f = pair.simplex(pair.find(&f).unwrap());
                            sum += (orientation_sign(f, cell).unwrap() * orientation_sign(g, f).unwrap()) as i32;
                        }
                        assert_eq!(sum, 0, "{key}: cell {:?}", cell.vertices);
                    }
                }
            }
        }
    }
}

#[test]
fn patch_condition_on_manifold_catalog() {
    for key in MANIFOLDS {
        for mode in modes() {
            let pair = generate::<f64>(key, mode).unwrap();
            let n = pair.top_dim();
            let report = pair.check_local_patch_condition();
            assert!(report.pass, "{key} {mode:?}: {:?}", report.failures().next());
            for e in &report.entries {
                assert!(e.betti[..n].iter().all(|&b| b == 0), "{key}: {e:?}");
                assert!(e.betti[n] <= 1, "{key}: {e:?}");
            }
        }
    }
}

#[test]
fn pinched_vertex_fails_patch_condition() {
    let pair = generate::<f64>("pinched", MarkMode::None).unwrap();
    let report = pair.check_local_patch_condition();
    let bad: Vec<_> = report.failures().collect();
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].simplex.len(), 1);
}

#[test]
fn mesh_file_round_trip() {
    let pair = generate::<f64>("annulus(1)", MarkMode::Half).unwrap();
    let text = serde_json::to_string(&pair.to_mesh_file()).unwrap();
    let back: ddforms::mesh::MeshFile = serde_json::from_str(&text).unwrap();
    assert!(same_pair(&back.into_pair::<f64>().unwrap(), &pair));
}

#[test]
fn weights_scale_under_refinement() {
    // halving every length scales a vertex weight by 2^-n
    let coarse = generate::<f64>("square_grid(2)", MarkMode::None).unwrap();
    let fine = generate::<f64>("square_grid(4)", MarkMode::None).unwrap();
    let origin = |p: &RelativePair<f64>| {
        let v = p.coords().iter().position(|c| c.iter().all(|&x| x.abs() < 1e-12)).unwrap();
        SimplexId { dim: 0, index: p.find(&[v]).unwrap().index }
    };
    let wc = coarse.mesh_weight(origin(&coarse)).unwrap();
    let wf = fine.mesh_weight(origin(&fine)).unwrap();
    approx::assert_relative_eq!(wf / wc, 0.25, max_relative = 1e-12);
}
