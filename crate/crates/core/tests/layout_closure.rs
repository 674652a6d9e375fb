use fem_core::layout::*;
use fem_core::mesh::generate::*;
use fem_core::mesh::MeshPlex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sections(mesh: &MeshPlex) -> Vec<Section> {
    let dim = mesh.dim();
    let layouts = [
        vec![FieldLayout::p1(dim)],
        vec![FieldLayout::p2(dim)],
        vec![
            FieldLayout::new(FieldLayout::p2(dim).nodes_per_depth, dim),
            FieldLayout::p1(dim),
        ],
        vec![
            FieldLayout::new(FieldLayout::p1(dim).nodes_per_depth, 3),
            FieldLayout::p2(dim),
        ],
    ];
    layouts
        .iter()
        .map(|l| Section::new(mesh, l).unwrap())
        .collect()
}

fn meshes() -> Vec<MeshPlex> {
    vec![
        unit_interval(4),
        unit_square_tri(3),
        unit_square_quad(3),
        unit_cube_tet(2),
    ]
}

#[test]
fn taylor_hood_closure_size() {
    let m = unit_square_tri(1);
    let s = Section::new(
        &m,
        &[FieldLayout::new(vec![1, 1, 0], 2), FieldLayout::p1(2)],
    )
    .unwrap();
    assert_eq!(s.closure_indices(&m, 0).unwrap().len(), 15);
    assert_eq!(s.closure_field_sizes(&m, 0).unwrap(), vec![12, 3]);
}

#[test]
fn storage_is_sum_of_dofs() {
    for m in meshes() {
        for s in sections(&m) {
            let total: usize = (0..m.num_points())
                .flat_map(|p| (0..s.num_fields()).map(move |f| (p, f)))
                .map(|(p, f)| s.dof(p, f))
                .sum();
            assert_eq!(total, s.storage_size());
        }
    }
}

#[test]
fn closure_indices_are_distinct() {
    for m in meshes() {
        for s in sections(&m) {
            for c in m.cells() {
                let mut idx = s.closure_indices(&m, c).unwrap();
                let n = idx.len();
                idx.sort_unstable();
                idx.dedup();
                assert_eq!(idx.len(), n);
            }
        }
    }
}

#[test]
fn every_dof_is_reached_by_some_cell() {
    for m in meshes() {
        for s in sections(&m) {
            let mut hit = vec![false; s.storage_size()];
            for c in m.cells() {
                for i in s.closure_indices(&m, c).unwrap() {
                    hit[i] = true;
                }
            }
            assert!(hit.iter().all(|&h| h));
        }
    }
}

#[test]
fn global_local_round_trip() {
    for m in meshes() {
        for s in sections(&m) {
            let (cs, g) = mark_boundary_constrained(&m, &s, 0).unwrap();
            assert_eq!(g.num_global() + cs.num_constrained(), cs.storage_size());
            let v: Vec<f64> = (0..g.num_global()).map(|i| i as f64 + 0.5).collect();
            let l = global_to_local_homogeneous(&g, &v).unwrap();
            let mut back = vec![0.0; g.num_global()];
            local_to_global_add(&g, &l, &mut back).unwrap();
            assert_eq!(back, v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Adding a gathered closure into a zero vector reproduces the source
    /// on the closure and nothing elsewhere; gathering what was added gives
    /// the added values back.
    #[test]
    fn closure_round_trip(mesh_id in 0usize..4, sec_id in 0usize..4, seed in any::<u64>()) {
        let m = &meshes()[mesh_id];
        let s = &sections(m)[sec_id];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..s.storage_size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = rng.random_range(0..m.num_cells());
        let vals = vec_get_closure(m, s, &v, c).unwrap();
        let mut w = vec![0.0; s.storage_size()];
        vec_set_closure_add(m, s, &mut w, c, &vals).unwrap();
        let idx = s.closure_indices(m, c).unwrap();
        for (i, (a, b)) in v.iter().zip(&w).enumerate() {
            if idx.contains(&i) {
                prop_assert_eq!(a, b);
            } else {
                prop_assert_eq!(*b, 0.0);
            }
        }
        prop_assert_eq!(vec_get_closure(m, s, &w, c).unwrap(), vals);
    }

    #[test]
    fn wrong_lengths_rejected(extra in 1usize..4) {
        let m = unit_square_tri(2);
        let s = Section::new(&m, &[FieldLayout::p1(2)]).unwrap();
        let v = vec![0.0; s.storage_size() + extra];
        let is_size_mismatch = matches!(vec_get_closure(&m, &s, &v, 0), Err(LayoutError::SizeMismatch { .. }));
        prop_assert!(is_size_mismatch);
    }
}
