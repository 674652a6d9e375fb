use fem_core::assembly::*;
use fem_core::discretization::ElementKind;
use fem_core::mesh::generate::*;
use fem_core::mms::*;
use fem_core::physics::*;
use fem_core::solver::*;

/// Bound on `‖F_{k+1}‖ / ‖F_k‖²` over the final Newton steps.
const QUADRATIC_RATIO_BOUND: f64 = 1.0;

fn homogeneous(_: usize, _: &[f64], v: &mut [f64]) {
    v[0] = 0.0;
}

fn bratu_report(lambda: f64, n: usize) -> NewtonReport {
    let mesh = unit_square_tri(n);
    let space = FunctionSpace::new(&mesh, ElementKind::P1, 1, true).unwrap();
    let model = Bratu::new(lambda);
    let asm = Assembler::new(&mesh, &space, &model).unwrap();
    let problem = DiscreteProblem {
        assembler: &asm,
        bc: &homogeneous,
    };
    newton_solve(
        &problem,
        &vec![0.0; space.num_global()],
        &NewtonOptions::default(),
    )
    .unwrap()
    .1
}

#[test]
fn linear_problems_take_one_step() {
    for (family, kind) in [
        (MeshFamily::TriSquare, ElementKind::P2),
        (MeshFamily::QuadSquare, ElementKind::Q1),
        (MeshFamily::TetCube, ElementKind::P1),
    ] {
        let mesh = family.build(4);
        let space = FunctionSpace::new(&mesh, kind, 1, true).unwrap();
        for model in [ModelKind::Poisson, ModelKind::Mass { c: 3.0 }] {
            let m = model.with_solution(&ManufacturedSolution::sine_product());
            let sol = solve_with_exact_bc(&mesh, &space, m.as_ref(), 32, 1).unwrap();
            assert!(sol.report.converged);
            assert_eq!(sol.report.iterations, 1);
            let r = &sol.report.residual_norms;
            assert!(r[1] <= 1e-10 * r[0].max(1.0));
        }
    }
}

#[test]
fn bratu_converges_quadratically() {
    let rep = bratu_report(2.0, 16);
    assert!(rep.converged);
    assert!(rep.iterations <= 6);
    assert!(*rep.residual_norms.last().unwrap() <= 1e-10);
    let ratios = rep.quadratic_ratios();
    for r in &ratios[ratios.len().saturating_sub(3)..] {
        assert!(*r <= QUADRATIC_RATIO_BOUND, "{ratios:?}");
    }
    assert_eq!(rep.residual_norms.len(), rep.iterations + 1);
}

#[test]
fn bratu_past_the_fold_fails() {
    let rep = bratu_report(8.0, 16);
    assert!(!rep.converged);
    assert!(matches!(
        rep.reason,
        StopReason::MaxIt | StopReason::Diverged
    ));
}

#[test]
fn exact_solutions_in_the_space_are_reproduced() {
    let cases = [
        (
            MeshFamily::TriSquare,
            ElementKind::P1,
            ManufacturedSolution::linear_sum(),
        ),
        (
            MeshFamily::QuadSquare,
            ElementKind::Q1,
            ManufacturedSolution::linear_sum(),
        ),
        (
            MeshFamily::TetCube,
            ElementKind::P1,
            ManufacturedSolution::linear_sum(),
        ),
        (
            MeshFamily::Interval,
            ElementKind::P2,
            ManufacturedSolution::quadratic_sum(),
        ),
        (
            MeshFamily::TriSquare,
            ElementKind::P2,
            ManufacturedSolution::quadratic_sum(),
        ),
    ];
    for (family, element, solution) in cases {
        for model in [
            ModelKind::Poisson,
            ModelKind::Mass { c: 1.0 },
            ModelKind::Bratu { lambda: 1.0 },
        ] {
            let cfg = StudyConfig {
                family,
                element,
                model,
                solution: solution.clone(),
                levels: vec![2, 3],
                chunk_size: 7,
                threads: 1,
            };
            let study = run_convergence(&cfg).unwrap();
            for l in &study.levels {
                assert!(
                    l.l2_error <= 1e-10,
                    "{family:?} {element:?} {model:?}: {}",
                    l.l2_error
                );
            }
        }
    }
}

#[test]
fn bratu_manufactured_rates() {
    let cfg = StudyConfig {
        family: MeshFamily::TriSquare,
        element: ElementKind::P1,
        model: ModelKind::Bratu { lambda: 1.0 },
        solution: ManufacturedSolution::sine_product(),
        levels: vec![4, 8, 16],
        chunk_size: 32,
        threads: 1,
    };
    let s = run_convergence(&cfg).unwrap();
    assert!((s.final_rate().unwrap() - 2.0).abs() <= 0.15);
}

#[test]
fn interval_rates() {
    for (element, expected) in [(ElementKind::P1, 2.0), (ElementKind::P2, 3.0)] {
        let cfg = StudyConfig {
            family: MeshFamily::Interval,
            element,
            model: ModelKind::Poisson,
            solution: ManufacturedSolution::sine_product(),
            levels: vec![8, 16, 32],
            chunk_size: 32,
            threads: 1,
        };
        let s = run_convergence(&cfg).unwrap();
        assert!((s.final_rate().unwrap() - expected).abs() <= 0.15);
        assert!(s.levels.windows(2).all(|w| w[1].h < w[0].h));
    }
}

#[test]
fn chunk_size_does_not_change_errors() {
    let errs: Vec<Vec<f64>> = [1, 7, 64]
        .into_iter()
        .map(|cs| {
            let cfg = StudyConfig {
                family: MeshFamily::TriSquare,
                element: ElementKind::P1,
                model: ModelKind::Poisson,
                solution: ManufacturedSolution::sine_product(),
                levels: vec![4, 8],
                chunk_size: cs,
                threads: 1,
            };
            run_convergence(&cfg)
                .unwrap()
                .levels
                .iter()
                .map(|l| l.l2_error)
                .collect()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn large_nonsymmetric_systems_are_refused() {
    let a = SparseMatrix::identity(DENSE_LIMIT + 1);
    assert!(matches!(
        solve_linear(&a, &vec![1.0; DENSE_LIMIT + 1], false),
        Err(SolverError::TooLarge(_))
    ));
}
