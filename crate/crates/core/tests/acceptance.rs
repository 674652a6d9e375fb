//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

// `ensure!` must also fail on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use fem_core::assembly::*;
use fem_core::discretization::*;
use fem_core::layout::*;
use fem_core::mesh::generate::*;
use fem_core::mesh::{CellShape, MeshPlex};
use fem_core::mms::*;
use fem_core::physics::*;
use fem_core::solver::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn smooth_bc(_: usize, x: &[f64], v: &mut [f64]) {
    v[0] = 0.5 * x[0] - 0.25 * x[x.len() - 1] + 0.1;
}

fn forcing() -> ScalarFn {
    scalar_fn(|x| 1.0 + x[0] * x[x.len() - 1])
}

fn models() -> Vec<Box<dyn PointwiseModel>> {
    vec![
        Box::new(Poisson::new(forcing())),
        Box::new(MassReaction::new(1.5, forcing())),
        Box::new(Bratu::new(2.0).with_forcing(forcing())),
    ]
}

/// Every mesh family with each element it supports.
fn test_spaces() -> Vec<(&'static str, MeshPlex, ElementKind)> {
    vec![
        ("interval/p1", unit_interval(8), ElementKind::P1),
        ("interval/p2", unit_interval(8), ElementKind::P2),
        ("tri-square/p1", unit_square_tri(4), ElementKind::P1),
        ("tri-square/p2", unit_square_tri(4), ElementKind::P2),
        ("quad-square/q1", unit_square_quad(4), ElementKind::Q1),
        ("tet-cube/p1", unit_cube_tet(2), ElementKind::P1),
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut meshes = 0;
    for n in 1..=16 {
        for (mesh, closure) in [
            (unit_interval(n), 3),
            (unit_square_tri(n), 7),
            (unit_square_quad(n), 9),
            (unit_cube_tet(n), 15),
        ] {
            meshes += 1;
            let np = mesh.num_points();
            let dim = mesh.dim();
            let mut owner = vec![usize::MAX; np];
            for d in 0..=dim {
                for p in mesh.depth_stratum(d).map_err(|e| e.to_string())? {
                    ensure!(owner[p] == usize::MAX, "point {p} in two strata (n={n})");
                    owner[p] = d;
                }
            }
            ensure!(
                owner.iter().all(|&d| d != usize::MAX),
                "strata do not cover all points (n={n})"
            );
            // Every cone arrow appears once in the support of its target and
            // vice versa, and the arrow counts agree.
            let mut cone_arrows = 0;
            let mut support_arrows = 0;
            for p in 0..np {
                for &q in mesh.cone_points(p) {
                    ensure!(
                        mesh.support_points(q).iter().filter(|&&s| s == p).count() == 1,
                        "cone arrow {p}->{q} not in support"
                    );
                    cone_arrows += 1;
                }
                for &s in mesh.support_points(p) {
                    ensure!(
                        mesh.cone_points(s).iter().filter(|&&q| q == p).count() == 1,
                        "support arrow {p}->{s} not in cone"
                    );
                    support_arrows += 1;
                }
            }
            ensure!(
                cone_arrows == support_arrows,
                "cone and support sizes differ (n={n})"
            );
            for c in mesh.cells() {
                let cl = mesh.transitive_closure(c).map_err(|e| e.to_string())?;
                ensure!(
                    cl.len() == closure,
                    "cell {c}: closure {} != {closure} (dim {dim}, n={n})",
                    cl.len()
                );
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "runtime {secs:.2} s exceeds 5 s");
    Ok(format!(
        "{meshes} meshes (n = 1..16, all families), {secs:.2} s"
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let configs: Vec<(MeshPlex, Vec<FieldLayout>)> = vec![
        (unit_square_tri(3), vec![FieldLayout::p1(2)]),
        (unit_square_tri(3), vec![FieldLayout::p2(2)]),
        (
            unit_square_tri(3),
            vec![FieldLayout::new(vec![1, 1, 0], 2), FieldLayout::p1(2)],
        ),
        (unit_cube_tet(2), vec![FieldLayout::p1(3)]),
        (
            unit_cube_tet(2),
            vec![FieldLayout::p2(3), FieldLayout::new(vec![1, 0, 0, 0], 3)],
        ),
        (
            unit_interval(5),
            vec![FieldLayout::p2(1), FieldLayout::p1(1)],
        ),
    ];
    let mut trials = 0;
    for (mesh, layout) in &configs {
        let s = Section::new(mesh, layout).map_err(|e| e.to_string())?;
        for _ in 0..1000 / configs.len() + 1 {
            let v = random_vec(&mut rng, s.storage_size());
            let c = rng.random_range(0..mesh.num_cells());
            let vals = vec_get_closure(mesh, &s, &v, c).map_err(|e| e.to_string())?;
            let mut w = vec![0.0; s.storage_size()];
            vec_set_closure_add(mesh, &s, &mut w, c, &vals).map_err(|e| e.to_string())?;
            let idx: HashSet<usize> = s
                .closure_indices(mesh, c)
                .map_err(|e| e.to_string())?
                .into_iter()
                .collect();
            for i in 0..v.len() {
                let expect = if idx.contains(&i) { v[i] } else { 0.0 };
                ensure!(
                    w[i] == expect,
                    "entry {i} differs after scatter of cell {c}"
                );
            }
            ensure!(
                vec_get_closure(mesh, &s, &w, c).map_err(|e| e.to_string())? == vals,
                "gather after scatter differs"
            );
            trials += 1;
        }
    }
    Ok(format!(
        "{trials} random vectors over {} sections, exact equality",
        configs.len()
    ))
}

fn criterion_3() -> Outcome {
    let mesh = MeshPlex::build(
        CellShape::Triangle,
        &[vec![0, 1, 2]],
        &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
    )
    .map_err(|e| e.to_string())?;
    let space = FunctionSpace::new(&mesh, ElementKind::P1, 1, false).map_err(|e| e.to_string())?;
    let stiffness =
        [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]].map(|r| r.map(|v| 0.5 * v));
    let mass = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]].map(|r| r.map(|v| v / 24.0));
    let poisson = Poisson::new(scalar_fn(|_| 0.0));
    let reaction = MassReaction::new(1.0, scalar_fn(|_| 0.0));
    let mut worst = 0.0f64;
    for (model, expect) in [
        (&poisson as &dyn PointwiseModel, stiffness),
        (&reaction, mass),
    ] {
        let asm = Assembler::new(&mesh, &space, model).map_err(|e| e.to_string())?;
        let k = asm.element_matrices(&[0.0; 3]).map_err(|e| e.to_string())?;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((k[0][i * 3 + j] - expect[i][j]).abs());
            }
        }
    }
    ensure!(worst <= 1e-14, "max entry error {worst:e}");
    Ok(format!(
        "P1 stiffness and mass, max entry error {worst:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    let cases = [
        ("tri-square", unit_square_tri(4), ElementKind::P1),
        ("tri-square", unit_square_tri(4), ElementKind::P2),
        ("quad-square", unit_square_quad(4), ElementKind::Q1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (name, mesh, kind) in &cases {
        let space = FunctionSpace::new(mesh, *kind, 1, true).map_err(|e| e.to_string())?;
        for model in models() {
            let asm = Assembler::new(mesh, &space, model.as_ref()).map_err(|e| e.to_string())?;
            let u = random_vec(&mut rng, space.num_global());
            let r = asm
                .check_jacobian_fd(&u, &smooth_bc, usize::MAX)
                .map_err(|e| e.to_string())?;
            ensure!(
                r.max_rel_error <= 1e-6,
                "{} on {name} {kind:?}: {:e}",
                model.name(),
                r.max_rel_error
            );
            worst = worst.max(r.max_rel_error);
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "runtime {secs:.2} s exceeds 30 s");
    Ok(format!(
        "{count} model/mesh pairs, all columns, max rel err {worst:.2e}, {secs:.2} s"
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut combos = 0;
    for (name, mesh, kind) in test_spaces() {
        let space = FunctionSpace::new(&mesh, kind, 1, true).map_err(|e| e.to_string())?;
        for model in models() {
            let asm = Assembler::new(&mesh, &space, model.as_ref()).map_err(|e| e.to_string())?;
            let n = space.num_global();
            let u = random_vec(&mut rng, n);
            let a = asm
                .assemble_jacobian(&u, &smooth_bc)
                .map_err(|e| e.to_string())?;
            for _ in 0..20 {
                let x = random_vec(&mut rng, n);
                let ax = a.matvec(&x);
                let mf = asm
                    .apply_jacobian_matrix_free(&u, &x, &smooth_bc)
                    .map_err(|e| e.to_string())?;
                let diff: Vec<f64> = ax.iter().zip(&mf).map(|(p, q)| p - q).collect();
                let e = norm(&diff) / norm(&ax);
                ensure!(e <= 1e-12, "{} on {name}: {e:e}", model.name());
                worst = worst.max(e);
            }
            combos += 1;
        }
    }
    Ok(format!(
        "{combos} model/mesh combinations x 20 vectors, max rel err {worst:.2e}"
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut runs = 0;
    for (name, mesh, kind) in test_spaces() {
        let space = FunctionSpace::new(&mesh, kind, 1, true).map_err(|e| e.to_string())?;
        for model in models() {
            let u = random_vec(&mut rng, space.num_global());
            let mut reference: Option<Vec<f64>> = None;
            for cs in [1, 7, 64, mesh.num_cells()] {
                let asm = Assembler::new(&mesh, &space, model.as_ref())
                    .and_then(|a| a.with_chunk_size(cs))
                    .map_err(|e| e.to_string())?;
                let f = asm
                    .evaluate_residual(&u, &smooth_bc)
                    .map_err(|e| e.to_string())?;
                match &reference {
                    None => reference = Some(f),
                    Some(r) => ensure!(
                        r.iter().zip(&f).all(|(a, b)| a.to_bits() == b.to_bits()),
                        "{} on {name}: chunk size {cs} changes the residual",
                        model.name()
                    ),
                }
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} residual evaluations, bitwise identical across chunk sizes 1, 7, 64, nC"
    ))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    for (family, element, expected, tol) in [
        (MeshFamily::TriSquare, ElementKind::P1, 2.0, 0.15),
        (MeshFamily::TriSquare, ElementKind::P2, 3.0, 0.2),
        (MeshFamily::QuadSquare, ElementKind::Q1, 2.0, 0.15),
    ] {
        let cfg = StudyConfig {
            family,
            element,
            model: ModelKind::Poisson,
            solution: ManufacturedSolution::sine_product(),
            levels: vec![8, 16, 32],
            chunk_size: DEFAULT_CHUNK_SIZE,
            threads: 1,
        };
        let study = run_convergence(&cfg).map_err(|e| e.to_string())?;
        let rate = study.final_rate().ok_or("no rate")?;
        ensure!(
            (rate - expected).abs() <= tol,
            "{} rate {rate:.4}, expected {expected} ± {tol}",
            element.name()
        );
        summary.push(format!("{} {rate:.3}", element.name()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "runtime {secs:.2} s exceeds 60 s");
    Ok(format!(
        "finest-pair rates: {}, {secs:.2} s",
        summary.join(", ")
    ))
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for (element, solution) in [
        (ElementKind::P1, ManufacturedSolution::linear_sum()),
        (ElementKind::P2, ManufacturedSolution::quadratic_sum()),
    ] {
        let cfg = StudyConfig {
            family: MeshFamily::TriSquare,
            element,
            model: ModelKind::Poisson,
            solution,
            levels: vec![4, 8, 16],
            chunk_size: DEFAULT_CHUNK_SIZE,
            threads: 1,
        };
        let study = run_convergence(&cfg).map_err(|e| e.to_string())?;
        for l in &study.levels {
            ensure!(
                l.l2_error <= 1e-10,
                "{} at n={}: {:e}",
                element.name(),
                l.n,
                l.l2_error
            );
            worst = worst.max(l.l2_error);
        }
    }
    Ok(format!("x+y (P1) and x²+y² (P2), max l2 error {worst:.2e}"))
}

/// Bound on `‖F_{k+1}‖ / ‖F_k‖²` over the final Newton steps.
const QUADRATIC_RATIO_BOUND: f64 = 1.0;

fn criterion_9() -> Outcome {
    // Linear problems.
    for (family, element, model) in [
        (MeshFamily::TriSquare, ElementKind::P1, ModelKind::Poisson),
        (
            MeshFamily::TriSquare,
            ElementKind::P2,
            ModelKind::Mass { c: 1.0 },
        ),
        (MeshFamily::QuadSquare, ElementKind::Q1, ModelKind::Poisson),
    ] {
        let mesh = family.build(8);
        let space = FunctionSpace::new(&mesh, element, 1, true).map_err(|e| e.to_string())?;
        let m = model.with_solution(&ManufacturedSolution::sine_product());
        let sol = solve_with_exact_bc(&mesh, &space, m.as_ref(), DEFAULT_CHUNK_SIZE, 1)
            .map_err(|e| e.to_string())?;
        let r = &sol.report.residual_norms;
        ensure!(
            sol.report.converged && sol.report.iterations == 1 && r[1] <= 1e-10 * r[0],
            "{} {}: {} iterations, norms {r:?}",
            model.name(),
            element.name(),
            sol.report.iterations
        );
    }
    // Bratu.
    let mesh = unit_square_tri(16);
    let space = FunctionSpace::new(&mesh, ElementKind::P1, 1, true).map_err(|e| e.to_string())?;
    let zero_bc = |_: usize, _: &[f64], v: &mut [f64]| v[0] = 0.0;
    let solve = |lambda: f64| -> Result<NewtonReport, String> {
        let model = Bratu::new(lambda);
        let asm = Assembler::new(&mesh, &space, &model).map_err(|e| e.to_string())?;
        let problem = DiscreteProblem {
            assembler: &asm,
            bc: &zero_bc,
        };
        newton_solve(
            &problem,
            &vec![0.0; space.num_global()],
            &NewtonOptions::default(),
        )
        .map(|(_, r)| r)
        .map_err(|e| e.to_string())
    };
    let rep = solve(2.0)?;
    let last = *rep.residual_norms.last().unwrap();
    ensure!(
        rep.converged && rep.iterations <= 6 && last <= 1e-10,
        "Bratu λ=2: {:?} after {} iterations, ‖F‖ = {last:e}",
        rep.reason,
        rep.iterations
    );
    let ratios = rep.quadratic_ratios();
    let tail = &ratios[ratios.len().saturating_sub(3)..];
    ensure!(
        tail.iter().all(|&r| r <= QUADRATIC_RATIO_BOUND),
        "quadratic ratios {tail:?} exceed {QUADRATIC_RATIO_BOUND}"
    );
    let fold = solve(8.0)?;
    ensure!(!fold.converged, "Bratu λ=8 unexpectedly converged");
    Ok(format!(
        "linear: 1 iteration; Bratu λ=2: {} iterations, ‖F‖ = {last:.1e}, final ratios {:?}; λ=8: {:?}",
        rep.iterations,
        tail.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
        fold.reason
    ))
}

fn criterion_10() -> Outcome {
    let mut worst_total = 0.0f64;
    for (name, mesh, kind) in test_spaces() {
        let space = FunctionSpace::new(&mesh, kind, 1, false).map_err(|e| e.to_string())?;
        let model = MassReaction::new(1.0, scalar_fn(|_| 0.0));
        let asm = Assembler::new(&mesh, &space, &model).map_err(|e| e.to_string())?;
        let m = asm
            .assemble_jacobian(&vec![0.0; space.num_global()], &smooth_bc)
            .map_err(|e| e.to_string())?;
        let total: f64 = m.values().iter().sum();
        ensure!((total - 1.0).abs() <= 1e-12, "{name}: mass total {total}");
        worst_total = worst_total.max((total - 1.0).abs());
    }
    let mut worst_pu = 0.0f64;
    for (kind, shape) in [
        (ElementKind::P1, CellShape::Segment),
        (ElementKind::P2, CellShape::Segment),
        (ElementKind::P1, CellShape::Triangle),
        (ElementKind::P2, CellShape::Triangle),
        (ElementKind::Q1, CellShape::Quadrilateral),
        (ElementKind::P1, CellShape::Tetrahedron),
    ] {
        let el = LagrangeElement::new(kind, shape).map_err(|e| e.to_string())?;
        for degree in 1..=6 {
            let rule = make_quadrature(shape, degree).map_err(|e| e.to_string())?;
            let wsum: f64 = rule.weights().iter().sum();
            ensure!(
                (wsum - shape.reference_measure()).abs() <= 1e-14,
                "{shape:?} degree {degree}: weights sum {wsum}"
            );
            let t = tabulate(&el, &rule);
            for q in 0..t.nq {
                let s: f64 = (0..t.nb).map(|i| t.b(q, i)).sum();
                worst_pu = worst_pu.max((s - 1.0).abs());
            }
        }
    }
    ensure!(
        worst_pu <= 1e-14,
        "partition of unity violated by {worst_pu:e}"
    );
    Ok(format!("mass totals within {worst_total:.1e} of |Ω|; partition of unity within {worst_pu:.1e}; weight sums exact"))
}

fn criterion_11() -> Outcome {
    let mesh = unit_square_tri(32);
    let space = FunctionSpace::new(&mesh, ElementKind::P2, 1, true).map_err(|e| e.to_string())?;
    let model = Poisson::new(forcing());
    let asm = Assembler::new(&mesh, &space, &model).map_err(|e| e.to_string())?;
    let n = space.num_global();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = random_vec(&mut rng, n);
    let x = random_vec(&mut rng, n);
    let a = asm
        .assemble_jacobian(&u, &smooth_bc)
        .map_err(|e| e.to_string())?;
    asm.reset_counters();
    asm.apply_assembled(&a, &x).map_err(|e| e.to_string())?;
    let (af, ab) = report_per_dof(&asm.counters_snapshot(), n);
    asm.reset_counters();
    asm.apply_jacobian_matrix_free(&u, &x, &smooth_bc)
        .map_err(|e| e.to_string())?;
    let (mf, mb) = report_per_dof(&asm.counters_snapshot(), n);
    ensure!(
        mb < ab,
        "matrix-free bytes/dof {mb:.1} not below assembled {ab:.1}"
    );
    ensure!(
        mf > af,
        "matrix-free flops/dof {mf:.1} not above assembled {af:.1}"
    );
    Ok(format!("P2 tri-square n=32: bytes/dof {mb:.1} (matrix-free) < {ab:.1} (assembled); flops/dof {mf:.1} > {af:.1}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("topology", criterion_1),
        ("closure round-trip", criterion_2),
        ("element oracles", criterion_3),
        ("Jacobian consistency", criterion_4),
        ("matrix-free equivalence", criterion_5),
        ("chunk invariance", criterion_6),
        ("MMS convergence", criterion_7),
        ("Galerkin exactness", criterion_8),
        ("Newton behavior", criterion_9),
        ("conservation/normalization", criterion_10),
        ("perf contrast", criterion_11),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    println!("acceptance suite");
    for (k, (name, f)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
