//! Manufactured solutions, L2 errors and convergence studies.

use std::f64::consts::PI;
use std::time::Instant;

use thiserror::Error;

use crate::assembly::{Assembler, AssemblyError, FunctionSpace};
use crate::discretization::{
    fill_cell_geometry, make_quadrature, tabulate, CellGeometry, DiscretizationError, ElementKind,
    LagrangeElement,
};
use crate::layout::{CoordinateField, ElementRestriction};
use crate::mesh::{generate, CellShape, MeshPlex};
use crate::physics::{scalar_fn, Bratu, MassReaction, PointwiseModel, Poisson, ScalarFn};
use crate::solver::{newton_solve, DiscreteProblem, NewtonOptions, NewtonReport, SolverError};

#[derive(Debug, Error)]
pub enum MmsError {
    #[error("refinement levels must be positive and strictly increasing")]
    InvalidLevels,
    #[error("Newton did not converge at n = {n} ({reason:?} after {iterations} iterations)")]
    NotConverged {
        n: usize,
        reason: crate::solver::StopReason,
        iterations: usize,
    },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

/// A closed-form scalar solution with its Laplacian.
#[derive(Clone)]
pub struct ManufacturedSolution {
    pub name: &'static str,
    pub u: ScalarFn,
    pub laplacian: ScalarFn,
}

impl ManufacturedSolution {
    /// `Π sin(π x_i)`, vanishing on the boundary of the unit cube;
    /// `Δu = −dim·π²·u`.
    pub fn sine_product() -> Self {
        let u = |x: &[f64]| x.iter().map(|&xi| (PI * xi).sin()).product::<f64>();
        ManufacturedSolution {
            name: "sine-product",
            u: scalar_fn(u),
            laplacian: scalar_fn(move |x| -(x.len() as f64) * PI * PI * u(x)),
        }
    }

    /// `Σ x_i`, harmonic.
    pub fn linear_sum() -> Self {
        ManufacturedSolution {
            name: "linear-sum",
            u: scalar_fn(|x| x.iter().sum()),
            laplacian: scalar_fn(|_| 0.0),
        }
    }

    /// `Σ x_i²`; `Δu = 2·dim`.
    pub fn quadratic_sum() -> Self {
        ManufacturedSolution {
            name: "quadratic-sum",
            u: scalar_fn(|x| x.iter().map(|v| v * v).sum()),
            laplacian: scalar_fn(|x| 2.0 * x.len() as f64),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.u)(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    Poisson,
    Mass { c: f64 },
    Bratu { lambda: f64 },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Poisson => "poisson",
            ModelKind::Mass { .. } => "mass",
            ModelKind::Bratu { .. } => "bratu",
        }
    }

    /// The model whose solution is `sol`, with forcing derived from the
    /// Laplacian: `g = −Δu` (Poisson), `g = c·u` (mass),
    /// `g = −Δu − λ·eᵘ` (Bratu).
    pub fn with_solution(&self, sol: &ManufacturedSolution) -> Box<dyn PointwiseModel> {
        let (u, lap) = (sol.u.clone(), sol.laplacian.clone());
        match *self {
            ModelKind::Poisson => Box::new(Poisson::new(scalar_fn(move |x| -lap(x))).with_exact(u)),
            ModelKind::Mass { c } => {
                let uf = u.clone();
                Box::new(MassReaction::new(c, scalar_fn(move |x| c * uf(x))).with_exact(u))
            }
            ModelKind::Bratu { lambda } => {
                let uf = u.clone();
                Box::new(
                    Bratu::new(lambda)
                        .with_forcing(scalar_fn(move |x| -lap(x) - lambda * uf(x).exp()))
                        .with_exact(u),
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    Interval,
    TriSquare,
    QuadSquare,
    TetCube,
}

impl MeshFamily {
    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Interval => "interval",
            MeshFamily::TriSquare => "tri-square",
            MeshFamily::QuadSquare => "quad-square",
            MeshFamily::TetCube => "tet-cube",
        }
    }

    pub fn shape(self) -> CellShape {
        match self {
            MeshFamily::Interval => CellShape::Segment,
            MeshFamily::TriSquare => CellShape::Triangle,
            MeshFamily::QuadSquare => CellShape::Quadrilateral,
            MeshFamily::TetCube => CellShape::Tetrahedron,
        }
    }

    /// `n` divisions per axis of the unit interval, square or cube.
    pub fn build(self, n: usize) -> MeshPlex {
        match self {
            MeshFamily::Interval => generate::unit_interval(n),
            MeshFamily::TriSquare => generate::unit_square_tri(n),
            MeshFamily::QuadSquare => generate::unit_square_quad(n),
            MeshFamily::TetCube => generate::unit_cube_tet(n),
        }
    }

    /// Domain measure.
    pub fn measure(self) -> f64 {
        1.0
    }
}

/// `√(Σ_cells Σ_q |det J|·w_q·|u_h(x_q) − u(x_q)|²)` with a rule of degree
/// `2·degree + 2`. `u_local` is a local vector over `space.section`.
pub fn l2_error(
    mesh: &MeshPlex,
    space: &FunctionSpace,
    u_local: &[f64],
    exact: &dyn Fn(&[f64], &mut [f64]),
) -> Result<f64, MmsError> {
    let shape = space.element.shape();
    let rule = make_quadrature(shape, 2 * space.element.degree() + 2)?;
    let tab = tabulate(&space.element, &rule);
    let gtab = tabulate(&LagrangeElement::geometric(shape), &rule);
    let coords = CoordinateField::new(mesh);
    let crestr = ElementRestriction::new(mesh, &coords.section, 0).map_err(AssemblyError::from)?;
    let nc = space.components;
    let dim = mesh.dim();
    let mut geom = CellGeometry::new(rule.len(), dim);
    let mut xe = vec![0.0; gtab.nb * dim];
    let mut ue = vec![0.0; tab.nb * nc];
    let mut ex = vec![0.0; nc];
    let mut total = 0.0;
    for cell in mesh.cells() {
        for (k, &i) in crestr.indices(cell).iter().enumerate() {
            xe[k] = coords.values[i];
        }
        let det = fill_cell_geometry(&xe, &gtab, &mut geom);
        if det <= 0.0 {
            return Err(DiscretizationError::InvertedCell { cell, det }.into());
        }
        for (k, &i) in space.restriction.indices(cell).iter().enumerate() {
            ue[k] = u_local[i];
        }
        for q in 0..tab.nq {
            exact(geom.point(q), &mut ex);
            for (c, e) in ex.iter().enumerate() {
                let uh: f64 = (0..tab.nb).map(|i| tab.b(q, i) * ue[i * nc + c]).sum();
                total += geom.scaling[q] * (uh - e) * (uh - e);
            }
        }
    }
    Ok(total.sqrt())
}

/// Solution of one discrete problem.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub u_global: Vec<f64>,
    pub u_local: Vec<f64>,
    pub report: NewtonReport,
}

/// Solves `model` on `space` with Dirichlet data from the model's exact
/// solution, by Newton from a zero initial guess.
pub fn solve_with_exact_bc(
    mesh: &MeshPlex,
    space: &FunctionSpace,
    model: &dyn PointwiseModel,
    chunk_size: usize,
    threads: usize,
) -> Result<DiscreteSolution, MmsError> {
    let asm = Assembler::new(mesh, space, model)?
        .with_chunk_size(chunk_size)?
        .with_threads(threads)?;
    let bc = |_: usize, x: &[f64], v: &mut [f64]| {
        if !model.exact_solution(x, v) {
            v.fill(0.0);
        }
    };
    let problem = DiscreteProblem {
        assembler: &asm,
        bc: &bc,
    };
    let (u_global, report) = newton_solve(
        &problem,
        &vec![0.0; space.num_global()],
        &NewtonOptions::default(),
    )?;
    let u_local = asm.local_state(&u_global, &bc)?;
    Ok(DiscreteSolution {
        u_global,
        u_local,
        report,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyLevel {
    pub n: usize,
    pub h: f64,
    pub num_global: usize,
    pub l2_error: f64,
    pub newton_iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub levels: Vec<StudyLevel>,
    /// `log(e_i/e_{i+1}) / log(h_i/h_{i+1})`, one per consecutive pair.
    pub rates: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn final_rate(&self) -> Option<f64> {
        self.rates.last().copied()
    }
}

#[derive(Clone)]
pub struct StudyConfig {
    pub family: MeshFamily,
    pub element: ElementKind,
    pub model: ModelKind,
    pub solution: ManufacturedSolution,
    /// Divisions per axis, strictly increasing.
    pub levels: Vec<usize>,
    pub chunk_size: usize,
    pub threads: usize,
}

/// Builds, solves and measures the error on every level.
pub fn run_convergence(cfg: &StudyConfig) -> Result<ConvergenceStudy, MmsError> {
    if cfg.levels.is_empty() || cfg.levels[0] == 0 || cfg.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MmsError::InvalidLevels);
    }
    let model = cfg.model.with_solution(&cfg.solution);
    let exact = |x: &[f64], v: &mut [f64]| v[0] = cfg.solution.eval(x);
    let mut levels = Vec::with_capacity(cfg.levels.len());
    for &n in &cfg.levels {
        let start = Instant::now();
        let mesh = cfg.family.build(n);
        let space = FunctionSpace::new(&mesh, cfg.element, 1, true)?;
        let sol = solve_with_exact_bc(&mesh, &space, model.as_ref(), cfg.chunk_size, cfg.threads)?;
        if !sol.report.converged {
            return Err(MmsError::NotConverged {
                n,
                reason: sol.report.reason,
                iterations: sol.report.iterations,
            });
        }
        let err = l2_error(&mesh, &space, &sol.u_local, &exact)?;
        levels.push(StudyLevel {
            n,
            h: 1.0 / n as f64,
            num_global: space.num_global(),
            l2_error: err,
            newton_iterations: sol.report.iterations,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let rates = levels
        .windows(2)
        .map(|w| (w[0].l2_error / w[1].l2_error).ln() / (w[0].h / w[1].h).ln())
        .collect();
    Ok(ConvergenceStudy { levels, rates })
}
