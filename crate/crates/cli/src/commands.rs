use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use fem_core::assembly::{report_per_dof, Assembler, AssemblyError, FunctionSpace, PerfCounters};
use fem_core::discretization::ElementKind;
use fem_core::layout::BoundaryFn;
use fem_core::mesh::MeshPlex;
use fem_core::mms::{run_convergence, MeshFamily, MmsError, ModelKind, StudyConfig};
use fem_core::physics::{verify_model_derivatives, Block, PhysicsError, PointwiseModel};
use thiserror::Error;

use crate::config::{
    CheckArgs, Cli, Command, ConvergeArgs, DumpArgs, Format, ModelArg, PerfArgs, ProblemArgs,
    VerifyArgs,
};

/// Relative agreement required between matrix-free and assembled apply.
const MATRIX_FREE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Mms(#[from] MmsError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Runs one command; `Ok(false)` means a check failed.
pub fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Converge(a) => converge(&a),
        Command::CheckJacobian(a) => check_jacobian(&a),
        Command::VerifyModel(a) => verify_model(&a),
        Command::Perf(a) => perf(&a),
        Command::ResidualDump(a) => residual_dump(&a),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// 17 significant digits.
fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn converge(a: &ConvergeArgs) -> Result<bool, CliError> {
    let model = a.problem.validate().map_err(CliError::Usage)?;
    if a.levels.is_empty() || a.levels[0] == 0 || a.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage(
            "--levels must be positive and strictly increasing".into(),
        ));
    }
    let cfg = StudyConfig {
        family: a.problem.mesh.into(),
        element: a.problem.element.into(),
        model,
        solution: a.problem.solution.build(),
        levels: a.levels.clone(),
        chunk_size: a.problem.chunk_size,
        threads: a.problem.threads,
    };
    let study = run_convergence(&cfg)?;
    let mut out = open_output(a.out.output.as_deref())?;
    let seconds = |s: f64| if a.no_timing { 0.0 } else { s };
    match a.out.format {
        Format::Csv => {
            writeln!(out, "h,dofs,l2_error,rate,seconds")?;
            for (k, l) in study.levels.iter().enumerate() {
                let rate = if k == 0 {
                    String::new()
                } else {
                    sci(study.rates[k - 1])
                };
                let s = if a.no_timing {
                    "0".to_string()
                } else {
                    sci(l.seconds)
                };
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    sci(l.h),
                    l.num_global,
                    sci(l.l2_error),
                    rate,
                    s
                )?;
            }
        }
        Format::Table => {
            writeln!(
                out,
                "# {} {} {} on {}",
                model.name(),
                ElementKind::from(a.problem.element).name(),
                cfg.solution.name,
                cfg.family.name()
            )?;
            writeln!(
                out,
                "{:>12} {:>8} {:>14} {:>8} {:>10}",
                "h", "dofs", "l2_error", "rate", "seconds"
            )?;
            for (k, l) in study.levels.iter().enumerate() {
                let rate = if k == 0 {
                    "-".to_string()
                } else {
                    format!("{:.4}", study.rates[k - 1])
                };
                writeln!(
                    out,
                    "{:>12.6e} {:>8} {:>14.6e} {:>8} {:>10.4}",
                    l.h,
                    l.num_global,
                    l.l2_error,
                    rate,
                    seconds(l.seconds)
                )?;
            }
        }
    }
    out.flush()?;
    if let (Some(min), Some(rate)) = (a.min_rate, study.final_rate()) {
        if rate.is_nan() || rate < min {
            eprintln!("final rate {rate:.4} is below the required {min}");
            return Ok(false);
        }
    }
    Ok(true)
}

/// A discrete problem with Dirichlet data from the manufactured solution.
struct Setup {
    mesh: MeshPlex,
    space: FunctionSpace,
    model: Box<dyn PointwiseModel>,
    kind: ModelKind,
    family: MeshFamily,
}

impl Setup {
    fn new(p: &ProblemArgs, n: usize) -> Result<Self, CliError> {
        let kind = p.validate().map_err(CliError::Usage)?;
        if n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        let family: MeshFamily = p.mesh.into();
        let mesh = family.build(n);
        let space = FunctionSpace::new(&mesh, p.element.into(), 1, true)?;
        let model = kind.with_solution(&p.solution.build());
        Ok(Setup {
            mesh,
            space,
            model,
            kind,
            family,
        })
    }

    fn assembler(&self, p: &ProblemArgs) -> Result<Assembler<'_>, CliError> {
        Ok(
            Assembler::new(&self.mesh, &self.space, self.model.as_ref())?
                .with_chunk_size(p.chunk_size)?
                .with_threads(p.threads)?,
        )
    }

    fn bc(&self) -> impl Fn(usize, &[f64], &mut [f64]) + Sync + '_ {
        move |_, x, v| {
            if !self.model.exact_solution(x, v) {
                v.fill(0.0);
            }
        }
    }

    /// Exact-solution interpolant plus a smooth perturbation, so nonlinear
    /// terms are exercised away from the solution.
    fn state(&self) -> Vec<f64> {
        let model = self.model.as_ref();
        self.space
            .interpolate(&self.mesh, &|x: &[f64], v: &mut [f64]| {
                if !model.exact_solution(x, v) {
                    v[0] = 0.0;
                }
                let s: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, xi)| (i + 2) as f64 * xi)
                    .sum();
                v[0] += 0.25 * (3.0 * s + 1.0).sin();
            })
    }

    /// A deterministic direction vector.
    fn direction(&self) -> Vec<f64> {
        (0..self.space.num_global())
            .map(|i| ((i as f64 + 1.0) * 0.754_877_666).fract() - 0.5)
            .collect()
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn check_jacobian(a: &CheckArgs) -> Result<bool, CliError> {
    let s = Setup::new(&a.problem, a.n)?;
    let asm = s.assembler(&a.problem)?;
    let bc = s.bc();
    let bc: &BoundaryFn = &bc;
    let u = s.state();
    let report = asm.check_jacobian_fd(&u, bc, a.samples.unwrap_or(usize::MAX))?;
    let jac = asm.assemble_jacobian(&u, bc)?;
    let x = s.direction();
    let mf = asm.apply_jacobian_matrix_free(&u, &x, bc)?;
    let mf_err = rel_diff(&jac.matvec(&x), &mf);
    let fd_ok = report.passed();
    let mf_ok = mf_err <= MATRIX_FREE_TOLERANCE;
    println!(
        "{} {} {} n={} dofs={} columns={}",
        s.kind.name(),
        s.family.name(),
        s.space.element.kind().name(),
        a.n,
        s.space.num_global(),
        report.columns_checked
    );
    println!(
        "finite-difference Jacobian: max rel err {:.3e} <= {:.0e}: {}",
        report.max_rel_error,
        report.tolerance,
        verdict(fd_ok)
    );
    println!(
        "matrix-free vs assembled: rel err {mf_err:.3e} <= {MATRIX_FREE_TOLERANCE:.0e}: {}",
        verdict(mf_ok)
    );
    Ok(fd_ok && mf_ok)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify_model(a: &VerifyArgs) -> Result<bool, CliError> {
    if !(1..=3).contains(&a.dim) {
        return Err(CliError::Usage("--dim must be 1, 2 or 3".into()));
    }
    if a.lambda.is_some() && a.model != ModelArg::Bratu {
        return Err(CliError::Usage(
            "--lambda applies only to --model bratu".into(),
        ));
    }
    if a.coefficient.is_some() && a.model != ModelArg::Mass {
        return Err(CliError::Usage(
            "--coefficient applies only to --model mass".into(),
        ));
    }
    let kind = match a.model {
        ModelArg::Poisson => ModelKind::Poisson,
        ModelArg::Mass => ModelKind::Mass {
            c: a.coefficient.unwrap_or(1.0),
        },
        ModelArg::Bratu => ModelKind::Bratu {
            lambda: a.lambda.unwrap_or(2.0),
        },
    };
    let model = kind.with_solution(&fem_core::mms::ManufacturedSolution::sine_product());
    let report = verify_model_derivatives(model.as_ref(), a.dim, a.samples, a.seed)?;
    println!("{} dim={} samples={}", kind.name(), a.dim, report.samples);
    for b in [Block::F00, Block::F01, Block::F10, Block::F11] {
        let e = report.worst[b as usize];
        println!(
            "{b}: max rel err {e:.3e} <= {:.0e}: {}",
            report.tolerance,
            verdict(e <= report.tolerance)
        );
    }
    Ok(report.passed())
}

fn perf(a: &PerfArgs) -> Result<bool, CliError> {
    let s = Setup::new(&a.problem, a.n)?;
    let asm = s.assembler(&a.problem)?;
    let bc = s.bc();
    let bc: &BoundaryFn = &bc;
    let u = s.state();
    let x = s.direction();
    let n = s.space.num_global();

    let measure = |f: &dyn Fn() -> Result<(), AssemblyError>| -> Result<PerfCounters, CliError> {
        asm.reset_counters();
        f()?;
        Ok(asm.counters_snapshot())
    };
    let residual = measure(&|| asm.evaluate_residual(&u, bc).map(|_| ()))?;
    let jac = asm.assemble_jacobian(&u, bc)?;
    let assembled = measure(&|| asm.apply_assembled(&jac, &x).map(|_| ()))?;
    let matrix_free = measure(&|| asm.apply_jacobian_matrix_free(&u, &x, bc).map(|_| ()))?;

    let rows = [
        ("residual", residual),
        ("assembled-apply", assembled),
        ("matrix-free-apply", matrix_free),
    ];
    let mut out = open_output(a.out.output.as_deref())?;
    match a.out.format {
        Format::Csv => {
            writeln!(out, "kernel,flops_per_dof,bytes_per_dof,flops,bytes,cells")?;
            for (name, c) in rows {
                let (f, b) = report_per_dof(&c, n);
                writeln!(
                    out,
                    "{name},{},{},{},{},{}",
                    sci(f),
                    sci(b),
                    c.flops,
                    c.bytes_moved,
                    c.cells_processed
                )?;
            }
        }
        Format::Table => {
            writeln!(
                out,
                "# {} {} on {} n={} ({} dofs, {} cells, nnz {})",
                s.kind.name(),
                s.space.element.kind().name(),
                s.family.name(),
                a.n,
                n,
                s.mesh.num_cells(),
                jac.nnz()
            )?;
            writeln!(
                out,
                "{:<18} {:>12} {:>12}",
                "kernel", "flops/dof", "bytes/dof"
            )?;
            for (name, c) in rows {
                let (f, b) = report_per_dof(&c, n);
                writeln!(out, "{name:<18} {f:>12.2} {b:>12.2}")?;
            }
        }
    }
    out.flush()?;
    Ok(true)
}

fn residual_dump(a: &DumpArgs) -> Result<bool, CliError> {
    let s = Setup::new(&a.problem, a.n)?;
    let asm = s.assembler(&a.problem)?;
    let bc = s.bc();
    let bc: &BoundaryFn = &bc;
    let u = s.state();
    let f = asm.evaluate_residual(&u, bc)?;
    let mut out = open_output(a.output.as_deref())?;
    for v in &f {
        writeln!(out, "{}", sci(*v))?;
    }
    out.flush()?;
    if let Some(path) = &a.matrix {
        let jac = asm.assemble_jacobian(&u, bc)?;
        let mut w = BufWriter::new(File::create(path)?);
        jac.write_triplets(&mut w)?;
        w.flush()?;
    }
    Ok(true)
}
