//! Linear solvers and Newton's method for the assembled systems.

use thiserror::Error;

use crate::assembly::{Assembler, AssemblyError, SparseMatrix};
use crate::layout::BoundaryFn;

/// Largest system handed to the dense LU factorization.
pub const DENSE_LIMIT: usize = 2000;

pub const CG_TOLERANCE: f64 = 1e-12;

/// Acceptance threshold on `‖Ax − b‖ / ‖b‖` after any linear solve.
pub const LINEAR_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("matrix is singular (zero pivot in column {0})")]
    Singular(usize),
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },
    #[error("conjugate gradients broke down: matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("system of size {0} exceeds the dense solver limit and is not flagged SPD")]
    TooLarge(usize),
    #[error("linear solve residual {0:e} exceeds tolerance")]
    Inaccurate(f64),
    #[error("right-hand side has length {found}, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense LU with partial pivoting.
pub fn solve_dense_lu(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = a.n();
    if b.len() != n {
        return Err(SolverError::SizeMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let mut m = a.to_dense();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, m[i * n + k].abs()))
            .fold((k, -1.0), |acc, e| if e.1 > acc.1 { e } else { acc });
        if pmax <= scale * f64::EPSILON * n as f64 || pmax == 0.0 {
            return Err(SolverError::Singular(k));
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let piv = m[k * n + k];
        for i in k + 1..n {
            let l = m[i * n + k] / piv;
            if l == 0.0 {
                continue;
            }
            m[i * n + k] = l;
            for j in k + 1..n {
                m[i * n + j] -= l * m[k * n + j];
            }
            x[i] -= l * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Ok(x)
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess;
/// stops when `‖r‖ ≤ tol·‖b‖`.
pub fn solve_cg(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolverError> {
    let n = a.n();
    if b.len() != n {
        return Err(SolverError::SizeMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolverError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm2(&r);
        if rn <= tol * bnorm {
            return Ok(x);
        }
        if it + 1 == max_iter {
            return Err(SolverError::CgNotConverged {
                iterations: max_iter,
                residual: rn / bnorm,
            });
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::CgNotConverged {
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

/// Solves `A x = b`: CG (tolerance [`CG_TOLERANCE`], at most `10·n`
/// iterations) when `spd`, dense LU otherwise. The result is rejected if
/// `‖Ax − b‖/‖b‖` exceeds [`LINEAR_RESIDUAL_TOLERANCE`].
pub fn solve_linear(a: &SparseMatrix, b: &[f64], spd: bool) -> Result<Vec<f64>, SolverError> {
    let n = a.n();
    let x = if spd {
        solve_cg(a, b, CG_TOLERANCE, (10 * n).max(1))?
    } else if n <= DENSE_LIMIT {
        solve_dense_lu(a, b)?
    } else {
        return Err(SolverError::TooLarge(n));
    };
    let bnorm = norm2(b);
    if bnorm > 0.0 {
        let ax = a.matvec(&x);
        let res = norm2(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>()) / bnorm;
        if res.is_nan() || res > LINEAR_RESIDUAL_TOLERANCE {
            return Err(SolverError::Inaccurate(res));
        }
    }
    Ok(x)
}

/// A residual/Jacobian pair on `num_unknowns` unknowns.
pub trait NonlinearProblem {
    fn num_unknowns(&self) -> usize;
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError>;
    fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix, SolverError>;
    fn jacobian_is_spd(&self) -> bool;
}

/// The discrete problem defined by an assembler and its boundary data.
pub struct DiscreteProblem<'a, 'b> {
    pub assembler: &'a Assembler<'b>,
    pub bc: &'a BoundaryFn<'a>,
}

impl NonlinearProblem for DiscreteProblem<'_, '_> {
    fn num_unknowns(&self) -> usize {
        self.assembler.num_global()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        Ok(self.assembler.evaluate_residual(u, self.bc)?)
    }

    fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix, SolverError> {
        Ok(self.assembler.assemble_jacobian(u, self.bc)?)
    }

    fn jacobian_is_spd(&self) -> bool {
        self.assembler.model().is_spd()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Atol,
    Rtol,
    MaxIt,
    Diverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// `‖F(u_k)‖₂` for `k = 0..=iterations`.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    pub reason: StopReason,
}

impl NewtonReport {
    /// `‖F_{k+1}‖ / ‖F_k‖²` for each step.
    pub fn quadratic_ratios(&self) -> Vec<f64> {
        self.residual_norms
            .windows(2)
            .map(|w| w[1] / (w[0] * w[0]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_iter: usize,
    /// Residual growth factor over `max(‖F_0‖, 1)` treated as divergence.
    pub divergence_factor: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            atol: 1e-10,
            rtol: 1e-10,
            max_iter: 25,
            divergence_factor: 1e8,
        }
    }
}

/// Full-step Newton. Returns the iterate with the smallest residual along
/// with the report, whether or not it converged.
pub fn newton_solve(
    problem: &dyn NonlinearProblem,
    u0: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, NewtonReport), SolverError> {
    let n = problem.num_unknowns();
    if u0.len() != n {
        return Err(SolverError::SizeMismatch {
            expected: n,
            found: u0.len(),
        });
    }
    let mut u = u0.to_vec();
    let mut f = problem.residual(&u)?;
    let f0 = norm2(&f);
    let mut norms = vec![f0];
    let mut best = (f0, u.clone());
    let finish = |it: usize, norms: Vec<f64>, reason: StopReason, best: (f64, Vec<f64>)| {
        let converged = matches!(reason, StopReason::Atol | StopReason::Rtol);
        Ok((
            best.1,
            NewtonReport {
                iterations: it,
                residual_norms: norms,
                converged,
                reason,
            },
        ))
    };
    if f0 <= opts.atol {
        return finish(0, norms, StopReason::Atol, best);
    }
    for it in 1..=opts.max_iter {
        let j = problem.jacobian(&u)?;
        f.iter_mut().for_each(|v| *v = -*v);
        let du = solve_linear(&j, &f, problem.jacobian_is_spd())?;
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
        f = problem.residual(&u)?;
        let fn_ = norm2(&f);
        norms.push(fn_);
        if fn_ < best.0 {
            best = (fn_, u.clone());
        }
        if !fn_.is_finite() || fn_ > opts.divergence_factor * f0.max(1.0) {
            return finish(it, norms, StopReason::Diverged, best);
        }
        if fn_ <= opts.atol {
            return finish(it, norms, StopReason::Atol, best);
        }
        if fn_ <= opts.rtol * f0 {
            return finish(it, norms, StopReason::Rtol, best);
        }
    }
    finish(opts.max_iter, norms, StopReason::MaxIt, best)
}
