//! Pointwise physics.
//!
//! A model supplies the integrands of the weak form
//!
//! ```text
//! ∫ φ · f0(u, ∇u) + ∇φ : f1(u, ∇u) = 0
//! ```
//!
//! evaluated at a single point, plus the four derivative blocks
//! `∂f0/∂u`, `∂f0/∂∇u`, `∂f1/∂u`, `∂f1/∂∇u` used by the Jacobian.
//! Forcing terms live in `f0` with a minus sign, so the residual vanishes at
//! the solution.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PhysicsError {
    #[error("model provides no Jacobian blocks")]
    MissingJacobian,
}

/// A scalar function of position.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub fn scalar_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// Field data at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct PointValues<'a> {
    pub x: &'a [f64],
    pub u: &'a [f64],
    /// `components × dim`, row-major.
    pub grad_u: &'a [f64],
    /// Auxiliary field values (may be empty).
    pub a: &'a [f64],
    pub grad_a: &'a [f64],
}

impl PointValues<'_> {
    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// The pointwise Jacobian blocks for `c` components in `dim` dimensions.
///
/// Layouts (row-major):
/// - `g00[ci][cj]`
/// - `g01[ci][cj][d]`
/// - `g10[ci][d][cj]`
/// - `g11[ci][d][cj][e]`
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianBlocks {
    pub nc: usize,
    pub dim: usize,
    pub g00: Vec<f64>,
    pub g01: Vec<f64>,
    pub g10: Vec<f64>,
    pub g11: Vec<f64>,
}

impl JacobianBlocks {
    pub fn new(nc: usize, dim: usize) -> Self {
        JacobianBlocks {
            nc,
            dim,
            g00: vec![0.0; nc * nc],
            g01: vec![0.0; nc * nc * dim],
            g10: vec![0.0; nc * dim * nc],
            g11: vec![0.0; nc * dim * nc * dim],
        }
    }

    pub fn zero(&mut self) {
        self.g00.fill(0.0);
        self.g01.fill(0.0);
        self.g10.fill(0.0);
        self.g11.fill(0.0);
    }

    /// Sets `g11` to `scale · δ_ij δ_de`.
    pub fn set_identity_flux(&mut self, scale: f64) {
        let (nc, dim) = (self.nc, self.dim);
        for c in 0..nc {
            for d in 0..dim {
                self.g11[((c * dim + d) * nc + c) * dim + d] = scale;
            }
        }
    }
}

/// User physics evaluated at quadrature points. Implementations must be
/// pure functions of their inputs.
pub trait PointwiseModel: Send + Sync {
    fn name(&self) -> &str;

    fn num_components(&self) -> usize {
        1
    }

    /// Number of auxiliary field components the model reads from `a`.
    fn num_aux(&self) -> usize {
        0
    }

    /// Writes `f0`, length `components`.
    fn f0(&self, p: &PointValues, f0: &mut [f64]);

    /// Writes `f1`, `components × dim` row-major.
    fn f1(&self, p: &PointValues, f1: &mut [f64]);

    /// Writes the derivative blocks. `j` arrives zeroed.
    fn jacobian(&self, _p: &PointValues, _j: &mut JacobianBlocks) -> Result<(), PhysicsError> {
        Err(PhysicsError::MissingJacobian)
    }

    /// Closed-form solution, when the model was built from one.
    fn exact_solution(&self, _x: &[f64], _u: &mut [f64]) -> bool {
        false
    }

    /// Whether the Jacobian is symmetric positive definite on the
    /// unconstrained space.
    fn is_spd(&self) -> bool {
        false
    }

    /// Floating-point operations per `f0` + `f1` call; user closures
    /// (forcing, exact solution) are not counted.
    fn residual_flops(&self, _dim: usize) -> u64 {
        0
    }

    /// Floating-point operations per `jacobian` call.
    fn jacobian_flops(&self, _dim: usize) -> u64 {
        0
    }
}

fn eval_exact(exact: &Option<ScalarFn>, x: &[f64], u: &mut [f64]) -> bool {
    match exact {
        Some(f) => {
            u[0] = f(x);
            true
        }
        None => false,
    }
}

/// `-Δu = g`: `f0 = -g(x)`, `f1 = ∇u`.
#[derive(Clone)]
pub struct Poisson {
    pub forcing: ScalarFn,
    pub exact: Option<ScalarFn>,
}

impl Poisson {
    pub fn new(forcing: ScalarFn) -> Self {
        Poisson {
            forcing,
            exact: None,
        }
    }

    pub fn with_exact(mut self, exact: ScalarFn) -> Self {
        self.exact = Some(exact);
        self
    }
}

impl PointwiseModel for Poisson {
    fn name(&self) -> &str {
        "poisson"
    }

    fn f0(&self, p: &PointValues, f0: &mut [f64]) {
        f0[0] = -(self.forcing)(p.x);
    }

    fn f1(&self, p: &PointValues, f1: &mut [f64]) {
        f1.copy_from_slice(p.grad_u);
    }

    fn jacobian(&self, _p: &PointValues, j: &mut JacobianBlocks) -> Result<(), PhysicsError> {
        j.set_identity_flux(1.0);
        Ok(())
    }

    fn exact_solution(&self, x: &[f64], u: &mut [f64]) -> bool {
        eval_exact(&self.exact, x, u)
    }

    fn is_spd(&self) -> bool {
        true
    }

    fn residual_flops(&self, _dim: usize) -> u64 {
        1
    }
}

/// `c·u = g`: `f0 = c·u - g(x)`, `f1 = 0`.
#[derive(Clone)]
pub struct MassReaction {
    pub c: f64,
    pub forcing: ScalarFn,
    pub exact: Option<ScalarFn>,
}

impl MassReaction {
    pub fn new(c: f64, forcing: ScalarFn) -> Self {
        MassReaction {
            c,
            forcing,
            exact: None,
        }
    }

    pub fn with_exact(mut self, exact: ScalarFn) -> Self {
        self.exact = Some(exact);
        self
    }
}

impl PointwiseModel for MassReaction {
    fn name(&self) -> &str {
        "mass"
    }

    fn f0(&self, p: &PointValues, f0: &mut [f64]) {
        f0[0] = self.c * p.u[0] - (self.forcing)(p.x);
    }

    fn f1(&self, _p: &PointValues, f1: &mut [f64]) {
        f1.fill(0.0);
    }

    fn jacobian(&self, _p: &PointValues, j: &mut JacobianBlocks) -> Result<(), PhysicsError> {
        j.g00[0] = self.c;
        Ok(())
    }

    fn exact_solution(&self, x: &[f64], u: &mut [f64]) -> bool {
        eval_exact(&self.exact, x, u)
    }

    fn is_spd(&self) -> bool {
        self.c > 0.0
    }

    fn residual_flops(&self, _dim: usize) -> u64 {
        2
    }
}

/// Bratu: `-Δu - λ e^u = g`, i.e. `f0 = -λ e^u - g(x)`, `f1 = ∇u`.
#[derive(Clone)]
pub struct Bratu {
    pub lambda: f64,
    pub forcing: Option<ScalarFn>,
    pub exact: Option<ScalarFn>,
}

impl Bratu {
    pub fn new(lambda: f64) -> Self {
        Bratu {
            lambda,
            forcing: None,
            exact: None,
        }
    }

    pub fn with_forcing(mut self, forcing: ScalarFn) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_exact(mut self, exact: ScalarFn) -> Self {
        self.exact = Some(exact);
        self
    }
}

impl PointwiseModel for Bratu {
    fn name(&self) -> &str {
        "bratu"
    }

    fn f0(&self, p: &PointValues, f0: &mut [f64]) {
        let g = self.forcing.as_ref().map_or(0.0, |g| g(p.x));
        f0[0] = -self.lambda * p.u[0].exp() - g;
    }

    fn f1(&self, p: &PointValues, f1: &mut [f64]) {
        f1.copy_from_slice(p.grad_u);
    }

    fn jacobian(&self, p: &PointValues, j: &mut JacobianBlocks) -> Result<(), PhysicsError> {
        j.g00[0] = -self.lambda * p.u[0].exp();
        j.set_identity_flux(1.0);
        Ok(())
    }

    fn exact_solution(&self, x: &[f64], u: &mut [f64]) -> bool {
        eval_exact(&self.exact, x, u)
    }

    // exp counted as one operation.
    fn residual_flops(&self, _dim: usize) -> u64 {
        3
    }

    fn jacobian_flops(&self, _dim: usize) -> u64 {
        2
    }
}

/// `-∇·(k ∇u) = g` with the coefficient `k` read from auxiliary field 0.
#[derive(Clone)]
pub struct VariableCoefficientPoisson {
    pub forcing: ScalarFn,
}

impl PointwiseModel for VariableCoefficientPoisson {
    fn name(&self) -> &str {
        "variable-poisson"
    }

    fn num_aux(&self) -> usize {
        1
    }

    fn f0(&self, p: &PointValues, f0: &mut [f64]) {
        f0[0] = -(self.forcing)(p.x);
    }

    fn f1(&self, p: &PointValues, f1: &mut [f64]) {
        for (o, g) in f1.iter_mut().zip(p.grad_u) {
            *o = p.a[0] * g;
        }
    }

    fn jacobian(&self, p: &PointValues, j: &mut JacobianBlocks) -> Result<(), PhysicsError> {
        j.set_identity_flux(p.a[0]);
        Ok(())
    }

    fn is_spd(&self) -> bool {
        true
    }

    fn residual_flops(&self, dim: usize) -> u64 {
        1 + dim as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    F00,
    F01,
    F10,
    F11,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Block::F00 => "f00",
            Block::F01 => "f01",
            Block::F10 => "f10",
            Block::F11 => "f11",
        };
        f.write_str(s)
    }
}

/// Worst relative error of each analytic block against central differences.
#[derive(Clone, Debug)]
pub struct DerivativeReport {
    pub samples: usize,
    pub tolerance: f64,
    /// Indexed by `Block as usize`.
    pub worst: [f64; 4],
}

impl DerivativeReport {
    pub fn failing_blocks(&self) -> Vec<Block> {
        [Block::F00, Block::F01, Block::F10, Block::F11]
            .into_iter()
            .filter(|&b| self.worst[b as usize].is_nan() || self.worst[b as usize] > self.tolerance)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failing_blocks().is_empty()
    }

    pub fn max_error(&self) -> f64 {
        self.worst.iter().copied().fold(0.0, f64::max)
    }
}

pub const FD_STEP: f64 = 1e-6;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;

/// Mixed relative error: absolute near zero, relative elsewhere.
fn rel_err(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1.0)
}

/// Width of a centered step as actually represented in floating point, so a
/// linear function differences exactly.
fn step_span(v: f64, plus: f64, minus: f64) -> f64 {
    (plus - v) + (v - minus)
}

/// Checks every derivative block of `model` against centered finite
/// differences of `f0`/`f1` at `samples` random points in `dim` dimensions.
pub fn verify_model_derivatives(
    model: &dyn PointwiseModel,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<DerivativeReport, PhysicsError> {
    let nc = model.num_components();
    let na = model.num_aux();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 4];
    let mut jac = JacobianBlocks::new(nc, dim);
    let (mut f0p, mut f0m) = (vec![0.0; nc], vec![0.0; nc]);
    let (mut f1p, mut f1m) = (vec![0.0; nc * dim], vec![0.0; nc * dim]);
    let h = FD_STEP;

    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let u: Vec<f64> = (0..nc).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gu: Vec<f64> = (0..nc * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(0.5..1.5)).collect();
        let ga: Vec<f64> = (0..na * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pv = PointValues {
            x: &x,
            u: &u,
            grad_u: &gu,
            a: &a,
            grad_a: &ga,
        };
        jac.zero();
        model.jacobian(&pv, &mut jac)?;

        for cj in 0..nc {
            let mut up = u.clone();
            let mut um = u.clone();
            up[cj] += h;
            um[cj] -= h;
            let span = step_span(u[cj], up[cj], um[cj]);
            let pp = PointValues { u: &up, ..pv };
            let pm = PointValues { u: &um, ..pv };
            model.f0(&pp, &mut f0p);
            model.f0(&pm, &mut f0m);
            model.f1(&pp, &mut f1p);
            model.f1(&pm, &mut f1m);
            for ci in 0..nc {
                let fd = (f0p[ci] - f0m[ci]) / span;
                worst[0] = worst[0].max(rel_err(jac.g00[ci * nc + cj], fd));
                for d in 0..dim {
                    let fd = (f1p[ci * dim + d] - f1m[ci * dim + d]) / span;
                    worst[2] = worst[2].max(rel_err(jac.g10[(ci * dim + d) * nc + cj], fd));
                }
            }
            for e in 0..dim {
                let mut gp = gu.clone();
                let mut gm = gu.clone();
                gp[cj * dim + e] += h;
                gm[cj * dim + e] -= h;
                let span = step_span(gu[cj * dim + e], gp[cj * dim + e], gm[cj * dim + e]);
                let pp = PointValues { grad_u: &gp, ..pv };
                let pm = PointValues { grad_u: &gm, ..pv };
                model.f0(&pp, &mut f0p);
                model.f0(&pm, &mut f0m);
                model.f1(&pp, &mut f1p);
                model.f1(&pm, &mut f1m);
                for ci in 0..nc {
                    let fd = (f0p[ci] - f0m[ci]) / span;
                    worst[1] = worst[1].max(rel_err(jac.g01[(ci * nc + cj) * dim + e], fd));
                    for d in 0..dim {
                        let fd = (f1p[ci * dim + d] - f1m[ci * dim + d]) / span;
                        worst[3] = worst[3]
                            .max(rel_err(jac.g11[((ci * dim + d) * nc + cj) * dim + e], fd));
                    }
                }
            }
        }
    }
    Ok(DerivativeReport {
        samples,
        tolerance: DERIVATIVE_TOLERANCE,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at<'a>(x: &'a [f64], u: &'a [f64], g: &'a [f64]) -> PointValues<'a> {
        PointValues {
            x,
            u,
            grad_u: g,
            a: &[],
            grad_a: &[],
        }
    }

    #[test]
    fn poisson_pointwise() {
        let m = Poisson::new(scalar_fn(|_| 4.0));
        let p = at(&[0.3, 0.2], &[0.0], &[1.0, 2.0]);
        let mut f0 = [0.0];
        let mut f1 = [0.0; 2];
        m.f0(&p, &mut f0);
        m.f1(&p, &mut f1);
        assert_eq!(f0, [-4.0]);
        assert_eq!(f1, [1.0, 2.0]);
        let mut j = JacobianBlocks::new(1, 2);
        m.jacobian(&p, &mut j).unwrap();
        assert_eq!(j.g11, vec![1.0, 0.0, 0.0, 1.0]);
        assert!(j.g00.iter().chain(&j.g01).chain(&j.g10).all(|&v| v == 0.0));
    }

    #[test]
    fn mass_pointwise() {
        let m = MassReaction::new(1.0, scalar_fn(|_| 0.0));
        let p = at(&[0.0], &[5.0], &[0.0]);
        let mut f0 = [0.0];
        m.f0(&p, &mut f0);
        assert_eq!(f0, [5.0]);
        let mut j = JacobianBlocks::new(1, 1);
        m.jacobian(&p, &mut j).unwrap();
        assert_eq!(j.g00, vec![1.0]);
    }

    #[test]
    fn bratu_pointwise() {
        let m = Bratu::new(6.0);
        let p = at(&[0.5, 0.5], &[0.0], &[0.0, 0.0]);
        let mut f0 = [0.0];
        m.f0(&p, &mut f0);
        assert_eq!(f0, [-6.0]);
        let mut j = JacobianBlocks::new(1, 2);
        m.jacobian(&p, &mut j).unwrap();
        assert_eq!(j.g00, vec![-6.0]);

        // Centered difference of f0 at u = 0.37.
        let h = 1e-6;
        let eval = |u: f64| {
            let mut f = [0.0];
            m.f0(&at(&[0.5, 0.5], &[u], &[0.0, 0.0]), &mut f);
            f[0]
        };
        let fd = (eval(0.37 + h) - eval(0.37 - h)) / (2.0 * h);
        j.zero();
        m.jacobian(&at(&[0.5, 0.5], &[0.37], &[0.0, 0.0]), &mut j)
            .unwrap();
        assert!((j.g00[0] - fd).abs() / fd.abs() <= 1e-8);
    }

    #[test]
    fn built_in_models_pass_derivative_check() {
        let g = scalar_fn(|x: &[f64]| x.iter().sum());
        let models: Vec<Box<dyn PointwiseModel>> = vec![
            Box::new(Poisson::new(g.clone())),
            Box::new(MassReaction::new(2.5, g.clone())),
            Box::new(Bratu::new(2.0)),
            Box::new(VariableCoefficientPoisson { forcing: g }),
        ];
        for m in &models {
            for dim in 1..=3 {
                let r = verify_model_derivatives(m.as_ref(), dim, 100, 7).unwrap();
                assert!(r.passed(), "{} dim {dim}: {:?}", m.name(), r.worst);
            }
        }
        let r = verify_model_derivatives(&Poisson::new(scalar_fn(|_| 1.0)), 2, 100, 1).unwrap();
        assert_eq!(r.max_error(), 0.0);
    }

    struct NoJacobian;

    impl PointwiseModel for NoJacobian {
        fn name(&self) -> &str {
            "no-jacobian"
        }
        fn f0(&self, _p: &PointValues, f0: &mut [f64]) {
            f0[0] = 0.0;
        }
        fn f1(&self, _p: &PointValues, f1: &mut [f64]) {
            f1.fill(0.0);
        }
    }

    #[test]
    fn missing_jacobian_is_an_error() {
        assert_eq!(
            verify_model_derivatives(&NoJacobian, 2, 1, 0).unwrap_err(),
            PhysicsError::MissingJacobian
        );
    }
}
