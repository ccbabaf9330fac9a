//! Balance laws `q_t + f(q)_x = s(q)` used by the solver and the test presets.
//!
//! Every system provides its flux, source, both Jacobians and the eigenvalues
//! of the flux Jacobian. Systems with a closed-form (or cheaply computable)
//! solution also implement [`BalanceLaw::exact_solution`].

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};

use crate::error::{AderError, Result};

pub type State<const N: usize> = SVector<f64, N>;
pub type Matrix<const N: usize> = SMatrix<f64, N, N>;

/// A hyperbolic balance law with `N` unknowns.
pub trait BalanceLaw<const N: usize>: Send + Sync {
    fn name(&self) -> &'static str;

    fn flux(&self, q: &State<N>) -> State<N>;

    fn source(&self, q: &State<N>) -> State<N>;

    /// Jacobian of the flux, `A(Q)`.
    fn flux_jacobian(&self, q: &State<N>) -> Matrix<N>;

    /// Jacobian of the source, `B(Q)`.
    fn source_jacobian(&self, q: &State<N>) -> Matrix<N>;

    fn eigenvalues(&self, q: &State<N>) -> State<N>;

    /// Named physical parameters, for reports.
    fn params(&self) -> Vec<(&'static str, f64)>;

    /// `false` when the source vanishes identically.
    fn has_source(&self) -> bool {
        true
    }

    fn is_admissible(&self, q: &State<N>) -> bool {
        q.iter().all(|v| v.is_finite())
    }

    fn max_wave_speed(&self, q: &State<N>) -> f64 {
        self.eigenvalues(q).iter().fold(0.0_f64, |a, l| a.max(l.abs()))
    }

    fn exact_solution(&self, _x: f64, _t: f64) -> Result<State<N>> {
        Err(AderError::NoExactSolution {
            system: self.name().to_string(),
        })
    }
}

/// `Q_t + A Q_x = B Q` with `A = [[0, λ], [λ, 0]]` and `B = βI`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    pub lambda: f64,
    pub beta: f64,
}

pub fn linear_system(lambda: f64, beta: f64) -> LinearSystem {
    LinearSystem { lambda, beta }
}

impl LinearSystem {
    fn a(&self) -> Matrix<2> {
        Matrix::<2>::new(0.0, self.lambda, self.lambda, 0.0)
    }
}

impl BalanceLaw<2> for LinearSystem {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn flux(&self, q: &State<2>) -> State<2> {
        self.a() * q
    }

    fn source(&self, q: &State<2>) -> State<2> {
        q * self.beta
    }

    fn flux_jacobian(&self, _q: &State<2>) -> Matrix<2> {
        self.a()
    }

    fn source_jacobian(&self, _q: &State<2>) -> Matrix<2> {
        Matrix::<2>::identity() * self.beta
    }

    fn eigenvalues(&self, _q: &State<2>) -> State<2> {
        State::<2>::new(-self.lambda, self.lambda)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("lambda", self.lambda), ("beta", self.beta)]
    }

    fn has_source(&self) -> bool {
        self.beta != 0.0
    }

    fn exact_solution(&self, x: f64, t: f64) -> Result<State<2>> {
        let xm = 2.0 * PI * (x - self.lambda * t);
        let xp = 2.0 * PI * (x + self.lambda * t);
        let phi = xm.sin() + xm.cos();
        let psi = xp.sin() - xp.cos();
        let scale = 0.5 * (self.beta * t).exp();
        Ok(State::<2>::new(scale * (phi + psi), scale * (phi - psi)))
    }
}

/// Nonlinear 2x2 system that decouples into two Burgers equations,
/// one of them with the source `β w²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearSystem {
    pub beta: f64,
}

pub fn nonlinear_system(beta: f64) -> Result<NonlinearSystem> {
    if beta > 0.0 || beta.is_nan() {
        return Err(AderError::Config(format!(
            "nonlinear system requires beta <= 0, got {beta}"
        )));
    }
    Ok(NonlinearSystem { beta })
}

fn eig2(a: &Matrix<2>) -> State<2> {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    State::<2>::new(0.5 * tr - disc, 0.5 * tr + disc)
}

impl BalanceLaw<2> for NonlinearSystem {
    fn name(&self) -> &'static str {
        "nonlinear"
    }

    fn flux(&self, q: &State<2>) -> State<2> {
        let (u, v) = (q[0], q[1]);
        State::<2>::new(
            (2.5 * u * u + v * v - u * v) / 9.0,
            (4.0 * u * v - u * u + 0.5 * v * v) / 9.0,
        )
    }

    fn source(&self, q: &State<2>) -> State<2> {
        let w = (2.0 * q[0] - q[1]) / 3.0;
        let s = self.beta * w * w;
        State::<2>::new(s, -s)
    }

    fn flux_jacobian(&self, q: &State<2>) -> Matrix<2> {
        let (u, v) = (q[0], q[1]);
        Matrix::<2>::new(
            (5.0 * u - v) / 9.0,
            (2.0 * v - u) / 9.0,
            (4.0 * v - 2.0 * u) / 9.0,
            (4.0 * u + v) / 9.0,
        )
    }

    fn source_jacobian(&self, q: &State<2>) -> Matrix<2> {
        // d/dQ of β w², w = (2u - v)/3
        let w = (2.0 * q[0] - q[1]) / 3.0;
        let du = self.beta * 2.0 * w * (2.0 / 3.0);
        let dv = self.beta * 2.0 * w * (-1.0 / 3.0);
        Matrix::<2>::new(du, dv, -du, -dv)
    }

    fn eigenvalues(&self, q: &State<2>) -> State<2> {
        eig2(&self.flux_jacobian(q))
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("beta", self.beta)]
    }

    fn has_source(&self) -> bool {
        self.beta != 0.0
    }

    fn exact_solution(&self, x: f64, t: f64) -> Result<State<2>> {
        nonlinear_exact(x, t, self.beta)
    }
}

pub(crate) fn nonlinear_w1_initial(x: f64) -> f64 {
    let a = 2.0 * PI * x;
    (a.sin() + a.cos()) / 3.0
}

pub(crate) fn nonlinear_w2_initial(x: f64) -> f64 {
    let a = 2.0 * PI * x;
    (2.0 * a.sin() - a.cos()) / 3.0
}

fn nonlinear_w1_initial_dx(x: f64) -> f64 {
    let a = 2.0 * PI * x;
    2.0 * PI * (a.cos() - a.sin()) / 3.0
}

fn nonlinear_w2_initial_dx(x: f64) -> f64 {
    let a = 2.0 * PI * x;
    2.0 * PI * (2.0 * a.cos() + a.sin()) / 3.0
}

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 100;

/// Newton iteration kept inside a sign-changing bracket; falls back to
/// bisection whenever the Newton step leaves the bracket.
pub fn safeguarded_newton<F>(f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Option<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= tol || (hi - lo) <= tol {
            return Some(next);
        }
        x = next;
    }
    None
}

/// Characteristic displacement `-ln(1 - β w t)/β` of the Burgers equation with
/// source `β w²`, continuous at `β = 0`.
fn w2_displacement(w: f64, t: f64, beta: f64) -> f64 {
    let z = -beta * w * t;
    if beta == 0.0 {
        w * t
    } else {
        -z.ln_1p() / beta
    }
}

/// Exact solution of the nonlinear system, `(u, v) = (w1 + w2, 2 w1 - w2)`.
pub fn nonlinear_exact(x: f64, t: f64, beta: f64) -> Result<State<2>> {
    if t == 0.0 {
        let (w1, w2) = (nonlinear_w1_initial(x), nonlinear_w2_initial(x));
        return Ok(State::<2>::new(w1 + w2, 2.0 * w1 - w2));
    }

    // w1 = w1_0(x - w1 t)
    let a1 = 2.0_f64.sqrt() / 3.0 + 1e-3;
    let w1 = safeguarded_newton(
        |w| {
            let foot = x - w * t;
            (
                w - nonlinear_w1_initial(foot),
                1.0 + t * nonlinear_w1_initial_dx(foot),
            )
        },
        -a1,
        a1,
        ROOT_TOL,
        ROOT_MAX_ITER,
    )
    .ok_or_else(|| AderError::RootFinding {
        iterations: ROOT_MAX_ITER,
        context: format!("w1 foot point at x={x}, t={t}"),
    })?;

    // x = x0 + disp(w2_0(x0)), w2 = w2_0(x0) / (1 - β w2_0(x0) t)
    let a2 = 5.0_f64.sqrt() / 3.0;
    for w in [-a2, a2] {
        if 1.0 - beta * w * t <= 0.0 {
            return Err(AderError::RootFinding {
                iterations: 0,
                context: format!("w2 characteristic blows up before t={t}"),
            });
        }
    }
    let reach = w2_displacement(-a2, t, beta)
        .abs()
        .max(w2_displacement(a2, t, beta).abs())
        + 1e-3;
    let x0 = safeguarded_newton(
        |x0| {
            let w = nonlinear_w2_initial(x0);
            let denom = 1.0 - beta * w * t;
            (
                x0 + w2_displacement(w, t, beta) - x,
                1.0 + nonlinear_w2_initial_dx(x0) * t / denom,
            )
        },
        x - reach,
        x + reach,
        ROOT_TOL,
        ROOT_MAX_ITER,
    )
    .ok_or_else(|| AderError::RootFinding {
        iterations: ROOT_MAX_ITER,
        context: format!("w2 foot point at x={x}, t={t}"),
    })?;
    let w0 = nonlinear_w2_initial(x0);
    let w2 = w0 / (1.0 - beta * w0 * t);

    Ok(State::<2>::new(w1 + w2, 2.0 * w1 - w2))
}

/// Scalar `q_t + q_x = β q (q - 1)(q - 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeVequeYee {
    pub beta: f64,
    /// Initial position of the step.
    pub x_step: f64,
}

pub fn leveque_yee_system(beta: f64) -> LeVequeYee {
    LeVequeYee { beta, x_step: 0.3 }
}

impl LeVequeYee {
    pub fn initial(&self, x: f64) -> State<1> {
        State::<1>::new(if x < self.x_step { 1.0 } else { 0.0 })
    }
}

impl BalanceLaw<1> for LeVequeYee {
    fn name(&self) -> &'static str {
        "leveque-yee"
    }

    fn flux(&self, q: &State<1>) -> State<1> {
        *q
    }

    fn source(&self, q: &State<1>) -> State<1> {
        let v = q[0];
        State::<1>::new(self.beta * v * (v - 1.0) * (v - 0.5))
    }

    fn flux_jacobian(&self, _q: &State<1>) -> Matrix<1> {
        Matrix::<1>::new(1.0)
    }

    fn source_jacobian(&self, q: &State<1>) -> Matrix<1> {
        let v = q[0];
        Matrix::<1>::new(self.beta * (3.0 * v * v - 3.0 * v + 0.5))
    }

    fn eigenvalues(&self, _q: &State<1>) -> State<1> {
        State::<1>::new(1.0)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("beta", self.beta)]
    }

    /// The step data sits on the stable equilibria, so the exact solution is
    /// the step translated with unit speed.
    fn exact_solution(&self, x: f64, t: f64) -> Result<State<1>> {
        Ok(self.initial(x - t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, u: f64, p: f64) -> Self {
        Self { rho, u, p }
    }
}

/// Ideal-gas Euler equations in conserved variables `(ρ, ρu, E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Euler {
    pub gamma: f64,
}

pub fn euler_system(gamma: f64) -> Result<Euler> {
    if !(gamma > 1.0) {
        return Err(AderError::Config(format!(
            "Euler system requires gamma > 1, got {gamma}"
        )));
    }
    Ok(Euler { gamma })
}

impl Euler {
    fn pressure(&self, q: &State<3>) -> f64 {
        (self.gamma - 1.0) * (q[2] - 0.5 * q[1] * q[1] / q[0])
    }

    pub fn primitive_to_conserved(&self, w: &PrimitiveState) -> Result<State<3>> {
        if !(w.rho > 0.0 && w.p > 0.0) {
            return Err(AderError::NonPhysical {
                detail: format!("rho={}, p={}", w.rho, w.p),
            });
        }
        let e = w.p / (self.gamma - 1.0) + 0.5 * w.rho * w.u * w.u;
        Ok(State::<3>::new(w.rho, w.rho * w.u, e))
    }

    pub fn conserved_to_primitive(&self, q: &State<3>) -> Result<PrimitiveState> {
        let rho = q[0];
        if !(rho > 0.0) {
            return Err(AderError::NonPhysical {
                detail: format!("rho={rho}"),
            });
        }
        let p = self.pressure(q);
        if !(p > 0.0) {
            return Err(AderError::NonPhysical {
                detail: format!("p={p}"),
            });
        }
        Ok(PrimitiveState::new(rho, q[1] / rho, p))
    }

    pub fn sound_speed(&self, q: &State<3>) -> f64 {
        (self.gamma * self.pressure(q) / q[0]).sqrt()
    }
}

impl BalanceLaw<3> for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn flux(&self, q: &State<3>) -> State<3> {
        let u = q[1] / q[0];
        let p = self.pressure(q);
        State::<3>::new(q[1], q[1] * u + p, u * (q[2] + p))
    }

    fn source(&self, _q: &State<3>) -> State<3> {
        State::<3>::zeros()
    }

    fn flux_jacobian(&self, q: &State<3>) -> Matrix<3> {
        let g = self.gamma;
        let u = q[1] / q[0];
        let h = (q[2] + self.pressure(q)) / q[0];
        Matrix::<3>::new(
            0.0,
            1.0,
            0.0,
            0.5 * (g - 3.0) * u * u,
            (3.0 - g) * u,
            g - 1.0,
            u * (0.5 * (g - 1.0) * u * u - h),
            h - (g - 1.0) * u * u,
            g * u,
        )
    }

    fn source_jacobian(&self, _q: &State<3>) -> Matrix<3> {
        Matrix::<3>::zeros()
    }

    fn eigenvalues(&self, q: &State<3>) -> State<3> {
        let u = q[1] / q[0];
        let a = self.sound_speed(q);
        State::<3>::new(u - a, u, u + a)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("gamma", self.gamma)]
    }

    fn has_source(&self) -> bool {
        false
    }

    fn is_admissible(&self, q: &State<3>) -> bool {
        q.iter().all(|v| v.is_finite()) && q[0] > 0.0 && self.pressure(q) > 0.0
    }

    /// Smooth density wave advected with `u = 1`, `p = 2`.
    fn exact_solution(&self, x: f64, t: f64) -> Result<State<3>> {
        let rho = 1.0 + 0.2 * (2.0 * PI * (x - t)).sin();
        self.primitive_to_conserved(&PrimitiveState::new(rho, 1.0, 2.0))
    }
}

/// Shock/entropy-wave data on `[-1, 1]`: a Mach 3 shock at `x = -0.8` moving
/// into the density wave `1 + sin(5πx)`.
pub fn shu_osher_initial(x: f64) -> PrimitiveState {
    shu_osher_initial_with_amplitude(x, 1.0)
}

/// As [`shu_osher_initial`] with density `1 + amplitude·sin(5πx)` ahead of the
/// shock. Amplitude 1 touches vacuum at four points; 0.2 is the common choice
/// in the literature.
pub fn shu_osher_initial_with_amplitude(x: f64, amplitude: f64) -> PrimitiveState {
    if x < -0.8 {
        PrimitiveState::new(3.8571, 2.6294, 10.333)
    } else {
        PrimitiveState::new(1.0 + amplitude * (5.0 * PI * x).sin(), 0.0, 1.0)
    }
}
