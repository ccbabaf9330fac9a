//! Cell-local space-time predictor from an implicit Taylor expansion.
//!
//! At every node `(ξ_m, τ_j)` the predictor solves
//!
//! ```text
//! Q = W(ξ_m) - Σ_{k=1}^{M} ((-τ)^k / k!) ∂t^(k) Q,      τ = τ_j Δt,
//! ```
//!
//! where `∂t^(k) Q` comes from the recursive CK functional. The part of the
//! functional that is explicit in the current iterate is frozen during a
//! sweep; the `B^{k-1} S(Q)` part is solved with one Newton step per node.
//! The derivative stacks are rebuilt from the nodal values between sweeps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ck::{ck_functional, matrix_c, node_index, CkVariant, NodeDerivativeStack};
use crate::error::{AderError, Result};
use crate::models::{BalanceLaw, Matrix, State};
use crate::nodal::NodeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    #[serde(skip)]
    pub variant: CkVariant,
    /// Number of outer sweeps; `None` means `M`.
    pub sweeps: Option<usize>,
    /// Early exit once the largest Newton correction falls below this value.
    pub tolerance: Option<f64>,
    /// Re-evaluate `|H|` after the last sweep (one extra stack build).
    pub measure_final_residual: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            variant: CkVariant::Recursive,
            sweeps: None,
            tolerance: None,
            measure_final_residual: false,
        }
    }
}

/// Predictor values at the nodes of one cell.
#[derive(Debug, Clone)]
pub struct SpaceTimeNodeSet<const N: usize> {
    pub n_space: usize,
    pub n_time: usize,
    /// Indexed by [`node_index`].
    pub q: Vec<State<N>>,
    /// Largest `|H|` over the nodes at the start of each sweep.
    pub residuals: Vec<f64>,
    /// Largest `|H|` after the final sweep, when requested.
    pub final_residual: Option<f64>,
    /// Nodes whose starting guess fell back to `W(ξ_m)`.
    pub init_fallbacks: usize,
}

impl<const N: usize> SpaceTimeNodeSet<N> {
    pub fn at(&self, space: usize, time: usize) -> &State<N> {
        &self.q[node_index(space, time, self.n_space)]
    }

    /// Constant predictor, used for ghost cells that copy a neighbour.
    pub fn constant(q: State<N>, n_space: usize, n_time: usize) -> Self {
        Self {
            n_space,
            n_time,
            q: vec![q; n_space * n_time],
            residuals: Vec::new(),
            final_residual: None,
            init_fallbacks: 0,
        }
    }
}

/// Residual, Jacobian and Newton correction at one node.
#[derive(Debug, Clone)]
pub struct NewtonSystem<const N: usize> {
    pub residual: State<N>,
    pub jacobian: Matrix<N>,
    pub correction: State<N>,
}

/// LU solve with partial pivoting; `None` when the matrix is singular.
pub fn solve_dense<const N: usize>(a: &Matrix<N>, b: &State<N>) -> Option<State<N>> {
    let lu = DMatrix::from_column_slice(N, N, a.as_slice()).lu();
    let x = lu.solve(&DVector::from_column_slice(b.as_slice()))?;
    Some(State::<N>::from_column_slice(x.as_slice()))
}

/// Second-order starting value `W + τ [I - τB(W)]^{-1} (S(W) - A(W) ∂xW)`.
///
/// The source is linearised about `W`, so for `S(Q) = BQ` this is
/// `[I - τB]^{-1} (W - τ A ∂xW)`, and equilibrium data `S(W) = 0`, `∂xW = 0`
/// is returned unchanged. Returns `W` and `false` when `I - τB` is singular.
pub fn initial_guess<const N: usize, S: BalanceLaw<N>>(
    system: &S,
    w: &State<N>,
    dw_dx: &State<N>,
    tau: f64,
) -> (State<N>, bool) {
    let rate = system.source(w) - system.flux_jacobian(w) * dw_dx;
    let lhs = Matrix::<N>::identity() - system.source_jacobian(w) * tau;
    match solve_dense(&lhs, &rate) {
        Some(d) if d.iter().all(|v| v.is_finite()) => (w + d * tau, true),
        _ => (*w, false),
    }
}

/// Evaluates `A`, `B` at every node and fills all derivative stacks.
/// Also returns `S(Q)` per node.
pub fn populate_stacks<const N: usize, S: BalanceLaw<N>>(
    system: &S,
    grid: &NodeGrid,
    q: &[State<N>],
) -> (Vec<NodeDerivativeStack<N>>, Vec<State<N>>) {
    let degree = grid.degree;
    let (n_s, n_t) = (grid.n_space(), grid.n_time());
    let a: Vec<Matrix<N>> = q.iter().map(|v| system.flux_jacobian(v)).collect();
    let b: Vec<Matrix<N>> = q.iter().map(|v| system.source_jacobian(v)).collect();
    let s: Vec<State<N>> = q.iter().map(|v| system.source(v)).collect();

    let mut stacks: Vec<NodeDerivativeStack<N>> = (0..q.len())
        .map(|i| NodeDerivativeStack::frozen(degree, q[i], a[i], b[i]))
        .collect();

    for j in 0..n_t {
        let row = j * n_s..(j + 1) * n_s;
        for l in 1..=degree {
            let d = grid.space_derivative_scaled(&q[row.clone()], l, State::zeros());
            for (m, v) in d.into_iter().enumerate() {
                stacks[node_index(m, j, n_s)].dx_q[l - 1] = v;
            }
        }
        for l in 1..degree {
            let da = grid.space_derivative_scaled(&a[row.clone()], l, Matrix::zeros());
            let db = grid.space_derivative_scaled(&b[row.clone()], l, Matrix::zeros());
            for (m, (va, vb)) in da.into_iter().zip(db).enumerate() {
                let st = &mut stacks[node_index(m, j, n_s)];
                st.dx_a[l - 1] = va;
                st.dx_b[l - 1] = vb;
            }
        }
    }

    if degree >= 3 {
        let mut column = vec![Matrix::<N>::zeros(); n_t];
        for m in 0..n_s {
            for (j, c) in column.iter_mut().enumerate() {
                *c = b[node_index(m, j, n_s)];
            }
            for l in 1..=degree - 2 {
                let d = grid.time_derivative_scaled(&column, l, Matrix::zeros());
                for (j, v) in d.into_iter().enumerate() {
                    stacks[node_index(m, j, n_s)].dt_b[l - 1] = v;
                }
            }
        }
    }

    (stacks, s)
}

/// `(-τ)^k / k!` for `k = 1..=M`.
pub fn taylor_weights(tau: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree);
    let mut w = 1.0;
    for k in 1..=degree {
        w *= -tau / k as f64;
        out.push(w);
    }
    out
}

/// Why a Newton step could not be taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonFailure {
    Singular,
    NonFinite,
}

/// One Newton step on `H(Y) = Y - W + Σ c_k E_k + Σ c_k B^{k-1}(Q^s) S(Y)` at
/// `Y = Q^s`, with `E_k` the explicit part of the functional.
pub fn newton_sweep<const N: usize, S: BalanceLaw<N>>(
    system: &S,
    w: &State<N>,
    current: &State<N>,
    b_current: &Matrix<N>,
    explicit: &[State<N>],
    weights: &[f64],
) -> std::result::Result<NewtonSystem<N>, NewtonFailure> {
    let mut residual = current - w;
    for (c, e) in weights.iter().zip(explicit) {
        residual += e * *c;
    }
    let mut jacobian = Matrix::<N>::identity();
    if system.has_source() {
        let s = system.source(current);
        let b_y = system.source_jacobian(current);
        let mut b_pow = Matrix::<N>::identity();
        for (k, c) in weights.iter().enumerate() {
            if k > 0 {
                b_pow = b_current * b_pow;
            }
            residual += b_pow * s * *c;
            jacobian += b_pow * b_y * *c;
        }
    }
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    if !finite(residual.as_slice()) || !finite(jacobian.as_slice()) {
        return Err(NewtonFailure::NonFinite);
    }
    let correction = solve_dense(&jacobian, &residual).ok_or(NewtonFailure::Singular)?;
    if !finite(correction.as_slice()) {
        return Err(NewtonFailure::NonFinite);
    }
    Ok(NewtonSystem {
        residual,
        jacobian,
        correction,
    })
}

/// Full predictor for one cell.
///
/// `w` and `dw_dx` are the reconstruction and its physical gradient at the
/// space nodes.
pub fn predictor_solve<const N: usize, S: BalanceLaw<N>>(
    system: &S,
    grid: &NodeGrid,
    w: &[State<N>],
    dw_dx: &[State<N>],
    config: &PredictorConfig,
    cell: isize,
) -> Result<SpaceTimeNodeSet<N>> {
    let degree = grid.degree;
    let (n_s, n_t) = (grid.n_space(), grid.n_time());
    debug_assert_eq!(w.len(), n_s);

    let mut q = vec![State::<N>::zeros(); n_s * n_t];
    let mut init_fallbacks = 0;
    for j in 0..n_t {
        let tau = grid.time_nodes[j] * grid.dt;
        for m in 0..n_s {
            let (guess, ok) = initial_guess(system, &w[m], &dw_dx[m], tau);
            if !ok {
                init_fallbacks += 1;
            }
            q[node_index(m, j, n_s)] = guess;
        }
    }

    let weights: Vec<Vec<f64>> = grid
        .time_nodes
        .iter()
        .map(|t| taylor_weights(t * grid.dt, degree))
        .collect();

    let sweeps = config.sweeps.unwrap_or(degree);
    let mut residuals = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        let (mut stacks, sources) = populate_stacks(system, grid, &q);
        let coeffs = matrix_c(&stacks, grid);
        let mut max_res: f64 = 0.0;
        let mut max_step: f64 = 0.0;
        for j in 0..n_t {
            for m in 0..n_s {
                let idx = node_index(m, j, n_s);
                let f = ck_functional(&mut stacks[idx], &coeffs[idx], &sources[idx], degree, config.variant);
                let sys = newton_sweep(system, &w[m], &q[idx], &stacks[idx].b, &f.explicit, &weights[j])
                    .map_err(|e| match e {
                        NewtonFailure::Singular => AderError::SingularJacobian { cell, space: m, time: j },
                        NewtonFailure::NonFinite => AderError::PredictorDiverged { cell, space: m, time: j },
                    })?;
                max_res = max_res.max(sys.residual.amax());
                max_step = max_step.max(sys.correction.amax());
                q[idx] -= sys.correction;
            }
        }
        residuals.push(max_res);
        if let Some(tol) = config.tolerance {
            if max_step <= tol {
                break;
            }
        }
    }

    let final_residual = config
        .measure_final_residual
        .then(|| residual_norm(system, grid, w, &q, &weights, config.variant));

    Ok(SpaceTimeNodeSet {
        n_space: n_s,
        n_time: n_t,
        q,
        residuals,
        final_residual,
        init_fallbacks,
    })
}

/// Largest `|H(Q)|` over the nodes with stacks rebuilt from `q`.
pub fn residual_norm<const N: usize, S: BalanceLaw<N>>(
    system: &S,
    grid: &NodeGrid,
    w: &[State<N>],
    q: &[State<N>],
    weights: &[Vec<f64>],
    variant: CkVariant,
) -> f64 {
    let degree = grid.degree;
    let n_s = grid.n_space();
    let (mut stacks, sources) = populate_stacks(system, grid, q);
    let coeffs = matrix_c(&stacks, grid);
    let mut max_res: f64 = 0.0;
    for (j, wj) in weights.iter().enumerate() {
        for m in 0..n_s {
            let idx = node_index(m, j, n_s);
            let f = ck_functional(&mut stacks[idx], &coeffs[idx], &sources[idx], degree, variant);
            let mut h = q[idx] - w[m];
            for (c, d) in wj.iter().zip(&f.dt_q) {
                h += d * *c;
            }
            max_res = max_res.max(h.amax());
        }
    }
    max_res
}
