//! Space-time node grid of the predictor and the interpolation-based
//! derivative operators on it.
//!
//! Space nodes are the `M + 1` equidistant points of `[-1/2, 1/2]`; time
//! nodes are the Gauss-Legendre points of `[0, 1]`. Derivatives are obtained
//! by differentiating the unique interpolant through the nodal samples. All
//! operators work in reference coordinates; the scaled variants apply
//! `Δx^{-l}` and `Δt^{-l}`.

use std::ops::{Add, Mul};

use nalgebra::DMatrix;

use crate::error::{AderError, Result};

pub const MIN_DEGREE: usize = 1;
pub const MAX_DEGREE: usize = 4;

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, refined by Newton on P_n
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Monomial coefficients of the interpolant through `nodes`:
/// row `k` holds the weights of `f_j` in the coefficient of `s^k`.
pub fn interpolation_coefficients(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let vandermonde = DMatrix::from_fn(n, n, |j, k| nodes[j].powi(k as i32));
    vandermonde
        .try_inverse()
        .expect("interpolation nodes must be distinct")
}

/// Differentiation matrix of order `l`: row `i` maps nodal samples to the
/// `l`-th derivative of the interpolant at node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeOperator {
    pub order: usize,
    pub weights: DMatrix<f64>,
}

impl DerivativeOperator {
    fn build(nodes: &[f64], coeffs: &DMatrix<f64>, order: usize) -> Self {
        let n = nodes.len();
        let weights = DMatrix::from_fn(n, n, |i, j| {
            (order..n)
                .map(|k| falling(k, order) * nodes[i].powi((k - order) as i32) * coeffs[(k, j)])
                .sum()
        });
        Self { order, weights }
    }

    /// Applies the operator to samples of any linear-space valued function.
    ///
    /// Derivatives act on the differences `f_j - f_i`, which is exact because
    /// their rows sum to zero, so constant samples give exactly zero.
    pub fn apply<T>(&self, values: &[T], zero: T) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let n = values.len();
        debug_assert_eq!(n, self.weights.nrows());
        (0..n)
            .map(|i| {
                if self.order == 0 {
                    values
                        .iter()
                        .enumerate()
                        .fold(zero, |acc, (j, v)| acc + *v * self.weights[(i, j)])
                } else {
                    let vi = values[i] * -1.0;
                    values
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .fold(zero, |acc, (j, v)| acc + (*v + vi) * self.weights[(i, j)])
                }
            })
            .collect()
    }
}

/// `k (k-1) ... (k-l+1)`
fn falling(k: usize, l: usize) -> f64 {
    (0..l).map(|i| (k - i) as f64).product()
}

/// Newton-Cotes weights on the `M + 1` equidistant space nodes, normalised to
/// sum to one.
pub fn newton_cotes_weights(degree: usize) -> Vec<f64> {
    match degree {
        1 => vec![0.5, 0.5],
        2 => vec![1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
        3 => vec![1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0],
        4 => vec![7.0 / 90.0, 32.0 / 90.0, 12.0 / 90.0, 32.0 / 90.0, 7.0 / 90.0],
        _ => panic!("Newton-Cotes weights only tabulated for degrees 1..=4"),
    }
}

/// Space-time nodes of one cell and the derivative operators on them.
#[derive(Debug, Clone)]
pub struct NodeGrid {
    pub degree: usize,
    pub space_nodes: Vec<f64>,
    pub time_nodes: Vec<f64>,
    pub time_weights: Vec<f64>,
    pub dx: f64,
    pub dt: f64,
    space_ops: Vec<DerivativeOperator>,
    time_ops: Vec<DerivativeOperator>,
}

pub fn build_grid(degree: usize, dx: f64, dt: f64) -> Result<NodeGrid> {
    if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
        return Err(AderError::Config(format!(
            "unsupported polynomial degree M = {degree} (expected 1..=4, i.e. orders 2..=5)"
        )));
    }
    if !(dx > 0.0 && dt > 0.0) {
        return Err(AderError::Config(format!(
            "grid scales must be positive (dx = {dx}, dt = {dt})"
        )));
    }
    let n_s = degree + 1;
    let n_t = degree.max(1);
    let space_nodes: Vec<f64> = (0..n_s).map(|m| -0.5 + m as f64 / degree as f64).collect();
    let (time_nodes, time_weights) = gauss_legendre(n_t);

    let space_coeffs = interpolation_coefficients(&space_nodes);
    let space_ops = (0..=degree)
        .map(|l| DerivativeOperator::build(&space_nodes, &space_coeffs, l))
        .collect();
    let time_coeffs = interpolation_coefficients(&time_nodes);
    let time_ops = (0..n_t)
        .map(|l| DerivativeOperator::build(&time_nodes, &time_coeffs, l))
        .collect();

    Ok(NodeGrid {
        degree,
        space_nodes,
        time_nodes,
        time_weights,
        dx,
        dt,
        space_ops,
        time_ops,
    })
}

impl NodeGrid {
    pub fn n_space(&self) -> usize {
        self.space_nodes.len()
    }

    pub fn n_time(&self) -> usize {
        self.time_nodes.len()
    }

    /// Same reference operators with new physical scales.
    pub fn rescaled(&self, dx: f64, dt: f64) -> NodeGrid {
        NodeGrid {
            dx,
            dt,
            ..self.clone()
        }
    }

    pub fn space_operator(&self, l: usize) -> Option<&DerivativeOperator> {
        self.space_ops.get(l)
    }

    pub fn time_operator(&self, l: usize) -> Option<&DerivativeOperator> {
        self.time_ops.get(l)
    }

    /// `l`-th reference derivative along the space nodes; zero for `l > M`.
    pub fn space_derivative<T>(&self, values: &[T], l: usize, zero: T) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        match self.space_ops.get(l) {
            Some(op) => op.apply(values, zero),
            None => vec![zero; values.len()],
        }
    }

    /// Space derivative scaled by `Δx^{-l}`.
    pub fn space_derivative_scaled<T>(&self, values: &[T], l: usize, zero: T) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let scale = self.dx.powi(-(l as i32));
        self.space_derivative(values, l, zero)
            .into_iter()
            .map(|v| v * scale)
            .collect()
    }

    /// `l`-th reference derivative along the Gauss time nodes.
    ///
    /// Only defined for `1 <= l <= n_T - 1`; a single time node (`M = 1`)
    /// carries no time derivative information.
    pub fn time_derivative<T>(&self, values: &[T], l: usize, zero: T) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        assert!(
            self.degree >= 2 && l >= 1 && l < self.n_time(),
            "time derivative of order {l} requested with {} time node(s)",
            self.n_time()
        );
        self.time_ops[l].apply(values, zero)
    }

    /// Time derivative scaled by `Δt^{-l}`.
    pub fn time_derivative_scaled<T>(&self, values: &[T], l: usize, zero: T) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let scale = self.dt.powi(-(l as i32));
        self.time_derivative(values, l, zero)
            .into_iter()
            .map(|v| v * scale)
            .collect()
    }
}
