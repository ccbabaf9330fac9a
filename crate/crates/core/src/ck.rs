//! Recursive Cauchy-Kowalewskaya procedure with space-time dependent
//! Jacobians.
//!
//! Treating `A` and `B` as given fields of `(x, t)` closes the recursion
//!
//! ```text
//! ∂x^(l) ∂t Q  = Σ_{k=1}^{l+1} D(l+1, k) ∂x^(k) Q
//! ∂t^(k) Q     = Σ_{l=1}^{k} C(k, l) ∂x^(l) Q + ∂t^(k-2)(B ∂t Q)
//!              = M_k + B ∂t^(k-1) Q
//! ```
//!
//! with `D(l+1, k) = C(l-1, l-k) B_x^(l-k) - C(l, l+1-k) A_x^(l+1-k)` (binomials)
//! and `C(1, 1) = -A`. The time derivative of `C` needed by the recursion is
//! taken from the interpolant through the Gauss time nodes of one cell, so
//! [`matrix_c`] works on all nodes of a cell at once.

use std::ops::{Add, Mul};

use crate::models::{Matrix, State};
use crate::nodal::NodeGrid;

/// Binomial coefficient, zero outside `0 <= k <= n`.
pub fn binom(n: i64, k: i64) -> i64 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Rows `l` of the coefficient tables of `∂x^(l)(∂t Q)`:
/// `a[k-1] = a_{l,k}` and `b[k-1] = b_{l,k}` for `k = 1..=l+1`.
pub fn pascal_coeffs(l: usize) -> (Vec<i64>, Vec<i64>) {
    assert!(l >= 1);
    let l = l as i64;
    let a = (1..=l + 1).map(|k| binom(l, l + 1 - k)).collect();
    let b = (1..=l + 1).map(|k| binom(l - 1, l - k)).collect();
    (a, b)
}

/// Derivative data at one space-time node. All derivatives carry physical
/// scaling.
#[derive(Debug, Clone)]
pub struct NodeDerivativeStack<const N: usize> {
    pub q: State<N>,
    /// `dx_q[l-1] = ∂x^(l) Q`, `l = 1..=M`.
    pub dx_q: Vec<State<N>>,
    /// `dt_q[l-1] = ∂t^(l) Q`, filled in increasing order.
    pub dt_q: Vec<State<N>>,
    pub a: Matrix<N>,
    pub b: Matrix<N>,
    /// `dx_a[l-1] = A_x^(l)`, `l = 1..=M-1`.
    pub dx_a: Vec<Matrix<N>>,
    pub dx_b: Vec<Matrix<N>>,
    /// `dt_b[l-1] = B_t^(l)`, `l = 1..=M-2`.
    pub dt_b: Vec<Matrix<N>>,
}

impl<const N: usize> NodeDerivativeStack<N> {
    /// Stack with the given point values and all derivatives zero.
    pub fn frozen(degree: usize, q: State<N>, a: Matrix<N>, b: Matrix<N>) -> Self {
        Self {
            q,
            dx_q: vec![State::zeros(); degree],
            dt_q: Vec::with_capacity(degree),
            a,
            b,
            dx_a: vec![Matrix::zeros(); degree.saturating_sub(1)],
            dx_b: vec![Matrix::zeros(); degree.saturating_sub(1)],
            dt_b: vec![Matrix::zeros(); degree.saturating_sub(2)],
        }
    }

    pub fn dx_q(&self, l: usize) -> &State<N> {
        if l == 0 {
            &self.q
        } else {
            &self.dx_q[l - 1]
        }
    }

    pub fn dx_a(&self, l: usize) -> &Matrix<N> {
        if l == 0 {
            &self.a
        } else {
            &self.dx_a[l - 1]
        }
    }

    pub fn dx_b(&self, l: usize) -> &Matrix<N> {
        if l == 0 {
            &self.b
        } else {
            &self.dx_b[l - 1]
        }
    }

    pub fn dt_b(&self, l: usize) -> &Matrix<N> {
        if l == 0 {
            &self.b
        } else {
            &self.dt_b[l - 1]
        }
    }
}

/// `D(row, col)` with `row = l + 1`, valid for `row >= 2`, `1 <= col <= row`.
pub fn matrix_d<const N: usize>(row: usize, col: usize, stack: &NodeDerivativeStack<N>) -> Matrix<N> {
    debug_assert!(row >= 2 && col >= 1 && col <= row);
    let l = row as i64 - 1;
    let k = col as i64;
    let cb = binom(l - 1, l - k);
    let ca = binom(l, l + 1 - k);
    let a_term = stack.dx_a((l + 1 - k) as usize) * ca as f64;
    if cb == 0 {
        -a_term
    } else {
        stack.dx_b((l - k) as usize) * cb as f64 - a_term
    }
}

/// The coefficient matrices `C(k, l)`, `1 <= l <= k <= M`, at one node.
#[derive(Debug, Clone)]
pub struct CkCoefficients<const N: usize> {
    degree: usize,
    c: Vec<Matrix<N>>,
}

impl<const N: usize> CkCoefficients<N> {
    fn new(degree: usize) -> Self {
        Self {
            degree,
            c: vec![Matrix::zeros(); degree * (degree + 1) / 2],
        }
    }

    fn index(k: usize, l: usize) -> usize {
        (k - 1) * k / 2 + (l - 1)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `C(k, l)`; `C(k, 0)` is zero by convention.
    pub fn get(&self, k: usize, l: usize) -> Matrix<N> {
        if l == 0 {
            Matrix::zeros()
        } else {
            self.c[Self::index(k, l)]
        }
    }

    fn set(&mut self, k: usize, l: usize, m: Matrix<N>) {
        self.c[Self::index(k, l)] = m;
    }
}

/// Node ordering used across the crate: time-major, `j * n_S + m`.
pub fn node_index(space: usize, time: usize, n_space: usize) -> usize {
    time * n_space + space
}

/// Builds `C(k, l)` at every node of one cell. `stacks` is indexed with
/// [`node_index`].
pub fn matrix_c<const N: usize>(
    stacks: &[NodeDerivativeStack<N>],
    grid: &NodeGrid,
) -> Vec<CkCoefficients<N>> {
    let degree = grid.degree;
    let (n_s, n_t) = (grid.n_space(), grid.n_time());
    debug_assert_eq!(stacks.len(), n_s * n_t);

    let mut coeffs: Vec<CkCoefficients<N>> = stacks
        .iter()
        .map(|st| {
            let mut c = CkCoefficients::new(degree);
            c.set(1, 1, -st.a);
            c
        })
        .collect();

    let mut series = vec![Matrix::<N>::zeros(); n_t];
    for k in 2..=degree {
        for (c, st) in coeffs.iter_mut().zip(stacks) {
            let ckk = c.get(k - 1, k - 1) * matrix_d(k, k, st);
            c.set(k, k, ckk);
        }
        for l in 1..k {
            // ∂t C(k-1, l) from the time interpolant at each space node
            for m in 0..n_s {
                for (j, s) in series.iter_mut().enumerate() {
                    *s = coeffs[node_index(m, j, n_s)].get(k - 1, l);
                }
                let dt = grid.time_derivative_scaled(&series, 1, Matrix::zeros());
                for j in 0..n_t {
                    let idx = node_index(m, j, n_s);
                    let st = &stacks[idx];
                    let c = &coeffs[idx];
                    let mut ckl = dt[j];
                    for mm in l.saturating_sub(1).max(1)..k {
                        ckl += c.get(k - 1, mm) * matrix_d(mm + 1, l, st);
                    }
                    coeffs[idx].set(k, l, ckl);
                }
            }
        }
    }
    coeffs
}

/// `M_k = Σ_{l=1}^{k} C(k,l) ∂x^(l)Q + Σ_{l=1}^{k-2} C(k-2,l-1) B_t^(k-1-l) ∂t^(l)Q`.
///
/// Reads `stack.dt_q[..k-2]`.
pub fn m_vector<const N: usize>(
    k: usize,
    stack: &NodeDerivativeStack<N>,
    c: &CkCoefficients<N>,
) -> State<N> {
    let mut out = State::<N>::zeros();
    for l in 1..=k {
        out += c.get(k, l) * stack.dx_q(l);
    }
    for l in 1..k.saturating_sub(1) {
        let w = binom(k as i64 - 2, l as i64 - 1) as f64;
        out += stack.dt_b(k - 1 - l) * stack.dt_q[l - 1] * w;
    }
    out
}

/// Which closed form of `∂t^(k) Q` feeds the implicit Taylor series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CkVariant {
    /// Unrolled recursion: `∂t^(k)Q = Σ_{r=1}^{k} B^{k-r} M_r + B^{k-1} S`.
    #[default]
    Recursive,
    /// Literal closed form `Σ_{r=2}^{k} M_r + B^{k-1} S`, kept for comparison.
    Literal,
}

/// Time derivatives split into the part explicit in the current iterate and
/// the `B^{k-1} S` part that the predictor treats implicitly.
#[derive(Debug, Clone)]
pub struct CkFunctional<const N: usize> {
    /// `dt_q[k-1] = ∂t^(k) Q`.
    pub dt_q: Vec<State<N>>,
    /// `explicit[k-1] = ∂t^(k) Q - B^{k-1} S`.
    pub explicit: Vec<State<N>>,
}

/// Evaluates the functional at one node and stores `∂t^(k)Q` in `stack.dt_q`.
pub fn ck_functional<const N: usize>(
    stack: &mut NodeDerivativeStack<N>,
    c: &CkCoefficients<N>,
    source: &State<N>,
    degree: usize,
    variant: CkVariant,
) -> CkFunctional<N> {
    stack.dt_q.clear();
    let mut explicit = Vec::with_capacity(degree);
    let mut b_pow_s = *source;
    let mut m_sum = State::<N>::zeros();
    for k in 1..=degree {
        let mk = m_vector(k, stack, c);
        let e = match variant {
            CkVariant::Recursive => {
                if k == 1 {
                    mk
                } else {
                    mk + stack.b * explicit[k - 2]
                }
            }
            CkVariant::Literal => {
                if k >= 2 {
                    m_sum += mk;
                }
                m_sum
            }
        };
        if k >= 2 {
            b_pow_s = stack.b * b_pow_s;
        }
        stack.dt_q.push(e + b_pow_s);
        explicit.push(e);
    }
    CkFunctional {
        dt_q: stack.dt_q.clone(),
        explicit,
    }
}

/// `∂t^(k) Q` for `k = 1..=M` at one node via `∂t^(k)Q = M_k + B ∂t^(k-1)Q`.
pub fn time_derivatives<const N: usize>(
    stack: &mut NodeDerivativeStack<N>,
    c: &CkCoefficients<N>,
    source: &State<N>,
    degree: usize,
) -> Vec<State<N>> {
    ck_functional(stack, c, source, degree, CkVariant::Recursive).dt_q
}

/// Leibniz rule `∂^(l)(F·G) = Σ_k C(l,k) F^(l-k) G^(k)`; `f[i]` and `g[i]`
/// hold the `i`-th derivatives.
pub fn leibniz_expand<const N: usize, T>(l: usize, f: &[Matrix<N>], g: &[T], zero: T) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    Matrix<N>: Mul<T, Output = T>,
{
    (0..=l).fold(zero, |acc, k| {
        acc + (f[l - k] * g[k]) * binom(l as i64, k as i64) as f64
    })
}
