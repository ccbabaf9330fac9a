//! Component-wise WENO reconstruction of degree `M` from cell averages.
//!
//! Every cell gets a polynomial `W_i(ξ) = Σ_k c_k ξ^k` on the reference
//! coordinate `ξ ∈ [-1/2, 1/2]`. Candidate polynomials of degree `M` are
//! fitted to the averages of `M + 1` cells each and blended with nonlinear
//! weights `ω_s ∝ λ_s / (σ_s + ε)^r`, where `σ_s` sums the squared
//! `L2(-1/2, 1/2)` norms of all derivatives of candidate `s`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AderError, Result};
use crate::models::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Transmissive,
}

impl std::str::FromStr for Boundary {
    type Err = AderError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "transmissive" => Ok(Boundary::Transmissive),
            other => Err(AderError::Config(format!("unknown boundary rule `{other}`"))),
        }
    }
}

/// Uniform mesh and the cell averages at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<const N: usize> {
    pub x_left: f64,
    pub dx: f64,
    pub averages: Vec<State<N>>,
    pub boundary: Boundary,
}

impl<const N: usize> CellField<N> {
    pub fn new(x_left: f64, dx: f64, averages: Vec<State<N>>, boundary: Boundary) -> Result<Self> {
        if averages.len() < 3 {
            return Err(AderError::Config(format!(
                "need at least 3 cells, got {}",
                averages.len()
            )));
        }
        if !(dx > 0.0) {
            return Err(AderError::Config(format!("cell width must be positive, got {dx}")));
        }
        Ok(Self {
            x_left,
            dx,
            averages,
            boundary,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.averages.len()
    }

    pub fn cell_center(&self, i: isize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.dx
    }

    /// Average of cell `i`, resolving ghost indices by the boundary rule.
    pub fn get(&self, i: isize) -> State<N> {
        let n = self.averages.len() as isize;
        match self.boundary {
            Boundary::Periodic => self.averages[i.rem_euclid(n) as usize],
            Boundary::Transmissive => self.averages[i.clamp(0, n - 1) as usize],
        }
    }

    /// `Σ_i Q̄_i Δx`.
    pub fn total(&self) -> State<N> {
        self.averages.iter().fold(State::zeros(), |acc, q| acc + q) * self.dx
    }
}

/// `W_i(ξ) = Σ_k coeffs[k] ξ^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionPoly<const N: usize> {
    pub coeffs: Vec<State<N>>,
}

impl<const N: usize> ReconstructionPoly<N> {
    pub fn constant(q: State<N>, degree: usize) -> Self {
        let mut coeffs = vec![State::zeros(); degree + 1];
        coeffs[0] = q;
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `l`-th ξ-derivative at `xi`; exactly zero for `l > M`.
    pub fn evaluate(&self, xi: f64, l: usize) -> State<N> {
        let mut out = State::<N>::zeros();
        for k in (l..self.coeffs.len()).rev() {
            let factor: f64 = (0..l).map(|i| (k - i) as f64).product();
            out = out * xi + self.coeffs[k] * factor;
        }
        out
    }

    /// Mean over the reference cell.
    pub fn mean(&self) -> State<N> {
        self.coeffs
            .iter()
            .enumerate()
            .fold(State::zeros(), |acc, (k, c)| acc + c * monomial_integral(k, -0.5, 0.5))
    }
}

fn monomial_integral(p: usize, a: f64, b: f64) -> f64 {
    let e = p as i32 + 1;
    (b.powi(e) - a.powi(e)) / e as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WenoParams {
    pub lambda_central: f64,
    pub lambda_sided: f64,
    pub epsilon: f64,
    pub power: i32,
}

impl Default for WenoParams {
    fn default() -> Self {
        Self {
            lambda_central: 1e5,
            lambda_sided: 1.0,
            epsilon: 1e-14,
            power: 8,
        }
    }
}

#[derive(Debug, Clone)]
struct Stencil {
    /// Offset of the leftmost stencil cell relative to the target cell.
    first: isize,
    /// Maps the `M + 1` stencil averages to monomial coefficients.
    inverse: DMatrix<f64>,
    lambda: f64,
}

#[derive(Debug, Clone)]
pub struct WenoReconstructor {
    degree: usize,
    stencils: Vec<Stencil>,
    indicator: DMatrix<f64>,
    params: WenoParams,
}

impl WenoReconstructor {
    /// Stencils: `M = 1` left and right; `M >= 2` left, central and right.
    /// For odd `M` no stencil is symmetric and the central one leans one cell
    /// to the left, e.g. `{i-2, ..., i+1}` for `M = 3`.
    pub fn new(degree: usize, params: WenoParams) -> Result<Self> {
        if !(1..=4).contains(&degree) {
            return Err(AderError::Config(format!(
                "unsupported reconstruction degree {degree}"
            )));
        }
        let m = degree as isize;
        let mut firsts = vec![(-m, params.lambda_sided)];
        if degree >= 2 {
            firsts.push((-(m + 1) / 2, params.lambda_central));
        }
        firsts.push((0, params.lambda_sided));

        let n = degree + 1;
        let stencils = firsts
            .into_iter()
            .map(|(first, lambda)| {
                let avg = DMatrix::from_fn(n, n, |j, k| {
                    let c = (first + j as isize) as f64;
                    monomial_integral(k, c - 0.5, c + 0.5)
                });
                let inverse = avg.try_inverse().expect("stencil average matrix is regular");
                Stencil {
                    first,
                    inverse,
                    lambda,
                }
            })
            .collect();

        let indicator = DMatrix::from_fn(n, n, |a, b| {
            (1..=degree)
                .map(|l| {
                    if a < l || b < l {
                        return 0.0;
                    }
                    let fa: f64 = (0..l).map(|i| (a - i) as f64).product();
                    let fb: f64 = (0..l).map(|i| (b - i) as f64).product();
                    fa * fb * monomial_integral(a + b - 2 * l, -0.5, 0.5)
                })
                .sum()
        });

        Ok(Self {
            degree,
            stencils,
            indicator,
            params,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn params(&self) -> &WenoParams {
        &self.params
    }

    /// Number of ghost cells a stencil reaches beyond the mesh on either side.
    pub fn reach(&self) -> usize {
        self.degree
    }

    /// Candidate polynomial fitted to `Q_j - Q_i`; the caller adds `Q_i` back
    /// to the constant coefficient, which keeps constant data exact.
    fn candidate<const N: usize>(&self, s: &Stencil, field: &CellField<N>, i: isize) -> Vec<State<N>> {
        let n = self.degree + 1;
        let centre = field.get(i);
        let data: Vec<State<N>> = (0..n).map(|j| field.get(i + s.first + j as isize) - centre).collect();
        (0..n)
            .map(|k| {
                (0..n).fold(State::<N>::zeros(), |acc, j| acc + data[j] * s.inverse[(k, j)])
            })
            .collect()
    }

    fn smoothness<const N: usize>(&self, coeffs: &[State<N>], comp: usize) -> f64 {
        let n = self.degree + 1;
        let mut sigma = 0.0;
        for a in 0..n {
            for b in 0..n {
                sigma += coeffs[a][comp] * self.indicator[(a, b)] * coeffs[b][comp];
            }
        }
        sigma
    }

    /// Reconstruction in cell `i`; ghost cells are valid indices.
    pub fn reconstruct_cell<const N: usize>(&self, field: &CellField<N>, i: isize) -> ReconstructionPoly<N> {
        let candidates: Vec<Vec<State<N>>> = self
            .stencils
            .iter()
            .map(|s| self.candidate(s, field, i))
            .collect();
        let n = self.degree + 1;
        let mut coeffs = vec![State::<N>::zeros(); n];
        for comp in 0..N {
            let raw: Vec<f64> = self
                .stencils
                .iter()
                .zip(&candidates)
                .map(|(s, c)| {
                    s.lambda / (self.smoothness(c, comp) + self.params.epsilon).powi(self.params.power)
                })
                .collect();
            let total: f64 = raw.iter().sum();
            for (w, cand) in raw.iter().zip(&candidates) {
                let w = w / total;
                for k in 0..n {
                    coeffs[k][comp] += w * cand[k][comp];
                }
            }
        }
        coeffs[0] += field.get(i);
        ReconstructionPoly { coeffs }
    }

    /// Polynomials for cells `first..first + count` (ghost indices allowed).
    pub fn reconstruct_range<const N: usize>(
        &self,
        field: &CellField<N>,
        first: isize,
        count: usize,
    ) -> Result<Vec<ReconstructionPoly<N>>> {
        if field.n_cells() < self.degree + 1 {
            return Err(AderError::StencilOutOfRange { cell: first });
        }
        Ok((0..count)
            .map(|k| self.reconstruct_cell(field, first + k as isize))
            .collect())
    }
}

/// One polynomial per cell with the default WENO parameters.
pub fn reconstruct<const N: usize>(field: &CellField<N>, degree: usize) -> Result<Vec<ReconstructionPoly<N>>> {
    let weno = WenoReconstructor::new(degree, WenoParams::default())?;
    weno.reconstruct_range(field, 0, field.n_cells())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field_from<const N: usize>(n: usize, f: impl Fn(f64) -> State<N>, boundary: Boundary) -> CellField<N> {
        let dx = 1.0 / n as f64;
        // exact averages via 5-point Gauss
        let (gx, gw) = crate::nodal::gauss_legendre(5);
        let avg = (0..n)
            .map(|i| {
                gx.iter()
                    .zip(&gw)
                    .fold(State::<N>::zeros(), |acc, (x, w)| acc + f((i as f64 + x) * dx) * *w)
            })
            .collect();
        CellField::new(0.0, dx, avg, boundary).unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        for m in 1..=4 {
            let field = CellField::new(0.0, 0.1, vec![State::<2>::new(2.5, -1.0); 10], Boundary::Periodic).unwrap();
            for p in reconstruct(&field, m).unwrap() {
                assert!((p.coeffs[0] - State::<2>::new(2.5, -1.0)).amax() < 1e-13);
                assert!(p.coeffs[1..].iter().all(|c| c.amax() < 1e-12));
            }
        }
    }

    #[test]
    fn polynomials_of_degree_m_are_exact_in_interior() {
        for m in 1..=4 {
            let n = 20;
            let dx = 1.0 / n as f64;
            let f = |x: f64| State::<1>::new((0..=m).map(|k| (k as f64 + 1.0) * (x - 0.3).powi(k as i32)).sum());
            let field = field_from(n, f, Boundary::Transmissive);
            let polys = reconstruct(&field, m).unwrap();
            for i in (m + 1)..(n - m - 1) {
                for &xi in &[-0.5, -0.2, 0.0, 0.3, 0.5] {
                    let x = field.cell_center(i as isize) + xi * dx;
                    let got = polys[i].evaluate(xi, 0)[0];
                    assert!((got - f(x)[0]).abs() < 1e-10, "M={m} i={i} xi={xi}");
                }
            }
        }
    }

    #[test]
    fn conservation() {
        for m in 1..=4 {
            let field = field_from(16, |x| State::<1>::new(if x < 0.4 { 1.0 } else { (7.0 * x).sin() }), Boundary::Periodic);
            for (i, p) in reconstruct(&field, m).unwrap().iter().enumerate() {
                assert!((p.mean() - field.averages[i]).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn evaluate_derivatives() {
        let p = ReconstructionPoly {
            coeffs: vec![State::<1>::new(1.0), State::<1>::new(2.0), State::<1>::new(3.0)],
        };
        assert_eq!(p.evaluate(0.0, 0)[0], 1.0);
        let lin = ReconstructionPoly {
            coeffs: vec![State::<1>::new(1.0), State::<1>::new(-4.0)],
        };
        for xi in [-0.5, 0.1, 0.5] {
            assert_eq!(lin.evaluate(xi, 1)[0], -4.0);
        }
        assert_eq!(lin.evaluate(0.2, 2)[0], 0.0);

        let quartic = ReconstructionPoly {
            coeffs: (0..5).map(|k| State::<1>::new(0.7 - k as f64 * 0.3)).collect(),
        };
        let h = 1e-5;
        let fd = (quartic.evaluate(0.25 + h, 1) - quartic.evaluate(0.25 - h, 1)) / (2.0 * h);
        assert!((fd - quartic.evaluate(0.25, 2)).amax() < 1e-8);
    }

    #[test]
    fn smooth_reconstruction_converges() {
        let m = 2;
        let err = |n: usize| {
            let field = field_from(n, |x| State::<1>::new((2.0 * PI * x).sin()), Boundary::Periodic);
            let polys = reconstruct(&field, m).unwrap();
            let mut e: f64 = 0.0;
            for (i, p) in polys.iter().enumerate() {
                for k in 0..=10 {
                    let xi = -0.5 + k as f64 / 10.0;
                    let x = field.cell_center(i as isize) + xi * field.dx;
                    e = e.max((p.evaluate(xi, 0)[0] - (2.0 * PI * x).sin()).abs());
                }
            }
            e
        };
        let (e1, e2) = (err(64), err(128));
        assert!((e1 / e2).log2() >= 2.9, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn step_is_not_oscillatory() {
        for m in 1..=4 {
            let avg: Vec<State<1>> = (0..30).map(|i| State::<1>::new(if i < 15 { 1.0 } else { 0.0 })).collect();
            let field = CellField::new(0.0, 1.0 / 30.0, avg, Boundary::Transmissive).unwrap();
            for p in reconstruct(&field, m).unwrap() {
                for xi in [-0.5, 0.5] {
                    let v = p.evaluate(xi, 0)[0];
                    assert!((-1e-8..=1.0 + 1e-8).contains(&v), "M={m} value {v}");
                }
            }
        }
    }

    #[test]
    fn ghost_rules() {
        let avg: Vec<State<1>> = (0..5).map(|i| State::<1>::new(i as f64)).collect();
        let per = CellField::new(0.0, 0.2, avg.clone(), Boundary::Periodic).unwrap();
        assert_eq!(per.get(-1)[0], 4.0);
        assert_eq!(per.get(6)[0], 1.0);
        let tr = CellField::new(0.0, 0.2, avg, Boundary::Transmissive).unwrap();
        assert_eq!(tr.get(-3)[0], 0.0);
        assert_eq!(tr.get(7)[0], 4.0);
        assert!(CellField::<1>::new(0.0, 0.2, vec![State::zeros(); 2], Boundary::Periodic).is_err());
    }
}
