//! Cauchy-Kowalewskaya coefficients checked against independent oracles.

#![allow(clippy::needless_range_loop)]

use ader_core::ck::{
    ck_functional, matrix_c, matrix_d, pascal_coeffs, time_derivatives, CkVariant,
    NodeDerivativeStack,
};
use ader_core::nodal::build_grid;
use ader_core::{Matrix, State};

/// Rows `l = 1..=5` of the printed coefficient tables, columns
/// `k = l-4, ..., l+1` (entries with `k < 1` are the leading zeros).
const TABLE_A: [[i64; 6]; 5] = [
    [0, 0, 0, 0, 1, 1],
    [0, 0, 0, 1, 2, 1],
    [0, 0, 1, 3, 3, 1],
    [0, 1, 4, 6, 4, 1],
    [1, 5, 10, 10, 5, 1],
];
const TABLE_B: [[i64; 6]; 5] = [
    [0, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 1],
    [0, 0, 0, 1, 2, 1],
    [0, 0, 1, 3, 3, 1],
    [0, 1, 4, 6, 4, 1],
];

/// Entry of a printed row for column `k`, zero when `k` is off the table.
fn table_entry(row: &[i64; 6], l: usize, k: i64) -> i64 {
    let col = k - (l as i64 - 4);
    if (0..6).contains(&col) {
        row[col as usize]
    } else {
        0
    }
}

#[test]
fn a_rows_match_table() {
    for l in 1..=5 {
        let (a, _) = pascal_coeffs(l);
        for k in 1..=l + 1 {
            assert_eq!(a[k - 1], table_entry(&TABLE_A[l - 1], l, k as i64), "a[{l}][{k}]");
        }
    }
}

#[test]
fn b_rows_match_table_up_to_column_alignment() {
    // The printed b rows are the same Pascal rows placed one column to the
    // right. The placement used here is the one forced by D(2,1) = B - A_x,
    // which needs b[1][1] = 1.
    for l in 1..=5 {
        let (_, b) = pascal_coeffs(l);
        for k in 1..=l + 1 {
            let printed = table_entry(&TABLE_B[l - 1], l, k as i64 + 1);
            assert_eq!(b[k - 1], printed, "b[{l}][{k}]");
        }
        assert_eq!(b[l], 0, "b[{l}][{}] must vanish", l + 1);
    }
}

fn varied_stack(degree: usize) -> NodeDerivativeStack<2> {
    let a = Matrix::<2>::new(0.4, 1.3, -0.7, 2.1);
    let b = Matrix::<2>::new(-3.0, 0.2, 0.6, -1.5);
    let mut st = NodeDerivativeStack::frozen(degree, State::<2>::new(0.2, -0.4), a, b);
    for l in 1..degree {
        st.dx_a[l - 1] = Matrix::<2>::new(0.1 * l as f64, -0.3, 0.25, 1.0 / (l + 1) as f64);
        st.dx_b[l - 1] = Matrix::<2>::new(-0.2, 0.05 * l as f64, 0.7, 0.3);
    }
    st
}

#[test]
fn d_identities() {
    let st = varied_stack(4);
    assert_eq!(matrix_d(2, 2, &st), -st.a);
    assert_eq!(matrix_d(2, 1, &st), st.b - st.dx_a[0]);
    // third row: ∂x²(∂t Q) with ∂t Q = -A Q_x + S, S_x = B Q_x
    assert_eq!(matrix_d(3, 3, &st), -st.a);
    assert_eq!(matrix_d(3, 2, &st), st.b - st.dx_a[0] * 2.0);
    assert_eq!(matrix_d(3, 1, &st), st.dx_b[0] - st.dx_a[1]);
}

/// `(B - A ∂x)^k Q = Σ_j C(k, j) B^{k-j} (-A)^j ∂x^j Q` for commuting `A`, `B`.
fn binomial_oracle(a: &Matrix<2>, b: &Matrix<2>, dx_q: &[State<2>], k: usize) -> State<2> {
    let mut total = State::<2>::zeros();
    for j in 0..=k {
        let c = (1..=j).fold(1.0, |acc, i| acc * (k + 1 - i) as f64 / i as f64);
        total += b.pow((k - j) as u32) * (-a).pow(j as u32) * dx_q[j] * c;
    }
    total
}

#[test]
fn constant_coefficient_time_derivatives_follow_binomial_expansion() {
    let degree = 4;
    let a = Matrix::<2>::new(0.0, 1.0, 1.0, 0.0);
    // B commutes with A, so the operator B - A∂x expands binomially
    let b = Matrix::<2>::identity() * -0.7 + a * 0.3;
    let grid = build_grid(degree, 0.05, 0.01).unwrap();

    let q = State::<2>::new(0.9, -0.35);
    let mut st = NodeDerivativeStack::frozen(degree, q, a, b);
    let derivs = [
        q,
        State::<2>::new(1.2, 0.4),
        State::<2>::new(-2.5, 3.1),
        State::<2>::new(7.0, -4.0),
        State::<2>::new(-11.0, 13.5),
    ];
    st.dx_q.copy_from_slice(&derivs[1..]);

    let mut stacks = vec![st; grid.n_space() * grid.n_time()];
    let c = matrix_c(&stacks, &grid);
    // the source of a linear relaxation S = B Q
    let source = b * q;
    let dt = time_derivatives(&mut stacks[0], &c[0], &source, degree);
    for k in 1..=degree {
        let want = binomial_oracle(&a, &b, &derivs, k);
        let rel = (dt[k - 1] - want).norm() / want.norm();
        assert!(rel < 1e-8, "k={k}: {} vs {}, rel {rel:e}", dt[k - 1], want);
    }
}

#[test]
fn explicit_part_excludes_source_powers() {
    let degree = 4;
    let grid = build_grid(degree, 0.1, 0.02).unwrap();
    let mut st = varied_stack(degree);
    for (l, d) in st.dx_q.iter_mut().enumerate() {
        *d = State::<2>::new(l as f64 + 0.5, 1.0 - l as f64);
    }
    let mut stacks = vec![st; grid.n_space() * grid.n_time()];
    let c = matrix_c(&stacks, &grid);
    let source = State::<2>::new(0.3, -0.8);
    let f = ck_functional(&mut stacks[0], &c[0], &source, degree, CkVariant::Recursive);
    let b = stacks[0].b;
    for k in 1..=degree {
        let diff = f.dt_q[k - 1] - f.explicit[k - 1] - b.pow((k - 1) as u32) * source;
        assert!(diff.amax() < 1e-10, "k={k}");
    }
}

#[test]
fn variants_agree_at_first_order_and_differ_beyond() {
    let degree = 3;
    let grid = build_grid(degree, 0.1, 0.02).unwrap();
    let mut st = varied_stack(degree);
    st.dx_q[0] = State::<2>::new(1.0, 2.0);
    let mut stacks = vec![st; grid.n_space() * grid.n_time()];
    let c = matrix_c(&stacks, &grid);
    let source = State::<2>::new(0.1, 0.1);
    let rec = ck_functional(&mut stacks[0], &c[0], &source, degree, CkVariant::Recursive);
    let lit = ck_functional(&mut stacks[0], &c[0], &source, degree, CkVariant::Literal);
    assert!((rec.dt_q[0] - rec.explicit[0] - source).amax() < 1e-14);
    assert!((lit.dt_q[1] - rec.dt_q[1]).amax() > 1e-6);
}
