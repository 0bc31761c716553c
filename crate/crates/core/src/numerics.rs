//! Complex-valued kernels shared by the whole receive chain.
//!
//! Transform convention: the forward DFT uses `exp(-j2πnk/N)` and both
//! directions are scaled by `1/√N`, so the transform is unitary.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Condition number above which a least-squares solve is flagged.
pub const ILL_CONDITIONED: f64 = 1e8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary DFT (or inverse DFT) of `v`.
pub fn dft(v: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    if v.is_empty() {
        return invalid("dft of an empty vector");
    }
    let mut out = v.to_vec();
    dft_in_place(&mut out, inverse);
    Ok(out)
}

/// Unitary DFT in place. Any length ≥ 1 is accepted.
pub fn dft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    plan.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for x in buf.iter_mut() {
        *x *= scale;
    }
}

/// Dense unitary DFT matrix `F_N`, row `k` column `n` = `exp(-j2πkn/N)/√N`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |k, m| {
        let phase = -2.0 * PI * ((k * m) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// Applies the symmetric three-tap kernel `[off, center, off]`.
///
/// `out[n] = off·v[n−1] + center·v[n] + off·v[n+1]`, with the neighbours
/// wrapping around when `circular` is set and treated as zero otherwise.
pub fn apply_banded(
    center: Complex64,
    off: Complex64,
    v: &[Complex64],
    circular: bool,
) -> Result<Vec<Complex64>> {
    let n = v.len();
    if n < 3 {
        return invalid(format!("banded kernel needs length >= 3, got {n}"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let out = (0..n)
        .map(|i| {
            let prev = if i > 0 {
                v[i - 1]
            } else if circular {
                v[n - 1]
            } else {
                zero
            };
            let next = if i + 1 < n {
                v[i + 1]
            } else if circular {
                v[0]
            } else {
                zero
            };
            center * v[i] + off * (prev + next)
        })
        .collect();
    Ok(out)
}

/// Support-restricted, ridge-regularized least-squares problem.
#[derive(Debug, Clone, Copy)]
pub struct LsProblem<'a> {
    pub design: &'a ComplexMatrix,
    pub observations: &'a [Complex64],
    /// Column indices allowed to be nonzero.
    pub support: &'a [usize],
    pub ridge: f64,
}

#[derive(Debug, Clone)]
pub struct LsSolution {
    /// Full-length solution, zero off the support.
    pub x: Vec<Complex64>,
    /// Ratio of extreme singular values of the restricted design.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Minimizes `‖A·x − b‖² + ridge·‖x‖²` with `x` zero off the support.
///
/// Solved through the SVD of the restricted design. With `ridge == 0` the
/// pseudoinverse is used, so a rank-deficient design yields the
/// minimum-norm solution (and is flagged).
pub fn solve_ls(problem: &LsProblem<'_>) -> Result<LsSolution> {
    let LsProblem {
        design,
        observations,
        support,
        ridge,
    } = *problem;
    if design.nrows() != observations.len() {
        return invalid(format!(
            "design has {} rows but {} observations",
            design.nrows(),
            observations.len()
        ));
    }
    if support.is_empty() {
        return invalid("empty support");
    }
    if !(ridge >= 0.0) {
        return invalid(format!("ridge must be nonnegative, got {ridge}"));
    }
    let mut seen = vec![false; design.ncols()];
    for &s in support {
        if s >= design.ncols() {
            return invalid(format!("support index {s} >= {} columns", design.ncols()));
        }
        if seen[s] {
            return invalid(format!("support index {s} repeated"));
        }
        seen[s] = true;
    }

    let restricted = design.select_columns(support);
    let svd = restricted.svd(true, true);
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let sv = &svd.singular_values;

    let s_max = sv.iter().cloned().fold(0.0f64, f64::max);
    let rank_full = support.len() <= design.nrows();
    let s_min = if rank_full {
        sv.iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    let tol = s_max * (design.nrows().max(support.len()) as f64) * f64::EPSILON;

    let b = nalgebra::DVector::from_column_slice(observations);
    let ub = u.adjoint() * b;
    let mut coeffs = ub.clone();
    for (i, c) in coeffs.iter_mut().enumerate() {
        let s = sv[i];
        let gain = if ridge > 0.0 {
            s / (s * s + ridge)
        } else if s > tol {
            1.0 / s
        } else {
            0.0
        };
        *c *= gain;
    }
    let xs = v_t.adjoint() * coeffs;

    let mut x = vec![Complex64::new(0.0, 0.0); design.ncols()];
    for (k, &col) in support.iter().enumerate() {
        x[col] = xs[k];
    }
    Ok(LsSolution {
        x,
        condition,
        ill_conditioned: condition > ILL_CONDITIONED,
    })
}

/// Dense matrix-vector product helper.
pub fn mat_vec(m: &ComplexMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let out = m * nalgebra::DVector::from_column_slice(v);
    out.iter().cloned().collect()
}

pub fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
