//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use lapkit_core::linalg::{c64, CMatrix, CVector};
use lapkit_core::models::{build_operator, build_rigging, ModelSpec, RiggingSpec};
use lapkit_core::{HermitianOperator, Rigging};
use nalgebra::DMatrix;

/// Eigenpairs from nalgebra's Hermitian solver on a fresh copy of the entries,
/// bypassing the operator's own cache.
pub fn eig(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let e = h.clone().symmetric_eigen();
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// `(H - z)^{-1}` as `Q diag(1/(E - z)) Q*`.
pub fn resolvent_oracle(h: &CMatrix, z: nalgebra::Complex<f64>) -> CMatrix {
    let (vals, q) = eig(h);
    let n = vals.len();
    let scaled = CMatrix::from_fn(n, n, |i, j| q[(i, j)] / (c64(vals[j], 0.0) - z));
    scaled * q.adjoint()
}

/// `F (H - z)^{-1} F*` through the eigendecomposition.
pub fn sandwiched_oracle(h: &CMatrix, f: &CMatrix, z: nalgebra::Complex<f64>) -> CMatrix {
    f * resolvent_oracle(h, z) * f.adjoint()
}

pub fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Sorted eigenvalues of `H0 + r F*F`.
fn line_eigenvalues(h0: &CMatrix, gram: &CMatrix, r: f64) -> Vec<f64> {
    let m = h0 + gram * c64(r, 0.0);
    let m = (&m + m.adjoint()) * c64(0.5, 0.0);
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Resonances in `(lo, hi)` by scanning `r` on a uniform grid and bisecting
/// every sign change of `e_k(r) - λ`. Each sorted eigenvalue branch is
/// non-decreasing in `r` because `F*F` is positive definite, so it crosses
/// `λ` at most once.
pub fn brute_force_resonances(h0: &CMatrix, f: &CMatrix, lambda: f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let gram = f.adjoint() * f;
    let steps = ((hi - lo) / step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * step).collect();
    let values: Vec<Vec<f64>> = grid.iter().map(|&r| line_eigenvalues(h0, &gram, r)).collect();
    let n = h0.nrows();
    let mut roots = Vec::new();
    for k in 0..n {
        for i in 0..grid.len() - 1 {
            let a = values[i][k] - lambda;
            let b = values[i + 1][k] - lambda;
            if a <= 0.0 && b > 0.0 {
                let (mut l, mut h) = (grid[i], grid[i + 1]);
                for _ in 0..60 {
                    let mid = 0.5 * (l + h);
                    if line_eigenvalues(h0, &gram, mid)[k] - lambda <= 0.0 {
                        l = mid;
                    } else {
                        h = mid;
                    }
                }
                roots.push(0.5 * (l + h));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
}

/// Planted-eigenvalue operator with a non-identity rigging of condition ≤ 10.
pub fn planted_fixture(n: usize, m: usize, seed: u64) -> (HermitianOperator, Rigging, ModelSpec) {
    let spec = ModelSpec::planted(n, 0.0, m, 0.5, seed);
    let h0 = build_operator(&spec).unwrap();
    let f = build_rigging(&RiggingSpec::random(10.0, seed + 1000), n).unwrap();
    (h0, f, spec)
}

/// Orthonormal basis of `F·V(λ)` with `V(λ)` from the oracle eigendecomposition.
pub fn image_of_eigenspace(h0: &CMatrix, f: &CMatrix, lambda: f64, tol: f64) -> CMatrix {
    let (vals, q) = eig(h0);
    let cols: Vec<CVector> = vals
        .iter()
        .enumerate()
        .filter(|(_, &e)| (e - lambda).abs() <= tol)
        .map(|(i, _)| f * q.column(i))
        .collect();
    if cols.is_empty() {
        return CMatrix::zeros(h0.nrows(), 0);
    }
    let m = CMatrix::from_columns(&cols);
    let qr = m.qr();
    qr.q()
}

/// Largest principal angle from the SVD of `A* B` (orthonormal inputs).
pub fn max_angle_oracle(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() == 0 && b.ncols() == 0 {
        return 0.0;
    }
    let s = (a.adjoint() * b).singular_values();
    let cos_min = s.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    // sin from the complement for accuracy at small angles
    let resid = b - a * (a.adjoint() * b);
    let sin = resid.singular_values().iter().copied().fold(0.0, f64::max);
    sin.min(1.0).asin().max(if cos_min < 0.5 { cos_min.acos() } else { 0.0 })
}

pub fn real_matrix(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c64(x, 0.0))
}
