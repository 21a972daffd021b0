//! Dense and banded complex kernels shared by the higher-level modules.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{LapError, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Condition estimates above this trigger iterative refinement of shifted solves.
pub const REFINEMENT_CONDITION: f64 = 1e10;

const MAX_REFINEMENT_STEPS: usize = 3;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Below this size a full SVD is cheaper than iterating.
const LANCZOS_MIN_DIM: usize = 64;
const LANCZOS_MAX_STEPS: usize = 120;
const LANCZOS_TOL: f64 = 1e-14;

/// Largest singular value. Large matrices use Lanczos on `A*A` with full
/// reorthogonalization, falling back to the SVD if it fails to converge.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].norm(),
        (r, c) if r.min(c) >= LANCZOS_MIN_DIM => lanczos_norm(m).unwrap_or_else(|| svd_norm(m)),
        _ => svd_norm(m),
    }
}

fn svd_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().fold(0.0f64, |acc, &s| acc.max(s))
}

/// Top eigenvalue of `A*A` from a Krylov space, accepted once its Ritz
/// residual `|β_k s_k|` is below `LANCZOS_TOL·θ`. The start vector is a fixed
/// quasi-random pattern, so results are reproducible.
fn lanczos_norm(m: &CMatrix) -> Option<f64> {
    let n = m.ncols();
    let mut q = CVector::from_fn(n, |k, _| {
        let t = k as f64;
        c64((0.7 * t + 0.3).cos() + 0.5, (1.3 * t + 0.1).sin())
    });
    q /= c64(q.norm(), 0.0);
    let mut basis: Vec<CVector> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let steps = LANCZOS_MAX_STEPS.min(n);
    for k in 0..steps {
        let mut w = m.ad_mul(&(m * &q));
        let alpha = q.dotc(&w).re;
        w.axpy(c64(-alpha, 0.0), &q, c64(1.0, 0.0));
        if let (Some(prev), Some(&beta)) = (basis.last(), betas.last()) {
            w.axpy(c64(-beta, 0.0), prev, c64(1.0, 0.0));
        }
        basis.push(q.clone());
        alphas.push(alpha);
        // Two passes of Gram-Schmidt keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w.axpy(-c, b, c64(1.0, 0.0));
            }
        }
        let beta = w.norm();
        let size = k + 1;
        let t = DMatrix::<f64>::from_fn(size, size, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (top, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty tridiagonal");
        if theta <= 0.0 {
            return None;
        }
        let residual = beta * eig.eigenvectors[(size - 1, top)].abs();
        if residual <= LANCZOS_TOL * theta || beta <= LANCZOS_TOL * theta {
            return Some(theta.sqrt());
        }
        betas.push(beta);
        q = w / c64(beta, 0.0);
    }
    None
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// `(A + A*) / 2` together with the relative Frobenius asymmetry of `A`.
pub fn hermitian_part(a: &CMatrix) -> (CMatrix, f64) {
    let adj = a.adjoint();
    let scale = a.norm();
    let asym = if scale > 0.0 { (a - &adj).norm() / scale } else { 0.0 };
    ((a + adj).scale(0.5), asym)
}

/// Largest `|i - j|` over nonzero entries.
pub fn bandwidth(a: &CMatrix) -> usize {
    let mut bw = 0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != C64::new(0.0, 0.0) {
                bw = bw.max(i.abs_diff(j));
            }
        }
    }
    bw
}

/// LU factorization with partial pivoting of a square band matrix with
/// `kl` sub- and `ku` super-diagonals, LINPACK layout: row `i` stores
/// columns `i - kl ..= i + kl + ku` to make room for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Factor `a - shift·I`, reading only the entries inside the band.
    pub fn factor(a: &CMatrix, kl: usize, ku: usize, shift: C64) -> Result<Self> {
        let n = a.nrows();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![C64::new(0.0, 0.0); n * width],
            pivots: vec![0; n],
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n.saturating_sub(1));
            for j in lo..=hi {
                let mut v = a[(i, j)];
                if i == j {
                    v -= shift;
                }
                *lu.at_mut(i, j) = v;
            }
        }

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).norm();
            for i in (k + 1)..=last_row {
                let v = lu.at(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            lu.pivots[k] = p;
            if best == 0.0 {
                return Err(LapError::SingularShift {
                    re: shift.re,
                    im: shift.im,
                    distance: 0.0,
                });
            }
            if p != k {
                for j in k..=last_col {
                    let tmp = lu.at(k, j);
                    *lu.at_mut(k, j) = lu.at(p, j);
                    *lu.at_mut(p, j) = tmp;
                }
            }
            let pivot = lu.at(k, k);
            for i in (k + 1)..=last_row {
                let l = lu.at(i, k) / pivot;
                *lu.at_mut(i, k) = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in (k + 1)..=last_col {
                    let u = lu.at(k, j);
                    *lu.at_mut(i, j) -= l * u;
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C64 {
        self.data[self.offset(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        let o = self.offset(i, j);
        &mut self.data[o]
    }

    pub fn solve_in_place(&self, b: &mut CMatrix) {
        let n = self.n;
        for c in 0..b.ncols() {
            let mut col = b.column_mut(c);
            for k in 0..n {
                let p = self.pivots[k];
                if p != k {
                    col.swap_rows(k, p);
                }
                let bk = col[k];
                if bk == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in (k + 1)..=(k + self.kl).min(n - 1) {
                    col[i] -= self.at(i, k) * bk;
                }
            }
            for i in (0..n).rev() {
                let mut acc = col[i];
                for j in (i + 1)..=(i + self.kl + self.ku).min(n - 1) {
                    acc -= self.at(i, j) * col[j];
                }
                col[i] = acc / self.at(i, i);
            }
        }
    }
}

enum Factorization {
    Dense(LU<C64, Dyn, Dyn>),
    Banded(BandedLu),
}

/// A factorization of `A - z·I` reused across right-hand sides.
pub(crate) struct ShiftedSolver<'a> {
    matrix: &'a CMatrix,
    shift: C64,
    factorization: Factorization,
    refine: bool,
}

impl<'a> ShiftedSolver<'a> {
    /// `bandwidth` selects the banded kernel; `refine` enables iterative refinement.
    pub fn new(matrix: &'a CMatrix, shift: C64, bandwidth: Option<usize>, refine: bool) -> Result<Self> {
        let factorization = match bandwidth {
            Some(b) => Factorization::Banded(BandedLu::factor(matrix, b, b, shift)?),
            None => {
                let mut shifted = matrix.clone();
                for i in 0..shifted.nrows() {
                    shifted[(i, i)] -= shift;
                }
                Factorization::Dense(shifted.lu())
            }
        };
        Ok(ShiftedSolver {
            matrix,
            shift,
            factorization,
            refine,
        })
    }

    fn raw_solve(&self, b: &mut CMatrix) -> Result<()> {
        match &self.factorization {
            Factorization::Dense(lu) => {
                if !lu.solve_mut(b) {
                    return Err(LapError::SingularShift {
                        re: self.shift.re,
                        im: self.shift.im,
                        distance: 0.0,
                    });
                }
            }
            Factorization::Banded(lu) => lu.solve_in_place(b),
        }
        Ok(())
    }

    /// `(A - zI)·x`
    pub fn apply_shifted(&self, x: &CMatrix) -> CMatrix {
        self.matrix * x - x * self.shift
    }

    /// `(A - zI)^{-1} b`, refined when requested.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let mut x = b.clone();
        self.raw_solve(&mut x)?;
        if self.refine {
            let mut residual = b - self.apply_shifted(&x);
            let mut res_norm = residual.norm();
            for _ in 0..MAX_REFINEMENT_STEPS {
                if res_norm == 0.0 {
                    break;
                }
                let mut correction = residual.clone();
                self.raw_solve(&mut correction)?;
                let candidate = &x + correction;
                let next = b - self.apply_shifted(&candidate);
                let next_norm = next.norm();
                if next_norm >= res_norm {
                    break;
                }
                x = candidate;
                residual = next;
                res_norm = next_norm;
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c64((i as f64 * 0.37).sin(), 0.0)
            } else if i.abs_diff(j) == 1 {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
    }

    #[test]
    fn banded_matches_dense() {
        let a = tridiag(40);
        let z = c64(0.1, 1e-3);
        let b = CMatrix::from_fn(40, 3, |i, j| c64(i as f64 + 1.0, j as f64));
        let banded = ShiftedSolver::new(&a, z, Some(1), false).unwrap();
        let dense = ShiftedSolver::new(&a, z, None, false).unwrap();
        let xb = banded.solve(&b).unwrap();
        let xd = dense.solve(&b).unwrap();
        assert!((&xb - &xd).norm() <= 1e-10 * xd.norm());
    }

    #[test]
    fn banded_pivots_on_zero_diagonal() {
        // Zero leading diagonal forces a row swap.
        let mut a = tridiag(6);
        a[(0, 0)] = c64(0.0, 0.0);
        let b = CMatrix::from_fn(6, 1, |i, _| c64(1.0, i as f64));
        let lu = ShiftedSolver::new(&a, c64(0.0, 0.0), Some(1), false).unwrap();
        let x = lu.solve(&b).unwrap();
        assert!((&a * &x - &b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn refinement_does_not_hurt() {
        let a = tridiag(30);
        let z = c64(0.2, 1e-9);
        let b = CMatrix::from_fn(30, 1, |i, _| c64(1.0 / (i as f64 + 1.0), 0.0));
        let plain = ShiftedSolver::new(&a, z, None, false).unwrap();
        let refined = ShiftedSolver::new(&a, z, None, true).unwrap();
        let r0 = (&b - plain.apply_shifted(&plain.solve(&b).unwrap())).norm();
        let r1 = (&b - refined.apply_shifted(&refined.solve(&b).unwrap())).norm();
        assert!(r1 <= r0 * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, -3.0)]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_norm_matches_svd() {
        let dense = CMatrix::from_fn(100, 100, |i, j| {
            c64(((i * 7 + j * 13) % 17) as f64 - 8.0, ((i * 3 + j * 5) % 11) as f64 - 5.0)
        });
        let rank_one = CMatrix::from_fn(90, 90, |i, j| c64((i + 1) as f64 * (j as f64 - 40.0), 0.0));
        let clustered = CMatrix::from_diagonal(&CVector::from_fn(80, |i, _| c64(if i < 40 { 5.0 } else { 5.0 - 1e-9 * i as f64 }, 0.0)));
        for m in [dense, rank_one, clustered, CMatrix::identity(70, 70)] {
            let exact = svd_norm(&m);
            let fast = lanczos_norm(&m).expect("converges");
            assert!((fast - exact).abs() <= 1e-13 * exact, "{fast} vs {exact}");
        }
        assert_eq!(spectral_norm(&CMatrix::zeros(70, 70)), 0.0);
    }

    #[test]
    fn bandwidth_detects_band() {
        assert_eq!(bandwidth(&tridiag(5)), 1);
        assert_eq!(bandwidth(&CMatrix::identity(4, 4)), 0);
    }
}
