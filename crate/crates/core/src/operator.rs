//! Hermitian operators, riggings and the resolvent machinery built on them.
//!
//! All operators are stored explicitly. A [`HermitianOperator`] caches its
//! eigendecomposition on first use; the cache is what supplies the exact
//! condition number of every shifted solve (`H - z` is normal, so
//! `κ = max|E - z| / min|E - z|`). Compactness of the sandwiched resolvent,
//! a hypothesis in the infinite-dimensional setting, is automatic here and
//! is not checked.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, LapError, Result};
use crate::linalg::{self, c64, hermitian_part, CMatrix, CVector, ShiftedSolver, C64, REFINEMENT_CONDITION};
use crate::subspace::SubspaceBasis;

/// Inputs whose relative asymmetry exceeds this are rejected rather than
/// symmetrized.
pub const HERMITIAN_INPUT_TOLERANCE: f64 = 1e-8;

/// Real shifts closer than this to an eigenvalue are refused.
pub const SINGULAR_SHIFT_DISTANCE: f64 = 1e-12;

/// Relative width (in units of the spectral radius) used to snap eigenvalues
/// onto interval endpoints.
pub const CLUSTER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageKind {
    Dense,
    Sparse,
}

/// A point `re + i·im` of the complex plane used as a resolvent argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnergy {
    pub re: f64,
    pub im: f64,
}

impl ComplexEnergy {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexEnergy { re, im }
    }

    pub fn real(re: f64) -> Self {
        ComplexEnergy { re, im: 0.0 }
    }

    pub fn conj(self) -> Self {
        ComplexEnergy::new(self.re, -self.im)
    }

    pub fn to_c64(self) -> C64 {
        c64(self.re, self.im)
    }
}

impl From<C64> for ComplexEnergy {
    fn from(z: C64) -> Self {
        ComplexEnergy::new(z.re, z.im)
    }
}

/// Eigenvalues in ascending order with the matching unitary eigenvector matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// Eigendecomposition of a matrix assumed Hermitian.
    pub fn of_hermitian(entries: &CMatrix) -> Self {
        let n = entries.nrows();
        if n == 0 {
            return SpectralDecomposition {
                eigenvalues: Vec::new(),
                eigenvectors: CMatrix::zeros(0, 0),
            };
        }
        let eig = entries.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i))
                .collect::<Vec<_>>(),
        );
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `Q diag(λ) Q*`
    pub fn reconstruct(&self) -> CMatrix {
        let d = CVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|&e| c64(e, 0.0)));
        let scaled = CMatrix::from_fn(self.eigenvectors.nrows(), self.eigenvectors.ncols(), |i, j| {
            self.eigenvectors[(i, j)] * d[j]
        });
        scaled * self.eigenvectors.adjoint()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
    }

    /// `(min_k |E_k - z|, max_k |E_k - z|)`
    pub fn distance_range(&self, z: C64) -> (f64, f64) {
        self.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
            let d = (c64(e, 0.0) - z).norm();
            (lo.min(d), hi.max(d))
        })
    }

    /// Distance from a real point to the spectrum.
    pub fn distance_to(&self, x: f64) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &e| acc.min((e - x).abs()))
    }

    /// Eigen-coordinates `Q* v`.
    pub fn coefficients(&self, v: &CVector) -> CVector {
        self.eigenvectors.adjoint() * v
    }

    /// Indices of eigenvalues strictly inside `(lo, hi)` after snapping
    /// eigenvalues within the clustering tolerance onto the endpoints.
    pub fn interior_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        let tau = CLUSTER_TOLERANCE * self.spectral_radius();
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > lo + tau && e < hi - tau)
            .map(|(i, _)| i)
            .collect()
    }

    fn basis_of(&self, indices: &[usize]) -> SubspaceBasis {
        let n = self.eigenvectors.nrows();
        if indices.is_empty() {
            return SubspaceBasis::empty(n);
        }
        SubspaceBasis::from_orthonormal(CMatrix::from_columns(
            &indices
                .iter()
                .map(|&i| self.eigenvectors.column(i))
                .collect::<Vec<_>>(),
        ))
    }
}

/// A finite-dimensional self-adjoint operator.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    entries: CMatrix,
    storage: StorageKind,
    bandwidth: usize,
    spectral: OnceLock<SpectralDecomposition>,
}

impl HermitianOperator {
    /// Dense operator from a square matrix; symmetrized as `(A + A*)/2`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_storage(entries, StorageKind::Dense)
    }

    pub fn sparse(entries: CMatrix) -> Result<Self> {
        Self::with_storage(entries, StorageKind::Sparse)
    }

    pub fn with_storage(entries: CMatrix, storage: StorageKind) -> Result<Self> {
        check_dim(entries.nrows(), entries.ncols())?;
        let (sym, asym) = hermitian_part(&entries);
        if asym > HERMITIAN_INPUT_TOLERANCE {
            return Err(LapError::NotHermitian(asym));
        }
        Ok(Self::from_hermitian(sym, storage))
    }

    fn from_hermitian(entries: CMatrix, storage: StorageKind) -> Self {
        let bandwidth = linalg::bandwidth(&entries);
        HermitianOperator {
            entries,
            storage,
            bandwidth,
            spectral: OnceLock::new(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = CVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0)));
        Self::from_hermitian(CMatrix::from_diagonal(&d), StorageKind::Sparse)
    }

    /// Real symmetric tridiagonal operator; `off.len() + 1 == diag.len()`.
    pub fn tridiagonal(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        check_dim(n.saturating_sub(1), off.len())?;
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c64(diag[i], 0.0);
        }
        for (i, &t) in off.iter().enumerate() {
            m[(i, i + 1)] = c64(t, 0.0);
            m[(i + 1, i)] = c64(t, 0.0);
        }
        Ok(Self::from_hermitian(m, StorageKind::Sparse))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn storage_kind(&self) -> StorageKind {
        self.storage
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Eigendecomposition, computed on first call and cached.
    pub fn spectral(&self) -> &SpectralDecomposition {
        self.spectral
            .get_or_init(|| SpectralDecomposition::of_hermitian(&self.entries))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral().eigenvalues
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral().spectral_radius()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    fn banded_kernel(&self) -> Option<usize> {
        (self.storage == StorageKind::Sparse && 4 * self.bandwidth <= self.dim()).then_some(self.bandwidth)
    }

    /// Condition number of `H - z` from the cached spectrum.
    pub fn shift_condition(&self, z: ComplexEnergy) -> f64 {
        let (lo, hi) = self.spectral().distance_range(z.to_c64());
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    fn solver(&self, z: ComplexEnergy) -> Result<ShiftedSolver<'_>> {
        let zc = z.to_c64();
        let (lo, hi) = self.spectral().distance_range(zc);
        if lo == 0.0 || (z.im == 0.0 && lo <= SINGULAR_SHIFT_DISTANCE) {
            return Err(LapError::SingularShift {
                re: z.re,
                im: z.im,
                distance: lo,
            });
        }
        let refine = hi / lo > REFINEMENT_CONDITION;
        ShiftedSolver::new(&self.entries, zc, self.banded_kernel(), refine)
    }

    /// `(H - z)^{-1} v` by factorization of `H - z`.
    pub fn resolvent_apply(&self, z: ComplexEnergy, v: &CVector) -> Result<CVector> {
        check_dim(self.dim(), v.len())?;
        let b = CMatrix::from_column_slice(v.len(), 1, v.as_slice());
        let x = self.solver(z)?.solve(&b)?;
        Ok(x.column(0).into_owned())
    }

    /// `(H - z)^{-1} B` sharing one factorization across the columns of `B`.
    pub fn resolvent_apply_many(&self, z: ComplexEnergy, b: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim(), b.nrows())?;
        self.solver(z)?.solve(b)
    }

    /// The full resolvent matrix `(H - z)^{-1}`.
    pub fn resolvent(&self, z: ComplexEnergy) -> Result<CMatrix> {
        let n = self.dim();
        self.resolvent_apply_many(z, &CMatrix::identity(n, n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiggingStructure {
    Identity,
    Diagonal,
    General,
}

/// The bounded, invertible factor `F` from the state space to the auxiliary
/// space. In finite dimensions zero kernel and cokernel force `F` square and
/// invertible.
#[derive(Debug, Clone)]
pub struct Rigging {
    entries: CMatrix,
    singular_values: Vec<f64>,
    structure: RiggingStructure,
}

impl Rigging {
    pub fn new(entries: CMatrix) -> Result<Self> {
        check_dim(entries.nrows(), entries.ncols())?;
        let n = entries.nrows();
        let mut singular_values: Vec<f64> = if n == 0 {
            Vec::new()
        } else {
            entries.clone().singular_values().iter().copied().collect()
        };
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let smax = singular_values.first().copied().unwrap_or(0.0);
        let smin = singular_values.last().copied().unwrap_or(0.0);
        if n > 0 && (smin == 0.0 || smin <= n as f64 * f64::EPSILON * smax) {
            return Err(LapError::SingularRigging(smin));
        }
        let structure = if entries == CMatrix::identity(n, n) {
            RiggingStructure::Identity
        } else if linalg::bandwidth(&entries) == 0 {
            RiggingStructure::Diagonal
        } else {
            RiggingStructure::General
        };
        Ok(Rigging {
            entries,
            singular_values,
            structure,
        })
    }

    pub fn identity(n: usize) -> Self {
        Rigging {
            entries: CMatrix::identity(n, n),
            singular_values: vec![1.0; n],
            structure: RiggingStructure::Identity,
        }
    }

    pub fn diagonal(weights: &[C64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&CVector::from_column_slice(weights)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn structure(&self) -> RiggingStructure {
        self.structure
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `‖F‖₂`
    pub fn norm(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn min_singular_value(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn condition_number(&self) -> f64 {
        if self.dim() == 0 {
            1.0
        } else {
            self.norm() / self.min_singular_value()
        }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        match self.structure {
            RiggingStructure::Identity => v.clone(),
            _ => &self.entries * v,
        }
    }

    pub fn adjoint_apply(&self, v: &CVector) -> CVector {
        match self.structure {
            RiggingStructure::Identity => v.clone(),
            _ => self.entries.adjoint() * v,
        }
    }

    /// `F X`
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        match self.structure {
            RiggingStructure::Identity => x.clone(),
            RiggingStructure::Diagonal => {
                CMatrix::from_fn(x.nrows(), x.ncols(), |i, j| self.entries[(i, i)] * x[(i, j)])
            }
            RiggingStructure::General => &self.entries * x,
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        self.entries.adjoint()
    }

    /// `F* K F` for an auxiliary-space matrix `K`.
    pub fn pullback(&self, k: &CMatrix) -> CMatrix {
        match self.structure {
            RiggingStructure::Identity => k.clone(),
            _ => self.entries.adjoint() * k * &self.entries,
        }
    }

    /// `F* F`
    pub fn gram(&self) -> CMatrix {
        let n = self.dim();
        self.pullback(&CMatrix::identity(n, n))
    }

    /// `F^{-1} u` by LU solve.
    pub fn solve(&self, u: &CVector) -> Result<CVector> {
        check_dim(self.dim(), u.len())?;
        match self.structure {
            RiggingStructure::Identity => Ok(u.clone()),
            RiggingStructure::Diagonal => Ok(CVector::from_fn(u.len(), |i, _| u[i] / self.entries[(i, i)])),
            RiggingStructure::General => self
                .entries
                .clone()
                .lu()
                .solve(u)
                .ok_or(LapError::SingularRigging(self.min_singular_value())),
        }
    }
}

/// A bounded self-adjoint operator `J` on the auxiliary space, the direction
/// of the coupling line `H0 + r F*JF`.
#[derive(Debug, Clone)]
pub struct DirectionOperator {
    entries: CMatrix,
}

impl DirectionOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        check_dim(entries.nrows(), entries.ncols())?;
        let (sym, asym) = hermitian_part(&entries);
        if asym > HERMITIAN_INPUT_TOLERANCE {
            return Err(LapError::NotHermitian(asym));
        }
        Ok(DirectionOperator { entries: sym })
    }

    pub fn identity(n: usize) -> Self {
        DirectionOperator {
            entries: CMatrix::identity(n, n),
        }
    }

    pub fn diagonal(weights: &[f64]) -> Self {
        let d = CVector::from_iterator(weights.len(), weights.iter().map(|&w| c64(w, 0.0)));
        DirectionOperator {
            entries: CMatrix::from_diagonal(&d),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        DirectionOperator {
            entries: self.entries.scale(c),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn is_identity(&self) -> bool {
        let n = self.dim();
        self.entries == CMatrix::identity(n, n)
    }
}

pub fn resolvent_apply(h: &HermitianOperator, z: ComplexEnergy, v: &CVector) -> Result<CVector> {
    h.resolvent_apply(z, v)
}

/// `T_z(H) = F (H - z)^{-1} F*`, one factorization shared by the columns of `F*`.
pub fn sandwiched_resolvent(h: &HermitianOperator, f: &Rigging, z: ComplexEnergy) -> Result<CMatrix> {
    check_dim(h.dim(), f.dim())?;
    let n = h.dim();
    let rhs = match f.structure() {
        RiggingStructure::Identity => CMatrix::identity(n, n),
        _ => f.adjoint(),
    };
    let x = h.resolvent_apply_many(z, &rhs)?;
    Ok(f.apply_matrix(&x))
}

/// `H0 + F* K F` for a Hermitian coupling `K` on the auxiliary space.
/// Sparse storage survives when the perturbation does not widen the band.
pub fn coupled_operator(h0: &HermitianOperator, f: &Rigging, coupling: &CMatrix) -> Result<HermitianOperator> {
    check_dim(h0.dim(), f.dim())?;
    check_dim(h0.dim(), coupling.nrows())?;
    let sum = h0.entries() + f.pullback(coupling);
    let (sym, _) = hermitian_part(&sum);
    let storage = if h0.storage_kind() == StorageKind::Sparse && linalg::bandwidth(&sym) <= h0.bandwidth() {
        StorageKind::Sparse
    } else {
        StorageKind::Dense
    };
    Ok(HermitianOperator::from_hermitian(sym, storage))
}

/// `H_r = H0 + r F*F`
pub fn perturbed_operator(h0: &HermitianOperator, f: &Rigging, r: f64) -> HermitianOperator {
    let n = h0.dim();
    coupled_operator(h0, f, &CMatrix::identity(n, n).scale(r)).expect("rigging and operator dimensions agree")
}

/// `H0 + r F*JF`
pub fn perturbed_with_direction(
    h0: &HermitianOperator,
    f: &Rigging,
    r: f64,
    j: &DirectionOperator,
) -> Result<HermitianOperator> {
    coupled_operator(h0, f, &j.entries().scale(r))
}

/// Range of the spectral projection `E_(lo,hi)(H)`.
pub fn spectral_projection(h: &HermitianOperator, lo: f64, hi: f64) -> SubspaceBasis {
    let spec = h.spectral();
    spec.basis_of(&spec.interior_indices(lo, hi))
}

/// Eigenspace for the eigenvalues within `tol` of `lambda`.
pub fn eigenspace(h: &HermitianOperator, lambda: f64, tol: f64) -> SubspaceBasis {
    let spec = h.spectral();
    let idx: Vec<usize> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &e)| (e - lambda).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    spec.basis_of(&idx)
}

/// Default eigenvalue-membership tolerance for [`eigenspace`].
pub fn eigenvalue_tolerance(h: &HermitianOperator) -> f64 {
    1e-8 * h.spectral_radius().max(1.0)
}

/// Relative Frobenius residual of the identity
/// `(w - z) R_w(H0) R_z(H1) = -R_z(H1) + R_w(H0) [1 - V R_z(H1)]`
/// with `V = F*F` and `H1 = H0 + V`, normalized by the sizes of the two
/// right-hand summands.
pub fn check_tricky_equality(
    h0: &HermitianOperator,
    f: &Rigging,
    w: ComplexEnergy,
    z: ComplexEnergy,
) -> Result<f64> {
    let n = h0.dim();
    let v = f.gram();
    let h1 = coupled_operator(h0, f, &CMatrix::identity(n, n))?;
    let rw = h0.resolvent(w)?;
    let rz = h1.resolvent(z)?;
    let lhs = (&rw * &rz) * (w.to_c64() - z.to_c64());
    let bracket = CMatrix::identity(n, n) - &v * &rz;
    let second = &rw * bracket;
    let rhs = &second - &rz;
    let scale = rz.norm() + second.norm();
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).norm() / scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(values: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(values.len(), values.iter().map(|&(a, b)| c64(a, b)))
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn resolvent_of_diagonal() {
        let h = HermitianOperator::diagonal(&[1.0, 2.0]);
        let w = h.resolvent_apply(ComplexEnergy::new(0.0, 1.0), &cv(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        assert!((w - cv(&[(0.5, 0.5), (0.0, 0.0)])).norm() < 1e-15);

        let h = HermitianOperator::diagonal(&[0.0]);
        let w = h.resolvent_apply(ComplexEnergy::real(2.0), &cv(&[(1.0, 0.0)])).unwrap();
        assert!((w[0] - c64(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn real_shift_on_spectrum_is_refused() {
        let h = HermitianOperator::diagonal(&[0.0, 1.0]);
        let err = h.resolvent_apply(ComplexEnergy::real(1.0), &cv(&[(1.0, 0.0), (1.0, 0.0)]));
        assert!(matches!(err, Err(LapError::SingularShift { .. })));
        let err = h.resolvent_apply(ComplexEnergy::new(0.0, 1.0), &cv(&[(1.0, 0.0)]));
        assert!(matches!(err, Err(LapError::DimensionMismatch { .. })));
    }

    #[test]
    fn sandwiched_resolvent_examples() {
        let h = HermitianOperator::diagonal(&[1.0, 2.0]);
        let t = sandwiched_resolvent(&h, &Rigging::identity(2), ComplexEnergy::new(0.0, 1.0)).unwrap();
        let expected = CMatrix::from_diagonal(&cv(&[(0.5, 0.5), (0.4, 0.2)]));
        assert!(close(&t, &expected, 1e-15));

        let h = HermitianOperator::diagonal(&[0.0]);
        let f = Rigging::diagonal(&[c64(2.0, 0.0)]).unwrap();
        let t = sandwiched_resolvent(&h, &f, ComplexEnergy::real(1.0)).unwrap();
        assert!((t[(0, 0)] - c64(-4.0, 0.0)).norm() < 1e-14);

        let h = HermitianOperator::diagonal(&[1.0, 3.0]);
        let f = Rigging::diagonal(&[c64(1.0, 0.0), c64(2.0, 0.0)]).unwrap();
        let t = sandwiched_resolvent(&h, &f, ComplexEnergy::new(2.0, 1.0)).unwrap();
        let expected = CMatrix::from_diagonal(&cv(&[(-0.5, 0.5), (2.0, 2.0)]));
        assert!(close(&t, &expected, 1e-14));
    }

    #[test]
    fn perturbed_operator_examples() {
        let h0 = HermitianOperator::diagonal(&[0.0, 1.0]);
        let f = Rigging::identity(2);
        let h = perturbed_operator(&h0, &f, 0.5);
        assert!(close(h.entries(), HermitianOperator::diagonal(&[0.5, 1.5]).entries(), 1e-15));
        assert_eq!(h.storage_kind(), StorageKind::Sparse);
        let same = perturbed_operator(&h0, &f, 0.0);
        assert!(close(same.entries(), h0.entries(), 0.0));

        let h0 = HermitianOperator::diagonal(&[0.0]);
        let f = Rigging::diagonal(&[c64(2.0, 0.0)]).unwrap();
        assert!((perturbed_operator(&h0, &f, 0.5).entries()[(0, 0)] - c64(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spectral_projection_examples() {
        let h = HermitianOperator::diagonal(&[1.0, 2.0, 3.0]);
        let p = spectral_projection(&h, 1.5, 2.5);
        assert_eq!(p.dim(), 1);
        assert!((p.column(0)[1].norm() - 1.0).abs() < 1e-15);
        let h = HermitianOperator::diagonal(&[1.0, 1.0, 3.0]);
        assert_eq!(spectral_projection(&h, 0.0, 2.0).dim(), 2);
        assert_eq!(spectral_projection(&h, 10.0, 11.0).dim(), 0);
        // Endpoint eigenvalues are excluded.
        assert_eq!(spectral_projection(&h, 1.0, 3.0).dim(), 0);
    }

    #[test]
    fn resolvent_identity_small_case() {
        let h0 = HermitianOperator::diagonal(&[1.0, 2.0]);
        let res = check_tricky_equality(
            &h0,
            &Rigging::identity(2),
            ComplexEnergy::new(0.0, 1.0),
            ComplexEnergy::new(0.0, 2.0),
        )
        .unwrap();
        assert!(res <= 1e-12, "{res}");
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(LapError::NotHermitian(_))));
    }

    #[test]
    fn singular_rigging_is_rejected() {
        assert!(matches!(
            Rigging::diagonal(&[c64(1.0, 0.0), c64(0.0, 0.0)]),
            Err(LapError::SingularRigging(_))
        ));
        let f = Rigging::diagonal(&[c64(1.0, 0.0), c64(2.0, 0.0)]).unwrap();
        assert!((f.condition_number() - 2.0).abs() < 1e-14);
    }
}
