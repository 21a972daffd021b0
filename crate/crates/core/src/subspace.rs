//! Orthonormal bases of computed subspaces and the distances between them.

use serde::Serialize;

use crate::error::{LapError, Result};
use crate::linalg::{spectral_norm, CMatrix, CVector};

/// Rank gaps below this make the kernel dimension ambiguous.
pub const MIN_RANK_GAP: f64 = 10.0;

/// Orthonormal basis of a subspace of `C^n`, with the diagnostics of the
/// computation that produced it.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    /// `n × k` matrix with orthonormal columns.
    pub vectors: CMatrix,
    /// Singular values of the defining operator, descending. Empty when the
    /// subspace did not come from a null-space computation.
    pub singular_values: Vec<f64>,
    /// Absolute cut used to separate the kernel.
    pub threshold: f64,
    /// Smallest singular value kept out over the largest one kept in;
    /// `+inf` when the split is clean.
    pub rank_gap: f64,
    /// Largest `‖M v‖` over basis vectors `v` of a kernel of `M`.
    pub max_residual: f64,
    pub ill_conditioned: bool,
}

impl SubspaceBasis {
    pub fn empty(ambient: usize) -> Self {
        Self::from_orthonormal(CMatrix::zeros(ambient, 0))
    }

    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal(vectors: CMatrix) -> Self {
        SubspaceBasis {
            vectors,
            singular_values: Vec::new(),
            threshold: 0.0,
            rank_gap: f64::INFINITY,
            max_residual: 0.0,
            ill_conditioned: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn column(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &CVector) -> CVector {
        if self.is_empty() {
            return CVector::zeros(v.len());
        }
        &self.vectors * (self.vectors.adjoint() * v)
    }

    /// `‖v - P v‖ / ‖v‖`
    pub fn projection_residual(&self, v: &CVector) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (v - self.project(v)).norm() / norm
    }

    /// `‖Q*Q - I‖_F`
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        (self.vectors.adjoint() * &self.vectors - CMatrix::identity(k, k)).norm()
    }

    pub fn to_record(&self) -> SubspaceRecord {
        SubspaceRecord {
            dimension: self.dim(),
            ambient_dimension: self.ambient_dim(),
            singular_values: self.singular_values.clone(),
            threshold: self.threshold,
            rank_gap: self.rank_gap.is_finite().then_some(self.rank_gap),
            ill_conditioned: self.ill_conditioned,
            vectors: self
                .vectors
                .column_iter()
                .map(|c| c.iter().flat_map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

/// JSON form of a [`SubspaceBasis`]; vectors are interleaved `re, im` arrays
/// and a `null` rank gap means a clean split.
#[derive(Debug, Clone, Serialize)]
pub struct SubspaceRecord {
    pub dimension: usize,
    pub ambient_dimension: usize,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub rank_gap: Option<f64>,
    pub ill_conditioned: bool,
    pub vectors: Vec<Vec<f64>>,
}

/// SVD of `m` as `(σ, U, V)` with columns sorted by descending singular value.
/// Wide inputs are padded with zero rows.
fn sorted_svd(m: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let n = m.ncols();
    let padded = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| v_t.row(i).adjoint())
            .collect::<Vec<_>>(),
    );
    let u = CMatrix::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    (values, u, v)
}

/// Numerical null space of `m`: right singular vectors whose singular value
/// is at most `rel_tol · σ_max`.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> SubspaceBasis {
    let n = m.ncols();
    if n == 0 {
        return SubspaceBasis::empty(0);
    }
    let (values, _, v) = sorted_svd(m);
    let sigma_max = values.first().copied().unwrap_or(0.0);
    let threshold = rel_tol * sigma_max;
    let rank = values.iter().filter(|&&s| s > threshold).count();
    let kernel = v.columns(rank, n - rank).into_owned();

    let rank_gap = if rank == 0 || rank == n {
        f64::INFINITY
    } else {
        let kept_in = values[rank];
        if kept_in == 0.0 {
            f64::INFINITY
        } else {
            values[rank - 1] / kept_in
        }
    };
    let max_residual = kernel
        .column_iter()
        .map(|c| (m * c).norm())
        .fold(0.0f64, f64::max);
    SubspaceBasis {
        vectors: kernel,
        singular_values: values,
        threshold,
        rank_gap,
        max_residual,
        ill_conditioned: rank_gap < MIN_RANK_GAP,
    }
}

/// Orthonormal basis of the column span of `m`, dropping directions whose
/// singular value is below `rel_tol · σ_max`.
pub fn orthonormalize(m: &CMatrix, rel_tol: f64) -> SubspaceBasis {
    if m.ncols() == 0 || m.nrows() == 0 {
        return SubspaceBasis::empty(m.nrows());
    }
    // Left singular vectors of m are the right singular vectors of m*.
    let (values, _, v) = sorted_svd(&m.adjoint());
    let sigma_max = values.first().copied().unwrap_or(0.0);
    let rank = values
        .iter()
        .filter(|&&s| s > 0.0 && s > rel_tol * sigma_max)
        .count();
    SubspaceBasis::from_orthonormal(v.columns(0, rank).into_owned())
}

/// Largest principal angle between two subspaces of equal dimension,
/// computed as `asin ‖(I - P_a) Q_b‖₂` so that small angles keep full
/// relative accuracy. Both empty gives 0.
pub fn max_principal_angle(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(LapError::DimensionMismatch {
            expected: a.ambient_dim(),
            found: b.ambient_dim(),
        });
    }
    if a.dim() != b.dim() {
        return Err(LapError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(containment_angle(b, a))
}

/// Largest angle between a vector of `inner` and the subspace `outer`.
/// Zero iff `inner ⊂ outer`; `π/2` when `outer` is empty and `inner` is not.
pub fn containment_angle(inner: &SubspaceBasis, outer: &SubspaceBasis) -> f64 {
    if inner.is_empty() {
        return 0.0;
    }
    if outer.is_empty() {
        return std::f64::consts::FRAC_PI_2;
    }
    let q = &inner.vectors;
    let p = &outer.vectors;
    let rejected = q - p * (p.adjoint() * q);
    spectral_norm(&rejected).min(1.0).asin()
}

/// Principal angles via the cosines `σ(Q_a* Q_b)`, ascending.
pub fn principal_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let prod: CMatrix = a.vectors.adjoint() * &b.vectors;
    let mut angles: Vec<f64> = prod
        .singular_values()
        .iter()
        .map(|&c| c.min(1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}
