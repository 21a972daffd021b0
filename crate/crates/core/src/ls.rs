//! The homogeneous Lippmann–Schwinger equation
//! `(1 - r T_{λ+i0}(H0 + r F*JF) J) u = 0` and its solution space.
//!
//! `T_{λ+i0}` is the probe's (possibly extrapolated) limit estimate. The
//! kernel is read off an SVD of `M = 1 - r T J` with the cut `rank_tol·σ_max`.
//! For invertible `F`, `M = F R(H_r) (H0 - λ) F^{-1}` at `y = 0`, so the
//! kernel is `F·ker(H0 - λ)` and bound states are recovered as `χ = F^{-1} u`.

use serde::Serialize;

use crate::error::{check_dim, LapError, Result};
use crate::linalg::{c64, CMatrix, CVector};
use crate::operator::{coupled_operator, DirectionOperator, HermitianOperator, Rigging};
use crate::probe::{probe_limit, LapProbeResult, YLadder, DEFAULT_PROBE_TOL};
use crate::resonance::candidate_sequence;
use crate::subspace::{max_principal_angle, null_space, SubspaceBasis};

/// Default relative rank tolerance, `100·n·ε`.
pub fn default_rank_tol(n: usize) -> f64 {
    100.0 * n.max(1) as f64 * f64::EPSILON
}

/// Candidates tried per direction by [`regular_coupling`].
const DIRECTION_CANDIDATES: usize = 16;

#[derive(Debug, Clone)]
pub struct LsProblem {
    pub h0: HermitianOperator,
    pub rigging: Rigging,
    pub lambda: f64,
    pub r: f64,
    pub direction: DirectionOperator,
    pub ladder: YLadder,
    pub probe_tol: f64,
    /// Relative: singular values up to `rank_tol·σ_max` count as kernel.
    pub rank_tol: f64,
}

impl LsProblem {
    /// Identity direction, default ladder and tolerances.
    pub fn new(h0: HermitianOperator, rigging: Rigging, lambda: f64, r: f64) -> Result<Self> {
        check_dim(h0.dim(), rigging.dim())?;
        let n = h0.dim();
        Ok(LsProblem {
            h0,
            rigging,
            lambda,
            r,
            direction: DirectionOperator::identity(n),
            ladder: YLadder::default(),
            probe_tol: DEFAULT_PROBE_TOL,
            rank_tol: default_rank_tol(n),
        })
    }

    pub fn with_direction(mut self, direction: DirectionOperator) -> Result<Self> {
        check_dim(self.h0.dim(), direction.dim())?;
        self.direction = direction;
        Ok(self)
    }

    pub fn with_r(&self, r: f64) -> Self {
        LsProblem { r, ..self.clone() }
    }

    pub fn with_ladder(mut self, ladder: YLadder) -> Self {
        self.ladder = ladder;
        self
    }

    pub fn with_rank_tol(mut self, rank_tol: f64) -> Self {
        self.rank_tol = rank_tol;
        self
    }

    pub fn with_probe_tol(mut self, probe_tol: f64) -> Self {
        self.probe_tol = probe_tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// `K = rJ`
    pub fn coupling(&self) -> CMatrix {
        self.direction.entries().scale(self.r)
    }

    /// `H0 + F* K F`
    pub fn coupled(&self) -> Result<HermitianOperator> {
        coupled_operator(&self.h0, &self.rigging, &self.coupling())
    }
}

#[derive(Debug, Clone)]
pub struct LsSolution {
    pub coupled: HermitianOperator,
    pub probe: LapProbeResult,
    /// `T_{λ+i0}(H0 + F*KF)`
    pub boundary_value: CMatrix,
    /// `M = 1 - T_{λ+i0} K`
    pub matrix: CMatrix,
    pub kernel: SubspaceBasis,
}

impl LsSolution {
    /// `‖M u‖ / ‖u‖`
    pub fn equation_residual(&self, u: &CVector) -> f64 {
        let norm = u.norm();
        if norm == 0.0 {
            0.0
        } else {
            (&self.matrix * u).norm() / norm
        }
    }
}

fn ls_parts(p: &LsProblem) -> Result<(HermitianOperator, LapProbeResult, CMatrix, CMatrix)> {
    if !(p.rank_tol > 0.0) {
        return Err(LapError::InvalidSpec(format!("rank_tol {} must be positive", p.rank_tol)));
    }
    let coupled = p.coupled()?;
    let probe = probe_limit(&coupled, &p.rigging, p.lambda, &p.ladder, p.probe_tol);
    let t = match &probe.limit_estimate {
        Some(t) => t.clone(),
        None => {
            return Err(LapError::ResonantCoupling {
                r: p.r,
                lambda: p.lambda,
            })
        }
    };
    let n = p.dim();
    let m = CMatrix::identity(n, n) - &t * p.coupling();
    Ok((coupled, probe, t, m))
}

/// `M = 1 - r T_{λ+i0}(H0 + r F*JF) J`
pub fn ls_matrix(p: &LsProblem) -> Result<CMatrix> {
    Ok(ls_parts(p)?.3)
}

pub fn solve(p: &LsProblem) -> Result<LsSolution> {
    let (coupled, probe, boundary_value, matrix) = ls_parts(p)?;
    let kernel = null_space(&matrix, p.rank_tol);
    Ok(LsSolution {
        coupled,
        probe,
        boundary_value,
        matrix,
        kernel,
    })
}

/// Kernel of [`ls_matrix`]; `ill_conditioned` is set when the rank gap is
/// below 10.
pub fn upsilon_space(p: &LsProblem) -> Result<SubspaceBasis> {
    Ok(solve(p)?.kernel)
}

fn pairwise_max_angle(kernels: &[SubspaceBasis]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in kernels.iter().enumerate() {
        for b in &kernels[i + 1..] {
            worst = worst.max(max_principal_angle(a, b)?);
        }
    }
    Ok(worst)
}

/// Largest principal angle between the kernels at `p.r` and at each
/// alternative coupling.
pub fn check_r_independence(p: &LsProblem, r_alternatives: &[f64]) -> Result<f64> {
    let mut kernels = vec![upsilon_space(p)?];
    for &r in r_alternatives {
        kernels.push(upsilon_space(&p.with_r(r))?);
    }
    pairwise_max_angle(&kernels)
}

/// A coupling at which the direction `j` yields a boundary value: `p.r`
/// first, then the standard candidate sequence.
pub fn regular_coupling(p: &LsProblem, j: &DirectionOperator) -> Result<f64> {
    let base = p.clone().with_direction(j.clone())?;
    let tries = std::iter::once(p.r).chain(candidate_sequence().filter(|&r| r != p.r));
    for r in tries.take(DIRECTION_CANDIDATES) {
        let q = base.with_r(r);
        let coupled = q.coupled()?;
        if probe_limit(&coupled, &q.rigging, q.lambda, &q.ladder, q.probe_tol).is_limit() {
            return Ok(r);
        }
    }
    Err(LapError::NotRegularDirection {
        index: 0,
        lambda: p.lambda,
    })
}

/// Largest principal angle between the kernel for `(p.r, p.direction)` and
/// the kernels for each alternative direction at a regular coupling.
pub fn check_j_independence(p: &LsProblem, j_alternatives: &[DirectionOperator]) -> Result<f64> {
    let mut kernels = vec![upsilon_space(p)?];
    for (index, j) in j_alternatives.iter().enumerate() {
        let r = regular_coupling(p, j).map_err(|e| match e {
            LapError::NotRegularDirection { lambda, .. } => LapError::NotRegularDirection { index, lambda },
            other => other,
        })?;
        kernels.push(upsilon_space(&p.clone().with_direction(j.clone())?.with_r(r))?);
    }
    pairwise_max_angle(&kernels)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundState {
    #[serde(skip)]
    pub state: CVector,
    /// `‖H0 χ - λ χ‖ / ‖χ‖`
    pub eigen_residual: f64,
}

/// `χ = F^{-1} u` for a kernel vector `u` of a solved problem.
pub fn bound_state(p: &LsProblem, solution: &LsSolution, u: &CVector) -> Result<BoundState> {
    check_dim(p.dim(), u.len())?;
    let residual = solution.equation_residual(u);
    let sigma_max = solution.kernel.singular_values.first().copied().unwrap_or(0.0);
    let tolerance = p.rank_tol * sigma_max;
    if residual > tolerance {
        return Err(LapError::NotInKernel { residual, tolerance });
    }
    let chi = p.rigging.solve(u)?;
    let norm = chi.norm();
    let eigen_residual = if norm == 0.0 {
        0.0
    } else {
        (p.h0.apply(&chi) - &chi * c64(p.lambda, 0.0)).norm() / norm
    };
    Ok(BoundState {
        state: chi,
        eigen_residual,
    })
}

pub fn extract_bound_state(u: &CVector, p: &LsProblem) -> Result<BoundState> {
    bound_state(p, &solve(p)?, u)
}
