//! Coupling resonances: the values `r` with `λ ∈ spec(H0 + r F*F)`.
//!
//! They are `r = -μ` for the eigenvalues `μ` of the definite pencil
//! `(H0 - λ)χ = μ F*F χ`, reduced to the Hermitian matrix
//! `C = F^{-*} (H0 - λ) F^{-1}` (two LU solves, no explicit inverse).

use serde::Serialize;

use crate::error::{LapError, Result};
use crate::linalg::{c64, hermitian_part, CMatrix, CVector};
use crate::operator::{perturbed_operator, HermitianOperator, Rigging, SpectralDecomposition};

/// Number of candidates tried by [`pick_nonresonant_r`].
pub const MAX_CANDIDATES: usize = 64;

const DEDUP_TOLERANCE: f64 = 1e-10;
const CERTIFICATE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceSet {
    pub lambda: f64,
    /// Ascending, deduplicated.
    pub values: Vec<f64>,
    /// `‖(H_r - λ)χ‖ / ‖χ‖` for the pencil eigenvector(s) behind each value.
    pub residual_norms: Vec<f64>,
    /// How many pencil eigenvalues collapsed onto each value.
    pub multiplicities: Vec<usize>,
    /// Pencil eigenvalues dropped because their certificate failed.
    pub discarded: Vec<f64>,
    /// `max(1, ρ(H0))`, the unit for margins and certificates.
    pub scale: f64,
}

impl ResonanceSet {
    pub fn distance_to(&self, r: f64) -> f64 {
        self.values
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min((r - v).abs()))
    }
}

/// `G^{-1} A G^{-*}` for `G = F*`, symmetrized.
fn congruence(f: &Rigging, a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let lu = f.adjoint().lu();
    let y = lu
        .solve(a)
        .ok_or(LapError::SingularRigging(f.min_singular_value()))?;
    let c = lu
        .solve(&y.adjoint())
        .ok_or(LapError::SingularRigging(f.min_singular_value()))?
        .adjoint();
    debug_assert_eq!(c.nrows(), n);
    Ok(hermitian_part(&c).0)
}

pub fn resonance_set(h0: &HermitianOperator, f: &Rigging, lambda: f64) -> Result<ResonanceSet> {
    crate::error::check_dim(h0.dim(), f.dim())?;
    let n = h0.dim();
    let scale = h0.spectral_radius().max(1.0);
    let mut shifted = h0.entries().clone();
    for i in 0..n {
        shifted[(i, i)] -= c64(lambda, 0.0);
    }
    let c = congruence(f, &shifted)?;
    let pencil = SpectralDecomposition::of_hermitian(&c);

    let max_mu = pencil.eigenvalues.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let dedup = DEDUP_TOLERANCE * (1.0 + max_mu);

    // Clusters of ascending r = -μ.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (-pencil.eigenvalues[a]).total_cmp(&(-pencil.eigenvalues[b])));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let r = -pencil.eigenvalues[i];
        if !r.is_finite() {
            continue;
        }
        match clusters.last_mut() {
            Some(cl) if (r + pencil.eigenvalues[*cl.last().expect("nonempty")]).abs() <= dedup => cl.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    let mut set = ResonanceSet {
        lambda,
        values: Vec::new(),
        residual_norms: Vec::new(),
        multiplicities: Vec::new(),
        discarded: pencil
            .eigenvalues
            .iter()
            .filter(|m| !m.is_finite())
            .map(|m| -m)
            .collect(),
        scale,
    };
    for cl in clusters {
        let r = -cl.iter().map(|&i| pencil.eigenvalues[i]).sum::<f64>() / cl.len() as f64;
        let hr = perturbed_operator(h0, f, r);
        let mut residual = 0.0f64;
        for &i in &cl {
            let w: CVector = pencil.eigenvectors.column(i).into_owned();
            let chi = f.solve(&w)?;
            let res = hr.apply(&chi) - &chi * c64(lambda, 0.0);
            residual = residual.max(res.norm() / chi.norm());
        }
        if residual <= CERTIFICATE_TOLERANCE * scale {
            set.values.push(r);
            set.residual_norms.push(residual);
            set.multiplicities.push(cl.len());
        } else {
            set.discarded.push(r);
        }
    }
    Ok(set)
}

/// `margin·max(1, ρ(H0))`
pub fn nonresonance_distance(h0: &HermitianOperator, margin: f64) -> f64 {
    margin * h0.spectral_radius().max(1.0)
}

pub fn is_resonant(h0: &HermitianOperator, f: &Rigging, lambda: f64, r: f64, margin: f64) -> Result<bool> {
    let set = resonance_set(h0, f, lambda)?;
    Ok(set.distance_to(r) < margin * set.scale)
}

/// `1, -1, 2, -2, 1/2, -1/2, 3, -3, 1/3, -1/3, …`
pub fn candidate_sequence() -> impl Iterator<Item = f64> {
    [1.0, -1.0].into_iter().chain((2..).flat_map(|k| {
        let k = k as f64;
        [k, -k, 1.0 / k, -1.0 / k]
    }))
}

/// First candidate at distance at least `margin·max(1, ρ(H0))` from every
/// resonance.
pub fn pick_from_set(set: &ResonanceSet, margin: f64) -> Result<f64> {
    if !(margin > 0.0) {
        return Err(LapError::InvalidSpec(format!("margin {margin} must be positive")));
    }
    let d = margin * set.scale;
    candidate_sequence()
        .take(MAX_CANDIDATES)
        .find(|&r| set.distance_to(r) >= d)
        .ok_or(LapError::ExhaustedCandidates(MAX_CANDIDATES))
}

pub fn pick_nonresonant_r(h0: &HermitianOperator, f: &Rigging, lambda: f64, margin: f64) -> Result<f64> {
    pick_from_set(&resonance_set(h0, f, lambda)?, margin)
}

/// The first `count` candidates that keep the margin, in sequence order.
pub fn nonresonant_candidates(set: &ResonanceSet, margin: f64, count: usize) -> Vec<f64> {
    let d = margin * set.scale;
    candidate_sequence()
        .take(MAX_CANDIDATES)
        .filter(|&r| set.distance_to(r) >= d)
        .take(count)
        .collect()
}

/// Lower bound on `min_k |eig_k(H_r) - λ|` implied by keeping distance
/// `margin·max(1, ρ)` from every resonance, in the form
/// `margin / (2·cond(F)²)`. It follows from
/// `σ_min(H_r - λ) ≥ σ_min(F)²·min_k |r - r_k|` whenever `‖F‖² ≥ 1/2`.
pub fn certified_gap(f: &Rigging, margin: f64) -> f64 {
    margin / (2.0 * f.condition_number().powi(2))
}
