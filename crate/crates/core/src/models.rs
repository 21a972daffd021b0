//! Deterministic operator, rigging and direction fixtures.

use serde::{Deserialize, Serialize};

use crate::error::{LapError, Result};
use crate::linalg::{c64, hermitian_part, CMatrix, CVector};
use crate::operator::{DirectionOperator, HermitianOperator, Rigging};
use crate::rng::{EntryStream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Diagonal,
    RandomHermitian,
    Jacobi,
    Anderson,
    PlantedEigenvalue,
}

/// Kind-specific parameters; each kind reads only its own fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// `diagonal`: the diagonal entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// `jacobi`: on-site potential (zeros when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
    /// `anderson`: disorder strength `W`; potential is uniform on `[-W/2, W/2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<f64>,
    /// `planted_eigenvalue`: the planted eigenvalue.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<usize>,
    /// `planted_eigenvalue`: minimum distance of the other eigenvalues from `lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// `planted_eigenvalue`: the other eigenvalues lie in `gap + [0, width)` on either side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// `random_hermitian`: overall scale (spectrum roughly in `[-2, 2]·scale`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub size: usize,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn diagonal(values: &[f64]) -> Self {
        ModelSpec {
            kind: ModelKind::Diagonal,
            size: values.len(),
            params: ModelParams {
                values: Some(values.to_vec()),
                ..Default::default()
            },
            seed: 0,
        }
    }

    pub fn planted(size: usize, lambda: f64, multiplicity: usize, gap: f64, seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::PlantedEigenvalue,
            size,
            params: ModelParams {
                lambda: Some(lambda),
                multiplicity: Some(multiplicity),
                gap: Some(gap),
                ..Default::default()
            },
            seed,
        }
    }

    pub fn anderson(size: usize, disorder: f64, seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::Anderson,
            size,
            params: ModelParams {
                disorder: Some(disorder),
                ..Default::default()
            },
            seed,
        }
    }

    pub fn random_hermitian(size: usize, seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::RandomHermitian,
            size,
            params: ModelParams::default(),
            seed,
        }
    }
}

fn invalid(msg: impl Into<String>) -> LapError {
    LapError::InvalidSpec(msg.into())
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal folded into `Q`.
pub fn haar_unitary(n: usize, seed: u64, stream: Stream) -> CMatrix {
    let mut s = EntryStream::new(seed, stream);
    let g = CMatrix::from_fn(n, n, |i, j| s.complex_normal((i * n + j) as u64));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `Q diag(values) Q*`, symmetrized.
fn conjugated_diagonal(q: &CMatrix, values: &[f64]) -> CMatrix {
    let n = values.len();
    let scaled = CMatrix::from_fn(n, n, |i, j| q[(i, j)] * values[j]);
    hermitian_part(&(scaled * q.adjoint())).0
}

/// Planted spectrum: `multiplicity` copies of `lambda` followed by values at
/// distance `gap + width·u` on a random side.
pub fn planted_spectrum(spec: &ModelSpec) -> Result<Vec<f64>> {
    let p = &spec.params;
    let lambda = p.lambda.ok_or_else(|| invalid("planted_eigenvalue needs params.lambda"))?;
    let m = p.multiplicity.unwrap_or(1);
    let gap = p.gap.unwrap_or(0.5);
    let width = p.width.unwrap_or(2.0);
    if m == 0 || m > spec.size {
        return Err(invalid(format!(
            "multiplicity {m} must lie in 1..={} (the size)",
            spec.size
        )));
    }
    if !(gap > 0.0) || !(width >= 0.0) {
        return Err(invalid("planted_eigenvalue needs gap > 0 and width >= 0"));
    }
    let mut s = EntryStream::new(spec.seed, Stream::PlantedSpectrum);
    let mut values = vec![lambda; m];
    for k in m..spec.size {
        let (side, offset) = s.uniform_pair(k as u64);
        let d = gap + width * offset;
        values.push(if side < 0.5 { lambda - d } else { lambda + d });
    }
    Ok(values)
}

pub fn build_operator(spec: &ModelSpec) -> Result<HermitianOperator> {
    let n = spec.size;
    if n == 0 {
        return Err(invalid("size must be positive"));
    }
    let p = &spec.params;
    match spec.kind {
        ModelKind::Diagonal => {
            let values = p.values.as_ref().ok_or_else(|| invalid("diagonal needs params.values"))?;
            if values.len() != n {
                return Err(invalid(format!("diagonal has {} values for size {n}", values.len())));
            }
            Ok(HermitianOperator::diagonal(values))
        }
        ModelKind::Jacobi => {
            let potential = p.potential.clone().unwrap_or_else(|| vec![0.0; n]);
            if potential.len() != n {
                return Err(invalid(format!("jacobi has {} potential values for size {n}", potential.len())));
            }
            HermitianOperator::tridiagonal(&potential, &vec![1.0; n - 1])
        }
        ModelKind::Anderson => {
            let w = p.disorder.unwrap_or(1.0);
            if !(w >= 0.0) {
                return Err(invalid("anderson disorder must be non-negative"));
            }
            let mut s = EntryStream::new(spec.seed, Stream::AndersonPotential);
            let potential: Vec<f64> = (0..n).map(|i| w * (s.uniform(i as u64) - 0.5)).collect();
            HermitianOperator::tridiagonal(&potential, &vec![1.0; n - 1])
        }
        ModelKind::RandomHermitian => {
            let scale = p.scale.unwrap_or(1.0) / (n as f64).sqrt();
            let mut s = EntryStream::new(spec.seed, Stream::HermitianEntries);
            let mut m = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let g = s.complex_normal((i * n + j) as u64);
                    if i == j {
                        m[(i, i)] = c64(g.re * std::f64::consts::SQRT_2 * scale, 0.0);
                    } else {
                        m[(i, j)] = g * scale;
                        m[(j, i)] = g.conj() * scale;
                    }
                }
            }
            HermitianOperator::new(m)
        }
        ModelKind::PlantedEigenvalue => {
            let values = planted_spectrum(spec)?;
            let q = haar_unitary(n, spec.seed, Stream::PlantedUnitary);
            HermitianOperator::new(conjugated_diagonal(&q, &values))
        }
    }
}

/// The planted eigenvectors (first `multiplicity` columns of the unitary).
pub fn planted_eigenvectors(spec: &ModelSpec) -> Result<CMatrix> {
    let m = spec.params.multiplicity.unwrap_or(1);
    planted_spectrum(spec)?;
    Ok(haar_unitary(spec.size, spec.seed, Stream::PlantedUnitary)
        .columns(0, m)
        .into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiggingKind {
    Identity,
    DiagonalWeights,
    RandomWellConditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiggingSpec {
    pub kind: RiggingKind,
    /// Defaults to the operator dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Upper bound on the condition number for `random_well_conditioned`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_bound: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl RiggingSpec {
    pub fn identity() -> Self {
        RiggingSpec {
            kind: RiggingKind::Identity,
            size: None,
            weights: None,
            condition_bound: None,
            seed: 0,
        }
    }

    pub fn random(condition_bound: f64, seed: u64) -> Self {
        RiggingSpec {
            kind: RiggingKind::RandomWellConditioned,
            size: None,
            weights: None,
            condition_bound: Some(condition_bound),
            seed,
        }
    }
}

/// Builds a rigging of dimension `dim`; a `size` in the spec must agree.
pub fn build_rigging(spec: &RiggingSpec, dim: usize) -> Result<Rigging> {
    if let Some(size) = spec.size {
        if size != dim {
            return Err(LapError::DimensionMismatch {
                expected: dim,
                found: size,
            });
        }
    }
    match spec.kind {
        RiggingKind::Identity => Ok(Rigging::identity(dim)),
        RiggingKind::DiagonalWeights => {
            let w = spec
                .weights
                .as_ref()
                .ok_or_else(|| invalid("diagonal_weights needs weights"))?;
            if w.len() != dim {
                return Err(invalid(format!("{} weights for dimension {dim}", w.len())));
            }
            if let Some(bad) = w.iter().find(|&&x| !(x > 0.0)) {
                return Err(invalid(format!("rigging weight {bad} is not positive")));
            }
            Rigging::diagonal(&w.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>())
        }
        RiggingKind::RandomWellConditioned => {
            let bound = spec.condition_bound.unwrap_or(10.0);
            if !(bound >= 1.0) {
                return Err(invalid(format!("condition bound {bound} is below 1")));
            }
            let u = haar_unitary(dim, spec.seed, Stream::RiggingLeft);
            let v = haar_unitary(dim, spec.seed, Stream::RiggingRight);
            let mut s = EntryStream::new(spec.seed, Stream::RiggingSpectrum);
            // Singular values bound^t, t uniform in [0, 1): condition < bound.
            let sigma: Vec<f64> = (0..dim).map(|k| bound.powf(s.uniform(k as u64))).collect();
            let us = CMatrix::from_fn(dim, dim, |i, j| u[(i, j)] * sigma[j]);
            Rigging::new(us * v.adjoint())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionSpec {
    Identity,
    Scaled { factor: f64 },
    Diagonal { weights: Vec<f64> },
    /// `U diag(d) U*` with Haar `U`; `d` uniform in `[0.5, 2)`, negated on a
    /// random half of the entries when `indefinite`.
    Random {
        seed: u64,
        #[serde(default)]
        indefinite: bool,
    },
}

pub fn build_direction(spec: &DirectionSpec, dim: usize) -> Result<DirectionOperator> {
    match spec {
        DirectionSpec::Identity => Ok(DirectionOperator::identity(dim)),
        DirectionSpec::Scaled { factor } => Ok(DirectionOperator::identity(dim).scaled(*factor)),
        DirectionSpec::Diagonal { weights } => {
            if weights.len() != dim {
                return Err(invalid(format!("{} direction weights for dimension {dim}", weights.len())));
            }
            Ok(DirectionOperator::diagonal(weights))
        }
        DirectionSpec::Random { seed, indefinite } => {
            let u = haar_unitary(dim, *seed, Stream::Direction);
            let mut s = EntryStream::new(*seed, Stream::Direction);
            // Entries past n² on the same stream carry the spectrum.
            let base = (dim * dim) as u64;
            let d: Vec<f64> = (0..dim)
                .map(|k| {
                    let (a, b) = s.uniform_pair(base + k as u64);
                    let mag = 0.5 + 1.5 * a;
                    if *indefinite && b < 0.5 {
                        -mag
                    } else {
                        mag
                    }
                })
                .collect();
            DirectionOperator::new(conjugated_diagonal(&u, &d))
        }
    }
}

/// Seeded unit vector in `C^n`.
pub fn random_unit_vector(n: usize, seed: u64) -> CVector {
    let mut s = EntryStream::new(seed, Stream::Combination);
    let v = CVector::from_fn(n, |i, _| s.complex_normal(i as u64));
    let norm = v.norm();
    v.unscale(norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_model() {
        let h = build_operator(&ModelSpec::diagonal(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(h.eigenvalues(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_path_graph_spectrum() {
        let spec = ModelSpec {
            kind: ModelKind::Jacobi,
            size: 3,
            params: ModelParams::default(),
            seed: 0,
        };
        let h = build_operator(&spec).unwrap();
        // 2cos(kπ/4), k = 3, 2, 1
        let expected = [-(2.0f64.sqrt()), 0.0, 2.0f64.sqrt()];
        for (e, x) in h.eigenvalues().iter().zip(expected) {
            assert!((e - x).abs() < 1e-14);
        }
    }

    #[test]
    fn anderson_potential_within_disorder() {
        let h = build_operator(&ModelSpec::anderson(50, 2.0, 5)).unwrap();
        for i in 0..50 {
            assert!(h.entries()[(i, i)].re.abs() <= 1.0);
        }
        assert_eq!(h.bandwidth(), 1);
    }

    #[test]
    fn planted_multiplicity() {
        let spec = ModelSpec::planted(20, 0.0, 2, 0.5, 11);
        let h = build_operator(&spec).unwrap();
        let near: Vec<f64> = h.eigenvalues().iter().copied().filter(|e| e.abs() < 1e-10).collect();
        assert_eq!(near.len(), 2);
        assert!(h.eigenvalues().iter().all(|e| e.abs() < 1e-10 || e.abs() >= 0.5 - 1e-10));
        let v = planted_eigenvectors(&spec).unwrap();
        for c in v.column_iter() {
            let c = c.into_owned();
            assert!(h.apply(&c).norm() <= 1e-10);
        }
    }

    #[test]
    fn planted_rejects_excess_multiplicity() {
        let spec = ModelSpec::planted(3, 0.0, 4, 0.5, 1);
        assert!(matches!(build_operator(&spec), Err(LapError::InvalidSpec(_))));
    }

    #[test]
    fn builds_are_bit_identical() {
        for spec in [
            ModelSpec::planted(12, 0.3, 2, 0.5, 9),
            ModelSpec::random_hermitian(10, 4),
            ModelSpec::anderson(15, 3.0, 2),
        ] {
            let a = build_operator(&spec).unwrap();
            let b = build_operator(&spec).unwrap();
            assert_eq!(a.entries(), b.entries());
        }
        let f1 = build_rigging(&RiggingSpec::random(10.0, 3), 8).unwrap();
        let f2 = build_rigging(&RiggingSpec::random(10.0, 3), 8).unwrap();
        assert_eq!(f1.entries(), f2.entries());
    }

    #[test]
    fn rigging_examples() {
        let f = build_rigging(&RiggingSpec::identity(), 4).unwrap();
        assert_eq!(f.condition_number(), 1.0);
        let spec = RiggingSpec {
            kind: RiggingKind::DiagonalWeights,
            size: Some(2),
            weights: Some(vec![1.0, 2.0]),
            condition_bound: None,
            seed: 0,
        };
        assert!((build_rigging(&spec, 2).unwrap().condition_number() - 2.0).abs() < 1e-14);
        let bad = RiggingSpec {
            weights: Some(vec![1.0, 0.0]),
            ..spec
        };
        assert!(matches!(build_rigging(&bad, 2), Err(LapError::InvalidSpec(_))));
    }

    #[test]
    fn random_rigging_respects_bound() {
        let f = build_rigging(&RiggingSpec::random(10.0, 3), 20).unwrap();
        let svd = f.entries().clone().singular_values();
        let (mx, mn) = svd.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        assert!(mx / mn <= 10.0);
        assert!(((mx / mn) - f.condition_number()).abs() <= 1e-8 * f.condition_number());
    }

    #[test]
    fn random_direction_is_hermitian() {
        let j = build_direction(&DirectionSpec::Random { seed: 4, indefinite: true }, 6).unwrap();
        let e = j.entries();
        assert!((e - e.adjoint()).norm() <= 1e-14 * e.norm());
    }
}
