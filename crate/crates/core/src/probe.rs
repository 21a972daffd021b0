//! Numerical detection of the boundary value `T_{λ+i0}(H)`.
//!
//! The sandwiched resolvent is evaluated on a geometric ladder
//! `y_k = y0·factor^k` and two profiles are recorded: the norms `‖T_k‖` and the
//! Cauchy differences `‖T_k - T_{k+1}‖`.
//!
//! * `LimitExists`: the Cauchy profile is non-increasing on its tail (values
//!   under the round-off floor count as converged) and the error estimate of
//!   the limit is below `tol·max(1, ‖T‖)`.
//! * `Diverges`: the norm profile grows monotonically on its tail and the
//!   least-squares slope of `log‖T‖` against `log y` there is below `-0.5`.
//! * `Inconclusive` otherwise.
//!
//! Near the real axis `T(λ+iy) = T(λ) + iy·T'(λ) + O(y²)`, so the last three
//! iterates are log-linear with ratio `factor`; when that is observed the
//! estimate is Richardson-extrapolated to `y = 0` and the distance between
//! the last two extrapolations serves as its error estimate. Otherwise the
//! last Cauchy difference does.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LapError, Result};
use crate::linalg::{spectral_norm, CMatrix};
use crate::operator::{perturbed_operator, sandwiched_resolvent, ComplexEnergy, HermitianOperator, Rigging};

pub const DEFAULT_PROBE_TOL: f64 = 1e-7;

/// Slope of `log‖T‖` vs `log y` below which growth counts as divergence.
pub const DIVERGENCE_SLOPE: f64 = -0.5;

/// Allowed relative deviation of the three-point ratio from `factor`.
const LOG_LINEAR_TOLERANCE: f64 = 0.1;

/// Geometric sequence `y_k = y0·factor^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YLadder {
    pub y0: f64,
    pub factor: f64,
    pub count: usize,
}

impl Default for YLadder {
    fn default() -> Self {
        YLadder {
            y0: 1.0,
            factor: 0.5,
            count: 30,
        }
    }
}

impl YLadder {
    pub fn new(y0: f64, factor: f64, count: usize) -> Result<Self> {
        let ladder = YLadder { y0, factor, count };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y0 > 0.0 && self.y0.is_finite()) {
            return Err(LapError::InvalidSpec(format!("ladder.y0 = {} must be positive", self.y0)));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(LapError::InvalidSpec(format!(
                "ladder.factor = {} must lie in (0, 1)",
                self.factor
            )));
        }
        if self.count == 0 {
            return Err(LapError::InvalidSpec("ladder.count must be positive".into()));
        }
        if self.smallest() <= 0.0 {
            return Err(LapError::InvalidSpec("ladder underflows to zero".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.y0 * self.factor.powi(k as i32)).collect()
    }

    pub fn smallest(&self) -> f64 {
        self.y0 * self.factor.powi(self.count as i32 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LimitExists,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct LapProbeResult {
    pub lambda: f64,
    pub verdict: Verdict,
    /// Present iff the verdict is `LimitExists`.
    pub limit_estimate: Option<CMatrix>,
    /// Whether `limit_estimate` is Richardson-extrapolated.
    pub extrapolated: bool,
    /// `(y_k, ‖T_k - T_{k+1}‖)`
    pub cauchy_profile: Vec<(f64, f64)>,
    /// `(y_k, ‖T_k‖)`
    pub norm_profile: Vec<(f64, f64)>,
    /// Present iff the verdict is `Diverges`.
    pub divergence_exponent: Option<f64>,
    /// Set when the ladder could not be evaluated.
    pub failure: Option<String>,
}

/// Serializable summary of a [`LapProbeResult`] (the limit matrix is omitted).
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRecord {
    pub lambda: f64,
    pub verdict: Verdict,
    pub extrapolated: bool,
    pub limit_norm: Option<f64>,
    pub final_cauchy_difference: Option<f64>,
    pub divergence_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl LapProbeResult {
    pub fn is_limit(&self) -> bool {
        self.verdict == Verdict::LimitExists
    }

    pub fn to_record(&self) -> ProbeRecord {
        ProbeRecord {
            lambda: self.lambda,
            verdict: self.verdict,
            extrapolated: self.extrapolated,
            limit_norm: self.limit_estimate.as_ref().map(spectral_norm),
            final_cauchy_difference: self.cauchy_profile.last().map(|&(_, d)| d),
            divergence_exponent: self.divergence_exponent,
            failure: self.failure.clone(),
        }
    }

    fn inconclusive(lambda: f64, reason: String) -> Self {
        LapProbeResult {
            lambda,
            verdict: Verdict::Inconclusive,
            limit_estimate: None,
            extrapolated: false,
            cauchy_profile: Vec::new(),
            norm_profile: Vec::new(),
            divergence_exponent: None,
            failure: Some(reason),
        }
    }
}

/// `T_{λ+iy}` for every ladder value, in ladder order.
pub fn ladder_resolvents(h: &HermitianOperator, f: &Rigging, lambda: f64, ys: &[f64]) -> Result<Vec<CMatrix>> {
    h.spectral();
    ys.par_iter()
        .map(|&y| sandwiched_resolvent(h, f, ComplexEnergy::new(lambda, y)))
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn tail_start(len: usize, fraction: usize) -> usize {
    len.saturating_sub((len / fraction).max(3).min(len))
}

/// Best estimate of the limit and its error. Without log-linearity the
/// last iterate is used and the last Cauchy difference bounds its error.
/// With it, the last two Richardson estimates `E_k = T_k + q/(1-q)(T_k - T_{k-1})`
/// are formed and their distance is the error; the raw difference is kept
/// if it happens to be smaller.
fn limit_with_error(ts: &[CMatrix], diffs: &[f64], factor: f64) -> (CMatrix, bool, f64) {
    let k = ts.len() - 1;
    let last = diffs[k - 1];
    let log_linear = ts.len() >= 4 && {
        let (d1, d2) = (diffs[k - 2], diffs[k - 1]);
        d1 > 0.0 && ((d2 / d1) / factor - 1.0).abs() < LOG_LINEAR_TOLERANCE
    };
    if !log_linear {
        return (ts[k].clone(), false, last);
    }
    let w = crate::linalg::c64(factor / (1.0 - factor), 0.0);
    let extrapolate = |j: usize| &ts[j] + (&ts[j] - &ts[j - 1]) * w;
    let current = extrapolate(k);
    let error = spectral_norm(&(&current - extrapolate(k - 1)));
    if error <= last {
        (current, true, error)
    } else {
        (ts[k].clone(), false, last)
    }
}

pub fn probe_limit(h: &HermitianOperator, f: &Rigging, lambda: f64, ladder: &YLadder, tol: f64) -> LapProbeResult {
    if let Err(e) = ladder.validate() {
        return LapProbeResult::inconclusive(lambda, e.to_string());
    }
    let ys = ladder.values();
    let ts = match ladder_resolvents(h, f, lambda, &ys) {
        Ok(ts) => ts,
        Err(e) => return LapProbeResult::inconclusive(lambda, e.to_string()),
    };
    let norms: Vec<f64> = ts.par_iter().map(spectral_norm).collect();
    let diffs: Vec<f64> = (0..ts.len().saturating_sub(1))
        .into_par_iter()
        .map(|k| spectral_norm(&(&ts[k] - &ts[k + 1])))
        .collect();

    let norm_profile: Vec<(f64, f64)> = ys.iter().copied().zip(norms.iter().copied()).collect();
    let cauchy_profile: Vec<(f64, f64)> = ys.iter().copied().zip(diffs.iter().copied()).collect();

    let n = h.dim().max(1) as f64;
    let max_norm = norms.iter().copied().fold(0.0f64, f64::max);
    let floor = 100.0 * n * f64::EPSILON * max_norm;

    let mut result = LapProbeResult {
        lambda,
        verdict: Verdict::Inconclusive,
        limit_estimate: None,
        extrapolated: false,
        cauchy_profile,
        norm_profile,
        divergence_exponent: None,
        failure: None,
    };

    // A single-point ladder carries no Cauchy information.
    if diffs.is_empty() {
        return result;
    }

    let tail = &diffs[tail_start(diffs.len(), 3)..];
    let settles = tail.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor);
    let scale = norms.last().copied().unwrap_or(0.0).max(1.0);
    let (estimate, extrapolated, error) = limit_with_error(&ts, &diffs, ladder.factor);
    if settles && error < tol * scale {
        result.verdict = Verdict::LimitExists;
        result.limit_estimate = Some(estimate);
        result.extrapolated = extrapolated;
        return result;
    }

    let start = tail_start(norms.len(), 2);
    let tail_norms = &norms[start..];
    let grows = tail_norms.windows(2).all(|w| w[1] > w[0]);
    if grows && tail_norms.iter().all(|&v| v > 0.0) {
        let lx: Vec<f64> = ys[start..].iter().map(|y| y.ln()).collect();
        let ly: Vec<f64> = tail_norms.iter().map(|v| v.ln()).collect();
        let slope = fitted_slope(&lx, &ly);
        if slope < DIVERGENCE_SLOPE {
            result.verdict = Verdict::Diverges;
            result.divergence_exponent = Some(slope);
        }
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNormPoint {
    pub lambda: f64,
    pub sup_norm: f64,
    /// Ladder value attaining the supremum.
    pub argmax_y: f64,
}

/// Per-λ supremum of `‖T_{λ+iy}‖` over the ladder. Diagnostic only: no
/// integrability of a dominating function is asserted.
pub fn sup_norm_profile(
    h: &HermitianOperator,
    f: &Rigging,
    lambdas: &[f64],
    ladder: &YLadder,
) -> Result<Vec<SupNormPoint>> {
    ladder.validate()?;
    h.spectral();
    let ys = ladder.values();
    let cells: Vec<(usize, f64)> = (0..lambdas.len())
        .flat_map(|i| ys.iter().map(move |&y| (i, y)))
        .collect();
    let norms: Vec<f64> = cells
        .par_iter()
        .map(|&(i, y)| sandwiched_resolvent(h, f, ComplexEnergy::new(lambdas[i], y)).map(|t| spectral_norm(&t)))
        .collect::<Result<_>>()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let row = &norms[i * ys.len()..(i + 1) * ys.len()];
            let (k, &sup) = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("ladder is nonempty");
            SupNormPoint {
                lambda,
                sup_norm: sup,
                argmax_y: ys[k],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Regular,
    SemiRegular,
    EssentiallySingular,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub class: PointClass,
    /// Coupling at which the limit was found (`0` for a regular point).
    pub coupling: Option<f64>,
    /// Some probe along the way was inconclusive.
    pub warning: bool,
    pub verdicts: Vec<(f64, Verdict)>,
}

/// Regular if the limit exists for `H0`, semi-regular if it exists for some
/// `H0 + r F*F` with `r` among the candidates, essentially singular otherwise.
pub fn classify_point(
    h0: &HermitianOperator,
    f: &Rigging,
    lambda: f64,
    r_candidates: &[f64],
    ladder: &YLadder,
    tol: f64,
) -> Result<Classification> {
    if !r_candidates.contains(&0.0) {
        return Err(LapError::PreconditionFailed(
            "coupling candidates must include 0".into(),
        ));
    }
    let mut verdicts = Vec::new();
    let probe_at = |r: f64| {
        if r == 0.0 {
            probe_limit(h0, f, lambda, ladder, tol).verdict
        } else {
            probe_limit(&perturbed_operator(h0, f, r), f, lambda, ladder, tol).verdict
        }
    };
    let base = probe_at(0.0);
    verdicts.push((0.0, base));
    if base == Verdict::LimitExists {
        return Ok(Classification {
            class: PointClass::Regular,
            coupling: Some(0.0),
            warning: false,
            verdicts,
        });
    }
    for &r in r_candidates.iter().filter(|&&r| r != 0.0) {
        let v = probe_at(r);
        verdicts.push((r, v));
        if v == Verdict::LimitExists {
            let warning = verdicts.iter().any(|(_, v)| *v == Verdict::Inconclusive);
            return Ok(Classification {
                class: PointClass::SemiRegular,
                coupling: Some(r),
                warning,
                verdicts,
            });
        }
    }
    let warning = verdicts.iter().any(|(_, v)| *v == Verdict::Inconclusive);
    Ok(Classification {
        class: PointClass::EssentiallySingular,
        coupling: None,
        warning,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn pair() -> (HermitianOperator, Rigging) {
        (HermitianOperator::diagonal(&[0.0, 2.0]), Rigging::identity(2))
    }

    #[test]
    fn ladder_validation() {
        assert!(YLadder::new(1.0, 1.5, 10).is_err());
        assert!(YLadder::new(0.0, 0.5, 10).is_err());
        assert!(YLadder::new(1.0, 0.5, 0).is_err());
        let l = YLadder::default();
        let v = l.values();
        assert_eq!(v.len(), 30);
        assert!(v.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        assert_eq!(l.smallest(), v[29]);
    }

    #[test]
    fn off_spectrum_limit() {
        let (h, f) = pair();
        let p = probe_limit(&h, &f, 1.0, &YLadder::default(), DEFAULT_PROBE_TOL);
        assert_eq!(p.verdict, Verdict::LimitExists);
        let t = p.limit_estimate.unwrap();
        let expected = CMatrix::from_diagonal(&crate::linalg::CVector::from_vec(vec![c64(-1.0, 0.0), c64(1.0, 0.0)]));
        assert!((t - expected).norm() < 1e-12);
        assert!(p.divergence_exponent.is_none());
    }

    #[test]
    fn eigenvalue_divergence() {
        let (h, f) = pair();
        let p = probe_limit(&h, &f, 0.0, &YLadder::default(), DEFAULT_PROBE_TOL);
        assert_eq!(p.verdict, Verdict::Diverges);
        assert!((p.divergence_exponent.unwrap() + 1.0).abs() < 0.1);
        assert!(p.limit_estimate.is_none());
    }

    #[test]
    fn extrapolation_settles_slow_convergence() {
        // T(y) = 1/(-0.01 - iy): the raw Cauchy step at the ladder bottom is
        // ~5e-3, far above tolerance, while the extrapolated error is ~1e-7.
        let h = HermitianOperator::diagonal(&[0.0]);
        let f = Rigging::identity(1);
        let ladder = YLadder::new(1.0, 0.5, 22).unwrap();
        let p = probe_limit(&h, &f, 0.01, &ladder, DEFAULT_PROBE_TOL);
        assert!(p.cauchy_profile.last().unwrap().1 > 1e-3);
        assert_eq!(p.verdict, Verdict::LimitExists);
        assert!(p.extrapolated);
        let t = p.limit_estimate.unwrap()[(0, 0)];
        assert!((t - c64(-100.0, 0.0)).norm() <= DEFAULT_PROBE_TOL * 100.0);
    }

    #[test]
    fn short_ladder_is_inconclusive() {
        let (h, f) = pair();
        let p = probe_limit(&h, &f, 1.0, &YLadder::new(1.0, 0.5, 1).unwrap(), DEFAULT_PROBE_TOL);
        assert_eq!(p.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn sup_norm_examples() {
        let h = HermitianOperator::diagonal(&[0.0]);
        let f = Rigging::identity(1);
        let prof = sup_norm_profile(&h, &f, &[1.0, 5.0], &YLadder::default()).unwrap();
        assert!((prof[0].sup_norm - 1.0).abs() < 1e-12);
        assert!(prof[1].sup_norm <= 1.0 / 5.0 + 1e-9);
    }

    #[test]
    fn classification_examples() {
        let (h, f) = pair();
        let l = YLadder::default();
        let c = classify_point(&h, &f, 1.0, &[0.0], &l, DEFAULT_PROBE_TOL).unwrap();
        assert_eq!(c.class, PointClass::Regular);
        let c = classify_point(&h, &f, 0.0, &[0.0, 0.5], &l, DEFAULT_PROBE_TOL).unwrap();
        assert_eq!(c.class, PointClass::SemiRegular);
        assert_eq!(c.coupling, Some(0.5));
        assert!(classify_point(&h, &f, 0.0, &[0.5], &l, DEFAULT_PROBE_TOL).is_err());
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, -1.0, -3.0, -5.0];
        assert!((fitted_slope(&xs, &ys) + 2.0).abs() < 1e-14);
    }
}
