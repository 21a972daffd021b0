//! Numerical checks that kernel vectors of the Lippmann–Schwinger operator
//! are `F`-images of states concentrating at `λ`.
//!
//! For a kernel vector `u`, coupling `K = rJ` and `H1 = H0 + F*KF`:
//!
//! * `f_y = R_{λ+iy}(H1) F* K u`, so that `F f_y = T_{λ+iy}(H1) K u → u`;
//! * `χ_y = u - T_{λ+iy}(H1) K u = u - F f_y`;
//! * the mass of `f_y` outside `(λ-δ, λ+δ)` and `‖u - F E f_y‖` both vanish
//!   as `y → 0`.
//!
//! With `K = 1` these are the textbook objects; the general `K` keeps
//! `F f_y → u` for any admissible `(r, J)`.
//!
//! Integrals over `x` are evaluated in closed form per eigencomponent of
//! `H0`: `∫ y / ((x-E)² + y²) dx` is an arctangent.
//!
//! Inner products in the identity checks are linear in the first argument,
//! `⟨a, b⟩ = Σ a_i conj(b_i)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, LapError, Result};
use crate::linalg::{c64, CMatrix, CVector, C64};
use crate::ls::{self, LsProblem, LsSolution};
use crate::models::random_unit_vector;
use crate::operator::{eigenspace, eigenvalue_tolerance, ComplexEnergy, HermitianOperator, Rigging};
use crate::probe::YLadder;
use crate::subspace::{containment_angle, orthonormalize};

/// Points with `|x - λ|` below this are not evaluated by the identity check.
pub const NEAR_SINGULAR_DISTANCE: f64 = 1e-8;

/// Interval endpoints closer than this to the spectrum are refused.
pub const ENDPOINT_DISTANCE: f64 = 1e-6;

/// Fractions of the local spectral gap used as default window half-widths.
pub const DEFAULT_DELTA_FRACTIONS: [f64; 3] = [0.5, 0.1, 0.02];

/// `⟨a, b⟩`, linear in `a`.
fn inner(a: &CVector, b: &CVector) -> C64 {
    b.dotc(a)
}

/// One kernel vector `u` with a window half-width `δ` and a ladder.
#[derive(Debug, Clone)]
pub struct Thm1Run {
    pub problem: LsProblem,
    pub u: CVector,
    pub delta: f64,
    pub ladder: YLadder,
    coupled: HermitianOperator,
    coupling: CMatrix,
    /// `F* K u`
    source: CVector,
    /// `‖M u‖ / ‖u‖` and the kernel cut it must respect.
    equation_residual: f64,
    kernel_tolerance: f64,
}

/// Evaluation of one ladder point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub y: f64,
    pub f_norm: f64,
    /// `‖χ_y‖`
    pub chi_norm: f64,
    pub concentration_out: f64,
    pub approx_residual: f64,
    pub tail_integral: f64,
    /// `‖χ‖/‖u‖ + ‖F‖·concentration_out·‖f‖/‖u‖`
    pub triangle_bound: f64,
}

impl Thm1Run {
    /// Solves the problem's equation to record how well `u` satisfies it.
    pub fn new(problem: LsProblem, u: CVector, delta: f64) -> Result<Self> {
        let solution = ls::solve(&problem)?;
        Self::from_solution(problem, &solution, u, delta)
    }

    pub fn from_solution(problem: LsProblem, solution: &LsSolution, u: CVector, delta: f64) -> Result<Self> {
        check_dim(problem.dim(), u.len())?;
        if !(delta > 0.0) {
            return Err(LapError::InvalidSpec(format!("window half-width {delta} must be positive")));
        }
        let coupling = problem.coupling();
        let source = problem.rigging.adjoint_apply(&(&coupling * &u));
        let sigma_max = solution.kernel.singular_values.first().copied().unwrap_or(0.0);
        problem.h0.spectral();
        Ok(Thm1Run {
            ladder: problem.ladder,
            coupled: solution.coupled.clone(),
            equation_residual: solution.equation_residual(&u),
            kernel_tolerance: problem.rank_tol * sigma_max,
            problem,
            u,
            delta,
            coupling,
            source,
        })
    }

    pub fn with_ladder(mut self, ladder: YLadder) -> Self {
        self.ladder = ladder;
        self
    }

    fn lambda(&self) -> f64 {
        self.problem.lambda
    }

    fn h0(&self) -> &HermitianOperator {
        &self.problem.h0
    }

    fn rigging(&self) -> &Rigging {
        &self.problem.rigging
    }

    pub fn require_kernel_vector(&self) -> Result<()> {
        if self.equation_residual > self.kernel_tolerance {
            return Err(LapError::PreconditionFailed(format!(
                "u is not a kernel vector: residual {:e} exceeds {:e}",
                self.equation_residual, self.kernel_tolerance
            )));
        }
        Ok(())
    }

    /// `f_y = R_{λ+iy}(H1) F* K u`
    pub fn f_vector(&self, y: f64) -> Result<CVector> {
        if !(y > 0.0) {
            return Err(LapError::InvalidSpec(format!("y = {y} must be positive")));
        }
        self.coupled
            .resolvent_apply(ComplexEnergy::new(self.lambda(), y), &self.source)
    }

    /// `χ_y = u - F f_y`
    pub fn chi(&self, f: &CVector) -> CVector {
        &self.u - self.rigging().apply(f)
    }

    /// `(E f, (1 - E) f)` for `E` the spectral projection of `H0` on the window.
    fn window_split(&self, f: &CVector) -> (CVector, CVector) {
        let spec = self.h0().spectral();
        let inside = spec.interior_indices(self.lambda() - self.delta, self.lambda() + self.delta);
        let coeffs = spec.coefficients(f);
        let mut kept = CVector::zeros(coeffs.len());
        for &i in &inside {
            kept[i] = coeffs[i];
        }
        let p = &spec.eigenvectors * kept;
        let q = f - &p;
        (p, q)
    }

    /// Closed-form `∫_{ℝ∖(λ-δ, λ+δ)} Im(f* R_{x+iy}(H0) f) dx`.
    fn tail_of(&self, f: &CVector, y: f64) -> f64 {
        let spec = self.h0().spectral();
        let coeffs = spec.coefficients(f);
        let (a, b) = (self.lambda() - self.delta, self.lambda() + self.delta);
        spec.eigenvalues
            .iter()
            .zip(coeffs.iter())
            .map(|(&e, c)| c.norm_sqr() * (y.atan2(e - a) + y.atan2(b - e)))
            .sum()
    }

    pub fn row(&self, y: f64) -> Result<ProfileRow> {
        let f = self.f_vector(y)?;
        let f_norm = f.norm();
        let u_norm = self.u.norm();
        let chi_norm = self.chi(&f).norm();
        let (inside, outside) = self.window_split(&f);
        let concentration_out = if f_norm == 0.0 { 0.0 } else { outside.norm() / f_norm };
        let approx = (&self.u - self.rigging().apply(&inside)).norm() / u_norm;
        Ok(ProfileRow {
            y,
            f_norm,
            chi_norm,
            concentration_out,
            approx_residual: approx,
            tail_integral: self.tail_of(&f, y),
            triangle_bound: chi_norm / u_norm + self.rigging().norm() * concentration_out * f_norm / u_norm,
        })
    }

    /// Rows for every ladder value, in ladder order.
    pub fn profile(&self) -> Result<Vec<ProfileRow>> {
        self.ladder.validate()?;
        self.ladder.values().par_iter().map(|&y| self.row(y)).collect()
    }
}

pub fn f_vector(run: &Thm1Run, y: f64) -> Result<CVector> {
    run.f_vector(y)
}

/// `‖(1 - E_window) f_y‖ / ‖f_y‖` along the ladder.
pub fn concentration_profile(run: &Thm1Run) -> Result<Vec<f64>> {
    run.require_kernel_vector()?;
    Ok(run.profile()?.iter().map(|r| r.concentration_out).collect())
}

/// `‖u - F E_window f_y‖ / ‖u‖`
pub fn approx_residual(run: &Thm1Run, y: f64) -> Result<f64> {
    run.require_kernel_vector()?;
    Ok(run.row(y)?.approx_residual)
}

pub fn tail_integral(run: &Thm1Run, y: f64) -> Result<f64> {
    Ok(run.tail_of(&run.f_vector(y)?, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Lemma2Outcome {
    Evaluated { lhs: f64, rhs: f64, residual: f64 },
    NearSingular,
}

impl Lemma2Outcome {
    pub fn residual(&self) -> Option<f64> {
        match self {
            Lemma2Outcome::Evaluated { residual, .. } => Some(*residual),
            Lemma2Outcome::NearSingular => None,
        }
    }
}

/// Both sides of
/// `Im⟨f, R_{x+iy}(H0) f⟩ = (x-λ)^{-1} Im[(x-λ-2iy)^{-1} ⟨g, Kχ⟩]`
/// with `g = -T_{λ+iy}(H1) K u + T_{x-iy}(H0) K χ`.
pub fn check_lemma2_identity(run: &Thm1Run, x: f64, y: f64) -> Result<Lemma2Outcome> {
    let lambda = run.lambda();
    if (x - lambda).abs() < NEAR_SINGULAR_DISTANCE {
        return Ok(Lemma2Outcome::NearSingular);
    }
    let f = run.f_vector(y)?;
    let h0 = run.h0();
    let rig = run.rigging();
    let lhs = inner(&f, &h0.resolvent_apply(ComplexEnergy::new(x, y), &f)?).im;

    let chi = run.chi(&f);
    let k_chi = &run.coupling * &chi;
    let back = h0.resolvent_apply(ComplexEnergy::new(x, -y), &rig.adjoint_apply(&k_chi))?;
    let g = rig.apply(&back) - rig.apply(&f);
    let c = c64(1.0, 0.0) / c64(x - lambda, -2.0 * y);
    let rhs = (c * inner(&g, &k_chi)).im / (x - lambda);
    Ok(Lemma2Outcome::Evaluated {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1e-300),
    })
}

/// Relative residual of `(x-λ) R_{x+iy}(H0) f = -f + R_{x+iy}(H0) F* K χ`.
pub fn check_intermediate_identity(run: &Thm1Run, x: f64, y: f64) -> Result<f64> {
    let f = run.f_vector(y)?;
    let z = ComplexEnergy::new(x, y);
    let h0 = run.h0();
    let lhs = h0.resolvent_apply(z, &f)? * c64(x - run.lambda(), 0.0);
    let chi = run.chi(&f);
    let rhs = h0.resolvent_apply(z, &run.rigging().adjoint_apply(&(&run.coupling * chi)))? - &f;
    let scale = lhs.norm() + rhs.norm();
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).norm() / scale })
}

fn check_endpoints(h: &HermitianOperator, a: f64, b: f64) -> Result<()> {
    for endpoint in [a, b] {
        let distance = h.spectral().distance_to(endpoint);
        if distance < ENDPOINT_DISTANCE {
            return Err(LapError::EndpointOnSpectrum { endpoint, distance });
        }
    }
    Ok(())
}

/// `(1/π) ∫_a^b Im⟨φ, R_{x+iy}(H) φ⟩ dx` per ladder value, in closed form.
pub fn stone_quadrature_check(h: &HermitianOperator, phi: &CVector, a: f64, b: f64, ladder: &YLadder) -> Result<Vec<f64>> {
    check_dim(h.dim(), phi.len())?;
    ladder.validate()?;
    if !(a < b) {
        return Err(LapError::InvalidSpec(format!("interval ({a}, {b}) is empty")));
    }
    check_endpoints(h, a, b)?;
    let spec = h.spectral();
    let weights: Vec<f64> = spec.coefficients(phi).iter().map(|c| c.norm_sqr()).collect();
    Ok(ladder
        .values()
        .iter()
        .map(|&y| {
            spec.eigenvalues
                .iter()
                .zip(&weights)
                .map(|(&e, w)| w * (((b - e) / y).atan() - ((a - e) / y).atan()))
                .sum::<f64>()
                / std::f64::consts::PI
        })
        .collect())
}

/// `‖E_(a,b)(H) φ‖²`
pub fn projected_mass(h: &HermitianOperator, phi: &CVector, a: f64, b: f64) -> f64 {
    let spec = h.spectral();
    let coeffs = spec.coefficients(phi);
    spec.interior_indices(a, b).iter().map(|&i| coeffs[i].norm_sqr()).sum()
}

/// Distance from `λ` to the nearest eigenvalue of `H0` not equal to `λ`
/// (within the eigenvalue tolerance); `max(1, ρ)` if there is none.
pub fn local_gap(h0: &HermitianOperator, lambda: f64) -> f64 {
    let tol = eigenvalue_tolerance(h0);
    let gap = h0
        .eigenvalues()
        .iter()
        .map(|e| (e - lambda).abs())
        .filter(|&d| d > tol)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        gap
    } else {
        h0.spectral_radius().max(1.0)
    }
}

pub fn default_deltas(h0: &HermitianOperator, lambda: f64) -> Vec<f64> {
    let gap = local_gap(h0, lambda);
    DEFAULT_DELTA_FRACTIONS.iter().map(|c| c * gap).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Tolerances {
    pub concentration: f64,
    /// Relative to `‖f‖²` at the smallest `y`.
    pub tail: f64,
    pub approx: f64,
    pub inclusion_angle: f64,
    /// Number of trailing ladder points that must be non-increasing.
    pub trend_points: usize,
    pub triangle_slack: f64,
}

impl Default for Theorem1Tolerances {
    fn default() -> Self {
        Theorem1Tolerances {
            concentration: 1e-4,
            tail: 1e-3,
            approx: 1e-4,
            inclusion_angle: 1e-6,
            trend_points: 5,
            triangle_slack: 1e-12,
        }
    }
}

/// Results for one `(u, δ)` pair.
#[derive(Debug, Clone, Serialize)]
pub struct Thm1Cell {
    pub u_index: usize,
    pub delta: f64,
    pub final_concentration: f64,
    pub final_tail: f64,
    pub final_f_norm_sq: f64,
    pub final_approx: f64,
    pub concentration_decreasing: bool,
    pub tail_decreasing: bool,
    pub triangle_holds: bool,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<ProfileRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionVerdict {
    pub passed: bool,
    /// Largest angle between a vector of the smaller side and the larger side.
    pub angle: f64,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Report {
    pub lambda: f64,
    pub r: f64,
    pub upsilon_dimension: usize,
    pub eigenspace_dimension: usize,
    pub deltas: Vec<f64>,
    /// Kernel vectors concentrate at `λ` (profile contracts).
    pub forward: InclusionVerdict,
    /// `F·V(λ)` lies in the kernel.
    pub reverse: InclusionVerdict,
    pub cells: Vec<Thm1Cell>,
}

impl Theorem1Report {
    pub fn passed(&self) -> bool {
        self.forward.passed && self.reverse.passed
    }

    fn failed(problem: &LsProblem, deltas: &[f64], reason: String) -> Self {
        let verdict = InclusionVerdict {
            passed: false,
            angle: f64::NAN,
            diagnostics: vec![reason],
        };
        Theorem1Report {
            lambda: problem.lambda,
            r: problem.r,
            upsilon_dimension: 0,
            eigenspace_dimension: 0,
            deltas: deltas.to_vec(),
            forward: verdict.clone(),
            reverse: verdict,
            cells: Vec::new(),
        }
    }
}

/// Non-increasing over the last `points` entries, up to `slack`.
fn decreasing_tail(values: &[f64], points: usize, slack: f64) -> bool {
    let start = values.len().saturating_sub(points);
    values[start..].windows(2).all(|w| w[1] <= w[0] + slack)
}

/// Kernel basis columns followed by one seeded unit combination of them.
pub fn kernel_samples(solution: &LsSolution, seed: u64) -> Vec<CVector> {
    let kernel = &solution.kernel;
    let mut out: Vec<CVector> = (0..kernel.dim()).map(|i| kernel.column(i)).collect();
    if !kernel.is_empty() {
        let c = random_unit_vector(kernel.dim(), seed);
        out.push(&kernel.vectors * c);
    }
    out
}

fn evaluate_cell(run: &Thm1Run, u_index: usize, tol: &Theorem1Tolerances) -> Result<Thm1Cell> {
    run.require_kernel_vector()?;
    let rows = run.profile()?;
    let last = rows.last().expect("ladder is nonempty");
    let f_sq = last.f_norm * last.f_norm;
    let conc: Vec<f64> = rows.iter().map(|r| r.concentration_out).collect();
    let tails: Vec<f64> = rows.iter().map(|r| r.tail_integral).collect();
    let max_f_sq = rows.iter().map(|r| r.f_norm * r.f_norm).fold(0.0, f64::max);
    let concentration_decreasing = decreasing_tail(&conc, tol.trend_points, 1e-14);
    let tail_decreasing = decreasing_tail(&tails, tol.trend_points, 1e-14 * max_f_sq);
    let triangle_holds = rows
        .iter()
        .all(|r| r.approx_residual <= r.triangle_bound + tol.triangle_slack);
    let passed = concentration_decreasing
        && tail_decreasing
        && triangle_holds
        && last.concentration_out <= tol.concentration
        && last.tail_integral <= tol.tail * f_sq
        && last.approx_residual <= tol.approx;
    Ok(Thm1Cell {
        u_index,
        delta: run.delta,
        final_concentration: last.concentration_out,
        final_tail: last.tail_integral,
        final_f_norm_sq: f_sq,
        final_approx: last.approx_residual,
        concentration_decreasing,
        tail_decreasing,
        triangle_holds,
        passed,
        rows,
    })
}

/// Both inclusions at finite dimension. Kernel vectors (basis columns and a
/// seeded combination) must concentrate at `λ` for every `δ`; every vector
/// of `F·V(λ, H0)` must lie in the kernel. Failures are reported in the
/// verdicts, not as errors.
pub fn verify_theorem1(
    problem: &LsProblem,
    deltas: &[f64],
    tolerances: &Theorem1Tolerances,
    combination_seed: u64,
) -> Theorem1Report {
    let solution = match ls::solve(problem) {
        Ok(s) => s,
        Err(e) => return Theorem1Report::failed(problem, deltas, e.to_string()),
    };
    let kernel = &solution.kernel;
    let samples = kernel_samples(&solution, combination_seed);

    let jobs: Vec<(usize, f64)> = (0..samples.len())
        .flat_map(|i| deltas.iter().map(move |&d| (i, d)))
        .collect();
    let outcomes: Vec<Result<Thm1Cell>> = jobs
        .par_iter()
        .map(|&(i, delta)| {
            let run = Thm1Run::from_solution(problem.clone(), &solution, samples[i].clone(), delta)?;
            evaluate_cell(&run, i, tolerances)
        })
        .collect();

    let mut cells = Vec::new();
    let mut forward_diag = Vec::new();
    for ((i, delta), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(cell) => {
                if !cell.passed {
                    forward_diag.push(format!(
                        "u[{i}] delta {delta:e}: concentration {:e}, tail {:e} (|f|^2 {:e}), approx {:e}, trends {}/{}, triangle {}",
                        cell.final_concentration,
                        cell.final_tail,
                        cell.final_f_norm_sq,
                        cell.final_approx,
                        cell.concentration_decreasing,
                        cell.tail_decreasing,
                        cell.triangle_holds
                    ));
                }
                cells.push(cell);
            }
            Err(e) => forward_diag.push(format!("u[{i}] delta {delta:e}: {e}")),
        }
    }
    if kernel.ill_conditioned {
        forward_diag.push(format!("ambiguous kernel dimension: rank gap {:e}", kernel.rank_gap));
    }

    let eig = eigenspace(&problem.h0, problem.lambda, eigenvalue_tolerance(&problem.h0));
    let image = orthonormalize(&problem.rigging.apply_matrix(&eig.vectors), 1e-12);
    let reverse_angle = containment_angle(&image, kernel);
    let forward_angle = containment_angle(kernel, &image);
    let mut reverse_diag = Vec::new();
    if image.dim() != kernel.dim() {
        reverse_diag.push(format!(
            "kernel dimension {} differs from eigenspace dimension {}",
            kernel.dim(),
            image.dim()
        ));
    }
    let reverse_passed = reverse_angle <= tolerances.inclusion_angle;
    if !reverse_passed {
        reverse_diag.push(format!("F·V(λ) leaves the kernel at angle {reverse_angle:e}"));
    }

    Theorem1Report {
        lambda: problem.lambda,
        r: problem.r,
        upsilon_dimension: kernel.dim(),
        eigenspace_dimension: image.dim(),
        deltas: deltas.to_vec(),
        forward: InclusionVerdict {
            passed: forward_diag.is_empty() && cells.len() == jobs.len(),
            angle: forward_angle,
            diagnostics: forward_diag,
        },
        reverse: InclusionVerdict {
            passed: reverse_passed,
            angle: reverse_angle,
            diagnostics: reverse_diag,
        },
        cells,
    }
}
