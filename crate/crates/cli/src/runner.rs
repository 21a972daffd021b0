//! Per-command pipelines. Each `λ` is processed independently on the rayon
//! pool; results are collected in `λ` order, so the report does not depend
//! on scheduling.

use std::time::Instant;

use lapkit_core::ls::{self, check_j_independence, regular_coupling, LsProblem, LsSolution};
use lapkit_core::models::{build_direction, DirectionSpec};
use lapkit_core::probe::{classify_point, probe_limit, PointClass};
use lapkit_core::resonance::{candidate_sequence, nonresonant_candidates, pick_from_set, resonance_set, MAX_CANDIDATES};
use lapkit_core::subspace::max_principal_angle;
use lapkit_core::verifier::{default_deltas, verify_theorem1, Theorem1Tolerances};
use lapkit_core::{DirectionOperator, HermitianOperator, LapError, ResonanceSet, Rigging, Verdict};
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, SCHEMA_VERSION};
use crate::report::*;

/// Number of couplings offered to the classifier besides `0`.
const CLASSIFY_CANDIDATES: usize = 3;

/// A validated config together with the operators it describes.
pub struct Context {
    pub config: ExperimentConfig,
    pub seed_override: Option<u64>,
    pub h0: HermitianOperator,
    pub rigging: Rigging,
    pub direction: DirectionOperator,
    pub lambdas: Vec<f64>,
    identity_direction: bool,
}

impl Context {
    pub fn new(mut config: ExperimentConfig, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        if let Some(seed) = seed_override {
            config.override_seeds(seed);
        }
        let (h0, rigging, direction) = config.build()?;
        if let Some(dirs) = &config.independence.directions {
            for d in dirs {
                build_direction(d, h0.dim()).map_err(|e| ConfigError::Field {
                    field: "independence.directions".into(),
                    message: e.to_string(),
                })?;
            }
        }
        // Computed once; every clone below shares the cached decomposition.
        h0.spectral();
        let identity_direction = matches!(config.direction, None | Some(DirectionSpec::Identity));
        let lambdas = config.lambda_values();
        Ok(Context {
            config,
            seed_override,
            h0,
            rigging,
            direction,
            lambdas,
            identity_direction,
        })
    }

    fn margin(&self) -> f64 {
        self.config.tolerances.margin
    }

    fn problem(&self, lambda: f64, r: f64) -> lapkit_core::Result<LsProblem> {
        let mut p = LsProblem::new(self.h0.clone(), self.rigging.clone(), lambda, r)?
            .with_direction(self.direction.clone())?
            .with_ladder(self.config.ladder)
            .with_probe_tol(self.config.tolerances.probe_tol);
        if let Some(tol) = self.config.tolerances.rank_tol {
            p = p.with_rank_tol(tol);
        }
        Ok(p)
    }

    /// The configured coupling, else the first candidate clear of the
    /// resonances (for a non-identity direction, the first that also yields
    /// a boundary value).
    fn choose_r(&self, set: &ResonanceSet, lambda: f64) -> lapkit_core::Result<f64> {
        if let Some(r) = self.config.force_r {
            return Ok(r);
        }
        let r = pick_from_set(set, self.margin())?;
        if self.identity_direction {
            Ok(r)
        } else {
            regular_coupling(&self.problem(lambda, r)?, &self.direction)
        }
    }

    fn classification_candidates(&self, set: &ResonanceSet) -> Vec<f64> {
        let mut c = vec![0.0];
        c.extend(nonresonant_candidates(set, self.margin(), CLASSIFY_CANDIDATES));
        c
    }

    fn report(&self, command: Command, records: Vec<LambdaRecord>, artifacts: Vec<String>) -> ExperimentReport {
        let inconclusive = records
            .iter()
            .filter(|r| r.probe.as_ref().is_some_and(|p| p.verdict == Verdict::Inconclusive))
            .count();
        let passed = records.iter().filter(|r| r.passed).count();
        let exit_code = match command {
            Command::Probe | Command::Sweep if inconclusive > 0 => 2,
            _ if passed < records.len() => 3,
            _ => 0,
        };
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            command,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            run_label: self.config.run_label.clone(),
            config_echo: self.config.clone(),
            seed_override: self.seed_override,
            dimension: self.h0.dim(),
            rigging_condition: self.rigging.condition_number(),
            summary: Summary {
                lambdas: records.len(),
                passed,
                inconclusive,
                exit_code,
            },
            records,
            artifacts,
            wall_time: None,
            generated_unix: None,
        }
    }
}

/// Report plus the CSV profiles backing it.
pub struct RunOutput {
    pub report: ExperimentReport,
    pub tables: Vec<Table>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.report.summary.exit_code
    }
}

pub fn execute(command: Command, ctx: &Context) -> RunOutput {
    let start = Instant::now();
    let mut out = match command {
        Command::Probe => run_probe(ctx),
        Command::Resonances => run_resonances(ctx),
        Command::SolveLs => run_solve_ls(ctx),
        Command::Verify => run_verify(ctx),
        Command::Sweep => run_sweep(ctx),
    };
    out.report.wall_time = Some(start.elapsed().as_secs_f64());
    out.report.generated_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs());
    out
}

fn per_lambda<T: Send>(ctx: &Context, f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    ctx.lambdas.par_iter().map(|&lambda| f(lambda)).collect()
}

fn finish(ctx: &Context, command: Command, records: Vec<LambdaRecord>, tables: Vec<Table>) -> RunOutput {
    let artifacts = tables.iter().map(Table::file_name).collect();
    RunOutput {
        report: ctx.report(command, records, artifacts),
        tables,
    }
}

pub fn run_probe(ctx: &Context) -> RunOutput {
    let results = per_lambda(ctx, |lambda| {
        probe_limit(&ctx.h0, &ctx.rigging, lambda, &ctx.config.ladder, ctx.config.tolerances.probe_tol)
    });
    let mut table = Table::new("probe", &["lambda", "y", "norm", "cauchy_diff"]);
    let mut records = Vec::new();
    for probe in &results {
        for (k, &(y, norm)) in probe.norm_profile.iter().enumerate() {
            let diff = probe.cauchy_profile.get(k).map_or(Cell::Empty, |&(_, d)| Cell::Real(d));
            table
                .rows
                .push(vec![Cell::Real(probe.lambda), Cell::Real(y), Cell::Real(norm), diff]);
        }
        let mut rec = LambdaRecord::new(probe.lambda);
        rec.passed = probe.verdict != Verdict::Inconclusive;
        if let Some(reason) = &probe.failure {
            rec.errors.push(reason.clone());
        }
        rec.probe = Some(probe.to_record());
        records.push(rec);
    }
    finish(ctx, Command::Probe, records, vec![table])
}

pub fn run_sweep(ctx: &Context) -> RunOutput {
    let records = per_lambda(ctx, |lambda| {
        let probe = probe_limit(&ctx.h0, &ctx.rigging, lambda, &ctx.config.ladder, ctx.config.tolerances.probe_tol);
        let mut rec = LambdaRecord::new(lambda);
        if let Some(&(y, sup)) = probe.norm_profile.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
            rec.sweep = Some(SweepPoint {
                sup_norm: sup,
                argmax_y: y,
            });
        }
        rec.passed = probe.verdict != Verdict::Inconclusive;
        if probe.is_limit() {
            rec.classification = Some(lapkit_core::probe::Classification {
                class: PointClass::Regular,
                coupling: Some(0.0),
                warning: false,
                verdicts: vec![(0.0, probe.verdict)],
            });
        } else {
            match resonance_set(&ctx.h0, &ctx.rigging, lambda).and_then(|set| {
                classify_point(
                    &ctx.h0,
                    &ctx.rigging,
                    lambda,
                    &ctx.classification_candidates(&set),
                    &ctx.config.ladder,
                    ctx.config.tolerances.probe_tol,
                )
            }) {
                Ok(c) => rec.classification = Some(c),
                Err(e) => rec.fail(e),
            }
        }
        rec.probe = Some(probe.to_record());
        rec
    });
    let mut table = Table::new(
        "sweep",
        &["lambda", "verdict", "sup_norm", "argmax_y", "limit_norm", "divergence_exponent", "class"],
    );
    for rec in &records {
        let probe = rec.probe.as_ref().expect("sweep records carry a probe");
        let opt = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Real);
        table.rows.push(vec![
            Cell::Real(rec.lambda),
            Cell::Text(verdict_name(probe.verdict).into()),
            opt(rec.sweep.as_ref().map(|s| s.sup_norm)),
            opt(rec.sweep.as_ref().map(|s| s.argmax_y)),
            opt(probe.limit_norm),
            opt(probe.divergence_exponent),
            rec.classification
                .as_ref()
                .map_or(Cell::Empty, |c| Cell::Text(class_name(c.class).into())),
        ]);
    }
    finish(ctx, Command::Sweep, records, vec![table])
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::LimitExists => "limit_exists",
        Verdict::Diverges => "diverges",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn class_name(c: PointClass) -> &'static str {
    match c {
        PointClass::Regular => "regular",
        PointClass::SemiRegular => "semi_regular",
        PointClass::EssentiallySingular => "essentially_singular",
    }
}

pub fn run_resonances(ctx: &Context) -> RunOutput {
    let records = per_lambda(ctx, |lambda| {
        let mut rec = LambdaRecord::new(lambda);
        match resonance_set(&ctx.h0, &ctx.rigging, lambda) {
            Ok(set) => {
                match ctx.choose_r(&set, lambda) {
                    Ok(r) => rec.chosen_r = Some(r),
                    Err(e) => rec.fail(e),
                }
                rec.resonance_set = Some(set);
            }
            Err(e) => rec.fail(e),
        }
        rec
    });
    let mut table = Table::new("resonances", &["lambda", "r", "residual_norm", "multiplicity"]);
    for rec in &records {
        if let Some(set) = &rec.resonance_set {
            for ((&r, &res), &m) in set.values.iter().zip(&set.residual_norms).zip(&set.multiplicities) {
                table
                    .rows
                    .push(vec![Cell::Real(rec.lambda), Cell::Real(r), Cell::Real(res), Cell::Int(m as u64)]);
            }
        }
    }
    finish(ctx, Command::Resonances, records, vec![table])
}

/// Resonances, coupling and solution at one `λ`; stops at the first error.
fn solve_at(ctx: &Context, rec: &mut LambdaRecord) -> Option<(LsProblem, LsSolution, ResonanceSet)> {
    let lambda = rec.lambda;
    let staged = || -> lapkit_core::Result<(LsProblem, LsSolution, ResonanceSet)> {
        let set = resonance_set(&ctx.h0, &ctx.rigging, lambda)?;
        let r = ctx.choose_r(&set, lambda)?;
        let p = ctx.problem(lambda, r)?;
        let sol = ls::solve(&p)?;
        Ok((p, sol, set))
    };
    match staged() {
        Ok(t) => {
            rec.chosen_r = Some(t.0.r);
            rec.upsilon_dimension = Some(t.1.kernel.dim());
            rec.upsilon = Some(t.1.kernel.to_record());
            if t.1.kernel.ill_conditioned {
                rec.errors.push(format!("kernel split is ill-conditioned (rank gap {:.3e})", t.1.kernel.rank_gap));
            }
            Some(t)
        }
        Err(e) => {
            if let LapError::ResonantCoupling { r, .. } = e {
                rec.chosen_r = Some(r);
            }
            rec.fail(e);
            None
        }
    }
}

fn record_bound_states(ctx: &Context, rec: &mut LambdaRecord, p: &LsProblem, sol: &LsSolution) {
    let mut states = Vec::new();
    for index in 0..sol.kernel.dim() {
        match ls::bound_state(p, sol, &sol.kernel.column(index)) {
            Ok(b) => {
                if b.eigen_residual > ctx.config.tolerances.bound_state {
                    rec.fail(format!(
                        "bound state {index}: eigen-residual {:.3e} exceeds {:.3e}",
                        b.eigen_residual, ctx.config.tolerances.bound_state
                    ));
                }
                states.push(BoundStateRecord {
                    index,
                    eigen_residual: b.eigen_residual,
                });
            }
            Err(e) => rec.fail(format!("bound state {index}: {e}")),
        }
    }
    rec.bound_states = Some(states);
}

pub fn run_solve_ls(ctx: &Context) -> RunOutput {
    let records = per_lambda(ctx, |lambda| {
        let mut rec = LambdaRecord::new(lambda);
        if let Some((p, sol, _)) = solve_at(ctx, &mut rec) {
            record_bound_states(ctx, &mut rec, &p, &sol);
        }
        rec
    });
    let mut table = Table::new("upsilon", &["lambda", "index", "singular_value", "in_kernel"]);
    for rec in &records {
        if let Some(u) = &rec.upsilon {
            let n = u.singular_values.len();
            for (k, &s) in u.singular_values.iter().enumerate() {
                let in_kernel = k >= n - u.dimension;
                table.rows.push(vec![
                    Cell::Real(rec.lambda),
                    Cell::Int(k as u64),
                    Cell::Real(s),
                    Cell::Int(in_kernel as u64),
                ]);
            }
        }
    }
    finish(ctx, Command::SolveLs, records, vec![table])
}

/// Kernels at `r_count` further regular couplings and at each alternative
/// direction, compared with the kernel of `p`.
fn independence(ctx: &Context, p: &LsProblem, sol: &LsSolution) -> lapkit_core::Result<IndependenceRecord> {
    let tol = Theorem1Tolerances::default().inclusion_angle;
    let want = ctx.config.independence.r_count;
    let mut r_values = Vec::new();
    let mut r_angle = 0.0f64;
    for r in candidate_sequence().filter(|&r| r != p.r).take(MAX_CANDIDATES) {
        if r_values.len() == want {
            break;
        }
        match ls::upsilon_space(&p.with_r(r)) {
            Ok(k) => {
                r_angle = r_angle.max(max_principal_angle(&sol.kernel, &k)?);
                r_values.push(r);
            }
            Err(LapError::ResonantCoupling { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if r_values.len() < want {
        return Err(LapError::ExhaustedCandidates(MAX_CANDIDATES));
    }
    let dirs = ctx
        .config
        .independence
        .direction_specs()
        .iter()
        .map(|d| build_direction(d, p.dim()))
        .collect::<lapkit_core::Result<Vec<_>>>()?;
    let direction_angle = if dirs.is_empty() {
        0.0
    } else {
        check_j_independence(p, &dirs)?
    };
    Ok(IndependenceRecord {
        passed: r_angle <= tol && direction_angle <= tol,
        r_values,
        r_angle: Some(r_angle),
        direction_angle: Some(direction_angle),
    })
}

fn concentration_rows(lambda: f64, report: &lapkit_core::verifier::Theorem1Report) -> Vec<Vec<Cell>> {
    let mut rows = Vec::new();
    for cell in &report.cells {
        for row in &cell.rows {
            rows.push(vec![
                Cell::Real(lambda),
                Cell::Int(cell.u_index as u64),
                Cell::Real(cell.delta),
                Cell::Real(row.y),
                Cell::Real(row.chi_norm),
                Cell::Real(row.concentration_out),
                Cell::Real(row.approx_residual),
                Cell::Real(row.tail_integral),
            ]);
        }
    }
    rows
}

pub fn run_verify(ctx: &Context) -> RunOutput {
    let tolerances = Theorem1Tolerances::default();
    let results = per_lambda(ctx, |lambda| {
        let mut rec = LambdaRecord::new(lambda);
        let mut rows = Vec::new();
        if let Ok(set) = resonance_set(&ctx.h0, &ctx.rigging, lambda) {
            match classify_point(
                &ctx.h0,
                &ctx.rigging,
                lambda,
                &ctx.classification_candidates(&set),
                &ctx.config.ladder,
                ctx.config.tolerances.probe_tol,
            ) {
                Ok(c) => rec.classification = Some(c),
                Err(e) => rec.fail(e),
            }
        }
        let Some((p, sol, set)) = solve_at(ctx, &mut rec) else {
            return (rec, rows);
        };
        rec.resonance_set = Some(set);
        record_bound_states(ctx, &mut rec, &p, &sol);
        match independence(ctx, &p, &sol) {
            Ok(ind) => {
                if !ind.passed {
                    rec.fail("kernel depends on the coupling or the direction");
                }
                rec.independence = Some(ind);
            }
            Err(e) => rec.fail(format!("independence: {e}")),
        }
        let deltas = ctx
            .config
            .deltas
            .clone()
            .unwrap_or_else(|| default_deltas(&ctx.h0, lambda));
        let report = verify_theorem1(&p, &deltas, &tolerances, ctx.config.combination_seed);
        if !report.passed() {
            rec.fail("concentration check failed");
        }
        rows = concentration_rows(lambda, &report);
        rec.theorem1 = Some(report);
        (rec, rows)
    });
    let mut table = Table::new(
        "theorem1",
        &["lambda", "u_index", "delta", "y", "chi_norm", "concentration_out", "approx_residual", "tail_integral"],
    );
    let mut records = Vec::new();
    for (rec, rows) in results {
        table.rows.extend(rows);
        records.push(rec);
    }
    finish(ctx, Command::Verify, records, vec![table])
}
