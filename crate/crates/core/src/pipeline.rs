//! The `check` pipeline: involution/closure, completeness probes, period
//! lattice, action-angle chart, connection checks and the global verdict,
//! assembled into a [`Report`].
//!
//! Stages run in dependency order. A failing stage is recorded and never
//! aborts later independent stages; a stage whose inputs are missing is
//! skipped with a reason. Everything downstream of sampling is seeded, so
//! two runs of the same spec produce byte-identical reports once the
//! volatile fields are normalized.

use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::DVector;

use crate::affine::{self, AffineError, ConnectionFrame};
use crate::bundleclass::{self, Flag, HypothesisFlags, Mode, Provenance};
use crate::fibergeom::{self, canonical_one_form, ActionAngle1, LatticeError};
use crate::flows::{completeness_probe, FlowAction, IntegratorOptions, ProbeVerdict};
use crate::integrability::{self, Verdict};
use crate::report::{
    ActionAngleStage, BracketStage, Claim, CompletenessStage, ConnectionStage, LatticeStage,
    ProbeRecord, RankClaim, Report, Stage, Stages, Status, SystemInfo, ToolInfo, TopologyInfo,
    VerdictStage, COMPLETENESS_HEURISTIC, TOOL_NAME,
};
use crate::sampling::{self, SampleBox};
use crate::spec::SystemSpec;
use crate::symplectic::{hamiltonian_field, lie_bracket, ScalarField, VectorField};
use crate::tolerances;

/// Half-width of the frame domain around the lattice base point used by
/// the connection stage.
const FRAME_BOX_WIDTH: f64 = 0.3;
/// Edge length of the holonomy test rectangle.
const HOLONOMY_EDGE: f64 = 0.25;
const HOLONOMY_SUBSTEPS: usize = 32;
const CONNECTION_SAMPLES: usize = 20;
const DARBOUX_SAMPLES: usize = 3;
const GEODESIC_WINDOW: f64 = 0.5;

pub fn run(spec: &SystemSpec, source: &str) -> Report {
    let toggles = spec.pipeline;

    let bracket = staged(toggles.bracket, || bracket_body(spec));
    let completeness = staged(toggles.completeness, || completeness_body(spec));
    let lattice = staged(toggles.lattice, || lattice_body(spec));
    let action_angle = staged(toggles.action_angle, || action_angle_body(spec, &lattice));
    let connection = staged(toggles.connection, || connection_body(spec));
    let verdict = staged(toggles.verdict, || {
        verdict_body(spec, &bracket, &completeness, &lattice)
    });

    let stages = Stages {
        bracket,
        completeness,
        lattice,
        action_angle,
        connection,
        verdict,
    };
    let exit_code = Report::exit_code_for(&stages);
    Report {
        tool: ToolInfo {
            name: TOOL_NAME.into(),
            version: crate::report::tool_version().into(),
        },
        generated_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default()
            .as_secs(),
        system: SystemInfo {
            name: spec.name.clone(),
            dim: spec.dim(),
            n: spec.n(),
            k: spec.k(),
            expected_mode: spec.expected_mode().to_string(),
            input_sha256: crate::report::input_sha256(source),
            seed: spec.seed,
            sample_count: spec.sample_count,
        },
        stages,
        exit_code,
    }
}

fn staged<T>(enabled: bool, body: impl FnOnce() -> Stage<T>) -> Stage<T> {
    if !enabled {
        return Stage::skipped("disabled by [pipeline]");
    }
    let start = Instant::now();
    let mut stage = body();
    stage.seconds = start.elapsed().as_secs_f64();
    stage
}

/// The fields whose flows sweep the fiber: the Hamiltonian fields of the
/// F_i in complete and partial mode, the derived Casimir fields in
/// noncommutative mode.
pub fn fiber_legs(
    spec: &SystemSpec,
) -> Result<(Vec<String>, Vec<Arc<dyn VectorField>>), String> {
    match spec.expected_mode() {
        Mode::Complete | Mode::Partial => Ok((
            spec.function_names.clone(),
            spec.functions
                .iter()
                .map(|f| {
                    Arc::new(hamiltonian_field(&spec.chart, f.clone())) as Arc<dyn VectorField>
                })
                .collect(),
        )),
        Mode::Noncommutative => {
            if spec.casimirs.is_empty() {
                Err("noncommutative fiber flows need [casimirs]".into())
            } else {
                Ok((
                    spec.casimir_names.clone(),
                    integrability::derived_fields(&spec.chart, &spec.functions, &spec.casimirs)
                        .into_iter()
                        .map(|f| Arc::new(f) as Arc<dyn VectorField>)
                        .collect(),
                ))
            }
        }
    }
}

/// Look up a flowable field by name: conserved quantities give their
/// Hamiltonian fields, Casimir names their derived fields.
pub fn field_by_name(spec: &SystemSpec, name: &str) -> Option<Arc<dyn VectorField>> {
    if let Some(i) = spec.function_names.iter().position(|n| n == name) {
        return Some(Arc::new(hamiltonian_field(
            &spec.chart,
            spec.functions[i].clone(),
        )));
    }
    let i = spec.casimir_names.iter().position(|n| n == name)?;
    let fields = integrability::derived_fields(&spec.chart, &spec.functions, &spec.casimirs);
    fields
        .into_iter()
        .nth(i)
        .map(|f| Arc::new(f) as Arc<dyn VectorField>)
}

fn group_string(a: usize, b: usize) -> String {
    match (a, b) {
        (0, 0) => "point".into(),
        (a, 0) => format!("R^{a}"),
        (0, b) => format!("T^{b}"),
        (a, b) => format!("R^{a} x T^{b}"),
    }
}

fn fail_reasons(problems: Vec<String>) -> Option<String> {
    if problems.is_empty() {
        None
    } else {
        Some(problems.join("; "))
    }
}

fn bracket_body(spec: &SystemSpec) -> Stage<BracketStage> {
    let samples = match spec.sample_points() {
        Ok(s) => s,
        Err(e) => return Stage::error(format!("sampling: {e}"), 0.0),
    };
    let t = &spec.tolerances;
    if spec.k() <= spec.n() {
        let rep = match integrability::check_involution(
            &spec.chart,
            &spec.functions,
            &samples,
            t.involution,
        ) {
            Ok(r) => r,
            Err(e) => return Stage::error(e.to_string(), 0.0),
        };
        let inv = Claim::residual(rep.max_involution_residual, t.involution);
        let rank = RankClaim::exact(rep.jacobian_rank_range(), spec.k());
        let mut problems = Vec::new();
        if !inv.ok {
            problems.push(format!(
                "involution residual {:.3e} exceeds {:.1e}",
                inv.value, inv.tol
            ));
        }
        if !rank.ok {
            problems.push(format!(
                "Jacobian rank range {}..={}, expected {}",
                rank.min, rank.max, rank.expected
            ));
        }
        if let Verdict::Failed { reason } = &rep.verdict {
            problems.push(reason.clone());
        }
        let reason = fail_reasons(problems);
        Stage {
            status: if reason.is_none() {
                Status::Passed
            } else {
                Status::Failed
            },
            reason,
            seconds: 0.0,
            data: Some(BracketStage {
                kind: "involution".into(),
                samples: samples.len(),
                involution_residual: Some(inv),
                worst_pair: rep.worst_pair.map(|(i, j)| [i, j]),
                closure_residual: None,
                matched_groups: None,
                structure_consistency: None,
                casimir_residual: None,
                jacobian_rank: rank,
                s_rank: None,
                verdict: rep.verdict.to_string(),
                diagnostics: rep.diagnostics,
            }),
        }
    } else {
        closure_body(spec, samples)
    }
}

fn closure_body(spec: &SystemSpec, samples: Vec<DVector<f64>>) -> Stage<BracketStage> {
    let t = &spec.tolerances;
    let augmented = if spec.casimirs.is_empty() {
        samples.clone()
    } else {
        let fields = integrability::derived_fields(&spec.chart, &spec.functions, &spec.casimirs);
        let opts = IntegratorOptions::with_tol(t.integrator);
        match integrability::fiber_partners(&fields, &samples, &spec.partner_times, &opts) {
            Ok(a) => a,
            Err(e) => return Stage::error(format!("fiber partners: {e}"), 0.0),
        }
    };
    let rep = match integrability::check_closure(
        &spec.chart,
        &spec.functions,
        &augmented,
        t.pair_match,
        t.closure,
    ) {
        Ok(r) => r,
        Err(e) => return Stage::error(e.to_string(), 0.0),
    };

    let closure_claim = rep.closure_residual.map(|r| Claim::residual(r, t.closure));
    let rank = RankClaim::exact(rep.jacobian_rank_range(), spec.k());
    let expected_s = 2 * (spec.k() - spec.n());
    let s_rank = RankClaim::exact(rep.s_rank_range(), expected_s);

    let mut problems = Vec::new();
    let mut consistency = None;
    let mut casimir_claim = None;
    if let Some(s) = &spec.closure {
        match s.consistency(&spec.chart, &spec.functions, &samples) {
            Ok(c) => {
                let claim = Claim::residual(c.max_residual, t.closure);
                if !claim.ok {
                    problems.push(format!(
                        "declared closure table off by {:.3e} (tol {:.1e})",
                        claim.value, claim.tol
                    ));
                }
                consistency = Some(claim);
            }
            Err(e) => return Stage::error(e.to_string(), 0.0),
        }
        if !spec.casimirs.is_empty() {
            let mut xs = Vec::with_capacity(samples.len());
            for z in &samples {
                let mut fv = Vec::with_capacity(spec.k());
                for f in &spec.functions {
                    match f.eval(z.as_slice()) {
                        Ok(v) => fv.push(v),
                        Err(e) => return Stage::error(e.to_string(), 0.0),
                    }
                }
                xs.push(DVector::from_vec(fv));
            }
            match integrability::verify_casimirs(s, &spec.casimirs, &xs, tolerances::CASIMIR) {
                Ok(c) => {
                    if let Some(f) = &c.failure {
                        problems.push(f.clone());
                    }
                    casimir_claim = Some(Claim {
                        value: c.max_residual,
                        tol: tolerances::CASIMIR,
                        ok: c.ok,
                    });
                }
                Err(e) => return Stage::error(e.to_string(), 0.0),
            }
        }
    }

    if let Some(c) = &closure_claim {
        if !c.ok {
            problems.push(format!(
                "fiber-pair closure spread {:.3e} exceeds {:.1e}",
                c.value, c.tol
            ));
        }
    }
    if !rank.ok {
        problems.push(format!(
            "Jacobian rank range {}..={}, expected {}",
            rank.min, rank.max, rank.expected
        ));
    }
    if !s_rank.ok {
        problems.push(format!(
            "rank(s) range {}..={}, expected {}",
            s_rank.min, s_rank.max, s_rank.expected
        ));
    }

    let unverifiable = rep.closure_unverifiable.clone();
    let data = BracketStage {
        kind: "closure".into(),
        samples: augmented.len(),
        involution_residual: None,
        worst_pair: rep.worst_pair.map(|(i, j)| [i, j]),
        closure_residual: closure_claim,
        matched_groups: Some(rep.matched_groups),
        structure_consistency: consistency,
        casimir_residual: casimir_claim,
        jacobian_rank: rank,
        s_rank: Some(s_rank),
        verdict: rep.verdict.to_string(),
        diagnostics: rep.diagnostics,
    };
    if let Some(why) = unverifiable {
        return Stage {
            status: Status::Inconclusive,
            reason: Some(why),
            seconds: 0.0,
            data: Some(data),
        };
    }
    let reason = fail_reasons(problems);
    Stage {
        status: if reason.is_none() {
            Status::Passed
        } else {
            Status::Failed
        },
        reason,
        seconds: 0.0,
        data: Some(data),
    }
}

/// Lattice base point when declared, otherwise the sample box center.
pub fn representative_point(spec: &SystemSpec) -> Vec<f64> {
    if let Some(l) = &spec.lattice {
        return l.base_point.clone();
    }
    spec.sample_box
        .lo()
        .iter()
        .zip(spec.sample_box.hi())
        .map(|(a, b)| 0.5 * (a + b))
        .collect()
}

fn completeness_body(spec: &SystemSpec) -> Stage<CompletenessStage> {
    let point = representative_point(spec);
    let opts = IntegratorOptions {
        blowup_bound: spec.completeness.bound,
        ..IntegratorOptions::default()
    };

    let mut probed: Vec<(String, Arc<dyn VectorField>)> = Vec::new();
    for (name, f) in spec.function_names.iter().zip(&spec.functions) {
        probed.push((
            name.clone(),
            Arc::new(hamiltonian_field(&spec.chart, f.clone())),
        ));
    }
    if !spec.casimirs.is_empty() {
        let derived =
            integrability::derived_fields(&spec.chart, &spec.functions, &spec.casimirs);
        for (name, f) in spec.casimir_names.iter().zip(derived) {
            probed.push((name.clone(), Arc::new(f)));
        }
    }

    let mut probes = Vec::with_capacity(probed.len());
    let mut blown = Vec::new();
    let mut undecided = Vec::new();
    for (name, field) in &probed {
        let record = match completeness_probe(
            field.as_ref(),
            &point,
            spec.completeness.horizon,
            &opts,
        ) {
            ProbeVerdict::NoBlowupWithinHorizon => ProbeRecord {
                field: name.clone(),
                verdict: "no-blowup-within-horizon".into(),
                blowup_t: None,
                detail: None,
            },
            ProbeVerdict::BlowupDetected { t } => {
                blown.push(format!("{name} blew up at t = {t:.3}"));
                ProbeRecord {
                    field: name.clone(),
                    verdict: "blowup-detected".into(),
                    blowup_t: Some(t),
                    detail: None,
                }
            }
            ProbeVerdict::Inconclusive { reason } => {
                undecided.push(format!("{name}: {reason}"));
                ProbeRecord {
                    field: name.clone(),
                    verdict: "inconclusive".into(),
                    blowup_t: None,
                    detail: Some(reason),
                }
            }
        };
        probes.push(record);
    }

    let data = CompletenessStage {
        horizon: spec.completeness.horizon,
        bound: spec.completeness.bound,
        base_point: point,
        probes,
        heuristic: COMPLETENESS_HEURISTIC.into(),
    };
    let (status, reason) = if !blown.is_empty() {
        (Status::Failed, Some(blown.join("; ")))
    } else if !undecided.is_empty() {
        (Status::Inconclusive, Some(undecided.join("; ")))
    } else {
        (Status::Passed, None)
    };
    Stage {
        status,
        reason,
        seconds: 0.0,
        data: Some(data),
    }
}

/// The lattice stage on its own, for the `lattice` subcommand.
pub fn lattice_stage(spec: &SystemSpec) -> Stage<LatticeStage> {
    staged(true, || lattice_body(spec))
}

fn lattice_body(spec: &SystemSpec) -> Stage<LatticeStage> {
    let Some(cfg) = &spec.lattice else {
        return Stage::skipped("no [lattice] section in the spec");
    };
    let (names, fields) = match fiber_legs(spec) {
        Ok(x) => x,
        Err(reason) => return Stage::skipped(reason),
    };
    let opts = IntegratorOptions::with_tol(spec.tolerances.integrator);
    let action = match FlowAction::new(fields, DVector::from_vec(cfg.base_point.clone()), opts) {
        Ok(a) => a,
        Err(e) => return Stage::error(e.to_string(), 0.0),
    };
    let lat = match fibergeom::detect_lattice(&action, &cfg.search) {
        Ok(l) => l,
        Err(e @ LatticeError::NonCommuting { .. }) => {
            return Stage {
                status: Status::Failed,
                reason: Some(e.to_string()),
                seconds: 0.0,
                data: None,
            }
        }
        Err(e) => return Stage::error(e.to_string(), 0.0),
    };

    let residuals: Vec<Claim> = lat
        .residuals
        .iter()
        .map(|&r| Claim::residual(r, spec.tolerances.lattice))
        .collect();
    let mut problems = Vec::new();
    for (c, b) in residuals.iter().zip(&lat.basis) {
        if !c.ok {
            problems.push(format!(
                "return distance {:.3e} at basis vector {:?} exceeds {:.1e}",
                c.value,
                b.as_slice(),
                c.tol
            ));
        }
    }
    let (m, h) = (lat.m, lat.h());
    let data = LatticeStage {
        legs: names,
        m,
        h,
        fiber: group_string(m - h, h),
        base_point: cfg.base_point.clone(),
        search_radius: cfg.search.radius,
        basis: lat.basis.iter().map(|b| b.as_slice().to_vec()).collect(),
        residuals,
    };
    let reason = fail_reasons(problems);
    Stage {
        status: if reason.is_none() {
            Status::Passed
        } else {
            Status::Failed
        },
        reason,
        seconds: 0.0,
        data: Some(data),
    }
}

fn action_angle_body(
    spec: &SystemSpec,
    lattice: &Stage<LatticeStage>,
) -> Stage<ActionAngleStage> {
    let Some(cfg) = &spec.lattice else {
        return Stage::skipped("needs a [lattice] base point");
    };
    if lattice.status != Status::Passed {
        return Stage::skipped("needs a passed lattice stage");
    }
    let lat = lattice.data.as_ref().expect("passed stage has data");
    if spec.n() != 1 {
        return Stage::skipped("action-angle charts are built for one-degree systems");
    }
    if lat.m != 1 || lat.h != 1 {
        return Stage::skipped(format!(
            "fiber {} is not a circle, no angle to build",
            lat.fiber
        ));
    }

    let field = Arc::new(hamiltonian_field(&spec.chart, spec.functions[0].clone()));
    let aa = match ActionAngle1::new(
        field,
        canonical_one_form(&spec.chart),
        DVector::from_vec(cfg.base_point.clone()),
        IntegratorOptions::with_tol(spec.tolerances.integrator),
    ) {
        Ok(a) => a,
        Err(e) => return Stage::error(e.to_string(), 0.0),
    };
    let period = match aa.period(&cfg.base_point) {
        Ok(p) => p,
        Err(e) => return Stage::error(format!("period at base point: {e}"), 0.0),
    };
    let action = match aa.action(&cfg.base_point) {
        Ok(a) => a,
        Err(e) => return Stage::error(format!("action at base point: {e}"), 0.0),
    };

    let samples = match spec.sample_points() {
        Ok(s) => s,
        Err(e) => return Stage::error(format!("sampling: {e}"), 0.0),
    };
    let take = samples.len().min(DARBOUX_SAMPLES);
    let omega = spec.chart.omega_matrix();
    let residual = match fibergeom::darboux_residual(
        |z| {
            let (i, y) = aa.map(z)?;
            Ok(DVector::from_vec(vec![i, y]))
        },
        2,
        &[false, true],
        &omega,
        &samples[..take],
        tolerances::DARBOUX_FD_STEP,
    ) {
        Ok(r) => r,
        Err(e) => return Stage::error(format!("darboux residual: {e}"), 0.0),
    };
    let claim = Claim::residual(residual, spec.tolerances.darboux);
    let data = ActionAngleStage {
        base_point: cfg.base_point.clone(),
        action,
        period,
        loop_points: aa.loop_points,
        angular: vec![false, true],
        darboux_residual: claim,
    };
    let reason = (!claim.ok).then(|| {
        format!(
            "Darboux residual {:.3e} exceeds {:.1e}",
            claim.value, claim.tol
        )
    });
    Stage {
        status: if reason.is_none() {
            Status::Passed
        } else {
            Status::Failed
        },
        reason,
        seconds: 0.0,
        data: Some(data),
    }
}

fn connection_body(spec: &SystemSpec) -> Stage<ConnectionStage> {
    let Some(cfg) = &spec.lattice else {
        return Stage::skipped("needs a [lattice] base point for the frame domain");
    };
    let (names, fields) = match fiber_legs(spec) {
        Ok(x) => x,
        Err(reason) => return Stage::skipped(reason),
    };
    let base = &cfg.base_point;
    let domain = SampleBox::new(
        base.iter().map(|x| x - FRAME_BOX_WIDTH).collect(),
        base.iter().map(|x| x + FRAME_BOX_WIDTH).collect(),
    );
    let frame = match ConnectionFrame::new(fields.clone(), domain.clone()) {
        Ok(f) => f,
        Err(e @ AffineError::DependentFrame { .. }) => {
            return Stage {
                status: Status::Failed,
                reason: Some(e.to_string()),
                seconds: 0.0,
                data: None,
            }
        }
        Err(e) => return Stage::error(e.to_string(), 0.0),
    };
    let samples = sampling::sample(spec.seed.wrapping_add(1), &domain, CONNECTION_SAMPLES);
    let m = frame.m();

    let mut max_curvature = 0.0_f64;
    let mut max_torsion = 0.0_f64;
    for z in &samples {
        for i in 0..m {
            for j in (i + 1)..m {
                for target in 0..m {
                    let r = match affine::curvature(
                        &frame,
                        frame.field(i).as_ref(),
                        frame.field(j).as_ref(),
                        frame.field(target).as_ref(),
                        z.as_slice(),
                    ) {
                        Ok(v) => v.norm(),
                        Err(e) => return Stage::error(format!("curvature: {e}"), 0.0),
                    };
                    max_curvature = max_curvature.max(r);
                }
                let tor = match affine::torsion(&frame, i, j, z.as_slice()) {
                    Ok(v) => v,
                    Err(e) => return Stage::error(format!("torsion: {e}"), 0.0),
                };
                let br = match lie_bracket(
                    frame.field(i).as_ref(),
                    frame.field(j).as_ref(),
                    z.as_slice(),
                ) {
                    Ok(v) => v,
                    Err(e) => return Stage::error(format!("bracket: {e}"), 0.0),
                };
                max_torsion = max_torsion.max((tor + br).norm());
            }
        }
    }

    let opts = IntegratorOptions::with_tol(spec.tolerances.integrator);
    let mut max_geodesic = 0.0_f64;
    for i in 0..m {
        let r = match affine::geodesic_residual(&frame, i, base, GEODESIC_WINDOW, &opts) {
            Ok(r) => r,
            Err(e) => return Stage::error(format!("geodesic: {e}"), 0.0),
        };
        max_geodesic = max_geodesic.max(r);
    }

    let loop_path = rectangle_loop(base, HOLONOMY_EDGE);
    let v0 = match frame.field(0).value(base) {
        Ok(v) => v,
        Err(e) => return Stage::error(format!("holonomy start vector: {e}"), 0.0),
    };
    let returned =
        match affine::parallel_transport_ode(&frame, &loop_path, &v0, HOLONOMY_SUBSTEPS) {
            Ok(v) => v,
            Err(e) => return Stage::error(format!("holonomy transport: {e}"), 0.0),
        };
    let holonomy = (returned - &v0).norm();

    let constraints: Vec<Arc<dyn ScalarField>> = spec
        .functions
        .iter()
        .map(|f| Arc::new(f.clone()) as Arc<dyn ScalarField>)
        .collect();
    let mut omega_match = Some(0.0_f64);
    'omega: for z in &samples {
        for i in 0..m {
            for j in 0..m {
                match affine::omega_connection(
                    &spec.chart,
                    &constraints,
                    frame.field(i).as_ref(),
                    frame.field(j).as_ref(),
                    z.as_slice(),
                ) {
                    Ok(v) => {
                        omega_match = omega_match.map(|c| c.max(v.norm()));
                    }
                    Err(AffineError::Tangency { .. }) | Err(AffineError::Isotropy { .. }) => {
                        omega_match = None;
                        break 'omega;
                    }
                    Err(e) => return Stage::error(format!("omega connection: {e}"), 0.0),
                }
            }
        }
    }

    let curvature = Claim::residual(max_curvature, tolerances::CURVATURE);
    let torsion = Claim::residual(max_torsion, tolerances::TORSION_MATCH);
    let geodesic = Claim::residual(max_geodesic, tolerances::GEODESIC);
    let holonomy_return = Claim::residual(holonomy, tolerances::TRANSPORT_RETURN);
    let omega_claim = omega_match.map(|v| Claim::residual(v, tolerances::OMEGA_MATCH));

    let mut problems = Vec::new();
    for (name, c) in [
        ("curvature", &curvature),
        ("torsion vs bracket", &torsion),
        ("geodesic residual", &geodesic),
        ("holonomy return", &holonomy_return),
    ] {
        if !c.ok {
            problems.push(format!("{name} {:.3e} exceeds {:.1e}", c.value, c.tol));
        }
    }
    if let Some(c) = &omega_claim {
        if !c.ok {
            problems.push(format!(
                "omega connection mismatch {:.3e} exceeds {:.1e}",
                c.value, c.tol
            ));
        }
    }

    let data = ConnectionStage {
        frame: names,
        samples: samples.len(),
        curvature,
        torsion_vs_bracket: torsion,
        geodesic,
        holonomy_return,
        omega_match: omega_claim,
    };
    let reason = fail_reasons(problems);
    Stage {
        status: if reason.is_none() {
            Status::Passed
        } else {
            Status::Failed
        },
        reason,
        seconds: 0.0,
        data: Some(data),
    }
}

fn rectangle_loop(base: &[f64], edge: f64) -> Vec<DVector<f64>> {
    let z0 = DVector::from_column_slice(base);
    let mut e0 = DVector::zeros(base.len());
    e0[0] = edge;
    let mut e1 = DVector::zeros(base.len());
    e1[1] = edge;
    vec![z0.clone(), &z0 + &e0, &z0 + &e0 + &e1, &z0 + &e1, z0]
}

fn status_flag(s: Status) -> Flag {
    match s {
        Status::Passed => Flag::True,
        Status::Failed => Flag::False,
        _ => Flag::Unknown,
    }
}

fn verdict_body(
    spec: &SystemSpec,
    bracket: &Stage<BracketStage>,
    completeness: &Stage<CompletenessStage>,
    lattice: &Stage<LatticeStage>,
) -> Stage<VerdictStage> {
    if lattice.status != Status::Passed {
        return Stage::skipped("needs the fiber classification from the lattice stage");
    }
    let lat = lattice.data.as_ref().expect("passed stage has data");
    let group = (lat.m - lat.h, lat.h);
    let mode = spec.expected_mode();

    let independence = match (bracket.status, &bracket.data) {
        (Status::Passed, Some(d)) | (Status::Failed, Some(d)) => Flag::from(d.jacobian_rank.ok),
        _ => Flag::Unknown,
    };
    let casimirs = match mode {
        Mode::Noncommutative => match &bracket.data {
            Some(d) => d
                .casimir_residual
                .map_or(Flag::Unknown, |c| Flag::from(c.ok)),
            None => Flag::Unknown,
        },
        _ => Flag::True,
    };
    let flags = HypothesisFlags {
        bracket_check: status_flag(bracket.status),
        completeness: status_flag(completeness.status),
        independence,
        casimirs,
    };
    let v = bundleclass::decide(group, &spec.topology, mode, &flags);

    let mode_counted = match mode {
        Mode::Complete => format!("complete({})", spec.n()),
        Mode::Partial => format!("partial({})", spec.k()),
        Mode::Noncommutative => format!("noncommutative({})", spec.k()),
    };
    let topo = &spec.topology;
    let data = VerdictStage {
        mode: mode_counted,
        structure_group: group_string(group.0, group.1),
        applicable: v.applicable.to_string(),
        trivial: v.trivial.to_string(),
        splitting: v.splitting,
        unmet: v.unmet,
        diagnostics: v.diagnostics,
        topology: TopologyInfo {
            base: topo.base.clone(),
            simply_connected: topo.simply_connected.to_string(),
            h2_zero: topo.h2_zero.to_string(),
            pi2_zero: topo.pi2_zero.map(|f| f.to_string()),
            provenance: match topo.provenance {
                Provenance::UserDeclared => "declared".into(),
                Provenance::DerivedTrivially => "derived".into(),
            },
        },
    };
    Stage {
        status: Status::Passed,
        reason: None,
        seconds: 0.0,
        data: Some(data),
    }
}
