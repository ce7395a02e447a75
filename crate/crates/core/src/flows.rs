//! Adaptive flows of vector fields.
//!
//! The integrator is an embedded Dormand-Prince 4(5) pair with a PI step
//! controller: the fifth-order solution is advanced, the fourth-order
//! embedded solution estimates the per-step error against a mixed
//! absolute/relative tolerance. Blow-up (infinity norm above a bound) and
//! step underflow are reported as errors carrying the time of failure, so
//! qualitative completeness probes can lean on them.

use std::io;
use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

use crate::expr::EvalError;
use crate::symplectic::VectorField;
use crate::tolerances;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("state norm exceeded {bound:.1e} at t = {t:.6} (blow-up)")]
    BlowUp { t: f64, bound: f64 },
    #[error("step size underflow at t = {t:.6}")]
    StepUnderflow { t: f64 },
    #[error("step budget of {budget} exhausted at t = {t:.6}")]
    StepBudget { budget: usize, t: f64 },
    #[error("leg {leg}: {source}")]
    Leg {
        leg: usize,
        #[source]
        source: Box<FlowError>,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl FlowError {
    fn in_leg(self, leg: usize) -> FlowError {
        FlowError::Leg {
            leg,
            source: Box::new(self),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Per-step error tolerance; used as both absolute and relative scale.
    pub tol: f64,
    /// Infinity-norm bound beyond which the state counts as blown up.
    pub blowup_bound: f64,
    /// Bound on step attempts (accepted plus rejected).
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: tolerances::INTEGRATOR,
            blowup_bound: tolerances::BLOWUP_BOUND,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> IntegratorOptions {
        IntegratorOptions {
            tol,
            ..IntegratorOptions::default()
        }
    }
}

// Dormand-Prince 5(4) tableau. The last A row equals the fifth-order
// weights, so the seventh stage is the first stage of the next step. The
// stage times (0, 1/5, 3/10, 4/5, 8/9, 1, 1) never appear because all
// fields here are autonomous.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// b5 - b4, applied to the stages for the embedded error estimate. The b5
// weights themselves are the last A row and never appear separately.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;

fn inf_norm(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Advance `start` along `field` for time `t`, invoking `on_accept` after
/// every accepted step (including the initial state at time zero).
fn advance(
    field: &dyn VectorField,
    start: &[f64],
    t: f64,
    opts: &IntegratorOptions,
    mut on_accept: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>, FlowError> {
    let d = field.dim();
    assert_eq!(start.len(), d, "start point dimension mismatch");
    let mut y = start.to_vec();
    on_accept(0.0, &y);
    if inf_norm(&y) > opts.blowup_bound {
        return Err(FlowError::BlowUp {
            t: 0.0,
            bound: opts.blowup_bound,
        });
    }
    if t == 0.0 {
        return Ok(y);
    }

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; d]; 7];
    let mut y_stage = vec![0.0; d];
    let mut y_new = vec![0.0; d];

    // First derivative at an accepted point: failures here are real domain
    // errors, not overshoot, and are not retried.
    field.value_into(&y, &mut k[0])?;

    let dir = t.signum();
    let mut h = dir * (0.01 * (inf_norm(&y) + 1.0) / (inf_norm(&k[0]) + 1e-8)).min(t.abs());
    let underflow = tolerances::STEP_UNDERFLOW_FACTOR * t.abs();
    let mut t_now = 0.0;
    let mut err_prev: f64 = 1e-4;
    let mut attempts = 0usize;

    loop {
        let remaining = t - t_now;
        if remaining == 0.0 {
            return Ok(y);
        }
        let mut last = false;
        if remaining.abs() <= h.abs() {
            h = remaining;
            last = true;
        }
        if h.abs() < underflow {
            return Err(FlowError::StepUnderflow { t: t_now });
        }
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(FlowError::StepBudget {
                budget: opts.max_steps,
                t: t_now,
            });
        }

        // Trial stages. An evaluation failure is treated as overshoot:
        // shrink and retry until the step underflows.
        let mut stage_failed = false;
        for s in 1..7 {
            for i in 0..d {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            if s == 6 {
                // FSAL: the seventh stage point is the fifth-order solution.
                y_new.copy_from_slice(&y_stage);
            }
            match field.value_into(&y_stage, &mut k[s]) {
                Ok(()) => {}
                Err(EvalError::Dimension { .. }) => unreachable!("dimensions checked"),
                Err(_) => {
                    stage_failed = true;
                    break;
                }
            }
        }
        if stage_failed {
            h *= 0.25;
            continue;
        }

        // y_new now holds the fifth-order solution (stage 7 input).
        let mut err_sq = 0.0;
        for i in 0..d {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let scale = opts.tol + opts.tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / d as f64).sqrt();

        if err <= 1.0 {
            t_now = if last { t } else { t_now + h };
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            on_accept(t_now, &y);
            if inf_norm(&y) > opts.blowup_bound {
                return Err(FlowError::BlowUp {
                    t: t_now,
                    bound: opts.blowup_bound,
                });
            }
            let e = err.max(1e-16);
            let fac = (SAFETY * e.powf(-PI_ALPHA) * err_prev.powf(PI_BETA)).clamp(0.2, 5.0);
            err_prev = e.max(1e-10);
            h *= fac;
        } else {
            h *= (SAFETY * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
}

/// Endpoint of the flow of `field` for time `t` from `start`.
pub fn integrate(
    field: &dyn VectorField,
    start: &[f64],
    t: f64,
    opts: &IntegratorOptions,
) -> Result<DVector<f64>, FlowError> {
    advance(field, start, t, opts, |_, _| ()).map(DVector::from_vec)
}

/// Accepted-step history of a flow.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    /// CSV with header `t,x1,..,x2n`; first row is the initial state.
    pub fn write_csv<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "t")?;
        let d = self.states.first().map_or(0, |s| s.len());
        for i in 1..=d {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for (t, z) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in z.iter() {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Flow of `field` for time `t`, recording every accepted step.
pub fn integrate_trajectory(
    field: &dyn VectorField,
    start: &[f64],
    t: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, FlowError> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    advance(field, start, t, opts, |tk, yk| {
        times.push(tk);
        states.push(DVector::from_column_slice(yk));
    })?;
    Ok(Trajectory { times, states })
}

/// An R^m action by composed flows of `m` fields from a base point.
pub struct FlowAction {
    fields: Vec<Arc<dyn VectorField>>,
    base: DVector<f64>,
    opts: IntegratorOptions,
}

impl FlowAction {
    /// Validates that every field evaluates at the base point.
    pub fn new(
        fields: Vec<Arc<dyn VectorField>>,
        base: DVector<f64>,
        opts: IntegratorOptions,
    ) -> Result<FlowAction, FlowError> {
        assert!(!fields.is_empty(), "an action needs at least one field");
        let d = base.len();
        assert!(
            fields.iter().all(|f| f.dim() == d),
            "field dimensions must match the base point"
        );
        for f in &fields {
            f.value(base.as_slice())?;
        }
        Ok(FlowAction { fields, base, opts })
    }

    pub fn m(&self) -> usize {
        self.fields.len()
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn fields(&self) -> &[Arc<dyn VectorField>] {
        &self.fields
    }

    pub fn options(&self) -> &IntegratorOptions {
        &self.opts
    }

    /// `Phi(t)` applied to the base point; legs run in index order.
    pub fn compose(&self, t: &[f64]) -> Result<DVector<f64>, FlowError> {
        self.compose_from(self.base.as_slice(), t)
    }

    /// `Phi(t)` applied to `start`. Errors are annotated with the leg index
    /// (1-based) in which they occurred.
    pub fn compose_from(&self, start: &[f64], t: &[f64]) -> Result<DVector<f64>, FlowError> {
        assert_eq!(t.len(), self.fields.len(), "one time per field");
        let mut z = DVector::from_column_slice(start);
        for (leg, (field, &tl)) in self.fields.iter().zip(t).enumerate() {
            if tl == 0.0 {
                continue;
            }
            z = integrate(field, z.as_slice(), tl, &self.opts).map_err(|e| e.in_leg(leg + 1))?;
        }
        Ok(z)
    }
}

/// `|Phi_t^X(Phi_s^Y(z)) - Phi_s^Y(Phi_t^X(z))|`, the flow commutation
/// defect at finite times.
pub fn commutation_residual(
    x: &dyn VectorField,
    y: &dyn VectorField,
    start: &[f64],
    t: f64,
    s: f64,
    opts: &IntegratorOptions,
) -> Result<f64, FlowError> {
    let ys = integrate(y, start, s, opts)?;
    let a = integrate(x, ys.as_slice(), t, opts)?;
    let xt = integrate(x, start, t, opts)?;
    let b = integrate(y, xt.as_slice(), s, opts)?;
    Ok((a - b).norm())
}

/// Outcome of a completeness probe at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeVerdict {
    /// The orbit stayed within the norm bound for `|t| <= horizon`.
    NoBlowupWithinHorizon,
    /// The norm bound was crossed at the given (signed) time.
    BlowupDetected { t: f64 },
    /// The integrator failed before the horizon for another reason.
    Inconclusive { reason: String },
}

/// Integrate forward and backward to `horizon` and classify. This is a
/// heuristic witness for completeness, not a proof: it only reports what
/// happened inside the horizon.
pub fn completeness_probe(
    field: &dyn VectorField,
    point: &[f64],
    horizon: f64,
    opts: &IntegratorOptions,
) -> ProbeVerdict {
    for dir in [1.0, -1.0] {
        match integrate(field, point, dir * horizon, opts) {
            Ok(_) => {}
            Err(FlowError::BlowUp { t, .. }) => {
                return ProbeVerdict::BlowupDetected { t: dir * t.abs() }
            }
            Err(e) => {
                return ProbeVerdict::Inconclusive {
                    reason: e.to_string(),
                }
            }
        }
    }
    ProbeVerdict::NoBlowupWithinHorizon
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{hamiltonian_field, SymplecticChart, VectorFieldExpr};
    use std::f64::consts::PI;

    fn oscillator() -> (SymplecticChart, crate::expr::Expression) {
        let chart = SymplecticChart::new(1, &["p", "q"]).unwrap();
        let h = chart.parse("(p^2 + q^2)/2").unwrap();
        (chart, h)
    }

    #[test]
    fn free_particle_drift() {
        let (chart, _) = oscillator();
        let f = chart.parse("p").unwrap();
        let xf = hamiltonian_field(&chart, f);
        let z = integrate(&xf, &[1.0, 0.0], 3.0, &IntegratorOptions::default()).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12);
        assert!((z[1] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn oscillator_period_return() {
        let (chart, h) = oscillator();
        let xh = hamiltonian_field(&chart, h);
        let z = integrate(
            &xh,
            &[1.0, 0.0],
            2.0 * PI,
            &IntegratorOptions::with_tol(1e-10),
        )
        .unwrap();
        let err = ((z[0] - 1.0).powi(2) + z[1].powi(2)).sqrt();
        assert!(err < 1e-7, "return error {err}");
    }

    #[test]
    fn energy_drift_stays_small() {
        let (chart, h) = oscillator();
        let xh = hamiltonian_field(&chart, h.clone());
        let traj = integrate_trajectory(
            &xh,
            &[1.0, 0.0],
            100.0,
            &IntegratorOptions::with_tol(1e-10),
        )
        .unwrap();
        let e0 = h.eval(&[1.0, 0.0]).unwrap();
        for z in &traj.states {
            let e = h.eval(z.as_slice()).unwrap();
            assert!((e - e0).abs() < 1e-6, "energy drift {}", (e - e0).abs());
        }
    }

    #[test]
    fn flow_additivity() {
        let (chart, h) = oscillator();
        let xh = hamiltonian_field(&chart, h);
        let opts = IntegratorOptions::with_tol(1e-11);
        let a = integrate(&xh, &[0.8, -0.4], 1.7, &opts).unwrap();
        let b = integrate(&xh, a.as_slice(), 0.9, &opts).unwrap();
        let c = integrate(&xh, &[0.8, -0.4], 2.6, &opts).unwrap();
        assert!((b - c).norm() < 1e-9);
    }

    #[test]
    fn two_oscillator_action_returns_to_base() {
        let chart = SymplecticChart::standard(2);
        let h1 = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let h2 = hamiltonian_field(&chart, chart.parse("(p2^2 + q2^2)/2").unwrap());
        let base = DVector::from_vec(vec![1.0, 0.5, 0.0, -0.3]);
        let action = FlowAction::new(
            vec![Arc::new(h1), Arc::new(h2)],
            base.clone(),
            IntegratorOptions::with_tol(1e-11),
        )
        .unwrap();
        let z = action.compose(&[2.0 * PI, 2.0 * PI]).unwrap();
        assert!((z - base).norm() < 1e-7);
    }

    #[test]
    fn leg_order_is_irrelevant_for_commuting_legs() {
        let chart = SymplecticChart::standard(2);
        let h1 = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let h2 = hamiltonian_field(&chart, chart.parse("(p2^2 + q2^2)/2").unwrap());
        let base = DVector::from_vec(vec![0.9, -0.2, 0.1, 0.7]);
        let opts = IntegratorOptions::with_tol(1e-11);
        let fwd = FlowAction::new(
            vec![Arc::new(h1), Arc::new(h2)],
            base.clone(),
            opts,
        )
        .unwrap();
        let h1b = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let h2b = hamiltonian_field(&chart, chart.parse("(p2^2 + q2^2)/2").unwrap());
        let rev = FlowAction::new(vec![Arc::new(h2b), Arc::new(h1b)], base, opts).unwrap();
        let t = [0.8, -0.6];
        let a = fwd.compose(&t).unwrap();
        let b = rev.compose(&[t[1], t[0]]).unwrap();
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn commuting_oscillator_pair_has_tiny_residual() {
        let chart = SymplecticChart::standard(2);
        let h1 = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let h2 = hamiltonian_field(&chart, chart.parse("(p2^2 + q2^2)/2").unwrap());
        let r = commutation_residual(
            &h1,
            &h2,
            &[1.0, 0.5, 0.0, -0.3],
            1.3,
            0.7,
            &IntegratorOptions::with_tol(1e-11),
        )
        .unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn noncommuting_pair_residuals_match_closed_forms() {
        let coords = ["x", "y"];
        let dx = VectorFieldExpr::parse(&["1", "0"], &coords).unwrap();
        let scale = VectorFieldExpr::parse(&["x", "0"], &coords).unwrap();
        let shear = VectorFieldExpr::parse(&["0", "x"], &coords).unwrap();
        let opts = IntegratorOptions::with_tol(1e-11);

        // d_x vs x d_x: flows differ by e - 1 after unit times.
        let r = commutation_residual(&dx, &scale, &[1.0, 0.0], 1.0, 1.0, &opts).unwrap();
        assert!(
            (r - (std::f64::consts::E - 1.0)).abs() < 1e-9,
            "residual {r}"
        );

        // d_x vs x d_y: the defect is the unit vertical shift.
        let r = commutation_residual(&dx, &shear, &[0.2, 0.4], 1.0, 1.0, &opts).unwrap();
        assert!((r - 1.0).abs() < 1e-9, "residual {r}");
    }

    #[test]
    fn quadratic_growth_blows_up_near_one() {
        let coords = ["x"];
        let f = VectorFieldExpr::parse(&["x^2"], &coords).unwrap();
        match integrate(&f, &[1.0], 2.0, &IntegratorOptions::default()) {
            Err(FlowError::BlowUp { t, .. }) => {
                assert!((t - 1.0).abs() < 1e-2, "blow-up time {t}")
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
        let verdict = completeness_probe(
            &f,
            &[1.0],
            2.0,
            &IntegratorOptions::default(),
        );
        match verdict {
            ProbeVerdict::BlowupDetected { t } => assert!((t - 1.0).abs() < 1e-2),
            other => panic!("expected blow-up verdict, got {other:?}"),
        }
    }

    #[test]
    fn bounded_orbit_probe_is_clean() {
        let (chart, h) = oscillator();
        let xh = hamiltonian_field(&chart, h);
        let verdict = completeness_probe(&xh, &[1.0, 0.0], 100.0, &IntegratorOptions::default());
        assert_eq!(verdict, ProbeVerdict::NoBlowupWithinHorizon);
    }

    #[test]
    fn leg_errors_are_annotated() {
        let coords = ["x"];
        let ok = VectorFieldExpr::parse(&["1"], &coords).unwrap();
        let bad = VectorFieldExpr::parse(&["x^2"], &coords).unwrap();
        let action = FlowAction::new(
            vec![Arc::new(ok), Arc::new(bad)],
            DVector::from_vec(vec![1.0]),
            IntegratorOptions::default(),
        )
        .unwrap();
        match action.compose(&[1.0, 5.0]) {
            Err(FlowError::Leg { leg: 2, source }) => {
                assert!(matches!(*source, FlowError::BlowUp { .. }))
            }
            other => panic!("expected annotated leg error, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        let (chart, h) = oscillator();
        let xh = hamiltonian_field(&chart, h);
        let traj =
            integrate_trajectory(&xh, &[1.0, 0.0], 1.0, &IntegratorOptions::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,x2");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first, vec!["0", "1", "0"]);
        assert_eq!(text.lines().count(), traj.times.len() + 1);
    }

    #[test]
    fn tighter_tolerance_improves_return_error() {
        let (chart, h) = oscillator();
        let xh = hamiltonian_field(&chart, h);
        let error_at = |tol: f64| {
            let z = integrate(&xh, &[1.0, 0.0], 2.0 * PI, &IntegratorOptions::with_tol(tol))
                .unwrap();
            ((z[0] - 1.0).powi(2) + z[1].powi(2)).sqrt()
        };
        let e6 = error_at(1e-6);
        let e8 = error_at(1e-8);
        assert!(e6 / e8 >= 4.0, "ratio {}", e6 / e8);
    }
}
