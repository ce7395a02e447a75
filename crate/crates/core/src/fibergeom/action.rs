//! Periods, closed orbit loops, and action integrals.

use nalgebra::DVector;
use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::flows::{integrate, FlowError, IntegratorOptions};
use crate::symplectic::{SymplecticChart, VectorField};
use crate::tolerances;

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("loop does not close: endpoint gap {gap:.3e} exceeds {tol:.1e}")]
    OpenLoop { gap: f64, tol: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Error)]
pub enum PeriodError {
    #[error("the field vanishes at the starting point; no orbit to follow")]
    Stationary,
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Components of theta = sum_l p_l dq^l in chart coordinate order: zero
/// on the dp slots, p_l on the dq^l slot.
pub fn canonical_one_form(chart: &SymplecticChart) -> Vec<Expression> {
    let coords = chart.coords();
    let n = chart.n();
    let mut out = Vec::with_capacity(2 * n);
    for _ in 0..n {
        out.push(Expression::constant(coords, 0.0));
    }
    for l in 0..n {
        out.push(Expression::coordinate(coords, l));
    }
    out
}

/// (1/2pi) times the line integral of theta over the discretized closed
/// loop, by composite trapezoid with one Richardson extrapolation. The
/// loop must close within the loop-closure tolerance; a single point
/// counts as a degenerate closed loop with zero action.
pub fn action_integral(
    theta: &[Expression],
    points: &[DVector<f64>],
) -> Result<f64, ActionError> {
    assert!(!points.is_empty(), "empty loop");
    let gap = (points.last().unwrap() - &points[0]).norm();
    if gap > tolerances::LOOP_CLOSURE {
        return Err(ActionError::OpenLoop {
            gap,
            tol: tolerances::LOOP_CLOSURE,
        });
    }
    let segments = points.len() - 1;
    if segments == 0 {
        return Ok(0.0);
    }
    let full = trapezoid(theta, points, 1)?;
    if segments % 2 == 0 && segments >= 4 {
        let half = trapezoid(theta, points, 2)?;
        Ok(full + (full - half) / 3.0)
    } else {
        Ok(full)
    }
}

fn trapezoid(theta: &[Expression], points: &[DVector<f64>], stride: usize) -> Result<f64, EvalError> {
    let idxs: Vec<usize> = (0..points.len()).step_by(stride).collect();
    let mut values = Vec::with_capacity(idxs.len());
    for &i in &idxs {
        let z = points[i].as_slice();
        let mut v = Vec::with_capacity(theta.len());
        for th in theta {
            v.push(th.eval(z)?);
        }
        values.push(v);
    }
    let mut acc = 0.0;
    for w in idxs.windows(2).zip(values.windows(2)) {
        let ((ia, ib), (va, vb)) = ((w.0[0], w.0[1]), (&w.1[0], &w.1[1]));
        let (za, zb) = (&points[ia], &points[ib]);
        for i in 0..theta.len() {
            acc += 0.5 * (va[i] + vb[i]) * (zb[i] - za[i]);
        }
    }
    Ok(acc / (2.0 * std::f64::consts::PI))
}

/// First return time of the orbit through z0, or `None` when the orbit
/// does not return within the horizon. Returns are detected as oriented
/// crossings of the hyperplane through z0 normal to the initial velocity
/// and refined by bisection.
pub fn detect_period(
    field: &dyn VectorField,
    z0: &[f64],
    horizon: f64,
    scan_points: usize,
    opts: &IntegratorOptions,
) -> Result<Option<f64>, PeriodError> {
    let start = DVector::from_column_slice(z0);
    let v = field.value(z0).map_err(FlowError::from)?;
    let speed = v.norm();
    if speed < 1e-12 {
        return Err(PeriodError::Stationary);
    }
    let vhat = v / speed;

    let dt = horizon / scan_points as f64;
    let mut z_prev = start.clone();
    let mut h_prev = 0.0;
    for i in 1..=scan_points {
        let z = integrate(field, z_prev.as_slice(), dt, opts)?;
        let h = (&z - &start).dot(&vhat);
        let outgoing = field.value(z.as_slice()).map_err(FlowError::from)?.dot(&vhat) > 0.0;
        if h_prev < 0.0 && h >= 0.0 && outgoing {
            let (t_cross, z_cross) =
                refine_crossing(field, &z_prev, &start, &vhat, dt, h_prev, opts)?;
            let t = (i - 1) as f64 * dt + t_cross;
            // A true return lands back at z0; an unrelated oriented
            // crossing of the same hyperplane does not.
            if (&z_cross - &start).norm() < 2.0 * dt * speed {
                return Ok(Some(t));
            }
        }
        h_prev = h;
        z_prev = z;
    }
    Ok(None)
}

/// Bisection for the crossing time of h(t) = <Phi_t(from) - origin, vhat>
/// inside one scan cell; returns the offset time and the crossing point.
fn refine_crossing(
    field: &dyn VectorField,
    from: &DVector<f64>,
    origin: &DVector<f64>,
    vhat: &DVector<f64>,
    dt: f64,
    h_lo: f64,
    opts: &IntegratorOptions,
) -> Result<(f64, DVector<f64>), FlowError> {
    let (mut lo, mut hi) = (0.0, dt);
    let mut glo = h_lo;
    let mut z_mid = from.clone();
    let mut t_mid = 0.0;
    for _ in 0..60 {
        t_mid = 0.5 * (lo + hi);
        z_mid = integrate(field, from.as_slice(), t_mid, opts)?;
        let g = (&z_mid - origin).dot(vhat);
        if g.abs() < 1e-14 * (1.0 + origin.norm()) {
            break;
        }
        if (g < 0.0) == (glo < 0.0) {
            lo = t_mid;
            glo = g;
        } else {
            hi = t_mid;
        }
    }
    Ok((t_mid, z_mid))
}

/// `n_points + 1` points tracing the closed orbit through z0 against the
/// flow direction, so enclosed-area actions come out with the standard
/// orientation. The final point is the integrated return, left unsnapped
/// so closure failures stay visible.
pub fn orbit_loop(
    field: &dyn VectorField,
    z0: &[f64],
    period: f64,
    n_points: usize,
    opts: &IntegratorOptions,
) -> Result<Vec<DVector<f64>>, FlowError> {
    assert!(n_points >= 2);
    let dt = -period / n_points as f64;
    let mut points = Vec::with_capacity(n_points + 1);
    points.push(DVector::from_column_slice(z0));
    for _ in 0..n_points {
        let next = integrate(field, points.last().unwrap().as_slice(), dt, opts)?;
        points.push(next);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::hamiltonian_field;
    use std::f64::consts::PI;

    fn oscillator() -> (SymplecticChart, crate::symplectic::HamiltonianField) {
        let chart = SymplecticChart::standard(1);
        let xh = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        (chart, xh)
    }

    #[test]
    fn oscillator_period_is_two_pi() {
        let (_, xh) = oscillator();
        let t = detect_period(
            &xh,
            &[1.0, 0.0],
            50.0,
            512,
            &IntegratorOptions::with_tol(1e-11),
        )
        .unwrap()
        .unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-9, "period {t}");
    }

    #[test]
    fn free_particle_never_returns() {
        let chart = SymplecticChart::standard(1);
        let xp = hamiltonian_field(&chart, chart.parse("p1").unwrap());
        let t = detect_period(
            &xp,
            &[1.0, 0.0],
            50.0,
            512,
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert_eq!(t, None);
    }

    #[test]
    fn stationary_point_is_an_error() {
        let (_, xh) = oscillator();
        let err = detect_period(&xh, &[0.0, 0.0], 10.0, 128, &IntegratorOptions::default())
            .unwrap_err();
        assert!(matches!(err, PeriodError::Stationary));
    }

    #[test]
    fn pendulum_libration_period_exceeds_two_pi() {
        let chart = SymplecticChart::standard(1);
        let xh = hamiltonian_field(&chart, chart.parse("p1^2/2 + 1 - cos(q1)").unwrap());
        let opts = IntegratorOptions::with_tol(1e-11);
        let z0 = [0.8, 0.0];
        let t = detect_period(&xh, &z0, 50.0, 1024, &opts).unwrap().unwrap();
        assert!(t > 2.0 * PI && t < 1.2 * 2.0 * PI, "period {t}");
        let back = integrate(&xh, &z0, t, &opts).unwrap();
        assert!((back - DVector::from_column_slice(&z0)).norm() < 1e-8);
    }

    #[test]
    fn oscillator_actions_equal_energy() {
        let (chart, xh) = oscillator();
        let theta = canonical_one_form(&chart);
        let opts = IntegratorOptions::with_tol(1e-11);
        for energy in [0.5_f64, 1.0, 2.5] {
            let r = (2.0 * energy).sqrt();
            let z0 = [r, 0.0];
            let t = detect_period(&xh, &z0, 50.0, 512, &opts).unwrap().unwrap();
            let pts = orbit_loop(&xh, &z0, t, 256, &opts).unwrap();
            let action = action_integral(&theta, &pts).unwrap();
            assert!(
                (action - energy).abs() < 1e-6,
                "I({energy}) = {action}"
            );
        }
    }

    #[test]
    fn synthetic_circle_action_is_half_r_squared() {
        let chart = SymplecticChart::standard(1);
        let theta = canonical_one_form(&chart);
        let r = 1.7_f64;
        let n = 4096;
        let pts: Vec<DVector<f64>> = (0..=n)
            .map(|k| {
                let s = 2.0 * PI * k as f64 / n as f64;
                DVector::from_vec(vec![r * s.cos(), r * s.sin()])
            })
            .collect();
        let action = action_integral(&theta, &pts).unwrap();
        assert!((action - r * r / 2.0).abs() < 1e-10, "action {action}");
    }

    #[test]
    fn single_point_loop_has_zero_action() {
        let chart = SymplecticChart::standard(1);
        let theta = canonical_one_form(&chart);
        let pts = vec![DVector::from_vec(vec![1.0, 2.0])];
        assert_eq!(action_integral(&theta, &pts).unwrap(), 0.0);
    }

    #[test]
    fn open_loops_are_rejected() {
        let chart = SymplecticChart::standard(1);
        let theta = canonical_one_form(&chart);
        let pts = vec![
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![0.9, 0.1]),
        ];
        let err = action_integral(&theta, &pts).unwrap_err();
        assert!(matches!(err, ActionError::OpenLoop { .. }));
    }

    #[test]
    fn homotopic_loops_agree() {
        // Same oscillator level traversed from two different start points.
        let (chart, xh) = oscillator();
        let theta = canonical_one_form(&chart);
        let opts = IntegratorOptions::with_tol(1e-11);
        let mut actions = Vec::new();
        for z0 in [[1.0, 0.0], [0.6, 0.8]] {
            let t = detect_period(&xh, &z0, 50.0, 512, &opts).unwrap().unwrap();
            let pts = orbit_loop(&xh, &z0, t, 256, &opts).unwrap();
            actions.push(action_integral(&theta, &pts).unwrap());
        }
        assert!((actions[0] - actions[1]).abs() < 1e-6);
    }
}
