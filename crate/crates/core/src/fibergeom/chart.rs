//! Action-angle charts for one degree of freedom and the Darboux
//! residual that measures whether a chart map is canonical.
//!
//! The angle convention follows the action orientation: loops are
//! traversed against the flow, so the angle of a point is 2pi times the
//! forward flow time to the reference section, divided by the period.
//! Along the forward flow the angle then *decreases* at rate 2pi/T.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use std::sync::Arc;

use crate::expr::Expression;
use crate::flows::{integrate, FlowError, IntegratorOptions};
use crate::numeric;
use crate::symplectic::{SymplecticChart, VectorField};

use super::action::{
    action_integral, detect_period, orbit_loop, ActionError, PeriodError,
};

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("the flow field vanishes at the section point")]
    StationarySection,
    #[error("no return within horizon {horizon}; the orbit looks noncompact")]
    NoReturn { horizon: f64 },
    #[error("no oriented section crossing within one period")]
    NoCrossing,
    #[error("numerical chart Jacobian is singular at sample {index}")]
    GridDegeneracy { index: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Period(#[from] PeriodError),
}

/// Numerical action-angle map for a single compact degree of freedom.
///
/// Actions come from the loop integral of theta over the orbit through
/// the evaluation point; angles from the forward flow time to the
/// oriented section through the reference point, normalized to 2pi per
/// period.
pub struct ActionAngle1 {
    field: Arc<dyn VectorField>,
    theta: Vec<Expression>,
    section_point: DVector<f64>,
    normal: DVector<f64>,
    pub horizon: f64,
    pub scan_points: usize,
    pub loop_points: usize,
    opts: IntegratorOptions,
}

impl ActionAngle1 {
    pub fn new(
        field: Arc<dyn VectorField>,
        theta: Vec<Expression>,
        section_point: DVector<f64>,
        opts: IntegratorOptions,
    ) -> Result<ActionAngle1, ChartError> {
        assert_eq!(theta.len(), field.dim(), "one theta component per coordinate");
        let v = field
            .value(section_point.as_slice())
            .map_err(FlowError::from)?;
        if v.norm() < 1e-12 {
            return Err(ChartError::StationarySection);
        }
        Ok(ActionAngle1 {
            field,
            theta,
            normal: v.normalize(),
            section_point,
            horizon: 50.0,
            scan_points: 512,
            loop_points: 256,
            opts,
        })
    }

    pub fn period(&self, z: &[f64]) -> Result<f64, ChartError> {
        detect_period(
            self.field.as_ref(),
            z,
            self.horizon,
            self.scan_points,
            &self.opts,
        )?
        .ok_or(ChartError::NoReturn {
            horizon: self.horizon,
        })
    }

    pub fn action(&self, z: &[f64]) -> Result<f64, ChartError> {
        let t = self.period(z)?;
        self.action_with_period(z, t)
    }

    /// Angle in [0, 2pi): normalized forward flow time from z to the
    /// oriented section through the reference point.
    pub fn angle(&self, z: &[f64]) -> Result<f64, ChartError> {
        let period = self.period(z)?;
        let t_c = self.section_time(z, period)?;
        Ok(2.0 * std::f64::consts::PI * t_c / period)
    }

    pub fn map(&self, z: &[f64]) -> Result<(f64, f64), ChartError> {
        let period = self.period(z)?;
        let action = self.action_with_period(z, period)?;
        let t_c = self.section_time(z, period)?;
        Ok((action, 2.0 * std::f64::consts::PI * t_c / period))
    }

    fn action_with_period(&self, z: &[f64], period: f64) -> Result<f64, ChartError> {
        let pts = orbit_loop(self.field.as_ref(), z, period, self.loop_points, &self.opts)?;
        Ok(action_integral(&self.theta, &pts)?)
    }

    fn section_time(&self, z: &[f64], period: f64) -> Result<f64, ChartError> {
        let field = self.field.as_ref();
        let h_of = |w: &DVector<f64>| (w - &self.section_point).dot(&self.normal);
        let outgoing =
            |w: &DVector<f64>| -> Result<bool, FlowError> {
                Ok(field.value(w.as_slice())?.dot(&self.normal) > 0.0)
            };

        let mut z_prev = DVector::from_column_slice(z);
        let mut h_prev = h_of(&z_prev);
        if h_prev.abs() < 1e-12 && outgoing(&z_prev)? {
            return Ok(0.0);
        }
        let dt = period * 1.05 / self.scan_points as f64;
        for i in 1..=self.scan_points {
            let w = integrate(field, z_prev.as_slice(), dt, &self.opts)?;
            let h = h_of(&w);
            if h_prev < 0.0 && h >= 0.0 && outgoing(&w)? {
                // bisect inside the cell
                let (mut lo, mut hi) = (0.0, dt);
                let mut glo = h_prev;
                let mut t_mid = 0.0;
                for _ in 0..60 {
                    t_mid = 0.5 * (lo + hi);
                    let m = integrate(field, z_prev.as_slice(), t_mid, &self.opts)?;
                    let g = h_of(&m);
                    if g.abs() < 1e-14 * (1.0 + self.section_point.norm()) {
                        break;
                    }
                    if (g < 0.0) == (glo < 0.0) {
                        lo = t_mid;
                        glo = g;
                    } else {
                        hi = t_mid;
                    }
                }
                return Ok((i - 1) as f64 * dt + t_mid);
            }
            h_prev = h;
            z_prev = w;
        }
        Err(ChartError::NoCrossing)
    }
}

/// Max deviation of the pulled-back canonical form of the chart from the
/// phase-space Omega matrix, estimated at each sample by central
/// differences of the chart map. `angular` marks output components that
/// live on a circle of circumference 2pi; their differences are wrapped.
pub fn darboux_residual<F>(
    map: F,
    out_dim: usize,
    angular: &[bool],
    omega_phase: &DMatrix<f64>,
    samples: &[DVector<f64>],
    step: f64,
) -> Result<f64, ChartError>
where
    F: Fn(&[f64]) -> Result<DVector<f64>, ChartError>,
{
    assert!(out_dim >= 2 && out_dim % 2 == 0, "chart dimension must be even");
    assert_eq!(angular.len(), out_dim);
    assert!(step > 0.0);
    let omega_chart = SymplecticChart::standard(out_dim / 2).omega_matrix();
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut worst = 0.0_f64;
    for (index, z) in samples.iter().enumerate() {
        let d = z.len();
        let mut jac = DMatrix::zeros(out_dim, d);
        for j in 0..d {
            let mut zp = z.clone();
            zp[j] += step;
            let mut zm = z.clone();
            zm[j] -= step;
            let gp = map(zp.as_slice())?;
            let gm = map(zm.as_slice())?;
            assert_eq!(gp.len(), out_dim);
            for i in 0..out_dim {
                let mut diff = gp[i] - gm[i];
                if angular[i] {
                    diff = numeric::wrap_centered(diff, two_pi);
                }
                jac[(i, j)] = diff / (2.0 * step);
            }
        }
        let (smin, smax) = numeric::singular_extremes(&jac);
        if smin <= 1e-10 * smax.max(1.0) {
            return Err(ChartError::GridDegeneracy { index });
        }
        let pulled = jac.transpose() * &omega_chart * &jac;
        worst = worst.max((pulled - omega_phase).amax());
    }
    Ok(worst)
}

/// Summary record of a constructed action-angle chart.
#[derive(Debug, Clone)]
pub struct ActionAngleChart {
    pub actions: Vec<f64>,
    pub periods: Vec<f64>,
    pub loop_points: usize,
    pub darboux_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibergeom::canonical_one_form;
    use crate::tolerances;
    use crate::symplectic::hamiltonian_field;
    use std::f64::consts::PI;

    fn oscillator_chart() -> (SymplecticChart, ActionAngle1) {
        let chart = SymplecticChart::standard(1);
        let xh = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let aa = ActionAngle1::new(
            Arc::new(xh),
            canonical_one_form(&chart),
            DVector::from_vec(vec![1.0, 0.0]),
            IntegratorOptions::with_tol(1e-11),
        )
        .unwrap();
        (chart, aa)
    }

    #[test]
    fn angle_equals_reversed_flow_time() {
        let (chart, aa) = oscillator_chart();
        let xh = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let opts = IntegratorOptions::with_tol(1e-11);
        for s in [0.0, 0.1, 1.0, 2.5, PI, 4.0, 6.0] {
            let z = integrate(&xh, &[1.0, 0.0], -s, &opts).unwrap();
            let y = aa.angle(z.as_slice()).unwrap();
            assert!((y - s).abs() < 1e-7, "angle({s}) = {y}");
        }
    }

    #[test]
    fn action_is_constant_on_the_fiber_and_equals_energy() {
        let (chart, aa) = oscillator_chart();
        let xh = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let opts = IntegratorOptions::with_tol(1e-11);
        for s in [0.3, 2.0, 5.0] {
            let z = integrate(&xh, &[1.0, 0.0], -s, &opts).unwrap();
            let i = aa.action(z.as_slice()).unwrap();
            assert!((i - 0.5).abs() < 1e-7, "I = {i}");
        }
    }

    #[test]
    fn frequency_magnitude_is_two_pi_over_period() {
        let (_, aa) = oscillator_chart();
        let z = [1.2, 0.3];
        let period = aa.period(&z).unwrap();
        let xh = {
            let chart = SymplecticChart::standard(1);
            hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap())
        };
        let dt = 1e-4;
        let z2 = integrate(&xh, &z, dt, &IntegratorOptions::with_tol(1e-12)).unwrap();
        let y1 = aa.angle(&z).unwrap();
        let y2 = aa.angle(z2.as_slice()).unwrap();
        let rate = numeric::wrap_centered(y2 - y1, 2.0 * PI) / dt;
        assert!(
            (rate.abs() - 2.0 * PI / period).abs() < 1e-6,
            "rate {rate}, period {period}"
        );
        assert!(rate < 0.0, "angle decreases along the forward flow");
    }

    #[test]
    fn identity_chart_has_zero_residual() {
        let chart = SymplecticChart::standard(1);
        let omega = chart.omega_matrix();
        let samples = vec![
            DVector::from_vec(vec![1.0, 0.2]),
            DVector::from_vec(vec![0.7, -0.4]),
        ];
        let r = darboux_residual(
            |z| Ok(DVector::from_column_slice(z)),
            2,
            &[false, false],
            &omega,
            &samples,
            1e-3,
        )
        .unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn oscillator_chart_is_canonical() {
        let (chart, aa) = oscillator_chart();
        let omega = chart.omega_matrix();
        let samples = vec![
            DVector::from_vec(vec![1.0, 0.4]),
            DVector::from_vec(vec![-0.9, 0.8]),
            DVector::from_vec(vec![1.3, -0.5]),
        ];
        let r = darboux_residual(
            |z| {
                let (i, y) = aa.map(z)?;
                Ok(DVector::from_vec(vec![i, y]))
            },
            2,
            &[false, true],
            &omega,
            &samples,
            tolerances::DARBOUX_FD_STEP,
        )
        .unwrap();
        assert!(r < tolerances::DARBOUX_RESIDUAL, "residual {r}");
    }

    #[test]
    fn scaled_angle_is_detected() {
        let (chart, aa) = oscillator_chart();
        let omega = chart.omega_matrix();
        let samples = vec![DVector::from_vec(vec![1.0, 0.4])];
        let r = darboux_residual(
            |z| {
                let (i, y) = aa.map(z)?;
                Ok(DVector::from_vec(vec![i, 2.0 * y]))
            },
            2,
            &[false, true],
            &omega,
            &samples,
            tolerances::DARBOUX_FD_STEP,
        )
        .unwrap();
        assert!((r - 1.0).abs() < 0.05, "residual {r}");
    }

    #[test]
    fn degenerate_map_is_an_error() {
        let chart = SymplecticChart::standard(1);
        let omega = chart.omega_matrix();
        let samples = vec![DVector::from_vec(vec![1.0, 0.0])];
        let err = darboux_residual(
            |_| Ok(DVector::from_vec(vec![1.0, 2.0])),
            2,
            &[false, false],
            &omega,
            &samples,
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, ChartError::GridDegeneracy { index: 0 }));
    }

    #[test]
    fn stationary_section_rejected() {
        let chart = SymplecticChart::standard(1);
        let xh = hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap());
        let err = ActionAngle1::new(
            Arc::new(xh),
            canonical_one_form(&chart),
            DVector::from_vec(vec![0.0, 0.0]),
            IntegratorOptions::default(),
        )
        .err()
        .expect("fixed point must not define a section");
        assert!(matches!(err, ChartError::StationarySection));
    }
}
