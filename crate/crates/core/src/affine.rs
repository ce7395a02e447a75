//! Connections of parallelizations: the covariant derivative determined
//! by a frame, its torsion, curvature, and geodesics, equivalence of
//! frames, parallel transport, the symplectic connection on isotropic
//! fibers, and the chart that inverts a commuting complete frame.
//!
//! A frame {X_1, ..., X_m} on a chart defines nabla through the solved
//! coefficients b^j of a field Y = b^j X_j: nabla_X Y = X(b^j) X_j. The
//! frame fields themselves are parallel, every such connection is flat,
//! and its torsion is -[X_i, X_j]; those are the residuals checked here.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::EvalError;
use crate::flows::{
    commutation_residual, integrate_trajectory, FlowAction, FlowError, IntegratorOptions,
};
use crate::numeric;
use crate::sampling::SampleBox;
use crate::symplectic::{
    lie_bracket, lie_derivative_oneform_at, ScalarField, SymplecticChart, VectorField,
};
use crate::tolerances;

#[derive(Debug, Error)]
pub enum AffineError {
    #[error("frame fields are linearly dependent at {point:?}")]
    DependentFrame { point: Vec<f64> },
    #[error(
        "vector leaves the frame span at {point:?}: residual {residual:.3e} exceeds {tol:.1e}"
    )]
    SpanViolation {
        residual: f64,
        tol: f64,
        point: Vec<f64>,
    },
    #[error("field is not tangent to the fiber: |dF_{index}(v)| = {value:.3e}")]
    Tangency { index: usize, value: f64 },
    #[error("directions are not isotropic: |Omega(X, Y)| = {value:.3e}")]
    Isotropy { value: f64 },
    #[error("frame legs {i} and {j} do not commute: flow residual {residual:.3e}")]
    NonCommuting { i: usize, j: usize, residual: f64 },
    #[error(
        "Newton did not reach {target:?} after {iters} iterations; last residual {residual:.3e}"
    )]
    NewtonDiverged {
        target: Vec<f64>,
        iters: usize,
        residual: f64,
    },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A parallelizing frame together with the box it is trusted on.
/// Independence is checked at the box center on construction and at
/// every evaluation point on use.
pub struct ConnectionFrame {
    fields: Vec<Arc<dyn VectorField>>,
    domain: SampleBox,
}

impl ConnectionFrame {
    pub fn new(
        fields: Vec<Arc<dyn VectorField>>,
        domain: SampleBox,
    ) -> Result<ConnectionFrame, AffineError> {
        assert!(!fields.is_empty(), "frame needs at least one field");
        let d = domain.dim();
        assert!(
            fields.iter().all(|f| f.dim() == d),
            "frame fields must live on the domain chart"
        );
        assert!(
            fields.len() <= d,
            "no more than {d} fields can be independent"
        );
        let frame = ConnectionFrame { fields, domain };
        let mid: Vec<f64> = frame
            .domain
            .lo()
            .iter()
            .zip(frame.domain.hi())
            .map(|(a, b)| (a + b) / 2.0)
            .collect();
        frame.matrix(&mid)?;
        Ok(frame)
    }

    pub fn m(&self) -> usize {
        self.fields.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &SampleBox {
        &self.domain
    }

    pub fn fields(&self) -> &[Arc<dyn VectorField>] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> &Arc<dyn VectorField> {
        &self.fields[i]
    }

    /// d x m matrix with columns X_j(z).
    pub fn matrix(&self, z: &[f64]) -> Result<DMatrix<f64>, AffineError> {
        let mut a = DMatrix::zeros(self.dim(), self.m());
        for (j, f) in self.fields.iter().enumerate() {
            a.column_mut(j).copy_from(&f.value(z)?);
        }
        let (smin, smax) = numeric::singular_extremes(&a);
        if smin <= tolerances::RANK_REL * smax.max(1.0) {
            return Err(AffineError::DependentFrame { point: z.to_vec() });
        }
        Ok(a)
    }

    /// The b^j with Y(z) = b^j X_j(z).
    pub fn coefficients(
        &self,
        y: &dyn VectorField,
        z: &[f64],
    ) -> Result<DVector<f64>, AffineError> {
        self.coefficients_of(&y.value(z)?, z)
    }

    /// Coefficients of a plain vector at z.
    pub fn coefficients_of(
        &self,
        v: &DVector<f64>,
        z: &[f64],
    ) -> Result<DVector<f64>, AffineError> {
        self.solved(v, z).map(|(_, b)| b)
    }

    /// Frame matrix and solved coefficients, with the span check.
    fn solved(
        &self,
        v: &DVector<f64>,
        z: &[f64],
    ) -> Result<(DMatrix<f64>, DVector<f64>), AffineError> {
        let a = self.matrix(z)?;
        let (b, residual) = numeric::solve_least_squares(&a, v);
        let tol = tolerances::SPAN_RESIDUAL * (1.0 + v.norm());
        if residual > tol {
            return Err(AffineError::SpanViolation {
                residual,
                tol,
                point: z.to_vec(),
            });
        }
        Ok((a, b))
    }
}

/// nabla_X Y at z: X(b^j) X_j with Y = b^j X_j. The coefficient
/// derivative comes from implicit differentiation of the solve,
/// A db = dY - dA b, which is exact while Y stays in the span.
pub fn nabla(
    frame: &ConnectionFrame,
    x: &dyn VectorField,
    y: &dyn VectorField,
    z: &[f64],
) -> Result<DVector<f64>, AffineError> {
    nabla_direction(frame, &x.value(z)?, y, z)
}

/// [`nabla`] with the tensorial first slot given as a plain vector.
pub fn nabla_direction(
    frame: &ConnectionFrame,
    dir: &DVector<f64>,
    y: &dyn VectorField,
    z: &[f64],
) -> Result<DVector<f64>, AffineError> {
    let yv = y.value(z)?;
    let (a, b) = frame.solved(&yv, z)?;
    let mut rhs = y.jacobian(z)? * dir;
    for (j, f) in frame.fields().iter().enumerate() {
        rhs -= (f.jacobian(z)? * dir) * b[j];
    }
    let (db, _) = numeric::solve_least_squares(&a, &rhs);
    Ok(a * db)
}

/// T(X_i, X_j)(z) = nabla_{X_i} X_j - nabla_{X_j} X_i - [X_i, X_j];
/// reduces to -[X_i, X_j] because frame members have constant
/// coefficients. Indices are 0-based.
pub fn torsion(
    frame: &ConnectionFrame,
    i: usize,
    j: usize,
    z: &[f64],
) -> Result<DVector<f64>, AffineError> {
    let m = frame.m();
    assert!(i < m && j < m, "frame index out of range");
    let xi = frame.field(i).as_ref();
    let xj = frame.field(j).as_ref();
    let forward = nabla(frame, xi, xj, z)?;
    let backward = nabla(frame, xj, xi, z)?;
    let bracket = lie_bracket(xi, xj, z)?;
    Ok(forward - backward - bracket)
}

/// R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_{[X,Y]} Z.
/// The outer derivatives difference the inner covariant derivative's
/// coefficients at points displaced along the outer direction (central
/// step [`tolerances::CURVATURE_FD_STEP`]); a connection of a
/// parallelization cancels to the differencing error.
pub fn curvature(
    frame: &ConnectionFrame,
    x: &dyn VectorField,
    y: &dyn VectorField,
    zf: &dyn VectorField,
    point: &[f64],
) -> Result<DVector<f64>, AffineError> {
    let h = tolerances::CURVATURE_FD_STEP;
    let outer = |outer_field: &dyn VectorField,
                 inner_field: &dyn VectorField|
     -> Result<DVector<f64>, AffineError> {
        let dir = outer_field.value(point)?;
        let coeffs_at = |sgn: f64| -> Result<DVector<f64>, AffineError> {
            let zp: Vec<f64> = point
                .iter()
                .zip(dir.iter())
                .map(|(p, u)| p + sgn * h * u)
                .collect();
            let w = nabla(frame, inner_field, zf, &zp)?;
            frame.coefficients_of(&w, &zp)
        };
        let db = (coeffs_at(1.0)? - coeffs_at(-1.0)?) / (2.0 * h);
        Ok(frame.matrix(point)? * db)
    };
    let xy = outer(x, y)?;
    let yx = outer(y, x)?;
    let commutator = nabla_direction(frame, &lie_bracket(x, y, point)?, zf, point)?;
    Ok(xy - yx - commutator)
}

/// Max of ||nabla_{gamma'} gamma'|| over the accepted integrator steps
/// of the integral curve of the i-th frame field; near zero because
/// frame orbits are geodesics of their own connection.
pub fn geodesic_residual(
    frame: &ConnectionFrame,
    i: usize,
    start: &[f64],
    t: f64,
    opts: &IntegratorOptions,
) -> Result<f64, AffineError> {
    curve_residual(frame, frame.field(i).as_ref(), start, t, opts)
}

/// [`geodesic_residual`] for an arbitrary field's integral curve; a
/// zero time window has no sampled states and reports 0.
pub fn curve_residual(
    frame: &ConnectionFrame,
    field: &dyn VectorField,
    start: &[f64],
    t: f64,
    opts: &IntegratorOptions,
) -> Result<f64, AffineError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let traj = integrate_trajectory(field, start, t, opts)?;
    let mut worst = 0.0_f64;
    for state in &traj.states {
        worst = worst.max(nabla(frame, field, field, state.as_slice())?.norm());
    }
    Ok(worst)
}

#[derive(Debug)]
pub enum Equivalence {
    /// B_j = G^i_j A_i with one constant invertible G across all
    /// samples; the frames define the same connection.
    SameConnection {
        g: DMatrix<f64>,
        max_variation: f64,
    },
    Different { reason: String },
}

/// Solves B_j = G^i_j A_i at each sample; same-connection iff G is
/// sample-independent within [`tolerances::EQUIVALENCE`] and invertible.
pub fn equivalence_check(
    a: &ConnectionFrame,
    b: &ConnectionFrame,
    samples: &[DVector<f64>],
) -> Result<Equivalence, AffineError> {
    assert_eq!(a.dim(), b.dim(), "frames must share the chart");
    assert!(!samples.is_empty(), "need at least one sample");
    if a.m() != b.m() {
        return Ok(Equivalence::Different {
            reason: format!("frame sizes differ: {} vs {}", a.m(), b.m()),
        });
    }
    let m = a.m();
    let mut first: Option<DMatrix<f64>> = None;
    let mut max_variation = 0.0_f64;
    for z in samples {
        let mut g = DMatrix::zeros(m, m);
        for j in 0..m {
            let bj = b.field(j).value(z.as_slice())?;
            match a.coefficients_of(&bj, z.as_slice()) {
                Ok(c) => g.column_mut(j).copy_from(&c),
                Err(AffineError::SpanViolation { residual, .. }) => {
                    return Ok(Equivalence::Different {
                        reason: format!(
                            "leg {} of the second frame leaves the first frame's span \
                             at {:?} (residual {:.3e})",
                            j + 1,
                            z.as_slice(),
                            residual
                        ),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        match &first {
            None => first = Some(g),
            Some(g0) => max_variation = max_variation.max((g - g0).amax()),
        }
    }
    let g = first.expect("samples nonempty");
    if max_variation > tolerances::EQUIVALENCE {
        return Ok(Equivalence::Different {
            reason: format!(
                "coefficient matrix varies across samples by {max_variation:.3e}"
            ),
        });
    }
    let (smin, smax) = numeric::singular_extremes(&g);
    if smin <= tolerances::RANK_REL * smax.max(1.0) {
        return Ok(Equivalence::Different {
            reason: "coefficient matrix is singular".into(),
        });
    }
    Ok(Equivalence::SameConnection { g, max_variation })
}

/// Transport v0 along the discretized path. For a frame connection the
/// coefficients of a parallel field are constant, so the result is the
/// start coefficients rebuilt in the end frame. On a closed path this
/// returns v0 by construction; holonomy measurements must use
/// [`parallel_transport_ode`], which actually follows the path.
pub fn parallel_transport(
    frame: &ConnectionFrame,
    path: &[DVector<f64>],
    v0: &DVector<f64>,
) -> Result<DVector<f64>, AffineError> {
    assert!(!path.is_empty(), "path needs at least one point");
    let b = frame.coefficients_of(v0, path[0].as_slice())?;
    let a_end = frame.matrix(path.last().expect("nonempty").as_slice())?;
    Ok(a_end * b)
}

/// Transport by integrating nabla_{gamma'} V = 0 in coordinates:
/// V' = sum_j b^j J_{X_j}(z) z' with b re-solved from V at every stage
/// (classical fourth-order steps, `substeps` per path segment). Unlike
/// the coefficient route this accumulates the path geometry, so a
/// closed-loop return near v0 is evidence of flatness, not an identity.
pub fn parallel_transport_ode(
    frame: &ConnectionFrame,
    path: &[DVector<f64>],
    v0: &DVector<f64>,
    substeps: usize,
) -> Result<DVector<f64>, AffineError> {
    assert!(substeps >= 1, "at least one step per segment");
    assert!(!path.is_empty(), "path needs at least one point");
    frame.coefficients_of(v0, path[0].as_slice())?;
    let mut v = v0.clone();
    for seg in path.windows(2) {
        let (za, zb) = (&seg[0], &seg[1]);
        let dz = zb - za;
        if dz.amax() == 0.0 {
            continue;
        }
        let rate = |s: f64, v: &DVector<f64>| -> Result<DVector<f64>, AffineError> {
            let z = za + &dz * s;
            let a = frame.matrix(z.as_slice())?;
            let (b, _) = numeric::solve_least_squares(&a, v);
            let mut out = DVector::zeros(v.len());
            for (j, f) in frame.fields().iter().enumerate() {
                out += (f.jacobian(z.as_slice())? * &dz) * b[j];
            }
            Ok(out)
        };
        let h = 1.0 / substeps as f64;
        for k in 0..substeps {
            let s = k as f64 * h;
            let k1 = rate(s, &v)?;
            let k2 = rate(s + h / 2.0, &(&v + &k1 * (h / 2.0)))?;
            let k3 = rate(s + h / 2.0, &(&v + &k2 * (h / 2.0)))?;
            let k4 = rate(s + h, &(&v + &k3 * h))?;
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    Ok(v)
}

/// The symplectic connection on an isotropic invariant fiber:
/// nabla^Omega_X Y = Omega# L_X Omega_flat(Y), assembled from the
/// chart's musical maps and the value-level Cartan formula. X and Y
/// must be tangent to the common level set of `fs` at the point and
/// isotropic there (both within [`tolerances::TANGENCY`]).
pub fn omega_connection(
    chart: &SymplecticChart,
    fs: &[Arc<dyn ScalarField>],
    x: &dyn VectorField,
    y: &dyn VectorField,
    point: &[f64],
) -> Result<DVector<f64>, AffineError> {
    let d = chart.dim();
    assert_eq!(x.dim(), d, "X must live on the chart");
    assert_eq!(y.dim(), d, "Y must live on the chart");
    assert_eq!(point.len(), d);
    let xv = x.value(point)?;
    let yv = y.value(point)?;
    for (idx, f) in fs.iter().enumerate() {
        let grad = f.gradient(point)?;
        let worst = grad.dot(&xv).abs().max(grad.dot(&yv).abs());
        if worst > tolerances::TANGENCY {
            return Err(AffineError::Tangency {
                index: idx + 1,
                value: worst,
            });
        }
    }
    let pairing = chart.omega(xv.as_slice(), yv.as_slice()).abs();
    if pairing > tolerances::TANGENCY {
        return Err(AffineError::Isotropy { value: pairing });
    }
    let jx = x.jacobian(point)?;
    let jy = y.jacobian(point)?;
    let alpha = chart.flat(yv.as_slice());
    let j_alpha = -chart.omega_matrix() * jy;
    let lie = lie_derivative_oneform_at(&xv, &jx, &alpha, &j_alpha);
    Ok(chart.sharp(lie.as_slice()))
}

/// Inverts the action of a commuting frame with as many legs as chart
/// dimensions: solves Phi(t) = target by Newton with Jacobian columns
/// X_i(Phi(t)), to within [`tolerances::NEWTON_RETURN`]. Callers are
/// expected to have established completeness and the absence of returns
/// over the region; a period lattice would make the inverse ambiguous.
pub fn cartan_hadamard_chart(
    action: &FlowAction,
    targets: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>, AffineError> {
    let d = action.dim();
    assert_eq!(action.m(), d, "the frame must parallelize the chart");
    let opts = action.options();
    for i in 0..d {
        for j in (i + 1)..d {
            let r = commutation_residual(
                action.fields()[i].as_ref(),
                action.fields()[j].as_ref(),
                action.base().as_slice(),
                0.5,
                0.5,
                opts,
            )?;
            if r > tolerances::COMMUTATION {
                return Err(AffineError::NonCommuting {
                    i: i + 1,
                    j: j + 1,
                    residual: r,
                });
            }
        }
    }
    const MAX_ITERS: usize = 50;
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        let mut t = DVector::zeros(d);
        let mut residual = f64::INFINITY;
        let mut converged = false;
        for _ in 0..MAX_ITERS {
            let z = action.compose(t.as_slice())?;
            let g = target - &z;
            residual = g.norm();
            if residual <= tolerances::NEWTON_RETURN {
                converged = true;
                break;
            }
            let mut jac = DMatrix::zeros(d, d);
            for (i, f) in action.fields().iter().enumerate() {
                jac.column_mut(i)
                    .copy_from(&f.value(z.as_slice()).map_err(FlowError::from)?);
            }
            let (dt, _) = numeric::solve_least_squares(&jac, &g);
            t += dt;
        }
        if !converged {
            return Err(AffineError::NewtonDiverged {
                target: target.as_slice().to_vec(),
                iters: MAX_ITERS,
                residual,
            });
        }
        out.push(t);
    }
    Ok(out)
}
