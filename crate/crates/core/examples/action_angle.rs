//! Action-angle coordinates for the oscillator: I(E) = E, the angle moves
//! linearly along the flow, and the chart is Darboux to finite-difference
//! accuracy.

use std::sync::Arc;

use liouville::fibergeom::{canonical_one_form, darboux_residual, ActionAngle1};
use liouville::flows::{integrate, IntegratorOptions};
use liouville::sampling::{self, SampleBox};
use liouville::symplectic::{hamiltonian_field, SymplecticChart, VectorField};
use nalgebra::DVector;

fn main() {
    let chart = SymplecticChart::standard(1);
    let field: Arc<dyn VectorField> =
        Arc::new(hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap()));
    let opts = IntegratorOptions::with_tol(1e-12);
    let aa = ActionAngle1::new(
        field.clone(),
        canonical_one_form(&chart),
        DVector::from_column_slice(&[1.0, 0.0]),
        opts,
    )
    .unwrap();

    for energy in [0.5_f64, 1.0, 2.5] {
        let z = [(2.0 * energy).sqrt(), 0.0];
        println!(
            "E = {energy}: period {:.9}, action {:.9}",
            aa.period(&z).unwrap(),
            aa.action(&z).unwrap()
        );
    }

    // The angle moves at unit rate along the flow of H = I. It runs
    // backward: the chart pairs like (p, q), and dq(X_p) = -1 under the
    // (p_1..p_n, q_1..q_n) conventions.
    let z0 = [1.0, 0.0];
    let y0 = aa.angle(&z0).unwrap();
    let z1 = integrate(field.as_ref(), &z0, 0.5, &opts).unwrap();
    let y1 = aa.angle(z1.as_slice()).unwrap();
    let retreat = (y0 - y1).rem_euclid(std::f64::consts::TAU);
    println!("angle retreat over t = 0.5: {retreat:.9} (expect 0.5)");

    let samples = sampling::sample(11, &SampleBox::new(vec![0.8, -0.3], vec![1.2, 0.3]), 5);
    let residual = darboux_residual(
        |z| {
            let (i, y) = aa.map(z)?;
            Ok(DVector::from_vec(vec![i, y]))
        },
        2,
        &[false, true],
        &chart.omega_matrix(),
        &samples,
        1e-3,
    )
    .unwrap();
    println!("Darboux residual of (I, y) at step 1e-3: {residual:.3e}");
}
