//! Flowing the oscillator: adaptive integration, energy drift along the
//! accepted steps, and how the return error after one period scales with
//! the integrator tolerance.

use std::f64::consts::TAU;

use liouville::flows::{integrate, integrate_trajectory, IntegratorOptions};
use liouville::symplectic::{hamiltonian_field, SymplecticChart};
use nalgebra::DVector;

fn main() {
    let chart = SymplecticChart::standard(1);
    let h = chart.parse("(p1^2 + q1^2)/2").unwrap();
    let xh = hamiltonian_field(&chart, h.clone());
    let start = [1.0, 0.0];

    let opts = IntegratorOptions::with_tol(1e-10);
    let traj = integrate_trajectory(&xh, &start, TAU, &opts).unwrap();
    let drift = traj
        .states
        .iter()
        .map(|z| (h.eval(z.as_slice()).unwrap() - 0.5).abs())
        .fold(0.0_f64, f64::max);
    println!(
        "one period in {} accepted steps, max energy drift {:.3e}",
        traj.states.len() - 1,
        drift
    );

    let quarter = integrate(&xh, &start, TAU / 4.0, &opts).unwrap();
    println!(
        "quarter period from (1, 0): ({:.6}, {:.6})  (expect (0, -1))",
        quarter[0], quarter[1]
    );

    println!("return error after t = 2pi:");
    for tol in [1e-6, 1e-8, 1e-10, 1e-12] {
        let end = integrate(&xh, &start, TAU, &IntegratorOptions::with_tol(tol)).unwrap();
        let err = (end - DVector::from_column_slice(&start)).amax();
        println!("  tol {tol:.0e}  ->  {err:.3e}");
    }
}
