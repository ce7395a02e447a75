//! The symplectic connection on an isotropic invariant fiber, computed
//! straight from the musical maps and a value-level Cartan formula, and
//! compared against the frame connection of the Hamiltonian frame that
//! spans the same fiber. The two constructions must agree.

use std::sync::Arc;

use liouville::affine::{nabla, omega_connection, AffineError, ConnectionFrame};
use liouville::sampling::SampleBox;
use liouville::symplectic::{hamiltonian_field, ScalarField, SymplecticChart, VectorField, VectorFieldExpr};

fn main() {
    // Circular oscillator: the energy level {H = E} is a circle, X_H
    // spans its tangent line, and the circle is isotropic (dimension 1).
    let chart = SymplecticChart::standard(1);
    let h = chart.parse("(p1^2 + q1^2)/2").unwrap();
    let xh: Arc<dyn VectorField> = Arc::new(hamiltonian_field(&chart, h.clone()));
    let fs: Vec<Arc<dyn ScalarField>> = vec![Arc::new(h)];
    let frame = ConnectionFrame::new(
        vec![xh.clone()],
        SampleBox::new(vec![0.4, -1.5], vec![1.5, 1.5]),
    )
    .unwrap();

    // A field tangent to every level circle but not parallel along it.
    let y = VectorFieldExpr::parse(&["q1^2", "-(p1*q1)"], &["p1", "q1"]).unwrap();

    println!("nabla^Omega_(X_H) Y vs frame nabla on the circle of radius 1.3:");
    let mut worst = 0.0_f64;
    for s in [0.0_f64, 0.9, 1.7, 2.6, 3.8, 5.1] {
        let z = [1.3 * s.cos(), 1.3 * s.sin()];
        let via_omega = omega_connection(&chart, &fs, xh.as_ref(), &y, &z).unwrap();
        let via_frame = nabla(&frame, xh.as_ref(), &y, &z).unwrap();
        let gap = (&via_omega - &via_frame).amax();
        worst = worst.max(gap);
        println!(
            "  z = ({:+.3}, {:+.3}): omega route ({:+.4}, {:+.4}), gap {gap:.3e}",
            z[0], z[1], via_omega[0], via_omega[1]
        );
    }
    println!("worst disagreement: {worst:.3e}");

    // The frame field itself is parallel, as every frame leg must be.
    let self_deriv = omega_connection(&chart, &fs, xh.as_ref(), xh.as_ref(), &[1.3, 0.0]).unwrap();
    println!("nabla^Omega_(X_H) X_H = ({:.3e}, {:.3e})", self_deriv[0], self_deriv[1]);

    // The construction refuses fields that leave the fiber: d/dp1 moves
    // across energy levels.
    let dp = VectorFieldExpr::parse(&["1", "0"], &["p1", "q1"]).unwrap();
    match omega_connection(&chart, &fs, xh.as_ref(), &dp, &[1.3, 0.0]) {
        Err(AffineError::Tangency { index, value }) => {
            println!("non-tangent field rejected: dF_{index}(Y) = {value:.3}")
        }
        other => println!("unexpected: {other:?}"),
    }

    // And it refuses pairs that fail isotropy: on a 2-dimensional level
    // set of standard(2), coordinate fields can pair nontrivially.
    let chart2 = SymplecticChart::standard(2);
    let coords = ["p1", "p2", "q1", "q2"];
    let fs2: Vec<Arc<dyn ScalarField>> =
        vec![Arc::new(chart2.parse("p1").unwrap())];
    let x = VectorFieldExpr::parse(&["0", "1", "0", "0"], &coords).unwrap();
    let y2 = VectorFieldExpr::parse(&["0", "0", "0", "1"], &coords).unwrap();
    match omega_connection(&chart2, &fs2, &x, &y2, &[0.5, 0.1, -0.3, 0.9]) {
        Err(AffineError::Isotropy { value }) => {
            println!("non-isotropic pair rejected: |Omega(X, Y)| = {value:.3}")
        }
        other => println!("unexpected: {other:?}"),
    }
}
