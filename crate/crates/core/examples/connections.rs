//! The connection of a parallelizing frame: flat always, torsion equal to
//! minus the Lie bracket, frame orbits geodesic, and equivalence exactly
//! when the frames differ by one constant invertible matrix.

use std::sync::Arc;

use liouville::affine::{
    curvature, equivalence_check, geodesic_residual, torsion, ConnectionFrame, Equivalence,
};
use liouville::expr::Expression;
use liouville::flows::IntegratorOptions;
use liouville::sampling::{self, SampleBox};
use liouville::symplectic::{lie_bracket, LinearCombinationField, ScalarField, VectorField, VectorFieldExpr};

fn frame(sources: [[&str; 2]; 2]) -> ConnectionFrame {
    let coords = ["u", "v"];
    let fields: Vec<Arc<dyn VectorField>> = sources
        .iter()
        .map(|c| Arc::new(VectorFieldExpr::parse(c, &coords).unwrap()) as Arc<dyn VectorField>)
        .collect();
    ConnectionFrame::new(fields, SampleBox::new(vec![-1.0, -1.0], vec![1.0, 1.0])).unwrap()
}

fn main() {
    let commuting = frame([["1 + u^2/4", "0"], ["0", "1 + v^2/4"]]);
    let skew = frame([["1", "v/2"], ["u", "1"]]);

    for (name, fr) in [("commuting", &commuting), ("non-commuting", &skew)] {
        let samples = sampling::sample(3, fr.domain(), 20);
        let mut worst_curv = 0.0_f64;
        let mut worst_torsion_gap = 0.0_f64;
        let mut bracket_size = 0.0_f64;
        for z in &samples {
            let x0 = fr.field(0).as_ref();
            let x1 = fr.field(1).as_ref();
            for l in 0..2 {
                let r = curvature(fr, x0, x1, fr.field(l).as_ref(), z.as_slice()).unwrap();
                worst_curv = worst_curv.max(r.amax());
            }
            let t = torsion(fr, 0, 1, z.as_slice()).unwrap();
            let b = lie_bracket(x0, x1, z.as_slice()).unwrap();
            worst_torsion_gap = worst_torsion_gap.max((t + &b).amax());
            bracket_size = bracket_size.max(b.amax());
        }
        let geo = geodesic_residual(fr, 0, &[0.0, 0.0], 0.5, &IntegratorOptions::with_tol(1e-12))
            .unwrap();
        println!(
            "{name}: curvature {worst_curv:.3e}, |T(X_1, X_2) + [X_1, X_2]| {worst_torsion_gap:.3e} \
             (bracket size {bracket_size:.3}), geodesic residual {geo:.3e}"
        );
    }

    // Mixing the legs by a constant matrix keeps the connection; the
    // check recovers the matrix.
    let coords = ["u", "v"];
    let g = [[2.0, 1.0], [0.5, -1.0]];
    let mixed: Vec<Arc<dyn VectorField>> = (0..2)
        .map(|j| {
            let coeffs: Vec<Arc<dyn ScalarField>> = (0..2)
                .map(|i| Arc::new(Expression::constant(&coords, g[i][j])) as Arc<dyn ScalarField>)
                .collect();
            Arc::new(LinearCombinationField::new(coeffs, skew.fields().to_vec()))
                as Arc<dyn VectorField>
        })
        .collect();
    let b = ConnectionFrame::new(mixed, skew.domain().clone()).unwrap();
    let samples = sampling::sample(4, skew.domain(), 10);
    match equivalence_check(&skew, &b, &samples).unwrap() {
        Equivalence::SameConnection { g, max_variation } => {
            println!(
                "equivalence: same connection, G = [[{}, {}], [{}, {}]], variation {max_variation:.3e}",
                g[(0, 0)],
                g[(0, 1)],
                g[(1, 0)],
                g[(1, 1)]
            );
        }
        Equivalence::Different { reason } => println!("equivalence lost: {reason}"),
    }

    // A position-dependent mix is a different connection.
    let twisted: Vec<Arc<dyn VectorField>> = vec![
        {
            let coeffs: Vec<Arc<dyn ScalarField>> = vec![
                Arc::new(Expression::parse("1 + u/2", &coords).unwrap()),
                Arc::new(Expression::constant(&coords, 0.0)),
            ];
            Arc::new(LinearCombinationField::new(coeffs, skew.fields().to_vec()))
                as Arc<dyn VectorField>
        },
        skew.field(1).clone(),
    ];
    let b = ConnectionFrame::new(twisted, skew.domain().clone()).unwrap();
    match equivalence_check(&skew, &b, &samples).unwrap() {
        Equivalence::SameConnection { .. } => println!("unexpectedly the same"),
        Equivalence::Different { reason } => println!("twisted frame: {reason}"),
    }
}
