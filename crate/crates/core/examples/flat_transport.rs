//! Parallel transport in a frame connection. The connection is flat, so
//! transport around a closed loop must return every vector unchanged;
//! the ODE route shows the error of actually integrating the transport
//! equation, while the coefficient route is exact by construction
//! (expand in the frame at the start, re-assemble at the end).

use std::sync::Arc;

use liouville::affine::{parallel_transport, parallel_transport_ode, ConnectionFrame};
use liouville::sampling::SampleBox;
use liouville::symplectic::{VectorField, VectorFieldExpr};
use nalgebra::DVector;

/// Corners of an axis-aligned rectangle, each edge split into `per_edge`
/// segments, closing back at the starting corner.
fn rectangle(corner: [f64; 2], w: f64, h: f64, per_edge: usize) -> Vec<DVector<f64>> {
    let verts = [
        corner,
        [corner[0] + w, corner[1]],
        [corner[0] + w, corner[1] + h],
        [corner[0], corner[1] + h],
        corner,
    ];
    let mut path = vec![DVector::from_row_slice(&verts[0])];
    for pair in verts.windows(2) {
        for s in 1..=per_edge {
            let t = s as f64 / per_edge as f64;
            path.push(DVector::from_vec(vec![
                pair[0][0] + t * (pair[1][0] - pair[0][0]),
                pair[0][1] + t * (pair[1][1] - pair[0][1]),
            ]));
        }
    }
    path
}

fn main() {
    // Trigonometric legs so the frame's Jacobians vary along the path and
    // the transport ODE accumulates real geometry.
    let coords = ["u", "v"];
    let sources = [["1 + sin(v)/3", "v/2"], ["u", "1 + cos(u)/4"]];
    let fields: Vec<Arc<dyn VectorField>> = sources
        .iter()
        .map(|c| Arc::new(VectorFieldExpr::parse(c, &coords).unwrap()) as Arc<dyn VectorField>)
        .collect();
    let frame = ConnectionFrame::new(
        fields,
        SampleBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
    )
    .unwrap();

    let v0 = DVector::from_vec(vec![0.7, -0.4]);

    println!("loop closure error, ODE route vs coefficient route:");
    for (w, h) in [(0.3, 0.2), (0.6, 0.5), (0.9, 0.8)] {
        let path = rectangle([-0.45, -0.45], w, h, 16);
        let ode = parallel_transport_ode(&frame, &path, &v0, 64).unwrap();
        let coeff = parallel_transport(&frame, &path, &v0).unwrap();
        println!(
            "  {w:.1} x {h:.1} rectangle: ode {:.3e}, coefficients {:.3e}",
            (&ode - &v0).amax(),
            (&coeff - &v0).amax()
        );
    }

    // On an open path the two routes answer the same question (flatness
    // makes transport path independent), so their gap is pure ODE error.
    let open: Vec<DVector<f64>> = (0..=48)
        .map(|s| {
            let t = s as f64 / 48.0;
            DVector::from_vec(vec![-0.5 + t, 0.4 * (std::f64::consts::PI * t).sin()])
        })
        .collect();
    let ode = parallel_transport_ode(&frame, &open, &v0, 64).unwrap();
    let coeff = parallel_transport(&frame, &open, &v0).unwrap();
    println!(
        "open sine arc: transported to ({:.6}, {:.6}), route gap {:.3e}",
        coeff[0],
        coeff[1],
        (&ode - &coeff).amax()
    );
}
