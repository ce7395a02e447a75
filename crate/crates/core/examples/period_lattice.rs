//! Period lattices of composed flows: the oscillator's T^1, the free
//! particle's R^1 (no returns), and the cylinder's mixed R^1 x T^1.

use std::sync::Arc;

use liouville::catalog;
use liouville::fibergeom::lattice::{detect_lattice, LatticeSearch};
use liouville::fibergeom::classify_fiber;
use liouville::flows::{FlowAction, IntegratorOptions};
use liouville::symplectic::{hamiltonian_field, SymplecticChart, VectorField};
use nalgebra::DVector;

fn show(name: &str, action: &FlowAction, search: &LatticeSearch) {
    let lattice = detect_lattice(action, search).unwrap();
    let fiber = classify_fiber(&lattice);
    println!("{name}: m = {}, h = {}, fiber {fiber}", lattice.m, lattice.h());
    if lattice.basis.is_empty() {
        println!("  no returns inside the radius-{} box", lattice.search_radius);
    }
    for (b, r) in lattice.basis.iter().zip(&lattice.residuals) {
        let entries: Vec<String> = b.iter().map(|x| format!("{x:.6}")).collect();
        println!("  basis ({})  return residual {r:.3e}", entries.join(", "));
    }
}

fn main() {
    let opts = IntegratorOptions::with_tol(1e-12);
    let chart = SymplecticChart::standard(1);

    let xh: Arc<dyn VectorField> =
        Arc::new(hamiltonian_field(&chart, chart.parse("(p1^2 + q1^2)/2").unwrap()));
    let action = FlowAction::new(
        vec![xh],
        DVector::from_column_slice(&[1.0, 0.0]),
        opts,
    )
    .unwrap();
    let search = LatticeSearch {
        radius: 7.0,
        grid_step: 0.5,
        ..Default::default()
    };
    show("oscillator", &action, &search);

    let free: Arc<dyn VectorField> =
        Arc::new(hamiltonian_field(&chart, chart.parse("p1^2 / 2").unwrap()));
    let action = FlowAction::new(
        vec![free],
        DVector::from_column_slice(&[1.0, 0.0]),
        opts,
    )
    .unwrap();
    show("free particle", &action, &search);

    // The cylinder spec carries its own chart, legs, base point, and the
    // wrap period of the angular coordinate; the pipeline helper wires
    // all of that up.
    let spec = catalog::cylinder();
    let stage = liouville::pipeline::lattice_stage(&spec);
    let data = stage.data.unwrap();
    println!(
        "{}: m = {}, h = {}, fiber {}",
        spec.name, data.m, data.h, data.fiber
    );
    for (b, r) in data.basis.iter().zip(&data.residuals) {
        let entries: Vec<String> = b.iter().map(|x| format!("{x:.6}")).collect();
        println!("  basis ({})  return residual {:.3e}", entries.join(", "), r.value);
    }
}
