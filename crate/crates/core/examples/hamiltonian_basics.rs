//! Charts, musical maps, Hamiltonian fields, and the Poisson bracket.
//! Conventions in force: coordinates are ordered (p_1..p_n, q_1..q_n),
//! Omega(X_F, .) = dF, and {F, G} = dG(X_F), so {q_l, p_l} = +1.

use liouville::symplectic::{hamiltonian_field, poisson_bracket, SymplecticChart, VectorField};

fn main() {
    let chart = SymplecticChart::standard(1);
    println!("chart coords: {:?}", chart.coords());

    let z = [0.6, -0.8];
    let q = chart.parse("q1").unwrap();
    let p = chart.parse("p1").unwrap();
    println!("{{q1, p1}} = {}", poisson_bracket(&chart, &q, &p, &z).unwrap());

    let h = chart.parse("(p1^2 + q1^2)/2").unwrap();
    let xh = hamiltonian_field(&chart, h.clone());
    let v = xh.value(&z).unwrap();
    println!("X_H at {z:?} = [{}, {}] (expect [q1, -p1])", v[0], v[1]);

    // H is conserved along its own flow: dH(X_H) = {H, H} = 0.
    println!(
        "dH(X_H) = {}",
        poisson_bracket(&chart, &h, &h, &z).unwrap()
    );

    // The musical maps are inverse to each other ...
    let alpha = chart.flat(v.as_slice());
    let back = chart.sharp(alpha.as_slice());
    println!("sharp(flat(X_H)) = [{}, {}]", back[0], back[1]);

    // ... and relate the bracket to the symplectic pairing:
    // Omega(X_F, X_G) = -{F, G}.
    let g = chart.parse("p1*q1").unwrap();
    let xg = hamiltonian_field(&chart, g.clone()).value(&z).unwrap();
    let pairing = chart.omega(v.as_slice(), xg.as_slice());
    let bracket = poisson_bracket(&chart, &h, &g, &z).unwrap();
    println!("Omega(X_H, X_G) = {pairing}, -{{H, G}} = {}", -bracket);
}
