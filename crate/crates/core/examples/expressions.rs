//! The expression DSL: parsing, printing, forward-mode jets, and the
//! error channels (offsets for syntax, named subexpressions for domain).

use liouville::expr::Expression;

fn main() {
    let coords = ["p", "q"];

    let h = Expression::parse("(p^2 + q^2)/2", &coords).unwrap();
    let z = [0.6, -0.8];
    println!("H = {h}");
    println!("H{z:?} = {}", h.eval(&z).unwrap());

    let jet = h.jet(&z).unwrap();
    println!("grad H = [{}, {}]", jet.gradient[0], jet.gradient[1]);
    println!(
        "hess H = [[{}, {}], [{}, {}]]",
        jet.hessian[(0, 0)],
        jet.hessian[(0, 1)],
        jet.hessian[(1, 0)],
        jet.hessian[(1, 1)]
    );

    // Directional derivative without forming the full gradient.
    let (value, slope) = h.eval_dual(&z, &[1.0, 1.0]).unwrap();
    println!("dH(1,1) at {z:?} = {slope} (value {value})");

    // Right-associative powers, unary minus, constant-folded exponents.
    let tower = Expression::parse("2^3^2", &coords).unwrap();
    println!("2^3^2 = {}", tower.eval(&z).unwrap());
    let half = Expression::parse("q^(1/2)", &coords).unwrap();
    println!("q^(1/2) at q=9: {}", half.eval(&[0.0, 9.0]).unwrap());

    // Printing parses back to the same tree.
    let mixed = Expression::parse("sin(p)*cos(q) - atan2(p, q)", &coords).unwrap();
    let printed = mixed.to_string();
    assert_eq!(mixed, Expression::parse(&printed, &coords).unwrap());
    println!("round trip: {printed}");

    // Errors carry byte offsets ...
    let err = Expression::parse("p + 2*", &coords).unwrap_err();
    println!("parse failure: {err} (offset {})", err.offset());
    let err = Expression::parse("p + z", &coords).unwrap_err();
    println!("parse failure: {err}");

    // ... and domain failures name the subexpression that broke.
    let logp = Expression::parse("log(p - q)", &coords).unwrap();
    println!("domain failure: {}", logp.eval(&[1.0, 1.0]).unwrap_err());
}
