//! The global decision table on its own: feed it a structure group, a
//! topology declaration, and the upstream hypothesis flags, and read off
//! what is proved. Failed sufficient conditions never produce "false",
//! only "unknown" with the unmet list.

use liouville::bundleclass::{
    decide, split_product, Flag, HypothesisFlags, Mode, TopologyDecl,
};

fn show(label: &str, verdict: &liouville::bundleclass::GlobalVerdict) {
    println!("{label}: {verdict}");
    if let Some(s) = &verdict.splitting {
        println!("  splitting: {s}");
    }
    for d in &verdict.diagnostics {
        println!("  note: {d}");
    }
}

fn main() {
    let passed = HypothesisFlags::all_passed();

    // Two compact generators over a contractible box of values: the
    // fibers are 2-tori and the bundle is trivial with a splitting.
    let v = decide(
        (0, 2),
        &TopologyDecl::contractible_box("value box"),
        Mode::Complete,
        &passed,
    );
    show("torus fibers over a box", &v);

    // Same group, but nobody declared the base topology: a circle factor
    // is present, so the verdict stays unknown and says what is missing.
    let v = decide(
        (0, 2),
        &TopologyDecl::declared(Flag::Unknown, Flag::Unknown, "unspecified base"),
        Mode::Complete,
        &passed,
    );
    show("torus fibers, topology undeclared", &v);

    // A purely planar group is contractible; triviality follows from the
    // hypotheses alone, whatever the base looks like.
    let v = decide(
        (2, 0),
        &TopologyDecl::declared(Flag::Unknown, Flag::Unknown, "arbitrary base"),
        Mode::Partial,
        &passed,
    );
    show("planar group, topology undeclared", &v);

    // Cylinder group R^1 x T^1: trivial over a good base, and the
    // splitting lists one plane factor and one circle bundle.
    let v = decide(
        (1, 1),
        &TopologyDecl::contractible_box("value box"),
        Mode::Complete,
        &passed,
    );
    show("cylinder fibers over a box", &v);
    let factors: Vec<String> = split_product((1, 1)).iter().map(|f| f.to_string()).collect();
    println!("  factors: {}", factors.join(" x "));

    // Noncommutative mode leans on the Casimir count; without it no
    // statement applies, even over a perfect base.
    let mut flags = HypothesisFlags::all_passed();
    flags.casimirs = Flag::False;
    let v = decide(
        (0, 1),
        &TopologyDecl::contractible_box("value box"),
        Mode::Noncommutative,
        &flags,
    );
    show("noncommutative mode, Casimir count open", &v);

    // A second-homotopy declaration that contradicts H2 on a simply
    // connected base is flagged, but only as a diagnostic.
    let topo = TopologyDecl::declared(Flag::True, Flag::True, "sphere-free base")
        .with_pi2(Flag::False);
    let v = decide((0, 1), &topo, Mode::Complete, &passed);
    show("conflicting homotopy declaration", &v);
}
