//! The whole pipeline on a bundled system, straight from the library:
//! run every stage, print the JSON report, and confirm it matches the
//! published schema and the exit-code contract.

use liouville::{catalog, pipeline, report};

fn main() {
    let spec = catalog::oscillator();
    let report = pipeline::run(&spec, catalog::OSCILLATOR);

    print!("{}", report.to_json());

    let value = serde_json::to_value(&report).unwrap();
    match report::validate(&value) {
        Ok(()) => println!("schema: ok"),
        Err(e) => println!("schema: {e}"),
    }
    println!(
        "exit code {} (0 passed, 2 failed, 3 inconclusive or errored)",
        report.exit_code
    );

    // The volatile fields (timestamp, stage timings) are the only thing
    // separating two runs on the same input.
    let again = pipeline::run(&spec, catalog::OSCILLATOR);
    println!(
        "deterministic after normalization: {}",
        report.normalized().to_json() == again.normalized().to_json()
    );
}
