//! Checking involution and independence at sampled points: the healthy
//! decoupled-oscillators system, then a canonical pair that fails with
//! the offending indices named.

use liouville::catalog;
use liouville::integrability::check_involution;
use liouville::symplectic::SymplecticChart;

fn main() {
    let spec = catalog::two_oscillators();
    let samples = spec.sample_points().unwrap();
    let report = check_involution(
        &spec.chart,
        &spec.functions,
        &samples,
        spec.tolerances.involution,
    )
    .unwrap();
    println!(
        "{}: verdict {}, max residual {:.3e}, Jacobian rank range {:?} over {} samples",
        spec.name,
        report.verdict,
        report.max_involution_residual,
        report.jacobian_rank_range(),
        samples.len()
    );

    // (p1, q1) is as far from involution as it gets: {p1, q1} = -1.
    let chart = SymplecticChart::standard(2);
    let fs = vec![chart.parse("p1").unwrap(), chart.parse("q1").unwrap()];
    let report = check_involution(&chart, &fs, &samples, 1e-10).unwrap();
    println!("canonical pair: verdict {}", report.verdict);
    println!("worst pair: {:?}", report.worst_pair.unwrap());
}
