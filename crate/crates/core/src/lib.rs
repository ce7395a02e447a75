//! Verification and construction toolkit for finite-dimensional integrable
//! Hamiltonian systems on coordinate charts of symplectic R^(2n).
//!
//! The crate is organized around numeric witnesses rather than symbolic
//! proofs: every geometric statement it checks (involution, closure of a
//! bracket matrix, period lattices of a flow action, action-angle charts,
//! flatness of parallelization connections, bundle triviality) is reduced
//! to residuals evaluated at sampled points, with tolerances carried
//! explicitly.
//!
//! # Layout
//!
//! - [`expr`] — arithmetic expression DSL with forward-mode jets.
//! - [`symplectic`] — charts, musical isomorphisms, Hamiltonian fields,
//!   Poisson and Lie brackets.
//! - [`flows`] — adaptive embedded Runge-Kutta integration, composed
//!   multi-field flows, commutation and completeness probes.
//! - [`integrability`] — involution and closure checks, Casimir
//!   verification, derived fields of a noncommutative system.
//! - [`fibergeom`] — period-lattice detection, fiber classification,
//!   action integrals, Darboux residuals.
//! - [`affine`] — parallelization connections: torsion, curvature,
//!   geodesics, parallel transport, frame equivalence, exponential charts.
//! - [`bundleclass`] — global triviality verdicts from declared topology.
//! - [`spec`], [`report`], [`pipeline`] — the file format, the JSON report,
//!   and the orchestration used by the `liouville` binary.
//!
//! # Examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! ```text
//! cargo run --example expressions       # parsing, jets, domain errors
//! cargo run --example hamiltonian_basics
//! cargo run --example flow_oscillator
//! cargo run --example involution_report
//! cargo run --example noncommutative_central_field
//! cargo run --example period_lattice
//! cargo run --example action_angle
//! cargo run --example connections
//! cargo run --example flat_transport
//! cargo run --example omega_connection
//! cargo run --example global_verdict
//! cargo run --example pipeline_report
//! ```

pub mod affine;
pub mod bundleclass;
pub mod catalog;
pub mod expr;
pub mod fibergeom;
pub mod flows;
pub mod integrability;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod spec;
pub mod symplectic;
pub mod tolerances;

pub use expr::{EvalError, Expression, Jet2, ParseError};
