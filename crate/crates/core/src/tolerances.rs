//! Default tolerances, collected in one place so every check states its
//! acceptance threshold explicitly instead of burying magic numbers.
//!
//! Each constant notes what limits the achievable accuracy. Overrides flow
//! through `spec::Tolerances` and the CLI `--tol-*` flags.

/// Involution residual `max |{F_i, F_j}|`. Bracket entries are sums of
/// products of exact jet gradients, so only rounding noise survives.
pub const INVOLUTION: f64 = 1e-10;

/// Closure spread across same-fiber sample pairs. Limited by how well the
/// pair generator stays on the fiber (flow integration at [`INTEGRATOR`]).
pub const CLOSURE_PAIR: f64 = 1e-8;

/// Two samples are considered to lie on the same fiber when their F-values
/// agree within this bound (infinity norm).
pub const PAIR_MATCH: f64 = 1e-6;

/// Relative singular-value threshold for every rank decision.
pub const RANK_REL: f64 = 1e-8;

/// Casimir residual `max |s(x) grad C|`; pure rounding noise.
pub const CASIMIR: f64 = 1e-12;

/// Default per-step error tolerance of the embedded Runge-Kutta pair.
pub const INTEGRATOR: f64 = 1e-10;

/// State infinity-norm beyond which a flow counts as blown up.
pub const BLOWUP_BOUND: f64 = 1e8;

/// Default horizon of the completeness probe.
pub const COMPLETENESS_HORIZON: f64 = 100.0;

/// A step below `STEP_UNDERFLOW_FACTOR * |t|` aborts the integration.
pub const STEP_UNDERFLOW_FACTOR: f64 = 1e-13;

/// Residual at which a refined lattice return counts as closing.
pub const LATTICE_RESIDUAL: f64 = 1e-8;

/// Integrator tolerance used by the pipeline for lattice and action work.
/// Sits an order below [`NEWTON_RETURN`] so Newton can actually reach it.
pub const PIPELINE_INTEGRATOR: f64 = 1e-12;

/// Newton refinement target for `|Phi(t) - base|`.
pub const NEWTON_RETURN: f64 = 1e-10;

/// Commutation residual `|Phi_t^X Phi_s^Y - Phi_s^Y Phi_t^X|` accepted for
/// flows that are supposed to commute.
pub const COMMUTATION: f64 = 1e-8;

/// Residual of the least-squares frame solve, relative to `1 + |Y|`.
pub const SPAN_RESIDUAL: f64 = 1e-8;

/// Outer central-difference step of the curvature check. The inner
/// derivative is analytic, so noise is ~1e-13/step and truncation ~step^2.
pub const CURVATURE_FD_STEP: f64 = 1e-5;

/// Curvature residual accepted as flat.
pub const CURVATURE: f64 = 1e-6;

/// Agreement between the torsion formula and minus the Lie bracket.
pub const TORSION_MATCH: f64 = 1e-8;

/// Geodesic residual `|nabla_gamma' gamma'|` along frame integral curves.
pub const GEODESIC: f64 = 1e-7;

/// Constant-matrix recovery bound of the frame equivalence check.
pub const EQUIVALENCE: f64 = 1e-8;

/// Return error of parallel transport around a closed loop.
pub const TRANSPORT_RETURN: f64 = 1e-7;

/// Agreement between the symplectically induced connection and the
/// parallelization connection of a Hamiltonian frame on an isotropic fiber.
pub const OMEGA_MATCH: f64 = 1e-7;

/// Tangency bound `|dF(X)|` for fields claimed tangent to a fiber.
pub const TANGENCY: f64 = 1e-8;

/// Central-difference step of the Darboux Jacobian.
pub const DARBOUX_FD_STEP: f64 = 1e-3;

/// Deviation of the pulled-back form from the canonical block. Dominated by
/// the finite-difference truncation of the chart Jacobian at
/// [`DARBOUX_FD_STEP`] and the reconstruction noise of actions and angles.
pub const DARBOUX_RESIDUAL: f64 = 1e-4;

/// Action integral agreement with its quadrature oracle.
pub const ACTION: f64 = 1e-6;

/// Sampling rejects points closer than this to a declared singular set.
pub const SINGULAR_MARGIN: f64 = 1e-6;

/// Loop endpoints must match this closely before an action integral runs.
pub const LOOP_CLOSURE: f64 = 1e-8;
