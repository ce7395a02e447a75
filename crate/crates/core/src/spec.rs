//! System specification files.
//!
//! A system lives in a sectioned UTF-8 file (TOML): `[system]` names the
//! chart, `[functions]` lists the conserved quantities as `name = "source"`
//! entries, and optional sections supply the coinduced closure, Casimirs,
//! sampling windows, tolerance overrides, topology declarations and lattice
//! search parameters. [`SystemSpec::parse`] validates everything up front so
//! the pipeline only sees compiled charts and expressions.

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use nalgebra::DVector;
use serde::Deserialize;

use crate::bundleclass::{Flag, Mode, TopologyDecl};
use crate::expr::{Expression, ParseError};
use crate::fibergeom::LatticeSearch;
use crate::integrability::{self, CoinducedStructure, StructureError};
use crate::sampling::{self, SampleBox, SamplingError};
use crate::symplectic::{ChartError, SymplecticChart};
use crate::tolerances;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("reading {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("dim = {0} must be even and at least 2")]
    BadDim(usize),
    #[error("expected {expected} coordinate names, got {got}")]
    CoordCount { expected: usize, got: usize },
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("need 1 <= k < dim functions, got k = {k} with dim = {dim}")]
    FunctionCount { k: usize, dim: usize },
    #[error("{context}: {source}")]
    Expression {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("closure key `{0}` is not of the form s_i_j")]
    ClosureKey(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("expected dim - k = {expected} casimirs, got {got}")]
    CasimirCount { expected: usize, got: usize },
    #[error("sampling bounds need {expected} entries, got {got}")]
    BoundsLen { expected: usize, got: usize },
    #[error("sampling box degenerate in coordinate {index}: need lo < hi")]
    DegenerateBox { index: usize },
    #[error("sampling count must be at least 1")]
    ZeroCount,
    #[error("partner_times needs one entry per casimir ({expected}), got {got}")]
    PartnerTimesLen { expected: usize, got: usize },
    #[error("tolerance `{0}` must be positive and finite")]
    BadTolerance(&'static str),
    #[error("periodic entry `{0}` names no coordinate")]
    PeriodicUnknownCoord(String),
    #[error("period of `{0}` must be positive and finite")]
    BadPeriod(String),
    #[error("topology: box_image = true forbids explicit flags")]
    TopologyConflict,
    #[error("topology: `{0}` is required unless box_image = true")]
    TopologyMissing(&'static str),
    #[error("topology flag `{field}` must be true, false or \"unknown\", got `{value}`")]
    BadFlag { field: &'static str, value: String },
    #[error("lattice base_point needs {expected} entries, got {got}")]
    BasePointLen { expected: usize, got: usize },
    #[error("lattice `{0}` must be positive and finite")]
    BadLattice(&'static str),
}

/// Per-check acceptance thresholds, spec defaults filled in.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub involution: f64,
    pub closure: f64,
    pub pair_match: f64,
    pub lattice: f64,
    pub darboux: f64,
    pub integrator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            involution: tolerances::INVOLUTION,
            closure: tolerances::CLOSURE_PAIR,
            pair_match: tolerances::PAIR_MATCH,
            lattice: tolerances::LATTICE_RESIDUAL,
            darboux: tolerances::DARBOUX_RESIDUAL,
            integrator: tolerances::PIPELINE_INTEGRATOR,
        }
    }
}

/// Which pipeline stages `check` runs. Stages that depend on a disabled
/// one are skipped with a reason, not silently dropped.
#[derive(Debug, Clone, Copy)]
pub struct PipelineToggles {
    pub bracket: bool,
    pub completeness: bool,
    pub lattice: bool,
    pub action_angle: bool,
    pub connection: bool,
    pub verdict: bool,
}

impl Default for PipelineToggles {
    fn default() -> Self {
        PipelineToggles {
            bracket: true,
            completeness: true,
            lattice: true,
            action_angle: true,
            connection: true,
            verdict: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompletenessConfig {
    pub horizon: f64,
    pub bound: f64,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        CompletenessConfig {
            horizon: tolerances::COMPLETENESS_HORIZON,
            bound: tolerances::BLOWUP_BOUND,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LatticeConfig {
    pub base_point: Vec<f64>,
    pub search: LatticeSearch,
}

/// A parsed and validated system description.
pub struct SystemSpec {
    pub name: String,
    pub chart: SymplecticChart,
    pub function_names: Vec<String>,
    pub functions: Vec<Expression>,
    pub closure: Option<CoinducedStructure>,
    pub casimir_names: Vec<String>,
    pub casimirs: Vec<Expression>,
    pub sample_box: SampleBox,
    pub sample_count: usize,
    pub seed: u64,
    pub guards: Vec<Expression>,
    pub guard_margin: f64,
    /// Flow times along the derived Casimir fields used to manufacture
    /// same-fiber partner points, one per casimir.
    pub partner_times: Vec<f64>,
    pub tolerances: Tolerances,
    pub topology: TopologyDecl,
    pub lattice: Option<LatticeConfig>,
    /// Periods of circle-valued coordinates, indexed like the chart.
    pub wrap: Vec<Option<f64>>,
    pub pipeline: PipelineToggles,
    pub completeness: CompletenessConfig,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("dim", &self.chart.dim())
            .field("functions", &self.function_names)
            .field("casimirs", &self.casimir_names)
            .finish_non_exhaustive()
    }
}

impl SystemSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<SystemSpec, SpecError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Read {
            path: path.display().to_string(),
            source,
        })?;
        SystemSpec::parse(&text)
    }

    pub fn parse(text: &str) -> Result<SystemSpec, SpecError> {
        let raw: RawSpec = toml::from_str(text)?;
        compile(raw)
    }

    pub fn n(&self) -> usize {
        self.chart.n()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Number of conserved quantities.
    pub fn k(&self) -> usize {
        self.functions.len()
    }

    /// Integrability mode implied by the function count alone; the
    /// pipeline still has to verify the hypotheses behind it.
    pub fn expected_mode(&self) -> Mode {
        let (k, n) = (self.k(), self.n());
        if k == n {
            Mode::Complete
        } else if k < n {
            Mode::Partial
        } else {
            Mode::Noncommutative
        }
    }

    /// Seeded sample points, honoring the declared guards.
    pub fn sample_points(&self) -> Result<Vec<DVector<f64>>, SamplingError> {
        sampling::sample_avoiding(
            self.seed,
            &self.sample_box,
            self.sample_count,
            &self.guards,
            self.guard_margin,
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    system: RawSystem,
    functions: IndexMap<String, String>,
    closure: Option<IndexMap<String, String>>,
    casimirs: Option<IndexMap<String, String>>,
    sampling: RawSampling,
    #[serde(default)]
    tolerances: RawTolerances,
    topology: RawTopology,
    lattice: Option<RawLattice>,
    #[serde(default)]
    pipeline: RawPipeline,
    #[serde(default)]
    completeness: RawCompleteness,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    name: String,
    dim: usize,
    coords: Vec<String>,
    periodic: Option<IndexMap<String, f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    lo: Vec<f64>,
    hi: Vec<f64>,
    #[serde(default = "default_count")]
    count: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    guards: Vec<String>,
    #[serde(default = "default_guard_margin")]
    guard_margin: f64,
    partner_times: Option<Vec<f64>>,
}

fn default_count() -> usize {
    100
}

fn default_guard_margin() -> f64 {
    0.05
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    involution: Option<f64>,
    closure: Option<f64>,
    pair_match: Option<f64>,
    lattice: Option<f64>,
    darboux: Option<f64>,
    integrator: Option<f64>,
}

/// Topology flags accept bare booleans or the string `"unknown"`.
#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum FlagValue {
    Bool(bool),
    Text(String),
}

impl FlagValue {
    fn to_flag(&self, field: &'static str) -> Result<Flag, SpecError> {
        match self {
            FlagValue::Bool(b) => Ok(Flag::from(*b)),
            FlagValue::Text(t) => match t.as_str() {
                "true" => Ok(Flag::True),
                "false" => Ok(Flag::False),
                "unknown" => Ok(Flag::Unknown),
                other => Err(SpecError::BadFlag {
                    field,
                    value: other.to_string(),
                }),
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    base: String,
    simply_connected: Option<FlagValue>,
    h2_zero: Option<FlagValue>,
    pi2_zero: Option<FlagValue>,
    /// The common levels are the image of the sample box under F; an
    /// axis-aligned box is contractible, so all flags follow.
    #[serde(default)]
    box_image: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    base_point: Vec<f64>,
    #[serde(default = "default_radius")]
    radius: f64,
    #[serde(default = "default_grid_step")]
    grid_step: f64,
    #[serde(default = "default_capture")]
    capture: f64,
}

fn default_radius() -> f64 {
    10.0
}

fn default_grid_step() -> f64 {
    0.05
}

fn default_capture() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPipeline {
    bracket: bool,
    completeness: bool,
    lattice: bool,
    action_angle: bool,
    connection: bool,
    verdict: bool,
}

impl Default for RawPipeline {
    fn default() -> Self {
        let t = PipelineToggles::default();
        RawPipeline {
            bracket: t.bracket,
            completeness: t.completeness,
            lattice: t.lattice,
            action_angle: t.action_angle,
            connection: t.connection,
            verdict: t.verdict,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawCompleteness {
    horizon: f64,
    bound: f64,
}

impl Default for RawCompleteness {
    fn default() -> Self {
        let c = CompletenessConfig::default();
        RawCompleteness {
            horizon: c.horizon,
            bound: c.bound,
        }
    }
}

fn parse_named(
    source: &str,
    coords: &[String],
    context: impl FnOnce() -> String,
) -> Result<Expression, SpecError> {
    Expression::parse(source, coords).map_err(|source| SpecError::Expression {
        context: context(),
        source,
    })
}

fn closure_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("s_")?;
    let (i, j) = rest.split_once('_')?;
    Some((i.parse().ok()?, j.parse().ok()?))
}

fn positive(value: f64, name: &'static str) -> Result<f64, SpecError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(SpecError::BadTolerance(name))
    }
}

fn compile(raw: RawSpec) -> Result<SystemSpec, SpecError> {
    let dim = raw.system.dim;
    if dim < 2 || dim % 2 != 0 {
        return Err(SpecError::BadDim(dim));
    }
    if raw.system.coords.len() != dim {
        return Err(SpecError::CoordCount {
            expected: dim,
            got: raw.system.coords.len(),
        });
    }
    let chart = SymplecticChart::new(dim / 2, &raw.system.coords)?;
    let coords = chart.coords().to_vec();

    let k = raw.functions.len();
    if k == 0 || k >= dim {
        return Err(SpecError::FunctionCount { k, dim });
    }
    let mut function_names = Vec::with_capacity(k);
    let mut functions = Vec::with_capacity(k);
    for (name, source) in &raw.functions {
        functions.push(parse_named(source, &coords, || format!("function `{name}`"))?);
        function_names.push(name.clone());
    }

    let closure = match &raw.closure {
        None => None,
        Some(entries) => {
            let mut table = Vec::with_capacity(entries.len());
            for (key, source) in entries {
                let (i, j) =
                    closure_key(key).ok_or_else(|| SpecError::ClosureKey(key.clone()))?;
                table.push((i, j, source.as_str()));
            }
            Some(CoinducedStructure::new(k, &table)?)
        }
    };

    let base = integrability::base_coords(k);
    let mut casimir_names = Vec::new();
    let mut casimirs = Vec::new();
    if let Some(entries) = &raw.casimirs {
        if entries.len() != dim - k {
            return Err(SpecError::CasimirCount {
                expected: dim - k,
                got: entries.len(),
            });
        }
        for (name, source) in entries {
            casimirs.push(parse_named(source, &base, || format!("casimir `{name}`"))?);
            casimir_names.push(name.clone());
        }
    }

    let s = &raw.sampling;
    for got in [s.lo.len(), s.hi.len()] {
        if got != dim {
            return Err(SpecError::BoundsLen { expected: dim, got });
        }
    }
    for i in 0..dim {
        if !(s.lo[i].is_finite() && s.hi[i].is_finite() && s.lo[i] < s.hi[i]) {
            return Err(SpecError::DegenerateBox { index: i });
        }
    }
    if s.count == 0 {
        return Err(SpecError::ZeroCount);
    }
    let sample_box = SampleBox::new(s.lo.clone(), s.hi.clone());
    let mut guards = Vec::with_capacity(s.guards.len());
    for (i, source) in s.guards.iter().enumerate() {
        guards.push(parse_named(source, &coords, || format!("guard {}", i + 1))?);
    }
    let guard_margin = positive(s.guard_margin, "guard_margin")?;
    let partner_times = match &s.partner_times {
        Some(times) => {
            if times.len() != casimirs.len() {
                return Err(SpecError::PartnerTimesLen {
                    expected: casimirs.len(),
                    got: times.len(),
                });
            }
            times.clone()
        }
        None => vec![0.9; casimirs.len()],
    };

    let defaults = Tolerances::default();
    let t = &raw.tolerances;
    let tols = Tolerances {
        involution: positive(t.involution.unwrap_or(defaults.involution), "involution")?,
        closure: positive(t.closure.unwrap_or(defaults.closure), "closure")?,
        pair_match: positive(t.pair_match.unwrap_or(defaults.pair_match), "pair_match")?,
        lattice: positive(t.lattice.unwrap_or(defaults.lattice), "lattice")?,
        darboux: positive(t.darboux.unwrap_or(defaults.darboux), "darboux")?,
        integrator: positive(t.integrator.unwrap_or(defaults.integrator), "integrator")?,
    };

    let mut wrap: Vec<Option<f64>> = vec![None; dim];
    if let Some(periodic) = &raw.system.periodic {
        for (name, period) in periodic {
            let idx = coords
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| SpecError::PeriodicUnknownCoord(name.clone()))?;
            if !(period.is_finite() && *period > 0.0) {
                return Err(SpecError::BadPeriod(name.clone()));
            }
            wrap[idx] = Some(*period);
        }
    }

    let topo = &raw.topology;
    let topology = if topo.box_image {
        if topo.simply_connected.is_some() || topo.h2_zero.is_some() || topo.pi2_zero.is_some() {
            return Err(SpecError::TopologyConflict);
        }
        TopologyDecl::contractible_box(topo.base.clone())
    } else {
        let sc = topo
            .simply_connected
            .as_ref()
            .ok_or(SpecError::TopologyMissing("simply_connected"))?
            .to_flag("simply_connected")?;
        let h2 = topo
            .h2_zero
            .as_ref()
            .ok_or(SpecError::TopologyMissing("h2_zero"))?
            .to_flag("h2_zero")?;
        let mut decl = TopologyDecl::declared(sc, h2, topo.base.clone());
        if let Some(pi2) = &topo.pi2_zero {
            decl = decl.with_pi2(pi2.to_flag("pi2_zero")?);
        }
        decl
    };

    let lattice = match &raw.lattice {
        None => None,
        Some(l) => {
            if l.base_point.len() != dim {
                return Err(SpecError::BasePointLen {
                    expected: dim,
                    got: l.base_point.len(),
                });
            }
            let check = |v: f64, name| {
                if v.is_finite() && v > 0.0 {
                    Ok(v)
                } else {
                    Err(SpecError::BadLattice(name))
                }
            };
            Some(LatticeConfig {
                base_point: l.base_point.clone(),
                search: LatticeSearch {
                    radius: check(l.radius, "radius")?,
                    grid_step: check(l.grid_step, "grid_step")?,
                    capture: check(l.capture, "capture")?,
                    wrap: wrap.clone(),
                    ..LatticeSearch::default()
                },
            })
        }
    };

    let p = &raw.pipeline;
    let pipeline = PipelineToggles {
        bracket: p.bracket,
        completeness: p.completeness,
        lattice: p.lattice,
        action_angle: p.action_angle,
        connection: p.connection,
        verdict: p.verdict,
    };
    let completeness = CompletenessConfig {
        horizon: positive(raw.completeness.horizon, "horizon")?,
        bound: positive(raw.completeness.bound, "bound")?,
    };

    Ok(SystemSpec {
        name: raw.system.name,
        chart,
        function_names,
        functions,
        closure,
        casimir_names,
        casimirs,
        sample_box,
        sample_count: s.count,
        seed: s.seed,
        guards,
        guard_margin,
        partner_times,
        tolerances: tols,
        topology,
        lattice,
        wrap,
        pipeline,
        completeness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundleclass::Provenance;

    const OSC: &str = r#"
        [system]
        name = "oscillator"
        dim = 2
        coords = ["p1", "q1"]

        [functions]
        H = "(p1^2 + q1^2) / 2"

        [sampling]
        lo = [0.4, -1.5]
        hi = [1.5, 1.5]

        [topology]
        base = "energy ray E > 0"
        simply_connected = true
        h2_zero = true
    "#;

    #[test]
    fn minimal_spec_defaults() {
        let spec = SystemSpec::parse(OSC).unwrap();
        assert_eq!(spec.name, "oscillator");
        assert_eq!(spec.dim(), 2);
        assert_eq!(spec.k(), 1);
        assert_eq!(spec.expected_mode(), Mode::Complete);
        assert_eq!(spec.sample_count, 100);
        assert_eq!(spec.seed, 0);
        assert!(spec.closure.is_none());
        assert!(spec.casimirs.is_empty());
        assert!(spec.lattice.is_none());
        assert_eq!(spec.tolerances.involution, tolerances::INVOLUTION);
        assert_eq!(spec.tolerances.integrator, tolerances::PIPELINE_INTEGRATOR);
        assert!(spec.pipeline.bracket && spec.pipeline.verdict);
        assert_eq!(spec.completeness.horizon, tolerances::COMPLETENESS_HORIZON);
        assert_eq!(spec.topology.simply_connected, Flag::True);
        assert_eq!(spec.topology.provenance, Provenance::UserDeclared);
        assert_eq!(spec.wrap, vec![None, None]);
    }

    #[test]
    fn function_order_follows_the_file() {
        let text = r#"
            [system]
            name = "order"
            dim = 4
            coords = ["p1", "p2", "q1", "q2"]

            [functions]
            zeta = "p1"
            alpha = "q1"
            mid = "p1 * q2"

            [sampling]
            lo = [-1.0, -1.0, -1.0, -1.0]
            hi = [1.0, 1.0, 1.0, 1.0]

            [topology]
            base = "box"
            box_image = true
        "#;
        let spec = SystemSpec::parse(text).unwrap();
        assert_eq!(spec.function_names, ["zeta", "alpha", "mid"]);
    }

    #[test]
    fn sample_points_are_seeded() {
        let spec = SystemSpec::parse(OSC).unwrap();
        let a = spec.sample_points().unwrap();
        let b = spec.sample_points().unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        for z in &a {
            assert!(z[0] >= 0.4 && z[0] <= 1.5);
            assert!(z[1] >= -1.5 && z[1] <= 1.5);
        }
    }

    #[test]
    fn odd_dim_rejected() {
        let text = OSC.replace("dim = 2", "dim = 3");
        assert!(matches!(SystemSpec::parse(&text), Err(SpecError::BadDim(3))));
    }

    #[test]
    fn coord_count_checked() {
        let text = OSC.replace("coords = [\"p1\", \"q1\"]", "coords = [\"p1\"]");
        assert!(matches!(
            SystemSpec::parse(&text),
            Err(SpecError::CoordCount { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn too_many_functions_rejected() {
        let text = OSC.replace(
            "H = \"(p1^2 + q1^2) / 2\"",
            "a = \"p1\"\nb = \"q1\"",
        );
        assert!(matches!(
            SystemSpec::parse(&text),
            Err(SpecError::FunctionCount { k: 2, dim: 2 })
        ));
    }

    #[test]
    fn malformed_expression_reports_byte_offset() {
        let text = OSC.replace("(p1^2 + q1^2) / 2", "p1 + ");
        let err = SystemSpec::parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("function `H`"), "{msg}");
        assert!(msg.contains("byte"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = OSC.replace("name = \"oscillator\"", "name = \"x\"\nextra = 1");
        assert!(matches!(SystemSpec::parse(&text), Err(SpecError::Toml(_))));
    }

    #[test]
    fn degenerate_box_rejected() {
        let text = OSC.replace("hi = [1.5, 1.5]", "hi = [0.4, 1.5]");
        assert!(matches!(
            SystemSpec::parse(&text),
            Err(SpecError::DegenerateBox { index: 0 })
        ));
    }

    #[test]
    fn closure_and_casimirs_compile() {
        let text = r#"
            [system]
            name = "pair"
            dim = 4
            coords = ["p1", "p2", "q1", "q2"]

            [functions]
            F1 = "p1"
            F2 = "p2"
            F3 = "q1 * p2 - q2 * p1"

            [closure]
            s_1_2 = "0"
            s_1_3 = "x2"
            s_2_3 = "-x1"

            [casimirs]
            C = "x1^2 + x2^2"

            [sampling]
            lo = [-1.0, -1.0, -1.0, -1.0]
            hi = [1.0, 1.0, 1.0, 1.0]
            partner_times = [0.7]

            [topology]
            base = "plane"
            simply_connected = true
            h2_zero = true
        "#;
        let spec = SystemSpec::parse(text).unwrap();
        assert_eq!(spec.expected_mode(), Mode::Noncommutative);
        assert!(spec.closure.is_some());
        assert_eq!(spec.casimir_names, ["C"]);
        assert_eq!(spec.partner_times, [0.7]);
    }

    #[test]
    fn bad_closure_key_rejected() {
        let text = r#"
            [system]
            name = "x"
            dim = 2
            coords = ["p1", "q1"]

            [functions]
            H = "p1"

            [closure]
            sigma_1_2 = "0"

            [sampling]
            lo = [-1.0, -1.0]
            hi = [1.0, 1.0]

            [topology]
            base = "line"
            simply_connected = true
            h2_zero = true
        "#;
        match SystemSpec::parse(text) {
            Err(SpecError::ClosureKey(k)) => assert_eq!(k, "sigma_1_2"),
            other => panic!("expected ClosureKey, got {other:?}"),
        }
    }

    #[test]
    fn casimir_count_enforced() {
        let text = r#"
            [system]
            name = "x"
            dim = 4
            coords = ["p1", "p2", "q1", "q2"]

            [functions]
            F1 = "p1"
            F2 = "p2"
            F3 = "q1"

            [casimirs]
            C1 = "x1"
            C2 = "x2"

            [sampling]
            lo = [-1.0, -1.0, -1.0, -1.0]
            hi = [1.0, 1.0, 1.0, 1.0]

            [topology]
            base = "plane"
            simply_connected = true
            h2_zero = true
        "#;
        assert!(matches!(
            SystemSpec::parse(text),
            Err(SpecError::CasimirCount { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn partner_times_length_checked() {
        let text = r#"
            [system]
            name = "x"
            dim = 4
            coords = ["p1", "p2", "q1", "q2"]

            [functions]
            F1 = "p1"
            F2 = "p2"
            F3 = "q1"

            [casimirs]
            C1 = "x1"

            [sampling]
            lo = [-1.0, -1.0, -1.0, -1.0]
            hi = [1.0, 1.0, 1.0, 1.0]
            partner_times = [0.5, 0.5]

            [topology]
            base = "plane"
            simply_connected = true
            h2_zero = true
        "#;
        assert!(matches!(
            SystemSpec::parse(text),
            Err(SpecError::PartnerTimesLen { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn topology_box_image_derives_flags() {
        let text = OSC.replace(
            "simply_connected = true\n        h2_zero = true",
            "box_image = true",
        );
        let spec = SystemSpec::parse(&text).unwrap();
        assert_eq!(spec.topology.simply_connected, Flag::True);
        assert_eq!(spec.topology.h2_zero, Flag::True);
        assert_eq!(spec.topology.provenance, Provenance::DerivedTrivially);
    }

    #[test]
    fn topology_conflict_rejected() {
        let text = OSC.replace("h2_zero = true", "h2_zero = true\n        box_image = true");
        assert!(matches!(
            SystemSpec::parse(&text),
            Err(SpecError::TopologyConflict)
        ));
    }

    #[test]
    fn topology_unknown_flag_text() {
        let text = OSC.replace("h2_zero = true", "h2_zero = \"unknown\"");
        let spec = SystemSpec::parse(&text).unwrap();
        assert_eq!(spec.topology.h2_zero, Flag::Unknown);

        let bad = OSC.replace("h2_zero = true", "h2_zero = \"maybe\"");
        assert!(matches!(
            SystemSpec::parse(&bad),
            Err(SpecError::BadFlag { field: "h2_zero", .. })
        ));
    }

    #[test]
    fn periodic_coords_build_wrap() {
        let text = r#"
            [system]
            name = "cyl"
            dim = 2
            coords = ["pth", "th"]

            [system.periodic]
            th = 6.283185307179586

            [functions]
            H = "pth^2 / 2"

            [sampling]
            lo = [0.2, -3.0]
            hi = [1.0, 3.0]

            [topology]
            base = "momentum line"
            box_image = true
        "#;
        let spec = SystemSpec::parse(text).unwrap();
        assert_eq!(spec.wrap[0], None);
        assert_eq!(spec.wrap[1], Some(6.283185307179586));

        let bad = text.replace("th = 6.28", "zz = 6.28");
        match SystemSpec::parse(&bad) {
            Err(SpecError::PeriodicUnknownCoord(name)) => assert_eq!(name, "zz"),
            other => panic!("expected PeriodicUnknownCoord, got {other:?}"),
        }
    }

    #[test]
    fn lattice_config_compiles() {
        let text = OSC.to_string()
            + r#"
        [lattice]
        base_point = [1.0, 0.0]
        grid_step = 0.1
        "#;
        let spec = SystemSpec::parse(&text).unwrap();
        let l = spec.lattice.expect("lattice section");
        assert_eq!(l.base_point, [1.0, 0.0]);
        assert_eq!(l.search.grid_step, 0.1);
        assert_eq!(l.search.radius, 10.0);
        assert_eq!(l.search.newton_tol, tolerances::NEWTON_RETURN);

        let bad = text.replace("base_point = [1.0, 0.0]", "base_point = [1.0]");
        assert!(matches!(
            SystemSpec::parse(&bad),
            Err(SpecError::BasePointLen { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn pipeline_toggles_read() {
        let text = OSC.to_string()
            + r#"
        [pipeline]
        lattice = false
        action_angle = false
        "#;
        let spec = SystemSpec::parse(&text).unwrap();
        assert!(spec.pipeline.bracket);
        assert!(!spec.pipeline.lattice);
        assert!(!spec.pipeline.action_angle);
        assert!(spec.pipeline.verdict);
    }

    #[test]
    fn tolerance_overrides_apply() {
        let text = OSC.to_string()
            + r#"
        [tolerances]
        involution = 1e-12
        lattice = 1e-7
        "#;
        let spec = SystemSpec::parse(&text).unwrap();
        assert_eq!(spec.tolerances.involution, 1e-12);
        assert_eq!(spec.tolerances.lattice, 1e-7);
        assert_eq!(spec.tolerances.darboux, tolerances::DARBOUX_RESIDUAL);

        let bad = text.replace("involution = 1e-12", "involution = -1.0");
        assert!(matches!(
            SystemSpec::parse(&bad),
            Err(SpecError::BadTolerance("involution"))
        ));
    }
}
