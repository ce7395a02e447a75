//! Global verdicts for the fibration classified upstream: given the
//! structure group R^a x T^b of the fibers, declared topology of the
//! base, and the hypothesis flags gathered by the bracket, completeness,
//! and Casimir checks, decide whether global triviality (and with it a
//! global chart of the matching kind) follows.
//!
//! The decision is one-directional: the underlying theorems are
//! sufficient conditions, so a failed or missing hypothesis yields
//! "unknown", never "nontrivial". Topology is declared by the user, not
//! computed; the only derivation we allow ourselves is that an
//! axis-aligned box is contractible.

use std::fmt;

/// Tri-state for declared or measured hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    True,
    False,
    Unknown,
}

impl Flag {
    pub fn ok(self) -> bool {
        self == Flag::True
    }
}

impl From<bool> for Flag {
    fn from(b: bool) -> Flag {
        if b {
            Flag::True
        } else {
            Flag::False
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::True => "true",
            Flag::False => "false",
            Flag::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    UserDeclared,
    /// Contractible base read off from an axis-aligned box; the only
    /// case where topology flags may be set without a declaration.
    DerivedTrivially,
}

/// Declared topological facts about the base (the image of the map F).
#[derive(Debug, Clone)]
pub struct TopologyDecl {
    pub simply_connected: Flag,
    pub h2_zero: Flag,
    /// Optional second homotopy declaration; on a simply connected base
    /// it should agree with `h2_zero`, and a mismatch is diagnosed.
    pub pi2_zero: Option<Flag>,
    pub base: String,
    pub provenance: Provenance,
}

impl TopologyDecl {
    pub fn declared(simply_connected: Flag, h2_zero: Flag, base: impl Into<String>) -> TopologyDecl {
        TopologyDecl {
            simply_connected,
            h2_zero,
            pi2_zero: None,
            base: base.into(),
            provenance: Provenance::UserDeclared,
        }
    }

    /// An axis-aligned box: contractible, so every flag holds.
    pub fn contractible_box(base: impl Into<String>) -> TopologyDecl {
        TopologyDecl {
            simply_connected: Flag::True,
            h2_zero: Flag::True,
            pi2_zero: Some(Flag::True),
            base: base.into(),
            provenance: Provenance::DerivedTrivially,
        }
    }

    pub fn with_pi2(mut self, pi2_zero: Flag) -> TopologyDecl {
        self.pi2_zero = Some(pi2_zero);
        self
    }
}

/// Which integrability mode the upstream verdict established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Complete,
    Partial,
    Noncommutative,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Complete => "complete",
            Mode::Partial => "partial",
            Mode::Noncommutative => "noncommutative",
        })
    }
}

/// Results of the upstream checks the global theorems lean on.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisFlags {
    /// Involution (complete/partial) or coinduced-closure
    /// (noncommutative) verified at samples.
    pub bracket_check: Flag,
    /// Completeness probes saw no blow-up within the horizon.
    pub completeness: Flag,
    /// Differentials independent at samples.
    pub independence: Flag,
    /// Noncommutative mode only: the declared Casimirs account for the
    /// full corank.
    pub casimirs: Flag,
}

impl HypothesisFlags {
    pub fn all_passed() -> HypothesisFlags {
        HypothesisFlags {
            bracket_check: Flag::True,
            completeness: Flag::True,
            independence: Flag::True,
            casimirs: Flag::True,
        }
    }
}

/// The global statement a verdict leans on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppliedTheorem {
    /// Global action-angle coordinates for completely integrable
    /// systems on a trivial cylinder bundle.
    CompleteIntegrability,
    /// Global parallelization for partially integrable systems.
    Parallelization,
    /// Global structure for noncommutatively integrable systems with a
    /// full set of Casimirs.
    Superintegrability,
    None,
}

impl fmt::Display for AppliedTheorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AppliedTheorem::CompleteIntegrability => "global complete integrability",
            AppliedTheorem::Parallelization => "global parallelization",
            AppliedTheorem::Superintegrability => "global superintegrability",
            AppliedTheorem::None => "none",
        })
    }
}

/// One factor of the structure group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Plane(usize),
    Circle,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Plane(a) => write!(f, "R^{a}"),
            Factor::Circle => f.write_str("T^1"),
        }
    }
}

/// Factor decomposition of R^a x T^b: the plane factor and one circle
/// per compact generator, the shape in which bundles split.
pub fn split_product(group: (usize, usize)) -> Vec<Factor> {
    let (a, b) = group;
    let mut factors = Vec::new();
    if a > 0 {
        factors.push(Factor::Plane(a));
    }
    factors.extend(std::iter::repeat(Factor::Circle).take(b));
    factors
}

#[derive(Debug, Clone)]
pub struct GlobalVerdict {
    pub applicable: AppliedTheorem,
    /// `True` or `Unknown`; a failed sufficient condition proves
    /// nothing, so `False` is never produced.
    pub trivial: Flag,
    /// Description of the bundle splitting along [`split_product`]
    /// factors, when the group is a genuine product.
    pub splitting: Option<String>,
    pub unmet: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl fmt::Display for GlobalVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.trivial {
            Flag::True => write!(f, "trivial ({})", self.applicable),
            _ => {
                write!(f, "unknown")?;
                if !self.unmet.is_empty() {
                    write!(f, "; unmet: {}", self.unmet.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

/// The decision table. Triviality needs the mode's upstream hypotheses
/// and, when compact factors are present, the declared topology; a
/// purely planar group is contractible and needs no topological input.
pub fn decide(
    group: (usize, usize),
    topo: &TopologyDecl,
    mode: Mode,
    flags: &HypothesisFlags,
) -> GlobalVerdict {
    let (a, b) = group;
    let mut unmet = Vec::new();
    let mut diagnostics = Vec::new();

    if topo.simply_connected == Flag::True {
        if let Some(pi2) = topo.pi2_zero {
            if pi2 != topo.h2_zero {
                diagnostics.push(format!(
                    "simply connected base: declared pi2 = 0 being {} conflicts with \
                     H2(B, Z) = 0 being {}",
                    pi2, topo.h2_zero
                ));
            }
        }
    }

    let mut required = vec![
        ("bracket check", flags.bracket_check),
        ("completeness probes", flags.completeness),
        ("independence at samples", flags.independence),
    ];
    if mode == Mode::Noncommutative {
        required.push(("Casimir count matches the corank", flags.casimirs));
    }
    let mut mode_ok = true;
    for (name, flag) in required {
        if !flag.ok() {
            mode_ok = false;
            unmet.push(format!("{name}: {flag}"));
        }
    }

    let mut topo_ok = true;
    if b >= 1 {
        if !topo.simply_connected.ok() {
            topo_ok = false;
            unmet.push(format!(
                "simply connected base: {}",
                topo.simply_connected
            ));
        }
        if !topo.h2_zero.ok() {
            topo_ok = false;
            unmet.push(format!("H2(B, Z) = 0: {}", topo.h2_zero));
        }
    } else {
        diagnostics.push(format!(
            "structure group R^{a} is contractible; triviality needs no topological input"
        ));
    }

    let applicable = if mode_ok {
        match mode {
            Mode::Complete => AppliedTheorem::CompleteIntegrability,
            Mode::Partial => AppliedTheorem::Parallelization,
            Mode::Noncommutative => AppliedTheorem::Superintegrability,
        }
    } else {
        AppliedTheorem::None
    };

    let trivial = if mode_ok && (b == 0 || topo_ok) {
        Flag::True
    } else {
        Flag::Unknown
    };

    let factors = split_product(group);
    let splitting = (factors.len() >= 2).then(|| {
        let parts: Vec<String> = factors.iter().map(Factor::to_string).collect();
        format!(
            "bundle splits along the group factors {} (one circle bundle per compact generator)",
            parts.join(" x ")
        )
    });

    GlobalVerdict {
        applicable,
        trivial,
        splitting,
        unmet,
        diagnostics,
    }
}
