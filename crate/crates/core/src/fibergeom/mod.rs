//! Geometry of the invariant fibers: period lattices of the commuting
//! flow action, diffeomorphism type R^{m-h} x T^h, action integrals over
//! closed loops, and the quality of action-angle charts measured as a
//! Darboux residual.

pub mod action;
pub mod chart;
pub mod lattice;

pub use action::{
    action_integral, canonical_one_form, detect_period, orbit_loop, ActionError, PeriodError,
};
pub use chart::{darboux_residual, ActionAngle1, ActionAngleChart, ChartError};
pub use lattice::{detect_lattice, LatticeError, LatticeSearch, PeriodLattice};

use std::fmt;

/// Diffeomorphism type of a fiber carrying a transitive R^m flow action
/// whose period lattice has rank h.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiberClass {
    pub m: usize,
    pub h: usize,
}

impl FiberClass {
    pub fn is_torus(&self) -> bool {
        self.h == self.m
    }

    pub fn is_plane(&self) -> bool {
        self.h == 0
    }
}

impl fmt::Display for FiberClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.m - self.h, self.h) {
            (0, 0) => write!(f, "point"),
            (0, h) => write!(f, "T^{h}"),
            (a, 0) => write!(f, "R^{a}"),
            (a, h) => write!(f, "R^{a} x T^{h}"),
        }
    }
}

pub fn classify_fiber(lattice: &PeriodLattice) -> FiberClass {
    FiberClass {
        m: lattice.m,
        h: lattice.h(),
    }
}
