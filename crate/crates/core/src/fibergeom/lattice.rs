//! Period lattice of a commuting flow action.
//!
//! The search walks a coarse grid over [-R, R]^m by chaining short flows
//! (one grid cell per integration, so the whole scan costs about one long
//! trajectory per axis), picks grid-local minima of the return distance,
//! refines each by Newton iteration on t -> Phi(t) - base, and reduces
//! the refined returns to a lattice basis by pairwise integer size
//! reduction. An empty basis means no returns were found in the box; it
//! is evidence for h = 0 there, not a proof.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::flows::{commutation_residual, integrate, FlowAction, FlowError, IntegratorOptions};
use crate::numeric;
use crate::symplectic::VectorField;
use crate::tolerances;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(
        "legs {i} and {j} do not commute: flow residual {residual:.3e} exceeds {tol:.1e}"
    )]
    NonCommuting {
        i: usize,
        j: usize,
        residual: f64,
        tol: f64,
    },
    #[error("degenerate Newton system at candidate t = {t:?}")]
    DegenerateJacobian { t: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct LatticeSearch {
    /// Half-width R of the searched box [-R, R]^m.
    pub radius: f64,
    /// Coarse grid step.
    pub grid_step: f64,
    /// Grid-local minima below this return distance are refined.
    pub capture: f64,
    /// Acceptance threshold for the refined return distance. Keep it
    /// about an order of magnitude above what the action's integrator
    /// tolerance can deliver, or true returns stall just over the line.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Candidates with sup-norm below this are the trivial return at 0;
    /// `None` means half the grid step.
    pub min_norm: Option<f64>,
    /// Periods of phase-space coordinates that live on circles; return
    /// distances wrap those components.
    pub wrap: Vec<Option<f64>>,
    pub commutation_tol: f64,
}

impl Default for LatticeSearch {
    fn default() -> Self {
        LatticeSearch {
            radius: 10.0,
            grid_step: 0.05,
            capture: 0.5,
            newton_tol: tolerances::NEWTON_RETURN,
            max_newton: 20,
            min_norm: None,
            wrap: Vec::new(),
            commutation_tol: tolerances::COMMUTATION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeriodLattice {
    pub m: usize,
    /// Reduced basis of the detected return lattice, shortest first.
    pub basis: Vec<DVector<f64>>,
    /// Return distance of `Phi(b)` from the base point per basis vector.
    pub residuals: Vec<f64>,
    pub search_radius: f64,
}

impl PeriodLattice {
    pub fn h(&self) -> usize {
        self.basis.len()
    }

    /// Whether v is an integer combination of the basis within tol.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        if self.basis.is_empty() {
            return v.amax() <= tol;
        }
        let b = DMatrix::from_columns(&self.basis);
        let (c, _) = numeric::solve_least_squares(&b, v);
        let rounded = c.map(f64::round);
        (b * rounded - v).amax() <= tol
    }

    /// Whether the two lattices have the same span (mutual containment of
    /// basis vectors).
    pub fn same_lattice(&self, other: &PeriodLattice, tol: f64) -> bool {
        self.basis.iter().all(|v| other.contains(v, tol))
            && other.basis.iter().all(|v| self.contains(v, tol))
    }
}

fn wrapped_diff(z: &DVector<f64>, base: &DVector<f64>, wrap: &[Option<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        z.len(),
        z.iter().zip(base.iter()).enumerate().map(|(i, (a, b))| {
            let d = a - b;
            match wrap.get(i).copied().flatten() {
                Some(period) => numeric::wrap_centered(d, period),
                None => d,
            }
        }),
    )
}

struct GridScan {
    fields: Vec<Arc<dyn VectorField>>,
    base: DVector<f64>,
    wrap: Vec<Option<f64>>,
    opts: IntegratorOptions,
    npts: usize,
    delta: f64,
    radius: f64,
    dist: Vec<f64>,
}

impl GridScan {
    fn run(&mut self, axis: usize, prefix: usize, state: &DVector<f64>) -> Result<(), FlowError> {
        let field = self.fields[axis].clone();
        let last = axis + 1 == self.fields.len();
        let mut s = integrate(field.as_ref(), state.as_slice(), -self.radius, &self.opts)?;
        for i in 0..self.npts {
            let idx = prefix * self.npts + i;
            if last {
                self.dist[idx] = wrapped_diff(&s, &self.base, &self.wrap).norm();
            } else {
                self.run(axis + 1, idx, &s)?;
            }
            if i + 1 < self.npts {
                s = integrate(field.as_ref(), s.as_slice(), self.delta, &self.opts)?;
            }
        }
        Ok(())
    }
}

fn decode(mut idx: usize, m: usize, npts: usize, radius: f64, delta: f64) -> Vec<f64> {
    let mut t = vec![0.0; m];
    for axis in (0..m).rev() {
        t[axis] = -radius + (idx % npts) as f64 * delta;
        idx /= npts;
    }
    t
}

/// Newton refinement of a candidate return time; `None` when the
/// iteration leaves the search box or fails to converge.
fn refine(
    action: &FlowAction,
    search: &LatticeSearch,
    t0: &[f64],
) -> Result<Option<(DVector<f64>, f64)>, LatticeError> {
    let base = action.base();
    let mut t = DVector::from_column_slice(t0);
    for _ in 0..search.max_newton {
        let z = action.compose(t.as_slice())?;
        let g = wrapped_diff(&z, base, &search.wrap);
        let gnorm = g.norm();
        if gnorm <= search.newton_tol {
            return Ok(Some((t, gnorm)));
        }
        let m = t.len();
        let mut jac = DMatrix::zeros(base.len(), m);
        for (j, field) in action.fields().iter().enumerate() {
            let xj = field.value(z.as_slice()).map_err(FlowError::from)?;
            jac.column_mut(j).copy_from(&xj);
        }
        let (smin, smax) = numeric::singular_extremes(&jac);
        if smin <= 1e-12 * smax.max(1.0) {
            return Err(LatticeError::DegenerateJacobian {
                t: t.as_slice().to_vec(),
            });
        }
        let (dt, _) = numeric::solve_least_squares(&jac, &(-g));
        t += dt;
        if t.amax() > search.radius + 1.0 {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Pairwise integer size reduction, adequate for the well-separated
/// lattices of rank <= 4 handled here.
fn reduce_basis(mut vs: Vec<DVector<f64>>, drop_tol: f64) -> Vec<DVector<f64>> {
    for _ in 0..100 {
        vs.retain(|v| v.norm() > drop_tol);
        vs.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let mut changed = false;
        for i in 1..vs.len() {
            let (head, tail) = vs.split_at_mut(i);
            let w = &mut tail[0];
            for b in head.iter() {
                let bb = b.dot(b);
                if bb <= drop_tol * drop_tol {
                    continue; // zeroed during this pass, dropped on the next
                }
                let c = (w.dot(b) / bb).round();
                if c != 0.0 {
                    *w -= b * c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    vs.retain(|v| v.norm() > drop_tol);
    vs.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    vs
}

/// Detect the period lattice of the action within the search box.
pub fn detect_lattice(
    action: &FlowAction,
    search: &LatticeSearch,
) -> Result<PeriodLattice, LatticeError> {
    let m = action.m();
    assert!((1..=4).contains(&m), "grid search supports 1 <= m <= 4");
    let opts = *action.options();

    for i in 0..m {
        for j in (i + 1)..m {
            let r = commutation_residual(
                action.fields()[i].as_ref(),
                action.fields()[j].as_ref(),
                action.base().as_slice(),
                0.5,
                0.5,
                &opts,
            )?;
            if r > search.commutation_tol {
                return Err(LatticeError::NonCommuting {
                    i: i + 1,
                    j: j + 1,
                    residual: r,
                    tol: search.commutation_tol,
                });
            }
        }
    }

    let steps = (2.0 * search.radius / search.grid_step).round() as usize;
    let npts = steps + 1;
    let total = npts.pow(m as u32);
    let mut scan = GridScan {
        fields: action.fields().to_vec(),
        base: action.base().clone(),
        wrap: search.wrap.clone(),
        opts,
        npts,
        delta: search.grid_step,
        radius: search.radius,
        dist: vec![0.0; total],
    };
    scan.run(0, 0, action.base())?;
    let dist = scan.dist;

    // Grid-local minima below the capture threshold, excluding the
    // trivial return at t = 0.
    let min_norm = search.min_norm.unwrap_or(search.grid_step / 2.0);
    let mut offsets: Vec<isize> = Vec::new();
    {
        // neighbor index offsets for {-1,0,1}^m minus the center
        let mut counter = vec![0i32; m];
        loop {
            let off: isize = counter
                .iter()
                .rev()
                .enumerate()
                .map(|(axis, &c)| (c as isize - 1) * (npts as isize).pow(axis as u32))
                .sum();
            if off != 0 {
                offsets.push(off);
            }
            let mut axis = 0;
            loop {
                if axis == m {
                    break;
                }
                counter[axis] += 1;
                if counter[axis] < 3 {
                    break;
                }
                counter[axis] = 0;
                axis += 1;
            }
            if axis == m {
                break;
            }
        }
    }

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    'grid: for idx in 0..total {
        let v = dist[idx];
        if v > search.capture {
            continue;
        }
        let t = decode(idx, m, npts, search.radius, search.grid_step);
        if t.iter().fold(0.0_f64, |a, x| a.max(x.abs())) < min_norm {
            continue;
        }
        // boundary-aware neighbor comparison
        let coords = decode_indices(idx, m, npts);
        for &off in &offsets {
            let nidx = idx as isize + off;
            if nidx < 0 || nidx as usize >= total {
                continue;
            }
            let ncoords = decode_indices(nidx as usize, m, npts);
            if coords
                .iter()
                .zip(&ncoords)
                .any(|(&a, &b)| (a as isize - b as isize).abs() > 1)
            {
                continue; // wrapped across a row boundary, not a neighbor
            }
            if dist[nidx as usize] < v {
                continue 'grid;
            }
        }
        candidates.push(t);
    }

    // Newton refinement and dedup.
    let mut returns: Vec<DVector<f64>> = Vec::new();
    for t0 in &candidates {
        if let Some((t, _)) = refine(action, search, t0)? {
            if t.amax() < min_norm {
                continue;
            }
            if returns.iter().all(|r| (r - &t).amax() > 1e-6) {
                returns.push(t);
            }
        }
    }

    let basis = reduce_basis(returns, 1e-6);

    // Polish the reduced vectors (integer combinations of returns are
    // returns again) and record their final residuals. A vector whose
    // polish stalls at the integrator's accuracy floor is kept as is,
    // with the directly measured return distance as its residual.
    let mut polished = Vec::with_capacity(basis.len());
    let mut residuals = Vec::with_capacity(basis.len());
    for b in basis {
        match refine(action, search, b.as_slice())? {
            Some((t, r)) => {
                polished.push(t);
                residuals.push(r);
            }
            None => {
                let z = action.compose(b.as_slice())?;
                residuals.push(wrapped_diff(&z, action.base(), &search.wrap).norm());
                polished.push(b);
            }
        }
    }

    Ok(PeriodLattice {
        m,
        basis: polished,
        residuals,
        search_radius: search.radius,
    })
}

fn decode_indices(mut idx: usize, m: usize, npts: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for axis in (0..m).rev() {
        out[axis] = idx % npts;
        idx /= npts;
    }
    out
}
