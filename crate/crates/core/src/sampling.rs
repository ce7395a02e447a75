//! Seeded sampling of coordinate boxes.
//!
//! All randomness in the crate flows through [`ChaCha8Rng`] seeded from a
//! `u64`, and points are drawn coordinate by coordinate in a fixed order,
//! so a given seed reproduces the same samples on every platform.

use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{EvalError, Expression};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error(
        "rejection sampling stalled after {attempts} attempts \
         ({accepted} of {wanted} accepted); widen the box or loosen the margin"
    )]
    Stalled {
        attempts: usize,
        accepted: usize,
        wanted: usize,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// An axis-aligned box of sample points.
#[derive(Debug, Clone)]
pub struct SampleBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> SampleBox {
        assert_eq!(lo.len(), hi.len(), "bound dimension mismatch");
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a.is_finite() && b.is_finite() && a <= b),
            "box bounds must be finite with lo <= hi"
        );
        SampleBox { lo, hi }
    }

    /// `[-w, w]` on every axis.
    pub fn centered(dim: usize, w: f64) -> SampleBox {
        SampleBox::new(vec![-w; dim], vec![w; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.lo.iter().zip(&self.hi).map(|(&a, &b)| {
                if a == b {
                    a
                } else {
                    rng.random_range(a..b)
                }
            }),
        )
    }
}

/// `count` points drawn uniformly from the box.
pub fn sample(seed: u64, bx: &SampleBox, count: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| bx.draw(&mut rng)).collect()
}

/// `count` points at which every guard expression has magnitude at least
/// `margin`. Guards mark singular sets (vanishing angular momentum, origin
/// of a radial potential) that downstream checks must stay away from.
pub fn sample_avoiding(
    seed: u64,
    bx: &SampleBox,
    count: usize,
    guards: &[Expression],
    margin: f64,
) -> Result<Vec<DVector<f64>>, SamplingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let budget = 1000 * count.max(1);
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= budget {
            return Err(SamplingError::Stalled {
                attempts,
                accepted: out.len(),
                wanted: count,
            });
        }
        attempts += 1;
        let z = bx.draw(&mut rng);
        let mut clear = true;
        for g in guards {
            if g.eval(z.as_slice())?.abs() < margin {
                clear = false;
                break;
            }
        }
        if clear {
            out.push(z);
        }
    }
    Ok(out)
}
