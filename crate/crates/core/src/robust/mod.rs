//! Multiple-prior inference: per-draw bounds of the conditional identified set
//! and their posterior summaries.

mod chebyshev;
mod lp;
mod mc;
mod opt;
mod summary;

pub use chebyshev::{bounds_chebyshev, chebyshev_center, ChebyshevCenter, RADIUS_TOL};
pub use lp::{maximize, LpOutcome};
pub use mc::{bounds_mc, McSettings};
pub use opt::{bounds_opt, OptBounds, FEASIBILITY_TOL};
pub use summary::{
    nonempty_bounds, plausibility, posterior_bounds_probability, robust_credible_region,
    set_of_posterior_means, CredibleRegion, Hypothesis, RobustSummary,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::var_core::{ReducedFormParams, VmaCoefficients};

/// Impulse response `η_{i,j,h}` of variable `i` to shock `j` at horizon `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Target {
    pub variable: usize,
    pub shock: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval<T>) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsStatus {
    Nonempty,
    Empty,
}

/// Outcome for one reduced-form draw: empty, or one `[l, u]` per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord<T> {
    pub draw: usize,
    pub status: BoundsStatus,
    /// One interval per target, in target order; empty when `status` is `Empty`.
    pub bounds: Vec<Interval<T>>,
    /// Accepted rotations (Monte Carlo) or 0 (optimization).
    pub accepted: usize,
    pub attempts: usize,
    /// Set when the optimizer could not certify a solution and a sampled bound was used.
    pub flagged: bool,
}

impl<T: Real> BoundsRecord<T> {
    pub fn empty(draw: usize, attempts: usize) -> Self {
        Self {
            draw,
            status: BoundsStatus::Empty,
            bounds: Vec::new(),
            accepted: 0,
            attempts,
            flagged: false,
        }
    }

    pub fn is_nonempty(&self) -> bool {
        self.status == BoundsStatus::Nonempty
    }

    pub fn bound(&self, target: usize) -> Option<Interval<T>> {
        self.bounds.get(target).copied()
    }
}

/// Coefficient vectors `c_{i,h}` for each target.
pub(crate) fn target_rows<T: Real>(
    params: &ReducedFormParams<T>,
    vma: &VmaCoefficients<T>,
    targets: &[Target],
) -> Result<Vec<Vec<T>>> {
    targets
        .iter()
        .map(|t| {
            if t.shock >= params.n() {
                return Err(Error::Index(format!("target shock {} >= n = {}", t.shock, params.n())));
            }
            vma.irf_row(params, t.variable, t.horizon).map(|c| c.as_slice().to_vec())
        })
        .collect()
}
