use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{target_rows, BoundsRecord, BoundsStatus, Interval, Target};
use crate::error::{Error, Result};
use crate::restrictions::{PreparedRestrictions, RestrictionSet};
use crate::sampling::draw_normalized;
use crate::scalar::{dot, Real};
use crate::var_core::{vma_coefficients, InnovationSeries, ReducedFormParams};

/// Rejection-sampling budget for one reduced-form draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    /// Accepted rotations wanted (`K`).
    pub k: usize,
    /// Attempts without any acceptance after which the set is declared empty (`L`).
    pub l: usize,
    /// Hard cap on total attempts once the set is known to be nonempty.
    /// `None` means `max(L, 1000 K)`.
    pub max_attempts: Option<usize>,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            k: 10_000,
            l: 100_000,
            max_attempts: None,
        }
    }
}

impl McSettings {
    pub fn new(k: usize, l: usize) -> Self {
        Self {
            k,
            l,
            max_attempts: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l < self.k {
            return Err(Error::Config(format!(
                "need 1 <= K <= L, got K = {}, L = {}",
                self.k, self.l
            )));
        }
        Ok(())
    }

    pub fn attempt_cap(&self) -> usize {
        self.max_attempts
            .unwrap_or_else(|| self.l.max(self.k.saturating_mul(1000)))
            .max(self.l)
    }
}

/// Inner (sampled) approximation of `[l(φ), u(φ)]` for each target.
///
/// All targets share one pool of accepted rotations.
pub fn bounds_mc<T: Real, R: Rng + ?Sized>(
    params: &ReducedFormParams<T>,
    innovations: &InnovationSeries<T>,
    set: &RestrictionSet,
    targets: &[Target],
    settings: &McSettings,
    draw: usize,
    rng: &mut R,
) -> Result<BoundsRecord<T>> {
    settings.validate()?;
    let prep = PreparedRestrictions::new(params, set, innovations)?;
    let horizon = targets.iter().map(|t| t.horizon).max().unwrap_or(0);
    let vma = vma_coefficients(params, horizon);
    let rows = target_rows(params, &vma, targets)?;
    let mut lo = vec![T::max_value().unwrap(); targets.len()];
    let mut hi = vec![T::min_value().unwrap(); targets.len()];
    let cap = settings.attempt_cap();
    let (mut accepted, mut attempts) = (0usize, 0usize);
    while accepted < settings.k && attempts < cap {
        attempts += 1;
        let q = draw_normalized(params, rng);
        if prep.traditional_ok(&q) && prep.narrative_ok(&q) {
            accepted += 1;
            for (t, target) in targets.iter().enumerate() {
                let eta = dot(&rows[t], q.column(target.shock));
                lo[t] = lo[t].min(eta);
                hi[t] = hi[t].max(eta);
            }
        } else if accepted == 0 && attempts >= settings.l {
            return Ok(BoundsRecord::empty(draw, attempts));
        }
    }
    if accepted < settings.k {
        log::debug!(
            "draw {draw}: stopped at {accepted} of {} accepted rotations after {attempts} attempts",
            settings.k
        );
    }
    Ok(BoundsRecord {
        draw,
        status: BoundsStatus::Nonempty,
        bounds: lo.into_iter().zip(hi).map(|(l, h)| Interval::new(l, h)).collect(),
        accepted,
        attempts,
        flagged: false,
    })
}
