use serde::{Deserialize, Serialize};

use super::{BoundsRecord, Interval, Target};
use crate::error::{Error, Result};
use crate::sampling::MIN_HPD_DRAWS;
use crate::scalar::Real;

const GRID_POINTS: usize = 401;
const GOLDEN_ITERS: usize = 200;

/// Shortest interval `[c − r, c + r]` containing at least a fraction `α` of the draw-wise sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleRegion<T> {
    pub interval: Interval<T>,
    pub center: T,
    pub radius: T,
    /// Range of centers attaining the minimal radius to within tolerance.
    pub flat_range: Interval<T>,
    /// Fraction of draws whose set lies inside `interval`.
    pub coverage: T,
}

/// A closed (possibly one-sided) hypothesis set for an impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis<T> {
    pub lo: Option<T>,
    pub hi: Option<T>,
}

impl<T: Real> Hypothesis<T> {
    pub fn positive() -> Self {
        Self {
            lo: Some(T::zero()),
            hi: None,
        }
    }

    pub fn negative() -> Self {
        Self {
            lo: None,
            hi: Some(T::zero()),
        }
    }

    fn contains(&self, iv: &Interval<T>) -> bool {
        self.lo.is_none_or(|l| iv.lo >= l) && self.hi.is_none_or(|h| iv.hi <= h)
    }

    fn intersects(&self, iv: &Interval<T>) -> bool {
        self.lo.is_none_or(|l| iv.hi >= l) && self.hi.is_none_or(|h| iv.lo <= h)
    }
}

/// Robust summaries of one target over the nonempty draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSummary<T> {
    pub target: Target,
    pub set_of_posterior_means: Interval<T>,
    pub credible_region: CredibleRegion<T>,
    pub plausibility: T,
    pub nonempty_draws: usize,
    pub total_draws: usize,
}

impl<T: Real> RobustSummary<T> {
    pub fn compute(records: &[BoundsRecord<T>], target_index: usize, target: Target, alpha: T) -> Result<Self> {
        let bounds = nonempty_bounds(records, target_index);
        Ok(Self {
            target,
            set_of_posterior_means: set_of_posterior_means(&bounds)?,
            credible_region: robust_credible_region(&bounds, alpha)?,
            plausibility: plausibility(records)?,
            nonempty_draws: bounds.len(),
            total_draws: records.len(),
        })
    }
}

/// Bounds for target `target` from the nonempty records, in draw order.
pub fn nonempty_bounds<T: Real>(records: &[BoundsRecord<T>], target: usize) -> Vec<Interval<T>> {
    records
        .iter()
        .filter(|r| r.is_nonempty())
        .filter_map(|r| r.bound(target))
        .collect()
}

/// Fraction of reduced-form draws with a nonempty identified set.
pub fn plausibility<T: Real>(records: &[BoundsRecord<T>]) -> Result<T> {
    if records.is_empty() {
        return Err(Error::TooFewDraws { needed: 1, got: 0 });
    }
    let k = records.iter().filter(|r| r.is_nonempty()).count();
    Ok(T::usize(k) / T::usize(records.len()))
}

/// `[mean l, mean u]` over the nonempty draws.
pub fn set_of_posterior_means<T: Real>(bounds: &[Interval<T>]) -> Result<Interval<T>> {
    if bounds.is_empty() {
        return Err(Error::ZeroPlausibility);
    }
    let m = T::usize(bounds.len());
    let (lo, hi) = bounds
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), iv| (a + iv.lo, b + iv.hi));
    Ok(Interval::new(lo / m, hi / m))
}

/// Lower and upper posterior probabilities of a hypothesis: the fraction of
/// sets contained in it and the fraction intersecting it.
pub fn posterior_bounds_probability<T: Real>(bounds: &[Interval<T>], hyp: &Hypothesis<T>) -> Result<(T, T)> {
    if bounds.is_empty() {
        return Err(Error::ZeroPlausibility);
    }
    let m = T::usize(bounds.len());
    let lower = bounds.iter().filter(|b| hyp.contains(b)).count();
    let upper = bounds.iter().filter(|b| hyp.intersects(b)).count();
    Ok((T::usize(lower) / m, T::usize(upper) / m))
}

struct RadiusFn<T> {
    mids: Vec<T>,
    halves: Vec<T>,
    rank: usize,
}

impl<T: Real> RadiusFn<T> {
    /// Leftmost and rightmost centers whose radius-`r` ball covers `rank` sets.
    fn cover(&self, r: T) -> Option<(T, T)> {
        // Set m fits around eta iff eta ∈ [hi_m − r, lo_m + r].
        let mut events: Vec<(T, i32)> = Vec::with_capacity(2 * self.mids.len());
        for (&m, &h) in self.mids.iter().zip(&self.halves) {
            if h <= r {
                events.push((m + h - r, 1));
                events.push((m - h + r, -1));
            }
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
        let (mut count, mut left, mut right) = (0usize, None, None);
        for (x, e) in events {
            if e > 0 {
                count += 1;
                if count >= self.rank && left.is_none() {
                    left = Some(x);
                }
            } else {
                if count >= self.rank {
                    right = Some(x);
                }
                count -= 1;
            }
        }
        left.zip(right)
    }
}

impl<T: Real> RadiusFn<T> {
    /// Smallest radius around `eta` that covers `rank` of the sets.
    fn eval(&self, eta: T) -> T {
        let mut d: Vec<T> = self
            .mids
            .iter()
            .zip(&self.halves)
            .map(|(&m, &h)| (eta - m).abs() + h)
            .collect();
        let k = self.rank - 1;
        d.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
        d[k]
    }
}

fn golden<T: Real>(f: &RadiusFn<T>, mut a: T, mut b: T, tol: T) -> T {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f.eval(x1), f.eval(x2));
    for _ in 0..GOLDEN_ITERS {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f.eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f.eval(x2);
        }
    }
    (a + b) / T::lit(2.0)
}

/// Robust credible region of level `alpha`.
///
/// The radius function is piecewise linear and may be flat at its minimum;
/// the leftmost minimizer is reported and the flat range is kept alongside.
pub fn robust_credible_region<T: Real>(bounds: &[Interval<T>], alpha: T) -> Result<CredibleRegion<T>> {
    if bounds.len() < MIN_HPD_DRAWS {
        return Err(Error::TooFewDraws {
            needed: MIN_HPD_DRAWS,
            got: bounds.len(),
        });
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Config(format!("credibility level {} not in (0, 1)", alpha.as_f64())));
    }
    if bounds.iter().any(|b| !b.lo.is_finite() || !b.hi.is_finite() || b.lo > b.hi) {
        return Err(Error::Numerical("invalid bounds passed to robust_credible_region".into()));
    }
    let m = bounds.len();
    let two = T::lit(2.0);
    let f = RadiusFn {
        mids: bounds.iter().map(|b| (b.lo + b.hi) / two).collect(),
        halves: bounds.iter().map(|b| (b.hi - b.lo) / two).collect(),
        rank: ((alpha.as_f64() * m as f64).ceil() as usize).clamp(1, m),
    };
    let lo = bounds.iter().map(|b| b.lo).fold(T::max_value().unwrap(), |a, b| a.min(b));
    let hi = bounds.iter().map(|b| b.hi).fold(T::min_value().unwrap(), |a, b| a.max(b));
    let range = hi - lo;
    if range == T::zero() {
        return Ok(CredibleRegion {
            interval: Interval::point(lo),
            center: lo,
            radius: T::zero(),
            flat_range: Interval::point(lo),
            coverage: T::one(),
        });
    }
    let tol = T::lit(1e-6) * range;
    let step = range / T::usize(GRID_POINTS - 1);
    let grid: Vec<(T, T)> = (0..GRID_POINTS)
        .map(|i| {
            let x = lo + step * T::usize(i);
            (x, f.eval(x))
        })
        .collect();
    let best_i = (0..GRID_POINTS)
        .min_by(|&a, &b| grid[a].1.partial_cmp(&grid[b].1).unwrap())
        .unwrap();
    let mut cands = vec![grid[best_i].0, golden(&f, lo, hi, tol)];
    let a = lo.max(grid[best_i].0 - step);
    let b = hi.min(grid[best_i].0 + step);
    cands.push(golden(&f, a, b, tol * T::lit(1e-3)));
    let z_star = cands.iter().map(|&x| f.eval(x)).fold(T::max_value().unwrap(), |a, b| a.min(b));
    let flat_tol = T::lit(1e-9) * range.max(T::one());

    // The objective has many local minima when sets are nearly points, so the
    // search result only brackets the optimum: bisect on the radius with an
    // exact coverage sweep, starting from the best value found.
    let (mut r_lo, mut r_hi) = (T::zero(), z_star);
    if f.cover(r_lo).is_some() {
        r_hi = r_lo;
    }
    for _ in 0..200 {
        if r_hi - r_lo <= T::default_epsilon() * range {
            break;
        }
        let mid = (r_lo + r_hi) / two;
        if f.cover(mid).is_some() {
            r_hi = mid;
        } else {
            r_lo = mid;
        }
    }
    let (left, right) = f.cover(r_hi).unwrap_or((cands[0], cands[0]));
    let radius = f.eval(left);
    let interval = Interval::new(left - radius, left + radius);
    let inside = bounds
        .iter()
        .filter(|b| b.lo >= interval.lo - flat_tol && b.hi <= interval.hi + flat_tol)
        .count();
    Ok(CredibleRegion {
        interval,
        center: left,
        radius,
        flat_range: Interval::new(left, right),
        coverage: T::usize(inside) / T::usize(m),
    })
}
