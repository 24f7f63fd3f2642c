use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_HPD_DRAWS: usize = 100;

/// Shortest window of sorted draws containing `⌈αN⌉` of them.
pub fn hpd_interval<T: Real>(draws: &[T], alpha: T) -> Result<(T, T)> {
    if draws.len() < MIN_HPD_DRAWS {
        return Err(Error::TooFewDraws {
            needed: MIN_HPD_DRAWS,
            got: draws.len(),
        });
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Config(format!("credibility level {} not in (0, 1)", alpha.as_f64())));
    }
    if draws.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numerical("non-finite draw passed to hpd_interval".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    let m = ((alpha.as_f64() * n as f64).ceil() as usize).clamp(1, n);
    let (mut best, mut lo) = (sorted[m - 1] - sorted[0], 0);
    for i in 1..=n - m {
        let w = sorted[i + m - 1] - sorted[i];
        if w < best {
            best = w;
            lo = i;
        }
    }
    Ok((sorted[lo], sorted[lo + m - 1]))
}
