use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::haar::{draw_normalized, std_normal};
use super::phi::PhiSource;
use super::rng::{derive_seed, substream};
use crate::error::{Error, Result};
use crate::restrictions::{PreparedRestrictions, RestrictionSet};
use crate::scalar::Real;
use crate::var_core::{compute_residuals, InnovationSeries, OrthonormalMatrix, ReducedFormParams};

/// Acceptance rates below this over one window abort sampling.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct StructuralDraw<T: Real> {
    pub params: ReducedFormParams<T>,
    pub q: OrthonormalMatrix<T>,
    pub weight: T,
}

/// Prior for `Q` in the single-prior (standard Bayes) posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QPrior {
    /// Haar on O(n) jointly with `φ`: plain accept/reject over `(φ, Q)`.
    JointUniform,
    /// Haar on the restricted set given `φ`: for each `φ`, redraw `Q` until accepted.
    ConditionallyUniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnconditionalSettings {
    pub prior: QPrior,
    /// Q attempts per φ before it is declared empty (conditionally-uniform prior).
    pub max_q_attempts: usize,
    /// Attempts per output draw after which a zero acceptance count aborts.
    pub window: usize,
}

impl Default for UnconditionalSettings {
    fn default() -> Self {
        Self {
            prior: QPrior::ConditionallyUniform,
            max_q_attempts: 100_000,
            window: (1.0 / MIN_ACCEPTANCE_RATE) as usize,
        }
    }
}

fn accept_once<T: Real, R: Rng + ?Sized>(
    params: &ReducedFormParams<T>,
    prep: &PreparedRestrictions<T>,
    rng: &mut R,
) -> Option<OrthonormalMatrix<T>> {
    let q = draw_normalized(params, rng);
    (prep.traditional_ok(&q) && prep.narrative_ok(&q)).then_some(q)
}

/// Posterior draws under the unconditional likelihood (weight 1).
///
/// Draw `i` uses stream `i` of `seed`, so the output does not depend on the
/// number of worker threads.
pub fn sample_unconditional<T, S>(
    source: &S,
    data: &DMatrix<T>,
    set: &RestrictionSet,
    n_draws: usize,
    settings: &UnconditionalSettings,
    seed: u64,
) -> Result<Vec<StructuralDraw<T>>>
where
    T: Real,
    S: PhiSource<T>,
{
    (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let mut attempts = 0usize;
            loop {
                let params = source.draw_phi(&mut rng)?;
                let innov = compute_residuals(data, &params)?;
                let prep = PreparedRestrictions::new(&params, set, &innov)?;
                let budget = match settings.prior {
                    QPrior::JointUniform => 1,
                    QPrior::ConditionallyUniform => settings.max_q_attempts.max(1),
                };
                for _ in 0..budget {
                    attempts += 1;
                    if let Some(q) = accept_once(&params, &prep, &mut rng) {
                        return Ok(StructuralDraw {
                            params,
                            q,
                            weight: T::one(),
                        });
                    }
                    if attempts >= settings.window {
                        return Err(Error::LowAcceptance {
                            attempts,
                            threshold: 1.0 / settings.window as f64,
                        });
                    }
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub draws: usize,
}

/// Monte Carlo estimate of `r(φ, Q) = Pr(D_N = 1 | φ, Q)`.
///
/// Shocks for every period the narrative restrictions touch are simulated as
/// iid N(0, I); `periods` is the length of the innovation sample, needed when a
/// rank restriction compares against all periods.
pub fn approx_narrative_probability<T: Real, R: Rng + ?Sized>(
    params: &ReducedFormParams<T>,
    q: &OrthonormalMatrix<T>,
    set: &RestrictionSet,
    periods: usize,
    m: usize,
    rng: &mut R,
) -> Result<ProbabilityEstimate<T>> {
    let prep = PreparedRestrictions::for_simulation(params, set, periods)?;
    Ok(estimate_r(&prep, q, m, rng))
}

pub(crate) fn estimate_r<T: Real, R: Rng + ?Sized>(
    prep: &PreparedRestrictions<T>,
    q: &OrthonormalMatrix<T>,
    m: usize,
    rng: &mut R,
) -> ProbabilityEstimate<T> {
    let m = m.max(1);
    if !prep.has_narrative() {
        return ProbabilityEstimate {
            value: T::one(),
            std_error: T::zero(),
            draws: m,
        };
    }
    let n = prep.n();
    let needed = prep.needed_periods().to_vec();
    let mut slot = vec![usize::MAX; prep.periods()];
    for (s, &t) in needed.iter().enumerate() {
        slot[t] = s;
    }
    let mut eps = vec![T::zero(); needed.len() * n];
    let mut hits = 0usize;
    for _ in 0..m {
        for e in eps.iter_mut() {
            *e = std_normal(rng);
        }
        if prep.narrative_ok_with(q, |j, t| eps[slot[t] * n + j]) {
            hits += 1;
        }
    }
    let r = hits as f64 / m as f64;
    ProbabilityEstimate {
        value: T::lit(r),
        std_error: T::lit((r * (1.0 - r) / m as f64).sqrt()),
        draws: m,
    }
}

#[derive(Debug, Clone)]
pub struct Reweighted<T: Real> {
    /// Resampled draws, equally weighted (weight 1).
    pub draws: Vec<StructuralDraw<T>>,
    /// Source index of each resampled draw.
    pub indices: Vec<usize>,
    /// `r̂_i` for every input draw.
    pub r_hat: Vec<T>,
    /// Importance weights `1/r̂_i`, capped at `M`.
    pub weights: Vec<T>,
    /// Number of input draws whose weight hit the cap.
    pub capped: usize,
}

/// Importance-resamples unconditional-likelihood draws to the conditional-likelihood posterior.
pub fn reweight_conditional<T: Real>(
    draws: &[StructuralDraw<T>],
    set: &RestrictionSet,
    periods: usize,
    m: usize,
    n_out: usize,
    seed: u64,
) -> Result<Reweighted<T>> {
    if draws.is_empty() {
        return Err(Error::TooFewDraws { needed: 1, got: 0 });
    }
    let m = m.max(1);
    let r_seed = derive_seed(seed, 0x5245_5745);
    let r_hat = draws
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let prep = PreparedRestrictions::for_simulation(&d.params, set, periods)?;
            let mut rng = substream(r_seed, i as u64);
            Ok(estimate_r(&prep, &d.q, m, &mut rng).value)
        })
        .collect::<Result<Vec<T>>>()?;
    let cap = T::usize(m);
    let mut capped = 0usize;
    let weights = r_hat
        .iter()
        .map(|&r| {
            if !r.is_finite() {
                return Err(Error::Numerical(format!("non-finite r-hat {}", r.as_f64())));
            }
            if r * cap < T::one() {
                capped += 1;
                Ok(cap)
            } else {
                Ok(T::one() / r)
            }
        })
        .collect::<Result<Vec<T>>>()?;
    if capped > 0 {
        log::warn!("{capped} of {} draws had r-hat below 1/M; weights capped at M = {m}", draws.len());
    }
    let w64: Vec<f64> = weights.iter().map(|w| w.as_f64()).collect();
    let dist = WeightedIndex::new(&w64).map_err(|e| Error::Numerical(format!("importance weights: {e}")))?;
    let mut rng = substream(derive_seed(seed, 0x5245_5341), 0);
    let indices: Vec<usize> = (0..n_out).map(|_| dist.sample(&mut rng)).collect();
    let out = indices
        .iter()
        .map(|&i| StructuralDraw {
            params: draws[i].params.clone(),
            q: draws[i].q.clone(),
            weight: T::one(),
        })
        .collect();
    Ok(Reweighted {
        draws: out,
        indices,
        r_hat,
        weights,
        capped,
    })
}

/// Gaussian log density of the innovations given `φ`. It does not involve `Q`.
pub fn reduced_form_log_likelihood<T: Real>(params: &ReducedFormParams<T>, innovations: &InnovationSeries<T>) -> T {
    let n = params.n();
    let inv = params.sigma_tr_inv();
    let log_det: T = (0..n).map(|i| inv[(i, i)].ln()).fold(T::zero(), |a, b| a + b);
    let w = inv * innovations.matrix().transpose();
    let quad = w.iter().fold(T::zero(), |a, &b| a + b * b);
    let t = T::usize(innovations.len());
    let half = T::lit(0.5);
    t * log_det - half * quad - half * t * T::usize(n) * T::two_pi().ln()
}

/// Unconditional log likelihood `log f(Y | φ) + log D_N`; `None` when `D_N = 0`.
pub fn unconditional_log_likelihood<T: Real>(
    params: &ReducedFormParams<T>,
    q: &OrthonormalMatrix<T>,
    innovations: &InnovationSeries<T>,
    set: &RestrictionSet,
) -> Result<Option<T>> {
    let prep = PreparedRestrictions::new(params, set, innovations)?;
    Ok(prep
        .narrative_ok(q)
        .then(|| reduced_form_log_likelihood(params, innovations)))
}

/// Conditional log likelihood `log f(Y | φ) − log r(φ, Q)` given `r`; `None` when `D_N = 0`.
pub fn conditional_log_likelihood<T: Real>(
    params: &ReducedFormParams<T>,
    q: &OrthonormalMatrix<T>,
    innovations: &InnovationSeries<T>,
    set: &RestrictionSet,
    r: T,
) -> Result<Option<T>> {
    Ok(unconditional_log_likelihood(params, q, innovations, set)?.map(|ll| ll - r.ln()))
}
