//! End-to-end inference over posterior draws of `φ`: per-draw bounds and
//! robust summaries, or single-prior posteriors of the impulse responses.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::restrictions::RestrictionSet;
use crate::robust::{
    bounds_chebyshev, bounds_mc, nonempty_bounds, plausibility, posterior_bounds_probability,
    robust_credible_region, set_of_posterior_means, target_rows, BoundsRecord, Hypothesis, Interval, McSettings,
    Target,
};
use crate::sampling::{
    derive_seed, hpd_interval, reweight_conditional, sample_unconditional, substream, PhiSource, QPrior,
    StructuralDraw, UnconditionalSettings, MIN_HPD_DRAWS,
};
use crate::scalar::{dot, Real};
use crate::var_core::{compute_residuals, vma_coefficients};

const BOUNDS_STREAM: u64 = 0x424f_554e;
const SAMPLE_STREAM: u64 = 0x5341_4d50;
const REWEIGHT_STREAM: u64 = 0x5245_5754;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Optimization bounds when every restriction and target sits on one shock, sampling otherwise.
    Auto,
    Mc,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Robust,
    StandardUnconditional,
    StandardConditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    /// Reduced-form draws (robust) or posterior draws (standard modes).
    pub n_phi: usize,
    pub mc: McSettings,
    /// Simulations per `r̂` in the conditional mode.
    pub r_draws: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub q_prior: QPrior,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            n_phi: 1_000,
            mc: McSettings::default(),
            r_draws: 10_000,
            alphas: vec![0.68],
            seed: 0,
            algorithm: Algorithm::Auto,
            mode: Mode::Robust,
            q_prior: QPrior::ConditionallyUniform,
        }
    }
}

impl PipelineSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_phi == 0 {
            return Err(Error::Config("the number of draws must be at least 1".into()));
        }
        self.mc.validate()?;
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Config(format!("credibility level {a} not in (0, 1)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    ZeroPlausibility,
}

/// Credible interval at one level: robust region or HPD interval depending on the mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelInterval<T> {
    pub alpha: f64,
    /// `None` when there were too few draws.
    pub interval: Option<Interval<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisProbability<T> {
    pub hypothesis: Hypothesis<T>,
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary<T> {
    pub target: Target,
    /// Set of posterior means; a single point in the standard modes.
    pub mean: Interval<T>,
    pub intervals: Vec<LevelInterval<T>>,
    pub probabilities: Vec<HypothesisProbability<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput<T> {
    pub status: RunStatus,
    pub algorithm: Algorithm,
    /// Fraction of `φ` draws with a nonempty identified set (robust mode only).
    pub plausibility: Option<T>,
    pub draws: usize,
    pub nonempty_draws: usize,
    /// Draws whose optimization bounds fell back to sampled points.
    pub flagged_draws: usize,
    pub summaries: Vec<TargetSummary<T>>,
}

/// The bounds algorithm `auto` resolves to for this set and target list.
pub fn resolve_algorithm(algorithm: Algorithm, set: &RestrictionSet, targets: &[Target]) -> Result<Algorithm> {
    let column = targets.first().map(|t| t.shock);
    let single = column.filter(|&j| targets.iter().all(|t| t.shock == j));
    let linear = single.is_some_and(|j| set.is_linear_in(j));
    match algorithm {
        Algorithm::Mc => Ok(Algorithm::Mc),
        Algorithm::Chebyshev if linear => Ok(Algorithm::Chebyshev),
        Algorithm::Chebyshev => Err(Error::NonlinearRestriction(
            "the chebyshev algorithm needs restrictions linear in one shock column and every target on that shock"
                .into(),
        )),
        Algorithm::Auto if linear => Ok(Algorithm::Chebyshev),
        Algorithm::Auto => Ok(Algorithm::Mc),
    }
}

/// Runs the configured inference on `data` (`T × n`, rows in time order).
pub fn run_pipeline<T: Real, S: PhiSource<T>>(
    source: &S,
    data: &DMatrix<T>,
    set: &RestrictionSet,
    targets: &[Target],
    hypotheses: &[Hypothesis<T>],
    settings: &PipelineSettings,
) -> Result<PipelineOutput<T>> {
    settings.validate()?;
    if targets.is_empty() {
        return Err(Error::Config("no targets".into()));
    }
    match settings.mode {
        Mode::Robust => run_robust(source, data, set, targets, hypotheses, settings),
        Mode::StandardUnconditional | Mode::StandardConditional => {
            run_standard(source, data, set, targets, hypotheses, settings)
        }
    }
}

/// Per-draw bounds, one record per `φ` draw in draw order.
pub fn bounds_records<T: Real, S: PhiSource<T>>(
    source: &S,
    data: &DMatrix<T>,
    set: &RestrictionSet,
    targets: &[Target],
    algorithm: Algorithm,
    settings: &PipelineSettings,
) -> Result<Vec<BoundsRecord<T>>> {
    let algorithm = resolve_algorithm(algorithm, set, targets)?;
    let seed = derive_seed(settings.seed, BOUNDS_STREAM);
    (0..settings.n_phi)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let params = source.draw_phi(&mut rng)?;
            let innov = compute_residuals(data, &params)?;
            match algorithm {
                Algorithm::Chebyshev => {
                    bounds_chebyshev(&params, &innov, set, targets, targets[0].shock, i, &mut rng)
                }
                _ => bounds_mc(&params, &innov, set, targets, &settings.mc, i, &mut rng),
            }
        })
        .collect()
}

fn run_robust<T: Real, S: PhiSource<T>>(
    source: &S,
    data: &DMatrix<T>,
    set: &RestrictionSet,
    targets: &[Target],
    hypotheses: &[Hypothesis<T>],
    settings: &PipelineSettings,
) -> Result<PipelineOutput<T>> {
    let algorithm = resolve_algorithm(settings.algorithm, set, targets)?;
    let records = bounds_records(source, data, set, targets, algorithm, settings)?;
    let plaus = plausibility(&records)?;
    let nonempty = records.iter().filter(|r| r.is_nonempty()).count();
    let flagged = records.iter().filter(|r| r.flagged).count();
    let mut out = PipelineOutput {
        status: RunStatus::Ok,
        algorithm,
        plausibility: Some(plaus),
        draws: records.len(),
        nonempty_draws: nonempty,
        flagged_draws: flagged,
        summaries: Vec::new(),
    };
    if nonempty == 0 {
        out.status = RunStatus::ZeroPlausibility;
        return Ok(out);
    }
    if flagged > 0 {
        log::warn!("{flagged} draws used sampled fallback bounds");
    }
    for (t, &target) in targets.iter().enumerate() {
        let bounds = nonempty_bounds(&records, t);
        let intervals = settings
            .alphas
            .iter()
            .map(|&alpha| {
                let interval = match robust_credible_region(&bounds, T::lit(alpha)) {
                    Ok(cr) => Some(cr.interval),
                    Err(Error::TooFewDraws { needed, got }) => {
                        log::warn!("robust region skipped: {got} nonempty draws, need {needed}");
                        None
                    }
                    Err(e) => return Err(e),
                };
                Ok(LevelInterval { alpha, interval })
            })
            .collect::<Result<Vec<_>>>()?;
        let probabilities = hypotheses
            .iter()
            .map(|h| {
                let (lower, upper) = posterior_bounds_probability(&bounds, h)?;
                Ok(HypothesisProbability {
                    hypothesis: *h,
                    lower,
                    upper,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.summaries.push(TargetSummary {
            target,
            mean: set_of_posterior_means(&bounds)?,
            intervals,
            probabilities,
        });
    }
    Ok(out)
}

/// Impulse responses of every target at each structural draw.
pub fn draw_responses<T: Real>(draws: &[StructuralDraw<T>], targets: &[Target]) -> Result<Vec<Vec<T>>> {
    let horizon = targets.iter().map(|t| t.horizon).max().unwrap_or(0);
    draws
        .par_iter()
        .map(|d| {
            let vma = vma_coefficients(&d.params, horizon);
            let rows = target_rows(&d.params, &vma, targets)?;
            Ok(rows
                .iter()
                .zip(targets)
                .map(|(c, t)| dot(c, d.q.column(t.shock)))
                .collect())
        })
        .collect()
}

fn run_standard<T: Real, S: PhiSource<T>>(
    source: &S,
    data: &DMatrix<T>,
    set: &RestrictionSet,
    targets: &[Target],
    hypotheses: &[Hypothesis<T>],
    settings: &PipelineSettings,
) -> Result<PipelineOutput<T>> {
    let unc = UnconditionalSettings {
        prior: settings.q_prior,
        max_q_attempts: settings.mc.l,
        ..UnconditionalSettings::default()
    };
    let mut out = PipelineOutput {
        status: RunStatus::Ok,
        algorithm: Algorithm::Mc,
        plausibility: None,
        draws: settings.n_phi,
        nonempty_draws: 0,
        flagged_draws: 0,
        summaries: Vec::new(),
    };
    let draws = match sample_unconditional(
        source,
        data,
        set,
        settings.n_phi,
        &unc,
        derive_seed(settings.seed, SAMPLE_STREAM),
    ) {
        Ok(d) => d,
        Err(Error::LowAcceptance { attempts, threshold }) => {
            log::warn!("no accepted draws: acceptance below {threshold:e} after {attempts} attempts");
            out.status = RunStatus::ZeroPlausibility;
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let draws = if settings.mode == Mode::StandardConditional {
        let periods = data.nrows().saturating_sub(draws[0].params.p());
        reweight_conditional(
            &draws,
            set,
            periods,
            settings.r_draws,
            settings.n_phi,
            derive_seed(settings.seed, REWEIGHT_STREAM),
        )?
        .draws
    } else {
        draws
    };
    out.nonempty_draws = draws.len();
    let responses = draw_responses(&draws, targets)?;
    let m = T::usize(responses.len());
    for (t, &target) in targets.iter().enumerate() {
        let eta: Vec<T> = responses.iter().map(|r| r[t]).collect();
        let mean = eta.iter().fold(T::zero(), |a, &b| a + b) / m;
        let intervals = settings
            .alphas
            .iter()
            .map(|&alpha| LevelInterval {
                alpha,
                interval: (eta.len() >= MIN_HPD_DRAWS)
                    .then(|| hpd_interval(&eta, T::lit(alpha)).ok())
                    .flatten()
                    .map(|(lo, hi)| Interval::new(lo, hi)),
            })
            .collect();
        // A single prior gives point-valued sets, so lower and upper coincide.
        let points: Vec<Interval<T>> = eta.iter().map(|&e| Interval::point(e)).collect();
        let probabilities = hypotheses
            .iter()
            .map(|h| {
                let (lower, upper) = posterior_bounds_probability(&points, h)?;
                Ok(HypothesisProbability {
                    hypothesis: *h,
                    lower,
                    upper,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.summaries.push(TargetSummary {
            target,
            mean: Interval::point(mean),
            intervals,
            probabilities,
        });
    }
    Ok(out)
}
