//! Posterior sampling of the reduced form and of `Q`, under the unconditional
//! and the conditional likelihood.

pub(crate) mod haar;
mod hpd;
mod phi;
mod posterior;
pub mod rng;

pub use haar::{draw_normalized, draw_uniform_orthonormal, sign_fix_columns};
pub use hpd::{hpd_interval, MIN_HPD_DRAWS};
pub use phi::{draw_phi, FixedPhi, PhiPosteriorSampler, PhiSource, MAX_UNSTABLE_DRAWS};
pub use posterior::{
    approx_narrative_probability, conditional_log_likelihood, reduced_form_log_likelihood,
    reweight_conditional, sample_unconditional, unconditional_log_likelihood, ProbabilityEstimate,
    QPrior, Reweighted, StructuralDraw, UnconditionalSettings, MIN_ACCEPTANCE_RATE,
};
pub use rng::{derive_seed, substream, SimRng};


#[cfg(test)]
mod tests;
