//! The `run` workflow: load, parse, sample, summarize, write.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use nsvar_core::pipeline::{run_pipeline, PipelineSettings};
use nsvar_core::restrictions::{parse_restrictions, NameResolver};
use nsvar_core::robust::McSettings;
use nsvar_core::sampling::PhiPosteriorSampler;

use crate::config::RunConfig;
use crate::data::{load_csv, DataSpec};
use crate::report::{write_timing, RunReport};

/// Runs `config` with the restriction document `restrictions` (the restriction
/// file without its `[model]`/`[run]` tables). The variable list is filled from
/// the data header when the config leaves it empty.
pub fn run(mut config: RunConfig, restrictions: &str) -> Result<RunReport> {
    let spec = DataSpec {
        variables: config.variables.clone(),
        date_column: config.date_column.clone(),
        log_columns: config.log_columns.clone(),
    };
    let data = load_csv(&config.data, &spec)?;
    config.variables = data.variables.clone();
    let resolver = NameResolver {
        variables: &data.variables,
        dates: data.dates.as_deref(),
        lags: config.lags,
        rows: data.rows(),
    };
    let set = parse_restrictions(restrictions, &resolver)
        .with_context(|| format!("restrictions in {}", config.restrictions.display()))?;
    if !config.shocks.is_empty() && config.shocks.len() != config.variables.len() {
        return Err(crate::config::ConfigError::new(
            &config.restrictions,
            format!("{} shock names for {} variables", config.shocks.len(), config.variables.len()),
        )
        .into());
    }
    let targets = config.resolve_targets()?;
    let hypotheses: Vec<_> = config.hypotheses.iter().map(|h| h.hypothesis()).collect();
    let sampler = PhiPosteriorSampler::new(&data.values, config.lags, config.constant)?;
    let settings = PipelineSettings {
        n_phi: config.phi_draws,
        mc: McSettings::new(config.q_draws, config.max_q_attempts),
        r_draws: config.r_draws,
        alphas: config.alphas.clone(),
        seed: config.seed,
        algorithm: config.algorithm,
        mode: config.mode,
        q_prior: config.q_prior,
    };
    let out = run_pipeline(&sampler, &data.values, &set, &targets, &hypotheses, &settings)?;
    Ok(RunReport::build(&config, &out))
}

/// [`run`] followed by writing the report and timing files to `dir`.
pub fn run_to_dir(config: RunConfig, restrictions: &str, dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let report = run(config, restrictions)?;
    report.write(dir)?;
    write_timing(dir, start.elapsed().as_secs_f64())?;
    Ok(report)
}
