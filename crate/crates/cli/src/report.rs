//! Report serialization: one JSON document plus one CSV per target block.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use nsvar_core::pipeline::{Algorithm, Mode, PipelineOutput, RunStatus};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelArrays {
    pub alpha: f64,
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityArrays {
    pub hypothesis: String,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

/// Summaries of one (variable, shock) block, one array entry per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetBlock {
    pub variable: String,
    pub shock: String,
    pub horizons: Vec<usize>,
    /// Lower end of the set of posterior means (the posterior mean in the standard modes).
    pub mean_l: Vec<Option<f64>>,
    pub mean_u: Vec<Option<f64>>,
    /// Robust credible regions (robust mode).
    pub robust_region: Vec<LevelArrays>,
    /// Highest posterior density intervals (standard modes).
    pub hpd: Vec<LevelArrays>,
    pub probabilities: Vec<ProbabilityArrays>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: RunStatus,
    pub seed: u64,
    pub mode: Mode,
    /// Bounds algorithm actually used.
    pub algorithm: Algorithm,
    pub plausibility: Option<f64>,
    pub draws: usize,
    pub nonempty_draws: usize,
    pub flagged_draws: usize,
    pub targets: Vec<TargetBlock>,
    pub config: RunConfig,
}

impl RunReport {
    /// Regroups the flat per-target output into blocks following the config.
    pub fn build(config: &RunConfig, out: &PipelineOutput<f64>) -> Self {
        let robust = config.mode == Mode::Robust;
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(config.targets.len());
        for spec in &config.targets {
            let horizons = spec.horizon_list();
            let h = horizons.len();
            let slice = out.summaries.get(offset..offset + h);
            offset += h;
            let pick = |f: &dyn Fn(usize) -> Option<f64>| -> Vec<Option<f64>> {
                (0..h).map(|i| slice.and_then(|_| f(i))).collect()
            };
            let s = |i: usize| slice.map(|s| &s[i]);
            let levels: Vec<LevelArrays> = config
                .alphas
                .iter()
                .enumerate()
                .map(|(a, &alpha)| LevelArrays {
                    alpha,
                    lo: pick(&|i| s(i)?.intervals.get(a)?.interval.map(|iv| iv.lo)),
                    hi: pick(&|i| s(i)?.intervals.get(a)?.interval.map(|iv| iv.hi)),
                })
                .collect();
            let probabilities = config
                .hypotheses
                .iter()
                .enumerate()
                .map(|(k, hyp)| ProbabilityArrays {
                    hypothesis: hyp.name.clone(),
                    lower: pick(&|i| s(i)?.probabilities.get(k).map(|p| p.lower)),
                    upper: pick(&|i| s(i)?.probabilities.get(k).map(|p| p.upper)),
                })
                .collect();
            let (robust_region, hpd) = if robust { (levels, Vec::new()) } else { (Vec::new(), levels) };
            blocks.push(TargetBlock {
                variable: spec.variable.clone(),
                shock: spec.shock.clone(),
                horizons,
                mean_l: pick(&|i| s(i).map(|s| s.mean.lo)),
                mean_u: pick(&|i| s(i).map(|s| s.mean.hi)),
                robust_region,
                hpd,
                probabilities,
            });
        }
        Self {
            status: out.status,
            seed: config.seed,
            mode: config.mode,
            algorithm: out.algorithm,
            plausibility: out.plausibility,
            draws: out.draws,
            nonempty_draws: out.nonempty_draws,
            flagged_draws: out.flagged_draws,
            targets: blocks,
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes `report.json` and one `<variable>__<shock>.csv` per block.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("report.json");
        std::fs::write(&path, self.to_json()?).with_context(|| format!("writing {}", path.display()))?;
        for block in &self.targets {
            let path = dir.join(csv_name(block));
            let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
            let (prefix, levels) = if self.mode == Mode::Robust {
                ("rcr", &block.robust_region)
            } else {
                ("hpd", &block.hpd)
            };
            let mut header = vec!["horizon".to_string(), "mean_l".into(), "mean_u".into()];
            for (a, lv) in levels.iter().enumerate() {
                let suffix = if a == 0 { String::new() } else { format!("_{}", lv.alpha) };
                header.push(format!("{prefix}_lo{suffix}"));
                header.push(format!("{prefix}_hi{suffix}"));
            }
            w.write_record(&header)?;
            let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            for (i, h) in block.horizons.iter().enumerate() {
                let mut row = vec![h.to_string(), cell(block.mean_l[i]), cell(block.mean_u[i])];
                for lv in levels {
                    row.push(cell(lv.lo[i]));
                    row.push(cell(lv.hi[i]));
                }
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

pub fn csv_name(block: &TargetBlock) -> String {
    format!("{}__{}.csv", sanitize(&block.variable), sanitize(&block.shock))
}

/// Wall-clock timing, kept out of `report.json` so reruns compare equal.
pub fn write_timing(dir: &Path, seconds: f64) -> Result<()> {
    let mut f = std::fs::File::create(dir.join("timing.json"))?;
    writeln!(f, "{}", serde_json::json!({ "elapsed_seconds": seconds }))?;
    Ok(())
}
