//! `lab` subcommands: curves from the bivariate model written as CSV.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{Matrix2, Vector2};
use nsvar_core::bivariate_lab::{
    consistency_experiment, hellinger_profile, likelihood_profile, restriction_holds, simulate_bivariate,
    theta_grid, BivariatePhi, ConsistencyRow, HellingerPoint, LabRestriction, LikelihoodMode, ProfilePoint,
};
use nsvar_core::sampling::{derive_seed, substream};

pub const DEFAULT_A0: [f64; 4] = [1.0, 0.5, 0.2, 1.2];

/// Attempts at simulating a sample on which the restriction holds at the truth.
const MAX_SIMULATIONS: usize = 100_000;

pub fn parse_a0(s: &str) -> Result<Matrix2<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("A0 `{s}` is not a comma-separated list of numbers"))?;
    if v.len() != 4 {
        bail!("A0 needs 4 entries in row order, got {}", v.len());
    }
    Ok(Matrix2::new(v[0], v[1], v[2], v[3]))
}

#[derive(Debug, Clone)]
pub struct LikelihoodArgs {
    pub a0: Matrix2<f64>,
    pub kind: LabRestriction,
    pub mode: LikelihoodMode,
    pub t: usize,
    /// Restricted period (0-based).
    pub k: usize,
    pub grid: usize,
    pub m: usize,
    pub seed: u64,
}

/// Likelihood over `θ` at the true `φ`, on a sample simulated from `A0` on
/// which the restriction holds at the true `θ`.
pub fn likelihood(args: &LikelihoodArgs) -> Result<Vec<ProfilePoint>> {
    if args.k >= args.t {
        bail!("restricted period {} outside a sample of {}", args.k, args.t);
    }
    let (phi, theta0, _) = BivariatePhi::from_a0(&args.a0)?;
    let mut rng = substream(derive_seed(args.seed, 1), 0);
    let mut sample = None;
    for _ in 0..MAX_SIMULATIONS {
        let s = simulate_bivariate(&args.a0, args.t, false, &mut rng)?;
        let yk = Vector2::new(s.y[(args.k, 0)], s.y[(args.k, 1)]);
        if restriction_holds(&phi, theta0, yk, args.kind) {
            sample = Some(s);
            break;
        }
    }
    let sample = sample.context("could not simulate a sample satisfying the restriction")?;
    let mut rng = substream(derive_seed(args.seed, 2), 0);
    Ok(likelihood_profile(
        &theta_grid(args.grid),
        &phi,
        &sample.y,
        args.k,
        args.kind,
        args.mode,
        args.m,
        &mut rng,
    )?)
}

#[derive(Debug, Clone)]
pub struct HellingerArgs {
    pub a0: Matrix2<f64>,
    pub kind: LabRestriction,
    pub mode: LikelihoodMode,
    pub grid: usize,
    pub m: usize,
    pub seed: u64,
}

/// Hellinger distance between `θ` and the true `θ0`, with `θ0` added to the grid.
pub fn hellinger(args: &HellingerArgs) -> Result<Vec<HellingerPoint>> {
    let (phi, theta0, _) = BivariatePhi::from_a0(&args.a0)?;
    let mut grid = theta_grid(args.grid);
    let at = grid.partition_point(|&t| t < theta0);
    if grid.get(at) != Some(&theta0) {
        grid.insert(at, theta0);
    }
    let mut rng = substream(derive_seed(args.seed, 3), 0);
    Ok(hellinger_profile(&grid, &phi, theta0, args.kind, args.mode, args.m, &mut rng)?)
}

pub fn consistency(a0: &Matrix2<f64>, t_list: &[usize], replications: usize, seed: u64) -> Result<Vec<ConsistencyRow>> {
    if t_list.is_empty() || t_list.contains(&0) {
        bail!("sample sizes must be positive");
    }
    Ok(consistency_experiment(a0, t_list, replications, seed)?)
}

pub fn write_curve(path: &Path, points: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["theta", "value"])?;
    for (t, v) in points {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_widths(path: &Path, rows: &[ConsistencyRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["T", "width", "replication"])?;
    for r in rows {
        w.write_record([r.t.to_string(), r.width.to_string(), r.replication.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
