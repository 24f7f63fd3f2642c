//! Sign normalization, traditional sign restrictions and narrative restrictions.
//!
//! Periods are innovation indices (0 = first post-lag observation). All
//! inequalities are weak.

mod config;
mod prepared;

pub use config::{parse_restrictions, NameResolver};
pub use prepared::PreparedRestrictions;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};
use crate::var_core::{
    historical_decomposition, impulse_response, InnovationSeries, OrthonormalMatrix,
    ReducedFormParams, VmaCoefficients,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Sign::Positive => x,
            Sign::Negative => -x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraditionalSignRestriction {
    pub variable: usize,
    pub shock: usize,
    pub horizon: usize,
    pub sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionMode {
    /// `|H_j| ≥ max_{l≠j} |H_l|`
    MostImportant,
    /// `|H_j| ≥ Σ_{l≠j} |H_l|`
    Overwhelming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    LargestPositive,
    LargestMagnitude,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Every post-lag period except the restricted one.
    All,
    Periods(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NarrativeRestriction {
    ShockSign {
        shock: usize,
        period: usize,
        sign: Sign,
    },
    HistDecomp {
        variable: usize,
        shock: usize,
        start: usize,
        span: usize,
        mode: ContributionMode,
    },
    ShockRank {
        shock: usize,
        period: usize,
        comparison: Comparison,
        mode: RankMode,
    },
}

impl NarrativeRestriction {
    pub fn shock(&self) -> usize {
        match *self {
            Self::ShockSign { shock, .. }
            | Self::HistDecomp { shock, .. }
            | Self::ShockRank { shock, .. } => shock,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionSet {
    pub traditional: Vec<TraditionalSignRestriction>,
    pub narrative: Vec<NarrativeRestriction>,
}

impl RestrictionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.traditional.is_empty() && self.narrative.is_empty()
    }

    pub fn with_narrative(mut self, r: NarrativeRestriction) -> Self {
        self.narrative.push(r);
        self
    }

    pub fn with_traditional(mut self, r: TraditionalSignRestriction) -> Self {
        self.traditional.push(r);
        self
    }

    /// Largest VMA horizon any restriction needs.
    pub fn max_horizon(&self) -> usize {
        let trad = self.traditional.iter().map(|r| r.horizon);
        let hist = self.narrative.iter().filter_map(|r| match r {
            NarrativeRestriction::HistDecomp { span, .. } => Some(*span),
            _ => None,
        });
        trad.chain(hist).max().unwrap_or(0)
    }

    /// Shock columns referenced by any restriction, sorted and deduplicated.
    pub fn columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self
            .traditional
            .iter()
            .map(|r| r.shock)
            .chain(self.narrative.iter().map(NarrativeRestriction::shock))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    /// The single column every restriction is linear in, if there is one.
    /// An empty set is linear in any column and returns `None`.
    pub fn linear_column(&self) -> Option<usize> {
        let cols = self.columns();
        if cols.len() != 1 {
            return None;
        }
        let j = cols[0];
        for r in &self.narrative {
            match r {
                NarrativeRestriction::HistDecomp { .. } => return None,
                NarrativeRestriction::ShockRank {
                    shock,
                    period,
                    mode: RankMode::LargestMagnitude,
                    ..
                } => {
                    self.pinned_sign(*shock, *period)?;
                }
                _ => {}
            }
        }
        Some(j)
    }

    /// Whether the set restricts only column `j` linearly (an empty set qualifies).
    pub fn is_linear_in(&self, j: usize) -> bool {
        self.is_empty() || self.linear_column() == Some(j)
    }

    fn pinned_sign(&self, shock: usize, period: usize) -> Option<Sign> {
        self.narrative.iter().find_map(|r| match *r {
            NarrativeRestriction::ShockSign {
                shock: s,
                period: k,
                sign,
            } if s == shock && k == period => Some(sign),
            _ => None,
        })
    }

    /// Checks indices against `n` variables and `periods` innovation periods.
    pub fn validate(&self, n: usize, periods: usize) -> Result<()> {
        let var = |i: usize| -> Result<()> {
            if i >= n {
                return Err(Error::Config(format!("variable/shock index {i} out of range (n = {n})")));
            }
            Ok(())
        };
        let per = |t: usize| -> Result<()> {
            if t >= periods {
                return Err(Error::Config(format!(
                    "period {t} outside the post-lag sample of {periods} periods"
                )));
            }
            Ok(())
        };
        for r in &self.traditional {
            var(r.variable)?;
            var(r.shock)?;
        }
        for r in &self.narrative {
            match r {
                NarrativeRestriction::ShockSign { shock, period, .. } => {
                    var(*shock)?;
                    per(*period)?;
                }
                NarrativeRestriction::HistDecomp {
                    variable,
                    shock,
                    start,
                    span,
                    ..
                } => {
                    var(*variable)?;
                    var(*shock)?;
                    per(start + span)?;
                }
                NarrativeRestriction::ShockRank {
                    shock,
                    period,
                    comparison,
                    ..
                } => {
                    var(*shock)?;
                    per(*period)?;
                    if let Comparison::Periods(ts) = comparison {
                        for &t in ts {
                            per(t)?;
                            if t == *period {
                                return Err(Error::Config(format!(
                                    "shock_rank comparison set contains the restricted period {t}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn comparison_periods(c: &Comparison, k: usize, periods: usize) -> Vec<usize> {
    match c {
        Comparison::All => (0..periods).filter(|&t| t != k).collect(),
        Comparison::Periods(ts) => ts.iter().copied().filter(|&t| t != k).collect(),
    }
}

/// `diag(Q' Σ_tr^{-1}) ≥ 0`.
pub fn check_sign_normalization<T: Real>(params: &ReducedFormParams<T>, q: &OrthonormalMatrix<T>) -> bool {
    let d = params.a0(q);
    (0..params.n()).all(|j| d[(j, j)] >= T::zero())
}

pub fn evaluate_traditional<T: Real>(
    params: &ReducedFormParams<T>,
    vma: &VmaCoefficients<T>,
    q: &OrthonormalMatrix<T>,
    set: &RestrictionSet,
) -> Result<bool> {
    for r in &set.traditional {
        let eta = impulse_response(params, vma, q, r.variable, r.shock, r.horizon)?;
        if r.sign.apply(eta) < T::zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The narrative indicator `D_N`.
pub fn evaluate_narrative<T: Real>(
    params: &ReducedFormParams<T>,
    vma: &VmaCoefficients<T>,
    q: &OrthonormalMatrix<T>,
    innovations: &InnovationSeries<T>,
    set: &RestrictionSet,
) -> Result<bool> {
    let n = params.n();
    set.validate(n, innovations.len())?;
    let w = params.sigma_tr_inv() * innovations.matrix().transpose();
    let eps = |j: usize, t: usize| dot(q.column(j), w.column(t).as_slice());
    for r in &set.narrative {
        let ok = match r {
            NarrativeRestriction::ShockSign { shock, period, sign } => {
                sign.apply(eps(*shock, *period)) >= T::zero()
            }
            NarrativeRestriction::HistDecomp {
                variable,
                shock,
                start,
                span,
                mode,
            } => {
                let win = innovations.window(*start, *span)?;
                let mut contrib = Vec::with_capacity(n);
                for l in 0..n {
                    contrib.push(historical_decomposition(params, vma, q, &win, *variable, l)?.abs());
                }
                contribution_holds(&contrib, *shock, *mode)
            }
            NarrativeRestriction::ShockRank {
                shock,
                period,
                comparison,
                mode,
            } => {
                let ek = eps(*shock, *period);
                comparison_periods(comparison, *period, innovations.len())
                    .into_iter()
                    .all(|t| {
                        let et = eps(*shock, t);
                        match mode {
                            RankMode::LargestPositive => ek >= et,
                            RankMode::LargestMagnitude => ek.abs() >= et.abs(),
                        }
                    })
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `abs_contrib[l] = |H_{i,l}|`.
pub(crate) fn contribution_holds<T: Real>(abs_contrib: &[T], j: usize, mode: ContributionMode) -> bool {
    let hj = abs_contrib[j];
    let others = abs_contrib.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, v)| *v);
    match mode {
        ContributionMode::MostImportant => others.fold(T::zero(), |a, b| a.max(b)) <= hj,
        ContributionMode::Overwhelming => others.fold(T::zero(), |a, b| a + b) <= hj,
    }
}

/// Stacked rows `Z` with `Z q_j ≥ 0` equivalent to every restriction plus the
/// sign normalization of column `j`. The normalization row is last.
pub fn linear_coefficient_matrix<T: Real>(
    params: &ReducedFormParams<T>,
    innovations: &InnovationSeries<T>,
    set: &RestrictionSet,
    column: usize,
) -> Result<DMatrix<T>> {
    let n = params.n();
    if column >= n {
        return Err(Error::Index(format!("target column {column} >= n = {n}")));
    }
    set.validate(n, innovations.len())?;
    let vma = crate::var_core::vma_coefficients(params, set.max_horizon());
    let w = params.sigma_tr_inv() * innovations.matrix().transpose();
    let mut rows: Vec<Vec<T>> = Vec::new();
    let other = |what: &str, shock: usize| {
        Error::NonlinearRestriction(format!(
            "{what} restricts shock {shock}, not the target column {column}"
        ))
    };
    for r in &set.traditional {
        if r.shock != column {
            return Err(other("traditional restriction", r.shock));
        }
        let c = vma.irf_row(params, r.variable, r.horizon)?;
        rows.push(c.iter().map(|&x| r.sign.apply(x)).collect());
    }
    for r in &set.narrative {
        match r {
            NarrativeRestriction::ShockSign { shock, period, sign } => {
                if *shock != column {
                    return Err(other("shock_sign", *shock));
                }
                rows.push(w.column(*period).iter().map(|&x| sign.apply(x)).collect());
            }
            NarrativeRestriction::HistDecomp { .. } => {
                return Err(Error::NonlinearRestriction(
                    "historical-decomposition restrictions are quadratic in q".into(),
                ))
            }
            NarrativeRestriction::ShockRank {
                shock,
                period,
                comparison,
                mode,
            } => {
                if *shock != column {
                    return Err(other("shock_rank", *shock));
                }
                let wk = w.column(*period);
                let ts = comparison_periods(comparison, *period, innovations.len());
                match mode {
                    RankMode::LargestPositive => {
                        for t in ts {
                            rows.push((wk - w.column(t)).iter().copied().collect());
                        }
                    }
                    RankMode::LargestMagnitude => {
                        let s = set.pinned_sign(*shock, *period).ok_or_else(|| {
                            Error::NonlinearRestriction(format!(
                                "largest_magnitude on shock {shock} at period {period} is linear only \
                                 together with a shock_sign restriction on the same shock and period"
                            ))
                        })?;
                        let sk: Vec<T> = wk.iter().map(|&x| s.apply(x)).collect();
                        for t in ts {
                            let wt = w.column(t);
                            rows.push(sk.iter().zip(wt.iter()).map(|(a, b)| *a - *b).collect());
                            rows.push(sk.iter().zip(wt.iter()).map(|(a, b)| *a + *b).collect());
                        }
                    }
                }
            }
        }
    }
    rows.push(params.sigma_tr_inv().column(column).iter().copied().collect());
    Ok(DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]))
}
