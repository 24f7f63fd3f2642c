use nalgebra::DMatrix;

use super::{comparison_periods, contribution_holds, ContributionMode, NarrativeRestriction, RankMode, RestrictionSet, Sign};
use crate::error::Result;
use crate::scalar::{dot, Real};
use crate::var_core::{vma_coefficients, InnovationSeries, OrthonormalMatrix, ReducedFormParams};

#[derive(Debug, Clone)]
enum Narrative<T> {
    Sign {
        shock: usize,
        period: usize,
        sign: Sign,
    },
    Hist {
        shock: usize,
        end: usize,
        mode: ContributionMode,
        /// `c_{i,l}` for `l = 0..=span`.
        rows: Vec<Vec<T>>,
    },
    Rank {
        shock: usize,
        period: usize,
        others: Vec<usize>,
        mode: RankMode,
    },
}

/// Restriction set compiled against one reduced-form draw for repeated
/// evaluation over many candidate `Q`.
#[derive(Debug, Clone)]
pub struct PreparedRestrictions<T: Real> {
    n: usize,
    periods: usize,
    norm: Vec<Vec<T>>,
    traditional: Vec<(usize, Vec<T>)>,
    narrative: Vec<Narrative<T>>,
    needed: Vec<usize>,
    /// Whitened innovations `Σ_tr^{-1} u_t`, one column per period.
    w: Option<DMatrix<T>>,
}

impl<T: Real> PreparedRestrictions<T> {
    pub fn new(
        params: &ReducedFormParams<T>,
        set: &RestrictionSet,
        innovations: &InnovationSeries<T>,
    ) -> Result<Self> {
        let mut out = Self::for_simulation(params, set, innovations.len())?;
        out.w = Some(params.sigma_tr_inv() * innovations.matrix().transpose());
        Ok(out)
    }

    /// Compiles the set without data; narrative checks then need explicit shocks.
    pub fn for_simulation(params: &ReducedFormParams<T>, set: &RestrictionSet, periods: usize) -> Result<Self> {
        let n = params.n();
        set.validate(n, periods)?;
        let vma = vma_coefficients(params, set.max_horizon());
        let norm = (0..n)
            .map(|j| params.sigma_tr_inv().column(j).iter().copied().collect())
            .collect();
        let mut traditional = Vec::with_capacity(set.traditional.len());
        for r in &set.traditional {
            let c = vma.irf_row(params, r.variable, r.horizon)?;
            traditional.push((r.shock, c.iter().map(|&x| r.sign.apply(x)).collect()));
        }
        let mut needed = Vec::new();
        let mut narrative = Vec::with_capacity(set.narrative.len());
        for r in &set.narrative {
            narrative.push(match r {
                NarrativeRestriction::ShockSign { shock, period, sign } => {
                    needed.push(*period);
                    Narrative::Sign {
                        shock: *shock,
                        period: *period,
                        sign: *sign,
                    }
                }
                NarrativeRestriction::HistDecomp {
                    variable,
                    shock,
                    start,
                    span,
                    mode,
                } => {
                    needed.extend(*start..=start + span);
                    let rows = (0..=*span)
                        .map(|l| vma.irf_row(params, *variable, l).map(|c| c.as_slice().to_vec()))
                        .collect::<Result<_>>()?;
                    Narrative::Hist {
                        shock: *shock,
                        end: start + span,
                        mode: *mode,
                        rows,
                    }
                }
                NarrativeRestriction::ShockRank {
                    shock,
                    period,
                    comparison,
                    mode,
                } => {
                    let others = comparison_periods(comparison, *period, periods);
                    needed.push(*period);
                    needed.extend(others.iter().copied());
                    Narrative::Rank {
                        shock: *shock,
                        period: *period,
                        others,
                        mode: *mode,
                    }
                }
            });
        }
        needed.sort_unstable();
        needed.dedup();
        Ok(Self {
            n,
            periods,
            norm,
            traditional,
            narrative,
            needed,
            w: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn has_narrative(&self) -> bool {
        !self.narrative.is_empty()
    }

    /// Periods whose shocks enter some narrative restriction, ascending.
    pub fn needed_periods(&self) -> &[usize] {
        &self.needed
    }

    /// `Σ_tr^{-1} e_j`, the vector defining the sign normalization of column `j`.
    pub fn normalization_vector(&self, j: usize) -> &[T] {
        &self.norm[j]
    }

    pub fn normalization_ok(&self, q: &OrthonormalMatrix<T>) -> bool {
        (0..self.n).all(|j| dot(q.column(j), &self.norm[j]) >= T::zero())
    }

    pub fn traditional_ok(&self, q: &OrthonormalMatrix<T>) -> bool {
        self.traditional
            .iter()
            .all(|(j, c)| dot(q.column(*j), c) >= T::zero())
    }

    /// Narrative indicator with shocks supplied by `eps(shock, period)`.
    pub fn narrative_ok_with<F>(&self, q: &OrthonormalMatrix<T>, eps: F) -> bool
    where
        F: Fn(usize, usize) -> T,
    {
        let mut contrib = vec![T::zero(); self.n];
        self.narrative.iter().all(|r| match r {
            Narrative::Sign { shock, period, sign } => sign.apply(eps(*shock, *period)) >= T::zero(),
            Narrative::Hist {
                shock,
                end,
                mode,
                rows,
            } => {
                for (l, slot) in contrib.iter_mut().enumerate() {
                    let ql = q.column(l);
                    let mut h = T::zero();
                    for (lag, c) in rows.iter().enumerate() {
                        h += dot(c, ql) * eps(l, end - lag);
                    }
                    *slot = h.abs();
                }
                contribution_holds(&contrib, *shock, *mode)
            }
            Narrative::Rank {
                shock,
                period,
                others,
                mode,
            } => {
                let ek = eps(*shock, *period);
                match mode {
                    RankMode::LargestPositive => others.iter().all(|&t| ek >= eps(*shock, t)),
                    RankMode::LargestMagnitude => {
                        let ak = ek.abs();
                        others.iter().all(|&t| ak >= eps(*shock, t).abs())
                    }
                }
            }
        })
    }

    /// Narrative indicator on the observed data.
    ///
    /// # Panics
    /// If the set was compiled with [`Self::for_simulation`].
    pub fn narrative_ok(&self, q: &OrthonormalMatrix<T>) -> bool {
        let w = self.w.as_ref().expect("prepared without innovations");
        self.narrative_ok_with(q, |j, t| dot(q.column(j), w.column(t).as_slice()))
    }

    /// Normalization, traditional and narrative restrictions on the observed data.
    pub fn accepts(&self, q: &OrthonormalMatrix<T>) -> bool {
        self.normalization_ok(q) && self.traditional_ok(q) && self.narrative_ok(q)
    }
}
