use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::opt::bounds_opt;
use super::{target_rows, BoundsRecord, BoundsStatus, Target};
use crate::error::{Error, Result};
use crate::restrictions::{linear_coefficient_matrix, RestrictionSet};
use crate::robust::lp::{maximize, LpOutcome};
use crate::scalar::{dot, Real};
use crate::var_core::{vma_coefficients, InnovationSeries, ReducedFormParams};

/// Radii at or below this count as an empty interior.
pub const RADIUS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevCenter<T: Real> {
    pub radius: T,
    pub center: DVector<T>,
}

/// Largest ball inside `{q̃ ∈ [−1, 1]^n : Z_k' q̃ ≥ 0 ∀k}`.
///
/// Solves `max R` subject to `Z_k' q̃ − R ‖Z_k‖ ≥ 0`, `q̃_i + R ≤ 1`,
/// `q̃_i − R ≥ −1`, after the shift `x = q̃ + 1 ≥ 0`. Zero rows are vacuous.
pub fn chebyshev_center<T: Real>(rows: &DMatrix<T>) -> Result<ChebyshevCenter<T>> {
    let n = rows.ncols();
    if n == 0 {
        return Err(Error::Dimension("restriction rows have no columns".into()));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite restriction row".into()));
    }
    let normalized: Vec<Vec<T>> = (0..rows.nrows())
        .filter_map(|r| {
            let row = rows.row(r);
            let norm = row.norm();
            (norm > T::zero()).then(|| row.iter().map(|&v| v / norm).collect())
        })
        .collect();
    let m = normalized.len() + 2 * n;
    let mut a = DMatrix::zeros(m, n + 1);
    let mut b = vec![T::zero(); m];
    for (k, z) in normalized.iter().enumerate() {
        // −Ẑ'x + R ≤ −Ẑ'1
        let mut sum = T::zero();
        for i in 0..n {
            a[(k, i)] = -z[i];
            sum += z[i];
        }
        a[(k, n)] = T::one();
        b[k] = -sum;
    }
    let two = T::lit(2.0);
    for i in 0..n {
        let r = normalized.len() + 2 * i;
        a[(r, i)] = T::one();
        a[(r, n)] = T::one();
        b[r] = two;
        a[(r + 1, i)] = -T::one();
        a[(r + 1, n)] = T::one();
        b[r + 1] = T::zero();
    }
    let mut cost = vec![T::zero(); n + 1];
    cost[n] = T::one();
    match maximize(&cost, &a, &b)? {
        LpOutcome::Optimal { x, .. } => Ok(ChebyshevCenter {
            radius: x[n],
            center: DVector::from_fn(n, |i, _| x[i] - T::one()),
        }),
        // (q̃, R) = (0, 0) is always feasible and the cube bounds R.
        other => Err(Error::Numerical(format!("Chebyshev LP returned {other:?}"))),
    }
}

/// Per-draw bounds when every restriction is linear in column `column`:
/// emptiness from the Chebyshev radius, bounds from the sphere optimizer.
pub fn bounds_chebyshev<T: Real, R: Rng + ?Sized>(
    params: &ReducedFormParams<T>,
    innovations: &InnovationSeries<T>,
    set: &RestrictionSet,
    targets: &[Target],
    column: usize,
    draw: usize,
    rng: &mut R,
) -> Result<BoundsRecord<T>> {
    if let Some(t) = targets.iter().find(|t| t.shock != column) {
        return Err(Error::Config(format!(
            "optimization bounds need every target on shock {column}; got shock {}",
            t.shock
        )));
    }
    let rows = linear_coefficient_matrix(params, innovations, set, column)?;
    let cc = chebyshev_center(&rows)?;
    if cc.radius <= T::lit(RADIUS_TOL) {
        return Ok(BoundsRecord::empty(draw, 0));
    }
    let q0 = &cc.center / cc.center.norm();
    for r in 0..rows.nrows() {
        let v = dot(rows.row(r).transpose().as_slice(), q0.as_slice());
        if v < T::zero() {
            return Err(Error::Numerical(format!(
                "Chebyshev center violates restriction row {r} ({:e})",
                v.as_f64()
            )));
        }
    }
    let horizon = targets.iter().map(|t| t.horizon).max().unwrap_or(0);
    let vma = vma_coefficients(params, horizon);
    let c_rows = target_rows(params, &vma, targets)?;
    let mut bounds = Vec::with_capacity(targets.len());
    let mut flagged = false;
    for c in &c_rows {
        let res = bounds_opt(&rows, &DVector::from_column_slice(c), &q0, rng)?;
        flagged |= res.flagged;
        bounds.push(res.bounds);
    }
    Ok(BoundsRecord {
        draw,
        status: BoundsStatus::Nonempty,
        bounds,
        accepted: 0,
        attempts: 0,
        flagged,
    })
}
