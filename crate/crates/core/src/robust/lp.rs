//! Dense two-phase simplex with Bland's rule for `max c'x s.t. Ax ≤ b, x ≥ 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T: Real> {
    Optimal { x: DVector<T>, value: T },
    Infeasible,
    Unbounded,
}

struct Tableau<T: Real> {
    /// m × (cols + 1); last column is the right-hand side.
    t: DMatrix<T>,
    basis: Vec<usize>,
    cols: usize,
    tol: T,
}

impl<T: Real> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let p = self.t[(r, c)];
        for j in 0..width {
            self.t[(r, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == r {
                continue;
            }
            let f = self.t[(i, c)];
            if f != T::zero() {
                for j in 0..width {
                    let v = self.t[(r, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[T], allowed: &dyn Fn(usize) -> bool) -> Vec<T> {
        (0..self.cols)
            .map(|j| {
                if !allowed(j) {
                    return T::zero();
                }
                let mut d = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    d -= cost[b] * self.t[(i, j)];
                }
                d
            })
            .collect()
    }

    /// Returns `false` if the objective is unbounded.
    fn optimize(&mut self, cost: &[T], allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        let max_iter = 50 * (self.cols + self.t.nrows()).max(10) * 10;
        for _ in 0..max_iter {
            let d = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..self.cols).find(|&j| allowed(j) && d[j] > self.tol) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.t.nrows() {
                let a = self.t[(i, enter)];
                if a > self.tol {
                    let ratio = self.t[(i, self.cols)] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - self.tol || (ratio <= br + self.tol && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
        Err(Error::Numerical("simplex did not terminate".into()))
    }
}

pub fn maximize<T: Real>(c: &[T], a: &DMatrix<T>, b: &[T]) -> Result<LpOutcome<T>> {
    let (m, nv) = a.shape();
    if c.len() != nv || b.len() != m {
        return Err(Error::Dimension(format!(
            "LP with {m}x{nv} constraints, {} costs and {} bounds",
            c.len(),
            b.len()
        )));
    }
    let scale = a.amax().max(T::one());
    let tol = T::LP_TOL * scale;
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < T::zero()).collect();
    let n_art = negative.len();
    let cols = nv + m + n_art;
    let mut t = DMatrix::zeros(m, cols + 1);
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let s = if b[i] < T::zero() { -T::one() } else { T::one() };
        for j in 0..nv {
            t[(i, j)] = s * a[(i, j)];
        }
        t[(i, nv + i)] = s;
        t[(i, cols)] = s * b[i];
        if b[i] < T::zero() {
            t[(i, nv + m + art)] = T::one();
            basis[i] = nv + m + art;
            art += 1;
        } else {
            basis[i] = nv + i;
        }
    }
    let mut tab = Tableau { t, basis, cols, tol };
    let is_art = |j: usize| j >= nv + m;

    if n_art > 0 {
        let cost1: Vec<T> = (0..cols).map(|j| if is_art(j) { -T::one() } else { T::zero() }).collect();
        tab.optimize(&cost1, &|_| true)?;
        let infeas = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &bj)| is_art(bj))
            .fold(T::zero(), |acc, (i, _)| acc + tab.t[(i, cols)]);
        if infeas > tol * T::usize(m.max(1)) {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if is_art(tab.basis[r]) {
                if let Some(c) = (0..nv + m).find(|&j| tab.t[(r, j)].abs() > tol) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    let mut cost2 = vec![T::zero(); cols];
    cost2[..nv].copy_from_slice(c);
    if !tab.optimize(&cost2, &|j| !is_art(j))? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = DVector::zeros(nv);
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < nv {
            x[bj] = tab.t[(i, cols)];
        }
    }
    let value = (0..nv).fold(T::zero(), |acc, j| acc + c[j] * x[j]);
    Ok(LpOutcome::Optimal { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn solve(c: &[f64], a: &[f64], m: usize, b: &[f64]) -> LpOutcome<f64> {
        maximize(c, &DMatrix::from_row_slice(m, c.len(), a), b).unwrap()
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        match solve(&[3.0, 5.0], &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0], 3, &[4.0, 12.0, 18.0]) {
            LpOutcome::Optimal { x, value } => {
                assert_relative_eq!(value, 36.0, epsilon = 1e-12);
                assert_relative_eq!(x[0], 2.0, epsilon = 1e-12);
                assert_relative_eq!(x[1], 6.0, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phase_one_needed() {
        // max x + y s.t. x + y ≤ 4, −x ≤ −1 (x ≥ 1), −y ≤ −2 (y ≥ 2) → 4.
        match solve(&[1.0, 1.0], &[1.0, 1.0, -1.0, 0.0, 0.0, -1.0], 3, &[4.0, -1.0, -2.0]) {
            LpOutcome::Optimal { x, value } => {
                assert_relative_eq!(value, 4.0, epsilon = 1e-12);
                assert!(x[0] >= 1.0 - 1e-12 && x[1] >= 2.0 - 1e-12);
            }
            other => panic!("{other:?}"),
        }
        // min x (max −x) with x ≥ 3 → x = 3.
        match solve(&[-1.0], &[-1.0], 1, &[-3.0]) {
            LpOutcome::Optimal { x, .. } => assert_relative_eq!(x[0], 3.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        assert_eq!(solve(&[1.0], &[1.0, -1.0], 2, &[1.0, -2.0]), LpOutcome::Infeasible);
        assert_eq!(solve(&[1.0, 0.0], &[0.0, 1.0], 1, &[1.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule; Bland's rule terminates at 1/20.
        let a = [
            0.25, -60.0, -0.04, 9.0, //
            0.5, -90.0, -0.02, 3.0, //
            0.0, 0.0, 1.0, 0.0,
        ];
        match solve(&[0.75, -150.0, 0.02, -6.0], &a, 3, &[0.0, 0.0, 1.0]) {
            LpOutcome::Optimal { value, .. } => assert_relative_eq!(value, 0.05, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
