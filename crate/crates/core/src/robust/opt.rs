//! Extremes of `c'q` over `{q : ‖q‖ = 1, Z q ≥ 0}`.
//!
//! A quadratic-penalty BFGS run (μ multiplied by 10 over six stages) locates
//! the optimal face; the point is then polished exactly on that face, where
//! the minimizer of `c'q` is `−Pc/‖Pc‖` with `P` the projector onto the null
//! space of the active rows. Two exact candidates join the pool: the
//! normalized projection of `∓c` onto the cone `{Zq ≥ 0}` (nonnegative least
//! squares on the polar cone) and, when the count is small, the extreme rays
//! of the cone. Every answer is checked for feasibility and compared with
//! 1,000 feasible points sampled around `q0`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::Interval;
use crate::error::{Error, Result};
use crate::sampling::rng::SimRng;
use crate::scalar::Real;

pub const FEASIBILITY_TOL: f64 = 1e-8;
const FALLBACK_POINTS: usize = 1000;
const PENALTY_STAGES: usize = 6;
const MAX_ENUMERATED_ROWS: usize = 12;
const MAX_EXTREME_RAY_SUBSETS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptBounds<T> {
    pub bounds: Interval<T>,
    /// True when no optimizer candidate could be certified and a sampled point was used.
    pub flagged: bool,
}

struct Problem<T: Real> {
    n: usize,
    rows: Vec<DVector<T>>,
}

impl<T: Real> Problem<T> {
    fn min_slack(&self, q: &DVector<T>) -> T {
        self.rows
            .iter()
            .map(|z| z.dot(q))
            .fold(T::max_value().unwrap(), |a, b| a.min(b))
    }

    fn feasible(&self, q: &DVector<T>) -> bool {
        // Single precision cannot hold 1e-8 on a unit vector.
        let tol = T::lit(FEASIBILITY_TOL).max(T::LP_TOL * T::lit(10.0));
        (q.norm() - T::one()).abs() <= tol && (self.rows.is_empty() || self.min_slack(q) >= -tol)
    }

    fn penalty(&self, q: &DVector<T>, g: &DVector<T>, mu: T) -> (T, DVector<T>) {
        let norm2 = q.norm_squared() - T::one();
        let mut f = g.dot(q) + mu * norm2 * norm2;
        let mut grad = g + q * (mu * T::lit(4.0) * norm2);
        for z in &self.rows {
            let v = z.dot(q);
            if v < T::zero() {
                f += mu * v * v;
                grad += z * (mu * T::lit(2.0) * v);
            }
        }
        (f, grad)
    }

    /// Minimizes `g'q` under the penalty with BFGS and backtracking.
    fn penalty_minimize(&self, g: &DVector<T>, start: &DVector<T>) -> DVector<T> {
        let n = self.n;
        let mut q = start.clone();
        let mut mu = T::lit(10.0);
        for _ in 0..PENALTY_STAGES {
            let mut h = DMatrix::<T>::identity(n, n) / mu;
            let (mut f, mut grad) = self.penalty(&q, g, mu);
            for _ in 0..200 {
                if grad.norm() < T::lit(1e-13) * mu {
                    break;
                }
                let mut d = -(&h * &grad);
                let mut slope = grad.dot(&d);
                if slope >= T::zero() {
                    h = DMatrix::identity(n, n) / mu;
                    d = -grad.clone();
                    slope = grad.dot(&d);
                }
                let mut t = T::one();
                let mut accepted = None;
                for _ in 0..60 {
                    let cand = &q + &d * t;
                    let (fc, gc) = self.penalty(&cand, g, mu);
                    if fc <= f + T::lit(1e-4) * t * slope {
                        accepted = Some((cand, fc, gc));
                        break;
                    }
                    t *= T::lit(0.5);
                }
                let Some((cand, fc, gc)) = accepted else { break };
                let s = &cand - &q;
                let y = &gc - &grad;
                let sy = s.dot(&y);
                if sy > T::lit(1e-18) {
                    let rho = T::one() / sy;
                    let i = DMatrix::<T>::identity(n, n);
                    let left = &i - &s * y.transpose() * rho;
                    let right = &i - &y * s.transpose() * rho;
                    h = &left * &h * &right + &s * s.transpose() * rho;
                }
                let done = (f - fc).abs() <= T::lit(1e-15) * (T::one() + f.abs());
                q = cand;
                f = fc;
                grad = gc;
                if done {
                    break;
                }
            }
            mu *= T::lit(10.0);
        }
        let norm = q.norm();
        if norm > T::zero() {
            q / norm
        } else {
            start.clone()
        }
    }

    /// `∓Pg/‖Pg‖` with `P` projecting onto the null space of `rows[active]`.
    /// Both signs are returned: on a one-dimensional null space the feasible
    /// vertex may be either of them.
    fn face_optimum(&self, g: &DVector<T>, active: &[usize]) -> Vec<DVector<T>> {
        let n = self.n;
        let mut basis: Vec<DVector<T>> = Vec::new();
        for &k in active {
            let mut v = self.rows[k].clone();
            for _ in 0..2 {
                for b in &basis {
                    let r = b.dot(&v);
                    v -= b * r;
                }
            }
            let norm = v.norm();
            if norm > T::lit(1e-10) {
                basis.push(v / norm);
            }
        }
        if basis.len() >= n {
            return Vec::new();
        }
        let mut pg = g.clone();
        for _ in 0..2 {
            for b in &basis {
                let r = b.dot(&pg);
                pg -= b * r;
            }
        }
        let norm = pg.norm();
        if norm > T::lit(1e-14) {
            let q = pg / norm;
            vec![-q.clone(), q]
        } else {
            Vec::new()
        }
    }

    /// Best certified point for `min g'q` near the penalty solution `q`.
    fn polish(&self, g: &DVector<T>, q: &DVector<T>) -> Option<(T, DVector<T>)> {
        let mut cands: Vec<DVector<T>> = vec![q.clone()];
        cands.extend(self.face_optimum(g, &[]));
        let mut slack: Vec<(usize, T)> = self.rows.iter().enumerate().map(|(k, z)| (k, z.dot(q))).collect();
        slack.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let near: Vec<usize> = slack
            .iter()
            .filter(|(_, s)| *s < T::lit(1e-3))
            .map(|(k, _)| *k)
            .collect();
        if near.len() <= MAX_ENUMERATED_ROWS {
            let max_size = near.len().min(self.n - 1);
            for mask in 1u32..(1 << near.len()) {
                if mask.count_ones() as usize > max_size {
                    continue;
                }
                let active: Vec<usize> = (0..near.len()).filter(|i| mask & (1 << i) != 0).map(|i| near[i]).collect();
                cands.extend(self.face_optimum(g, &active));
            }
        } else {
            for tau in [1e-4, 1e-5, 1e-6, 1e-7] {
                let active: Vec<usize> = slack
                    .iter()
                    .filter(|(_, s)| *s < T::lit(tau))
                    .map(|(k, _)| *k)
                    .take(self.n - 1)
                    .collect();
                cands.extend(self.face_optimum(g, &active));
            }
        }
        cands
            .into_iter()
            .filter(|c| self.feasible(c))
            .map(|c| (g.dot(&c), c))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
    }
}

impl<T: Real> Problem<T> {
    /// Orthonormal basis of the span of `vs`.
    fn span_basis<'a>(vs: impl IntoIterator<Item = &'a DVector<T>>) -> Vec<DVector<T>> {
        let mut basis: Vec<DVector<T>> = Vec::new();
        for v in vs {
            let mut v = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let r = b.dot(&v);
                    v -= b * r;
                }
            }
            let norm = v.norm();
            if norm > T::lit(1e-10) {
                basis.push(v / norm);
            }
        }
        basis
    }

    /// A unit vector orthogonal to every vector in `basis`, if one exists.
    fn complement_direction(&self, basis: &[DVector<T>]) -> Option<DVector<T>> {
        if basis.len() >= self.n {
            return None;
        }
        (0..self.n)
            .map(|i| {
                let mut v = DVector::zeros(self.n);
                v[i] = T::one();
                for _ in 0..2 {
                    for b in basis {
                        let r = b.dot(&v);
                        v -= b * r;
                    }
                }
                v
            })
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .map(unit)
    }

    /// Projection of `v` onto `{x : Zx ≥ 0}`, as `v + Z'λ` with `λ ≥ 0` the
    /// nonnegative least-squares solution of `min ‖Z'λ + v‖`.
    fn cone_projection(&self, v: &DVector<T>) -> DVector<T> {
        let m = self.rows.len();
        let n = self.n;
        if m == 0 {
            return v.clone();
        }
        let a = DMatrix::from_fn(n, m, |i, k| self.rows[k][i]);
        let b = -v;
        let tol = T::lit(1e-12) * (T::one() + v.norm());
        let mut lambda = DVector::<T>::zeros(m);
        let mut passive = vec![false; m];
        let solve_passive = |passive: &[bool]| -> DVector<T> {
            let idx: Vec<usize> = (0..m).filter(|&k| passive[k]).collect();
            let ap = DMatrix::from_fn(n, idx.len(), |i, j| a[(i, idx[j])]);
            let sol = ap
                .svd(true, true)
                .solve(&b, T::lit(1e-12))
                .unwrap_or_else(|_| DVector::zeros(idx.len()));
            let mut full = DVector::zeros(m);
            for (j, &k) in idx.iter().enumerate() {
                full[k] = sol[j];
            }
            full
        };
        for _ in 0..3 * m + 10 {
            let w = a.transpose() * (&b - &a * &lambda);
            let Some(j) = (0..m)
                .filter(|&k| !passive[k] && w[k] > tol)
                .max_by(|&x, &y| w[x].partial_cmp(&w[y]).unwrap())
            else {
                break;
            };
            passive[j] = true;
            for _ in 0..3 * m + 10 {
                let s = solve_passive(&passive);
                let blocking: Vec<usize> = (0..m).filter(|&k| passive[k] && s[k] <= T::zero()).collect();
                if blocking.is_empty() {
                    lambda = s;
                    break;
                }
                let alpha = blocking
                    .iter()
                    .map(|&k| lambda[k] / (lambda[k] - s[k]))
                    .fold(T::one(), |x, y| x.min(y));
                lambda += (&s - &lambda) * alpha;
                for k in 0..m {
                    if passive[k] && lambda[k] <= tol {
                        passive[k] = false;
                        lambda[k] = T::zero();
                    }
                }
            }
        }
        v + &a * lambda
    }

    /// Exact candidates for `min g'q`: the projection of `−g` when it is
    /// nonzero, otherwise a lineality direction or the extreme rays.
    fn exact_candidates(&self, g: &DVector<T>) -> Vec<DVector<T>> {
        let n = self.n;
        let mut out = Vec::new();
        let p = self.cone_projection(&-g);
        if p.norm() > T::lit(1e-9) * g.norm() {
            out.push(unit(p));
            return out;
        }
        let basis = Self::span_basis(&self.rows);
        if let Some(d) = self.complement_direction(&basis) {
            // The cone contains a line orthogonal to g.
            out.push(d.clone());
            out.push(-d);
            return out;
        }
        let m = self.rows.len();
        let k = n - 1;
        if k == 0 {
            out.push(DVector::from_element(1, T::one()));
            out.push(DVector::from_element(1, -T::one()));
            return out;
        }
        if binomial(m, k) > MAX_EXTREME_RAY_SUBSETS {
            return out;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let sub = Self::span_basis(idx.iter().map(|&i| &self.rows[i]));
            if sub.len() == k {
                if let Some(d) = self.complement_direction(&sub) {
                    out.push(d.clone());
                    out.push(-d);
                }
            }
            // Next k-subset in lexicographic order.
            let mut i = k;
            while i > 0 && idx[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
        out
    }
}

fn binomial(m: usize, k: usize) -> usize {
    if k > m {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(m - i) / (i + 1);
    }
    r
}

fn unit<T: Real>(v: DVector<T>) -> DVector<T> {
    let n = v.norm();
    v / n
}

/// Outer (optimized) bounds of `c'q` over the restricted unit sphere, started from a feasible `q0`.
pub fn bounds_opt<T: Real, R: Rng + ?Sized>(
    rows: &DMatrix<T>,
    c: &DVector<T>,
    q0: &DVector<T>,
    rng: &mut R,
) -> Result<OptBounds<T>> {
    let n = q0.len();
    if rows.ncols() != n || c.len() != n {
        return Err(Error::Dimension(format!(
            "rows {}x{}, c {}, q0 {}",
            rows.nrows(),
            rows.ncols(),
            c.len(),
            n
        )));
    }
    let problem = Problem {
        n,
        rows: (0..rows.nrows())
            .filter_map(|r| {
                let z = rows.row(r).transpose();
                let norm = z.norm();
                (norm > T::zero()).then(|| z / norm)
            })
            .collect(),
    };
    if !problem.feasible(q0) {
        return Err(Error::Config("starting point q0 is not a feasible unit vector".into()));
    }
    let c_norm = c.norm();
    if c_norm == T::zero() {
        return Ok(OptBounds {
            bounds: Interval::point(T::zero()),
            flagged: false,
        });
    }
    let ch = c / c_norm;

    // Feasible points sampled around q0 at several spreads.
    let mut sub = <SimRng as rand::SeedableRng>::seed_from_u64(rng.random());
    let (mut lo_pt, mut hi_pt) = (q0.clone(), q0.clone());
    let (mut lo_s, mut hi_s) = (ch.dot(q0), ch.dot(q0));
    for i in 0..FALLBACK_POINTS {
        let spread = T::lit([1.0, 0.3, 0.1, 0.03][i % 4]);
        let z = DVector::from_fn(n, |_, _| crate::sampling::haar::std_normal::<T, _>(&mut sub));
        let q = unit(q0 + z * spread);
        if problem.feasible(&q) {
            let v = ch.dot(&q);
            if v < lo_s {
                lo_s = v;
                lo_pt = q.clone();
            }
            if v > hi_s {
                hi_s = v;
                hi_pt = q;
            }
        }
    }

    let mut flagged = false;
    let mut solve = |g: DVector<T>, sampled_val: T, sampled_pt: &DVector<T>| -> T {
        let mut best: Option<T> = problem
            .exact_candidates(&g)
            .iter()
            .filter(|q| problem.feasible(q))
            .map(|q| g.dot(q))
            .reduce(|a, b| a.min(b));
        for start in [q0, sampled_pt] {
            let q = problem.penalty_minimize(&g, start);
            if let Some((v, _)) = problem.polish(&g, &q) {
                best = Some(best.map_or(v, |b: T| b.min(v)));
            }
        }
        match best {
            Some(v) => v.min(sampled_val),
            None => {
                flagged = true;
                sampled_val
            }
        }
    };
    let lo = solve(ch.clone(), lo_s, &lo_pt);
    let hi = -solve(-ch.clone(), -hi_s, &hi_pt);
    if flagged {
        log::warn!("sphere optimizer could not certify a solution; using sampled bound");
    }
    Ok(OptBounds {
        bounds: Interval::new(lo * c_norm, hi * c_norm),
        flagged,
    })
}
