//! Closed forms and experiments for the bivariate SVAR(0) `A0 y_t = ε_t`.
//!
//! `θ` indexes the first column `q_1 = (cos θ, sin θ)'`. The second column is
//! taken from the rotation branch when `cos θ ≥ 0` and from the reflection
//! branch otherwise, which is the branch whose second shock satisfies the sign
//! normalization; the normalization of the first shock stays an explicit
//! constraint on `θ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robust::Interval;
use crate::sampling::haar::std_normal;
use crate::sampling::rng::substream;
use crate::var_core::ReducedFormParams;

/// Reduced-form parameters `vech(Σ_tr)` of the bivariate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariatePhi {
    pub s11: f64,
    pub s21: f64,
    pub s22: f64,
}

impl BivariatePhi {
    pub fn new(s11: f64, s21: f64, s22: f64) -> Result<Self> {
        if !(s11 > 0.0 && s22 > 0.0 && s21.is_finite() && s11.is_finite() && s22.is_finite()) {
            return Err(Error::Config(format!(
                "need σ11 > 0 and σ22 > 0, got σ11 = {s11}, σ22 = {s22}"
            )));
        }
        Ok(Self { s11, s21, s22 })
    }

    /// Reduced form implied by `A0`, together with the true `θ` and whether `Q` is a rotation.
    pub fn from_a0(a0: &Matrix2<f64>) -> Result<(Self, f64, bool)> {
        let inv = a0
            .try_inverse()
            .ok_or_else(|| Error::Config("A0 is singular".into()))?;
        let sigma = inv * inv.transpose();
        let l = sigma
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite { ratio: 0.0 })?
            .l();
        let phi = Self::new(l[(0, 0)], l[(1, 0)], l[(1, 1)])?;
        let q = (a0 * l).transpose();
        Ok((phi, q[(1, 0)].atan2(q[(0, 0)]), q.determinant() > 0.0))
    }

    pub fn sigma_tr(&self) -> Matrix2<f64> {
        Matrix2::new(self.s11, 0.0, self.s21, self.s22)
    }

    pub fn sigma_tr_inv(&self) -> Matrix2<f64> {
        Matrix2::new(
            1.0 / self.s11,
            0.0,
            -self.s21 / (self.s11 * self.s22),
            1.0 / self.s22,
        )
    }

    /// The same parameters as a lag-free VAR.
    pub fn params(&self) -> ReducedFormParams<f64> {
        let l = self.sigma_tr();
        ReducedFormParams::from_cholesky(
            0,
            false,
            DMatrix::zeros(2, 0),
            DMatrix::from_fn(2, 2, |i, j| l[(i, j)]),
        )
        .expect("positive diagonal")
    }

    /// Sign normalization of the first shock: `σ21 sin θ ≤ σ22 cos θ`.
    pub fn normalization_ok(&self, theta: f64) -> bool {
        self.s21 * theta.sin() <= self.s22 * theta.cos()
    }

    /// `ε_1k(θ)` as a function of the data in period `k`.
    pub fn eps1(&self, theta: f64, y: Vector2<f64>) -> f64 {
        let (s, c) = theta.sin_cos();
        (self.s22 * y[0] * c + (self.s11 * y[1] - self.s21 * y[0]) * s) / (self.s11 * self.s22)
    }

    /// Structural shocks `A0(θ) y` under the folded branch choice.
    pub fn shocks(&self, theta: f64, y: Vector2<f64>) -> Vector2<f64> {
        folded_q(theta).transpose() * (self.sigma_tr_inv() * y)
    }
}

/// Rotation for `cos θ ≥ 0`, reflection otherwise.
pub fn folded_q(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    if c >= 0.0 {
        Matrix2::new(c, -s, s, c)
    } else {
        Matrix2::new(c, s, s, -c)
    }
}

/// Union of disjoint closed intervals in `[−π, π]`, in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSet {
    pub intervals: Vec<Interval<f64>>,
}

impl ThetaSet {
    fn single(lo: f64, hi: f64) -> Self {
        Self {
            intervals: vec![Interval::new(lo, hi)],
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(theta))
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|iv| iv.width()).sum()
    }
}

fn boundary(what: &str) -> Error {
    Error::BoundaryCase(format!("{what}; perturb the inputs"))
}

/// Values of `θ` satisfying the sign normalization and `ε_1k ≥ 0`.
pub fn theta_set_shock_sign(phi: &BivariatePhi, yk: Vector2<f64>) -> Result<ThetaSet> {
    let (s11, s21, s22) = (phi.s11, phi.s21, phi.s22);
    let (y1, y2) = (yk[0], yk[1]);
    let d = s21 * y1 - s11 * y2;
    if s21 == 0.0 {
        return Err(boundary("σ21 = 0"));
    }
    if d == 0.0 {
        return Err(boundary("σ21 y1k = σ11 y2k"));
    }
    let rho = s22 / s21;
    let kappa = s22 * y1 / d;
    let (lo_r, hi_r) = (rho.min(kappa), rho.max(kappa));
    if y1 < 0.0 && rho == kappa {
        return Err(boundary("σ22/σ21 equals σ22 y1k/(σ21 y1k − σ11 y2k)"));
    }
    let set = match (s21 < 0.0, d < 0.0) {
        (true, true) => ThetaSet::single(hi_r.atan(), PI + lo_r.atan()),
        (true, false) => {
            if y1 >= 0.0 || rho < kappa {
                ThetaSet::single(rho.atan(), kappa.atan())
            } else {
                ThetaSet::single(PI + kappa.atan(), PI + rho.atan())
            }
        }
        (false, true) => {
            if y1 >= 0.0 || rho > kappa {
                ThetaSet::single(kappa.atan(), rho.atan())
            } else {
                ThetaSet::single(-PI + rho.atan(), -PI + kappa.atan())
            }
        }
        (false, false) => ThetaSet::single(-PI + hi_r.atan(), lo_r.atan()),
    };
    Ok(set)
}

/// Range of `σ11 cos θ` over an interval of angles.
fn cos_range(s11: f64, iv: &Interval<f64>) -> Interval<f64> {
    let mut lo = iv.lo.cos().min(iv.hi.cos());
    let mut hi = iv.lo.cos().max(iv.hi.cos());
    // Interior extremes of cos at multiples of π.
    for k in -2..=2 {
        let x = k as f64 * PI;
        if iv.lo < x && x < iv.hi {
            if k % 2 == 0 {
                hi = 1.0;
            } else {
                lo = -1.0;
            }
        }
    }
    Interval::new(s11 * lo, s11 * hi)
}

/// Impact response `η = σ11 cos θ` over the shock-sign set.
pub fn eta_set(phi: &BivariatePhi, yk: Vector2<f64>) -> Result<Interval<f64>> {
    let set = theta_set_shock_sign(phi, yk)?;
    let d = phi.s21 * yk[0] - phi.s11 * yk[1];
    if phi.s21 < 0.0 && d > 0.0 && yk[0] > 0.0 {
        let x = (-phi.s22 / phi.s21).max(phi.s22 * yk[0] / d);
        return Ok(Interval::new(phi.s11 * x.atan().cos(), phi.s11));
    }
    let mut out: Option<Interval<f64>> = None;
    for iv in &set.intervals {
        let r = cos_range(phi.s11, iv);
        out = Some(match out {
            None => r,
            Some(o) => Interval::new(o.lo.min(r.lo), o.hi.max(r.hi)),
        });
    }
    out.ok_or_else(|| Error::Numerical("empty θ-set".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabRestriction {
    /// `ε_1k ≥ 0`.
    ShockSign,
    /// `ε_1k ≥ 0` and the first shock is the most important contributor to `y_1k`.
    HistDecomp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMode {
    Conditional,
    Unconditional,
}

/// Restriction indicator in terms of the structural shocks of period `k`.
fn shock_indicator(theta: f64, eps: Vector2<f64>, kind: LabRestriction) -> bool {
    if eps[0] < 0.0 {
        return false;
    }
    match kind {
        LabRestriction::ShockSign => true,
        LabRestriction::HistDecomp => {
            // Contributions σ11 q_j[0] ε_j; σ11 cancels.
            let q = folded_q(theta);
            (q[(0, 0)] * eps[0]).abs() >= (q[(0, 1)] * eps[1]).abs()
        }
    }
}

/// `D(θ, φ, y_k)`: the sign normalization and the narrative restriction hold.
pub fn restriction_holds(phi: &BivariatePhi, theta: f64, yk: Vector2<f64>, kind: LabRestriction) -> bool {
    phi.normalization_ok(theta) && shock_indicator(theta, phi.shocks(theta, yk), kind)
}

/// Ex ante probability that the restriction holds at `θ`.
///
/// The shock-sign case is exactly 1/2. For the historical decomposition the
/// event is `ε_1 ≥ 0, |ε_2| ≤ |cot θ| ε_1`, a wedge of angle `2 atan|cot θ|`.
pub fn restriction_probability(theta: f64, kind: LabRestriction) -> f64 {
    match kind {
        LabRestriction::ShockSign => 0.5,
        LabRestriction::HistDecomp => {
            let (s, c) = theta.sin_cos();
            if s == 0.0 {
                0.5
            } else {
                (c / s).abs().atan() / PI
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub theta: f64,
    pub value: f64,
    /// Denominator used: 1 for the unconditional likelihood.
    pub r_hat: f64,
    /// Monte Carlo standard error of `r_hat` (0 when exact).
    pub r_se: f64,
}

/// Known-`φ` likelihood of `data` (`T × 2`, rows `y_t`) over a grid of `θ`,
/// with the narrative restriction imposed in period `k`.
pub fn likelihood_profile<R: Rng + ?Sized>(
    grid: &[f64],
    phi: &BivariatePhi,
    data: &DMatrix<f64>,
    k: usize,
    kind: LabRestriction,
    mode: LikelihoodMode,
    m: usize,
    rng: &mut R,
) -> Result<Vec<ProfilePoint>> {
    if data.ncols() != 2 || k >= data.nrows() {
        return Err(Error::Dimension(format!(
            "data is {}x{}, restricted period {k}",
            data.nrows(),
            data.ncols()
        )));
    }
    let linv = phi.sigma_tr_inv();
    let log_det = 2.0 * (phi.s11 * phi.s22).ln();
    let gauss: f64 = data
        .row_iter()
        .map(|r| {
            let w = linv * Vector2::new(r[0], r[1]);
            -(2.0 * PI).ln() - 0.5 * log_det - 0.5 * w.norm_squared()
        })
        .sum::<f64>()
        .exp();
    let yk = Vector2::new(data[(k, 0)], data[(k, 1)]);
    let needs_mc = mode == LikelihoodMode::Conditional && kind == LabRestriction::HistDecomp;
    // Common random numbers across the grid keep the profile smooth.
    let eps: Vec<Vector2<f64>> = if needs_mc {
        if m == 0 {
            return Err(Error::Config("M must be positive".into()));
        }
        (0..m)
            .map(|_| Vector2::new(std_normal(rng), std_normal(rng)))
            .collect()
    } else {
        Vec::new()
    };
    Ok(grid
        .par_iter()
        .map(|&theta| {
            let d = if restriction_holds(phi, theta, yk, kind) { 1.0 } else { 0.0 };
            let (r_hat, r_se) = match (mode, kind) {
                (LikelihoodMode::Unconditional, _) => (1.0, 0.0),
                (LikelihoodMode::Conditional, LabRestriction::ShockSign) => (0.5, 0.0),
                (LikelihoodMode::Conditional, LabRestriction::HistDecomp) => {
                    let hits = eps.iter().filter(|&&e| shock_indicator(theta, e, kind)).count();
                    let p = hits as f64 / m as f64;
                    (p, (p * (1.0 - p) / m as f64).sqrt())
                }
            };
            let value = if d == 0.0 {
                0.0
            } else if r_hat > 0.0 {
                gauss / r_hat
            } else {
                f64::INFINITY
            };
            ProfilePoint { theta, value, r_hat, r_se }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HellingerPoint {
    pub theta: f64,
    pub value: f64,
}

/// Monte Carlo Hellinger distance between `θ` and `θ0` at known `φ0`.
///
/// With `φ` known the data density does not depend on `θ`, so the
/// unconditional distance is `2 Pr(D_θ ≠ D_θ0)` and the conditional one is
/// `2 (1 − Pr(D_θ = D_θ0 = 1) / sqrt(r(θ) r(θ0)))`, all probabilities taken
/// over `y_k` simulated from `φ0` and shared across the grid.
pub fn hellinger_profile<R: Rng + ?Sized>(
    grid: &[f64],
    phi0: &BivariatePhi,
    theta0: f64,
    kind: LabRestriction,
    mode: LikelihoodMode,
    m: usize,
    rng: &mut R,
) -> Result<Vec<HellingerPoint>> {
    if m == 0 {
        return Err(Error::Config("M must be positive".into()));
    }
    let l = phi0.sigma_tr();
    let ys: Vec<Vector2<f64>> = (0..m)
        .map(|_| l * Vector2::new(std_normal(rng), std_normal(rng)))
        .collect();
    let d0: Vec<bool> = ys.iter().map(|&y| restriction_holds(phi0, theta0, y, kind)).collect();
    let r0 = d0.iter().filter(|&&d| d).count() as f64 / m as f64;
    Ok(grid
        .par_iter()
        .map(|&theta| {
            let (mut agree, mut both, mut hits) = (0usize, 0usize, 0usize);
            for (y, &a) in ys.iter().zip(&d0) {
                let b = restriction_holds(phi0, theta, *y, kind);
                agree += (a == b) as usize;
                both += (a && b) as usize;
                hits += b as usize;
            }
            let mf = m as f64;
            let value = match mode {
                LikelihoodMode::Unconditional => 2.0 * (1.0 - agree as f64 / mf),
                LikelihoodMode::Conditional => {
                    let r = hits as f64 / mf;
                    if r == 0.0 || r0 == 0.0 {
                        2.0
                    } else {
                        2.0 * (1.0 - (both as f64 / mf) / (r * r0).sqrt())
                    }
                }
            };
            HellingerPoint { theta, value }
        })
        .collect())
}

/// Arc `[lo, hi]` of angles with `a'(cos θ, sin θ) ≥ 0`.
fn half_plane_arc(a: Vector2<f64>) -> (f64, f64) {
    let c = a[1].atan2(a[0]);
    (c - PI / 2.0, c + PI / 2.0)
}

/// Shift `x` by a multiple of 2π to lie within π of `center`.
fn unwrap_near(x: f64, center: f64) -> f64 {
    x - (2.0 * PI) * ((x - center) / (2.0 * PI)).round()
}

/// Intersection of the half-circles `{θ : a_i'(cos θ, sin θ) ≥ 0}` as one arc.
pub fn arc_intersection(normals: &[Vector2<f64>]) -> Option<(f64, f64)> {
    let mut it = normals.iter();
    let (mut lo, mut hi) = half_plane_arc(*it.next()?);
    for a in it {
        let (l, h) = half_plane_arc(*a);
        let mid = (lo + hi) / 2.0;
        let c = unwrap_near((l + h) / 2.0, mid);
        lo = lo.max(c - PI / 2.0);
        hi = hi.min(c + PI / 2.0);
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub t: usize,
    pub replication: usize,
    /// Length of the feasible arc for `q_1` (0 when empty).
    pub width: f64,
    pub contains_truth: bool,
}

/// Feasible arc for `q_1` under `sgn(ε_1t) ε_1t ≥ 0` for `t = 1..T`, with `φ`
/// at its true value, on nested samples of each length in `t_list`.
pub fn consistency_experiment(
    a0: &Matrix2<f64>,
    t_list: &[usize],
    replications: usize,
    seed: u64,
) -> Result<Vec<ConsistencyRow>> {
    let (phi, theta0, _) = BivariatePhi::from_a0(a0)?;
    let t_max = t_list.iter().copied().max().unwrap_or(0);
    let linv = phi.sigma_tr_inv();
    let norm_row = Vector2::new(linv[(0, 0)], linv[(1, 0)]);
    let rows: Vec<Vec<ConsistencyRow>> = (0..replications)
        .into_par_iter()
        .map(|rep| -> Result<Vec<ConsistencyRow>> {
            let mut rng = substream(seed, rep as u64);
            let sample = simulate_bivariate(a0, t_max, false, &mut rng)?;
            let mut out = Vec::with_capacity(t_list.len());
            for &t in t_list {
                let mut normals = vec![norm_row];
                for s in 0..t {
                    let w = linv * Vector2::new(sample.y[(s, 0)], sample.y[(s, 1)]);
                    let sign = if sample.shocks[(s, 0)] >= 0.0 { 1.0 } else { -1.0 };
                    normals.push(w * sign);
                }
                let arc = arc_intersection(&normals);
                let (width, contains_truth) = match arc {
                    Some((lo, hi)) => {
                        let th = unwrap_near(theta0, (lo + hi) / 2.0);
                        (hi - lo, lo - 1e-12 <= th && th <= hi + 1e-12)
                    }
                    None => (0.0, false),
                };
                out.push(ConsistencyRow {
                    t,
                    replication: rep,
                    width,
                    contains_truth,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Estimates implied by treating the narrative sign as a proxy for `ε_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarrativeProxy {
    pub theta_hat: f64,
    pub eta_hat: f64,
    pub eta2_hat: f64,
    /// Response of `y_2` to a shock raising `y_1` by one unit.
    pub relative: f64,
}

/// The `θ` that sets `ε_2k = 0` with `ε_1k > 0`, and the implied impact responses.
pub fn narrative_proxy(phi: &BivariatePhi, yk: Vector2<f64>) -> Result<NarrativeProxy> {
    let (y1, y2) = (yk[0], yk[1]);
    if y1 == 0.0 {
        return Err(Error::ProxyUndefined("y1k = 0".into()));
    }
    let b = phi.s11 * y2 - phi.s21 * y1;
    let a = phi.s22 * y1;
    let norm = a.hypot(b);
    Ok(NarrativeProxy {
        // atan2 agrees with arctan(b / a) for y1k > 0 and keeps ε_1k > 0 otherwise.
        theta_hat: b.atan2(a),
        eta_hat: phi.s11 * phi.s22 * y1 / norm,
        eta2_hat: phi.s11 * phi.s22 * y2 / norm,
        relative: y2 / y1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSample {
    /// `T × 2` observations.
    pub y: DMatrix<f64>,
    /// `T × 2` structural shocks.
    pub shocks: DMatrix<f64>,
}

/// `y_t = A0⁻¹ ε_t` with iid standard normal shocks; optionally flips the
/// sign of `ε_{1,1}` so that it is nonnegative.
pub fn simulate_bivariate<R: Rng + ?Sized>(
    a0: &Matrix2<f64>,
    t: usize,
    condition_first_shock_sign: bool,
    rng: &mut R,
) -> Result<BivariateSample> {
    let inv = a0
        .try_inverse()
        .ok_or_else(|| Error::Config("A0 is singular".into()))?;
    let mut shocks = DMatrix::from_fn(t, 2, |_, _| std_normal::<f64, _>(rng));
    if condition_first_shock_sign && t > 0 {
        shocks[(0, 0)] = shocks[(0, 0)].abs();
    }
    let mut y = DMatrix::zeros(t, 2);
    for s in 0..t {
        let v = inv * Vector2::new(shocks[(s, 0)], shocks[(s, 1)]);
        y[(s, 0)] = v[0];
        y[(s, 1)] = v[1];
    }
    Ok(BivariateSample { y, shocks })
}

/// Evenly spaced grid of `points` angles on `[−π, π]`.
pub fn theta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -PI + 2.0 * PI * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests;
