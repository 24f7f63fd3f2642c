//! Reduced-form posterior under the Jeffreys prior `π(B, Σ) ∝ |Σ|^{-(n+1)/2}`.
//!
//! With `T_eff = T − p` observations, `k` regressors per equation, OLS
//! coefficients `B̂` and residual scatter `S = Σ_t û_t û_t'`:
//!
//! * `Σ | Y ~ IW(S, ν)` with `ν = T_eff − k`, density `∝ |Σ|^{-(ν+n+1)/2} exp(−tr(S Σ^{-1})/2)`;
//! * `vec(B') | Σ, Y ~ N(vec(B̂'), Σ ⊗ (X'X)^{-1})`.
//!
//! For `n = 1, p = 0` this is `Σ ~ InvGamma(T/2, S/2)` with mean `S/(T − 2)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};

use super::haar::std_normal;
use super::rng::SimRng;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::var_core::{lower_cholesky, regressors, stability_check, ReducedFormParams};

pub const MAX_UNSTABLE_DRAWS: usize = 10_000;

/// Anything that can produce reduced-form draws.
pub trait PhiSource<T: Real>: Sync {
    fn draw_phi(&self, rng: &mut SimRng) -> Result<ReducedFormParams<T>>;
}

/// Degenerate source returning the same `φ`; used when `φ` is treated as known.
#[derive(Debug, Clone)]
pub struct FixedPhi<T: Real>(pub ReducedFormParams<T>);

impl<T: Real> PhiSource<T> for FixedPhi<T> {
    fn draw_phi(&self, _rng: &mut SimRng) -> Result<ReducedFormParams<T>> {
        Ok(self.0.clone())
    }
}

#[derive(Debug, Clone)]
pub struct PhiPosteriorSampler<T: Real> {
    n: usize,
    p: usize,
    has_constant: bool,
    t_eff: usize,
    dof: usize,
    /// `B̂'`, k × n.
    b_hat_t: DMatrix<T>,
    scatter: DMatrix<T>,
    /// Lower Cholesky factor of `S^{-1}`.
    scatter_inv_chol: DMatrix<T>,
    /// Lower Cholesky factor of `(X'X)^{-1}`.
    xtx_inv_chol: DMatrix<T>,
    max_unstable: usize,
}

impl<T: Real> PhiPosteriorSampler<T> {
    pub fn new(data: &DMatrix<T>, p: usize, has_constant: bool) -> Result<Self> {
        let n = data.ncols();
        if n == 0 {
            return Err(Error::Config("data have no columns".into()));
        }
        let t_eff = data.nrows().saturating_sub(p);
        let required = n * p + n + 1;
        if t_eff <= required {
            return Err(Error::ImproperPosterior {
                effective: t_eff,
                required,
            });
        }
        let k = n * p + usize::from(has_constant);
        let x = regressors(data, p, has_constant);
        let y = data.rows(p, t_eff).into_owned();
        let (b_hat_t, xtx_inv_chol) = if k == 0 {
            (DMatrix::zeros(0, n), DMatrix::zeros(0, 0))
        } else {
            let xtx = x.tr_mul(&x);
            let chol = nalgebra::Cholesky::new(xtx)
                .ok_or_else(|| Error::Config("X'X is singular; regressors are collinear".into()))?;
            let xtx_inv = chol.inverse();
            let b = &xtx_inv * x.tr_mul(&y);
            let l = lower_cholesky(&xtx_inv)
                .map_err(|_| Error::Config("X'X is numerically singular".into()))?;
            (b, l)
        };
        let resid = &y - &x * &b_hat_t;
        let scatter = resid.tr_mul(&resid);
        let scatter_inv = scatter
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("residual scatter matrix is singular".into()))?;
        let scatter_inv = (&scatter_inv + scatter_inv.transpose()) * T::lit(0.5);
        let scatter_inv_chol = lower_cholesky(&scatter_inv)?;
        Ok(Self {
            n,
            p,
            has_constant,
            t_eff,
            dof: t_eff - k,
            b_hat_t,
            scatter,
            scatter_inv_chol,
            xtx_inv_chol,
            max_unstable: MAX_UNSTABLE_DRAWS,
        })
    }

    pub fn with_max_unstable(mut self, max_unstable: usize) -> Self {
        self.max_unstable = max_unstable.max(1);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn has_constant(&self) -> bool {
        self.has_constant
    }
    pub fn effective_sample(&self) -> usize {
        self.t_eff
    }
    /// Inverse-Wishart degrees of freedom `ν = T_eff − k`.
    pub fn dof(&self) -> usize {
        self.dof
    }
    pub fn scatter(&self) -> &DMatrix<T> {
        &self.scatter
    }
    /// OLS coefficients in the `n × k` layout of [`ReducedFormParams::b`].
    pub fn ols_b(&self) -> DMatrix<T> {
        self.b_hat_t.transpose()
    }

    /// `Σ ~ IW(S, ν)` via the Bartlett decomposition of `W = Σ^{-1} ~ Wishart(S^{-1}, ν)`.
    fn draw_sigma<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DMatrix<T>> {
        let n = self.n;
        let mut a = DMatrix::<T>::zeros(n, n);
        for i in 0..n {
            let chi = ChiSquared::new((self.dof - i) as f64)
                .map_err(|e| Error::Numerical(format!("chi-squared: {e}")))?;
            a[(i, i)] = T::lit(chi.sample(rng).sqrt());
            for j in 0..i {
                a[(i, j)] = std_normal(rng);
            }
        }
        let g = &self.scatter_inv_chol * a;
        let g_inv = g
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular Wishart factor".into()))?;
        let sigma = g_inv.tr_mul(&g_inv);
        Ok((&sigma + sigma.transpose()) * T::lit(0.5))
    }

    fn draw_once<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ReducedFormParams<T>> {
        let sigma = self.draw_sigma(rng)?;
        let sigma_tr = lower_cholesky(&sigma)?;
        let k = self.b_hat_t.nrows();
        let z = DMatrix::from_fn(k, self.n, |_, _| std_normal::<T, _>(rng));
        let b_t = &self.b_hat_t + &self.xtx_inv_chol * z * sigma_tr.transpose();
        ReducedFormParams::from_cholesky(self.p, self.has_constant, b_t.transpose(), sigma_tr)
    }
}

impl<T: Real> PhiSource<T> for PhiPosteriorSampler<T> {
    fn draw_phi(&self, rng: &mut SimRng) -> Result<ReducedFormParams<T>> {
        draw_phi(self, rng)
    }
}

/// One stable draw from the reduced-form posterior.
pub fn draw_phi<T: Real, R: Rng + ?Sized>(sampler: &PhiPosteriorSampler<T>, rng: &mut R) -> Result<ReducedFormParams<T>> {
    for _ in 0..sampler.max_unstable {
        let rf = sampler.draw_once(rng)?;
        if stability_check(&rf) {
            return Ok(rf);
        }
    }
    Err(Error::UnstableDraws {
        attempts: sampler.max_unstable,
    })
}
