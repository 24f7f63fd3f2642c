//! Reduced-form VAR objects and the deterministic structural maps built on them.
//!
//! Conventions: variables, shocks and horizons are 0-based. `B` stores the lag
//! blocks `[B_1 .. B_p]` followed by the intercept column when present, so the
//! regressor vector is `x_t = (y_{t-1}', .., y_{t-p}', 1)'`.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const STABILITY_EPS: f64 = 1e-9;
pub const DEFAULT_VMA_HORIZON: usize = 60;
const INDEFINITE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFormParams<T: Real> {
    n: usize,
    p: usize,
    has_constant: bool,
    b: DMatrix<T>,
    sigma: DMatrix<T>,
    sigma_tr: DMatrix<T>,
    sigma_tr_inv: DMatrix<T>,
}

impl<T: Real> ReducedFormParams<T> {
    /// Builds the parameter object from `Σ`, factoring it without pivoting.
    pub fn new(p: usize, has_constant: bool, b: DMatrix<T>, sigma: DMatrix<T>) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n || n == 0 {
            return Err(Error::Dimension(format!(
                "Sigma must be square and non-empty, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let sigma_tr = lower_cholesky(&sigma)?;
        Self::assemble(p, has_constant, b, sigma, sigma_tr)
    }

    /// Builds the parameter object from a lower-triangular factor with positive diagonal.
    pub fn from_cholesky(
        p: usize,
        has_constant: bool,
        b: DMatrix<T>,
        sigma_tr: DMatrix<T>,
    ) -> Result<Self> {
        let n = sigma_tr.nrows();
        if sigma_tr.ncols() != n || n == 0 {
            return Err(Error::Dimension("Sigma_tr must be square and non-empty".into()));
        }
        for i in 0..n {
            if !(sigma_tr[(i, i)] > T::zero()) {
                return Err(Error::NotPositiveDefinite { ratio: 0.0 });
            }
            for j in i + 1..n {
                if sigma_tr[(i, j)] != T::zero() {
                    return Err(Error::Dimension("Sigma_tr must be lower triangular".into()));
                }
            }
        }
        let sigma = &sigma_tr * sigma_tr.transpose();
        Self::assemble(p, has_constant, b, sigma, sigma_tr)
    }

    fn assemble(
        p: usize,
        has_constant: bool,
        b: DMatrix<T>,
        sigma: DMatrix<T>,
        sigma_tr: DMatrix<T>,
    ) -> Result<Self> {
        let n = sigma.nrows();
        let k = n * p + usize::from(has_constant);
        if b.nrows() != n || b.ncols() != k {
            return Err(Error::Dimension(format!(
                "B must be {n}x{k} for n={n}, p={p}, constant={has_constant}; got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        let sigma_tr_inv = invert_lower(&sigma_tr);
        Ok(Self {
            n,
            p,
            has_constant,
            b,
            sigma,
            sigma_tr,
            sigma_tr_inv,
        })
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
    /// Number of regressors per equation.
    pub fn k(&self) -> usize {
        self.n * self.p + usize::from(self.has_constant)
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn sigma(&self) -> &DMatrix<T> {
        &self.sigma
    }
    pub fn sigma_tr(&self) -> &DMatrix<T> {
        &self.sigma_tr
    }
    pub fn sigma_tr_inv(&self) -> &DMatrix<T> {
        &self.sigma_tr_inv
    }

    /// Lag matrix `B_l` for `l` in `1..=p`.
    pub fn lag(&self, l: usize) -> DMatrix<T> {
        assert!(l >= 1 && l <= self.p, "lag {l} out of 1..={}", self.p);
        self.b.columns((l - 1) * self.n, self.n).into_owned()
    }

    pub fn intercept(&self) -> Option<DVectorView<'_, T>> {
        self.has_constant.then(|| self.b.column(self.n * self.p))
    }

    /// Companion matrix of the lag polynomial (intercept excluded). Empty when p = 0.
    pub fn companion(&self) -> DMatrix<T> {
        let (n, p) = (self.n, self.p);
        let mut f = DMatrix::zeros(n * p, n * p);
        if p == 0 {
            return f;
        }
        f.view_mut((0, 0), (n, n * p))
            .copy_from(&self.b.columns(0, n * p));
        for i in n..n * p {
            f[(i, i - n)] = T::one();
        }
        f
    }

    /// `Σ_tr^{-1} u`.
    pub fn whiten(&self, u: &DVector<T>) -> DVector<T> {
        &self.sigma_tr_inv * u
    }

    /// `A0 = Q' Σ_tr^{-1}`.
    pub fn a0(&self, q: &OrthonormalMatrix<T>) -> DMatrix<T> {
        q.matrix().transpose() * &self.sigma_tr_inv
    }
}

/// Lower Cholesky factor with strictly positive diagonal; rejects numerically indefinite input.
pub fn lower_cholesky<T: Real>(sigma: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = sigma.nrows();
    let asym = (sigma - sigma.transpose()).norm();
    if asym > T::CHECK_TOL * (T::one() + sigma.norm()) {
        return Err(Error::Dimension("Sigma is not symmetric".into()));
    }
    let eig = sigma.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if !(max > T::zero()) || min < T::lit(INDEFINITE_RATIO) * max {
        let ratio = if max > T::zero() { (min / max).as_f64() } else { f64::NAN };
        return Err(Error::NotPositiveDefinite { ratio });
    }
    let chol = nalgebra::Cholesky::new(sigma.clone())
        .ok_or(Error::NotPositiveDefinite { ratio: (min / max).as_f64() })?;
    let mut l = chol.unpack();
    for i in 0..n {
        for j in i + 1..n {
            l[(i, j)] = T::zero();
        }
    }
    Ok(l)
}

fn invert_lower<T: Real>(l: &DMatrix<T>) -> DMatrix<T> {
    let n = l.nrows();
    let mut inv = DMatrix::identity(n, n);
    // Diagonal is strictly positive by construction, so the solve cannot fail.
    let solved = l.solve_lower_triangular_mut(&mut inv);
    debug_assert!(solved);
    inv
}

/// A candidate rotation `Q` with `Q'Q = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalMatrix<T: Real>(DMatrix<T>);

impl<T: Real> OrthonormalMatrix<T> {
    pub fn new(q: DMatrix<T>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Dimension("Q must be square".into()));
        }
        let n = q.nrows();
        let err = (q.transpose() * &q - DMatrix::<T>::identity(n, n)).norm();
        if !(err <= T::CHECK_TOL * T::usize(n.max(1))) {
            return Err(Error::Numerical(format!(
                "Q'Q deviates from identity by {:e}",
                err.as_f64()
            )));
        }
        Ok(Self(q))
    }

    /// Wraps a matrix the caller guarantees to be orthonormal.
    pub fn new_unchecked(q: DMatrix<T>) -> Self {
        Self(q)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.0
    }

    /// `q_j = Q e_j` as a contiguous slice (column-major storage).
    pub fn column(&self, j: usize) -> &[T] {
        let n = self.n();
        &self.0.as_slice()[j * n..(j + 1) * n]
    }
}

impl OrthonormalMatrix<f64> {
    /// Rotation branch of O(2): `[[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// Reflection branch of O(2): `[[cos θ, sin θ], [sin θ, −cos θ]]`.
    pub fn reflection(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(DMatrix::from_row_slice(2, 2, &[c, s, s, -c]))
    }
}

/// VMA coefficients `C_0 .. C_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmaCoefficients<T: Real> {
    c: Vec<DMatrix<T>>,
}

impl<T: Real> VmaCoefficients<T> {
    pub fn horizon(&self) -> usize {
        self.c.len() - 1
    }

    pub fn get(&self, h: usize) -> Option<&DMatrix<T>> {
        self.c.get(h)
    }

    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.c
    }

    /// `c_{i,h} = (e_i' C_h Σ_tr)'`, the coefficient vector of `η_{i,·,h}` in `q`.
    pub fn irf_row(&self, params: &ReducedFormParams<T>, i: usize, h: usize) -> Result<DVector<T>> {
        let n = params.n();
        if i >= n {
            return Err(Error::Index(format!("variable {i} >= n = {n}")));
        }
        let ch = self.get(h).ok_or_else(|| {
            Error::Index(format!("horizon {h} beyond VMA horizon {}", self.horizon()))
        })?;
        Ok((ch.row(i) * params.sigma_tr()).transpose())
    }
}

/// Reduced-form residuals `u_t` for the post-lag sample.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationSeries<T: Real> {
    u: DMatrix<T>,
    start: usize,
}

impl<T: Real> InnovationSeries<T> {
    /// `u` has one row per period; `start` is the data row of the first residual.
    pub fn new(u: DMatrix<T>, start: usize) -> Self {
        Self { u, start }
    }

    pub fn len(&self) -> usize {
        self.u.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.u.nrows() == 0
    }

    pub fn n(&self) -> usize {
        self.u.ncols()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.u
    }

    /// Residual at innovation index `t` (data row `start + t`).
    pub fn at(&self, t: usize) -> DVector<T> {
        self.u.row(t).transpose()
    }

    /// Rows `k..=k+h`, the window consumed by [`historical_decomposition`].
    pub fn window(&self, k: usize, h: usize) -> Result<DMatrix<T>> {
        if k + h >= self.len() {
            return Err(Error::Index(format!(
                "window {k}..={} exceeds {} innovation periods",
                k + h,
                self.len()
            )));
        }
        Ok(self.u.rows(k, h + 1).into_owned())
    }
}

/// Regressor matrix `X` with rows `x_t'` for `t = p..T`.
pub fn regressors<T: Real>(data: &DMatrix<T>, p: usize, has_constant: bool) -> DMatrix<T> {
    let n = data.ncols();
    let rows = data.nrows().saturating_sub(p);
    let k = n * p + usize::from(has_constant);
    let mut x = DMatrix::zeros(rows, k);
    for r in 0..rows {
        let t = r + p;
        for l in 1..=p {
            for v in 0..n {
                x[(r, (l - 1) * n + v)] = data[(t - l, v)];
            }
        }
        if has_constant {
            x[(r, n * p)] = T::one();
        }
    }
    x
}

pub fn compute_residuals<T: Real>(
    data: &DMatrix<T>,
    params: &ReducedFormParams<T>,
) -> Result<InnovationSeries<T>> {
    let (n, p) = (params.n(), params.p());
    if data.ncols() != n {
        return Err(Error::Config(format!(
            "data has {} columns but the model has {n} variables",
            data.ncols()
        )));
    }
    if data.nrows() < p + 1 {
        return Err(Error::Config(format!(
            "data has {} rows; need at least p + 1 = {}",
            data.nrows(),
            p + 1
        )));
    }
    let x = regressors(data, p, params.has_constant());
    let y = data.rows(p, data.nrows() - p);
    let u = y - x * params.b().transpose();
    Ok(InnovationSeries::new(u, p))
}

pub fn vma_coefficients<T: Real>(params: &ReducedFormParams<T>, horizon: usize) -> VmaCoefficients<T> {
    let (n, p) = (params.n(), params.p());
    let lags: Vec<DMatrix<T>> = (1..=p).map(|l| params.lag(l)).collect();
    let mut c = Vec::with_capacity(horizon + 1);
    c.push(DMatrix::identity(n, n));
    for h in 1..=horizon {
        let mut ch = DMatrix::zeros(n, n);
        for l in 1..=h.min(p) {
            ch += &lags[l - 1] * &c[h - l];
        }
        c.push(ch);
    }
    VmaCoefficients { c }
}

fn check_index(what: &str, i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::Index(format!("{what} {i} >= n = {n}")));
    }
    Ok(())
}

/// `η_{i,j,h} = e_i' C_h Σ_tr Q e_j`.
pub fn impulse_response<T: Real>(
    params: &ReducedFormParams<T>,
    vma: &VmaCoefficients<T>,
    q: &OrthonormalMatrix<T>,
    i: usize,
    j: usize,
    h: usize,
) -> Result<T> {
    check_index("shock", j, params.n())?;
    let c = vma.irf_row(params, i, h)?;
    Ok(crate::scalar::dot(c.as_slice(), q.column(j)))
}

/// All structural shocks at one period: `ε_t = Q' Σ_tr^{-1} u_t`.
pub fn structural_shocks<T: Real>(
    params: &ReducedFormParams<T>,
    q: &OrthonormalMatrix<T>,
    u: &DVector<T>,
) -> Result<DVector<T>> {
    if u.len() != params.n() {
        return Err(Error::Dimension(format!(
            "innovation has length {}, expected {}",
            u.len(),
            params.n()
        )));
    }
    Ok(q.matrix().tr_mul(&params.whiten(u)))
}

pub fn structural_shock<T: Real>(
    params: &ReducedFormParams<T>,
    q: &OrthonormalMatrix<T>,
    u: &DVector<T>,
    i: usize,
) -> Result<T> {
    check_index("shock", i, params.n())?;
    if u.len() != params.n() {
        return Err(Error::Dimension(format!(
            "innovation has length {}, expected {}",
            u.len(),
            params.n()
        )));
    }
    let w = params.whiten(u);
    Ok(crate::scalar::dot(w.as_slice(), q.column(i)))
}

/// Contribution of shock `j` to variable `i` over the window `u_k .. u_{k+h}`
/// (rows of `u_window`, oldest first).
pub fn historical_decomposition<T: Real>(
    params: &ReducedFormParams<T>,
    vma: &VmaCoefficients<T>,
    q: &OrthonormalMatrix<T>,
    u_window: &DMatrix<T>,
    i: usize,
    j: usize,
) -> Result<T> {
    let n = params.n();
    check_index("variable", i, n)?;
    check_index("shock", j, n)?;
    if u_window.ncols() != n || u_window.nrows() == 0 {
        return Err(Error::Dimension("u_window must be (h+1) x n with h >= 0".into()));
    }
    let h = u_window.nrows() - 1;
    if h > vma.horizon() {
        return Err(Error::Index(format!(
            "window span {h} exceeds VMA horizon {}",
            vma.horizon()
        )));
    }
    let qj = q.column(j);
    let mut total = T::zero();
    for l in 0..=h {
        let c = vma.irf_row(params, i, l)?;
        let w = params.whiten(&u_window.row(h - l).transpose());
        total += crate::scalar::dot(c.as_slice(), qj) * crate::scalar::dot(qj, w.as_slice());
    }
    Ok(total)
}

pub fn spectral_radius<T: Real>(params: &ReducedFormParams<T>) -> T {
    if params.p() == 0 {
        return T::zero();
    }
    params
        .companion()
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re * z.re + z.im * z.im).sqrt())
        .fold(T::zero(), |a, b| a.max(b))
}

pub fn stability_check<T: Real>(params: &ReducedFormParams<T>) -> bool {
    let rho = spectral_radius(params);
    rho.is_finite() && rho < T::one() - T::lit(STABILITY_EPS)
}
