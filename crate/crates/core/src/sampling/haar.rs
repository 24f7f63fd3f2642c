use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::{dot, Real};
use crate::var_core::{OrthonormalMatrix, ReducedFormParams};

const SIGN_EPS: f64 = 1e-14;

#[inline]
pub(crate) fn std_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Orthogonal factor of a Gaussian matrix `Z = Q̃R`, with `R` left unnormalized.
///
/// Uses classical Gram-Schmidt with one reorthogonalization pass, which makes
/// `q̃_1 = z_1/‖z_1‖` exactly and keeps `Q̃'Q̃ = I` to rounding.
pub fn draw_uniform_orthonormal<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<T> {
    let mut q = DMatrix::from_fn(n, n, |_, _| std_normal::<T, _>(rng));
    orthonormalize_columns(&mut q);
    q
}

/// In-place CGS2 on the columns of a full-rank square matrix.
pub(crate) fn orthonormalize_columns<T: Real>(q: &mut DMatrix<T>) {
    let n = q.nrows();
    let data = q.as_mut_slice();
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let (done, rest) = data.split_at_mut(j * n);
                let qi = &done[i * n..(i + 1) * n];
                let v = &mut rest[..n];
                let r = dot(qi, v);
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= r * *qk;
                }
            }
        }
        let v = &mut data[j * n..(j + 1) * n];
        let norm = dot(v, v).sqrt();
        for vk in v.iter_mut() {
            *vk /= norm;
        }
    }
}

/// Flips columns so that `diag(Q' Σ_tr^{-1}) ≥ 0`.
pub fn sign_fix_columns<T: Real>(mut q: DMatrix<T>, params: &ReducedFormParams<T>) -> OrthonormalMatrix<T> {
    let n = q.nrows();
    let inv = params.sigma_tr_inv();
    for j in 0..n {
        let inner = dot(&q.as_slice()[j * n..(j + 1) * n], inv.column(j).as_slice());
        if inner < T::zero() && inner.abs() >= T::lit(SIGN_EPS) {
            q.column_mut(j).neg_mut();
        }
    }
    OrthonormalMatrix::new_unchecked(q)
}

/// Haar draw followed by the sign normalization.
pub fn draw_normalized<T: Real, R: Rng + ?Sized>(params: &ReducedFormParams<T>, rng: &mut R) -> OrthonormalMatrix<T> {
    sign_fix_columns(draw_uniform_orthonormal(params.n(), rng), params)
}
