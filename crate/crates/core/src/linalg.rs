//! Small dense complex linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, Dyn};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use crate::{CMat, Error, Result, C64};

pub type Chol = Cholesky<C64, Dyn>;

/// `(m + mᴴ)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Squared Frobenius norm.
pub fn frob2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
/// The input is symmetrized first.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Hermitian inverse square root `Z^{-1/2}` with eigenvalues clamped below at
/// `floor` (which must be positive).
pub fn inv_sqrt_hermitian(z: &CMat, floor: f64) -> CMat {
    let (values, vectors) = hermitian_eig(z);
    let n = z.nrows();
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let s = 1.0 / v.max(floor).sqrt();
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Cholesky factor of a Hermitian positive-definite matrix (input symmetrized).
pub fn cholesky(z: &CMat) -> Result<Chol> {
    Cholesky::new(hermitian_part(z)).ok_or(Error::NotPositiveDefinite)
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
pub fn ln_det_hpd(m: &CMat) -> Result<f64> {
    let chol = cholesky(m)?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// `log2 det(I + A Aᴴ / sigma2)` for a tall or wide `A`.
pub fn log2_det_i_plus_gram(a: &CMat, sigma2: f64) -> f64 {
    let rows = a.nrows();
    let mut m = (a * a.adjoint()).unscale(sigma2);
    for i in 0..rows {
        m[(i, i)] += C64::new(1.0, 0.0);
    }
    // I + PSD is always positive definite; fall back to eigenvalues if
    // rounding defeats the factorization.
    match ln_det_hpd(&m) {
        Ok(v) => v / core::f64::consts::LN_2,
        Err(_) => {
            let (values, _) = hermitian_eig(&m);
            values.iter().map(|v| v.max(f64::MIN_POSITIVE).log2()).sum()
        }
    }
}

/// Orthonormal basis for the column span of `m` (Householder QR, thin Q).
pub fn orthonormalize_columns(m: &CMat) -> CMat {
    m.clone().qr().q()
}

/// Orthonormal basis of the null space of `m`: right singular vectors whose
/// singular value is at most `rel_tol` times the largest one. Computed from a
/// full square SVD so the basis is accurate to working precision.
pub fn null_space(m: &CMat, rel_tol: f64) -> (CMat, usize) {
    let (rows, cols) = m.shape();
    let n = rows.max(cols);
    let mut padded = CMat::zeros(n, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * largest;
    let rank = sv.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let null_idx: Vec<usize> = (0..sv.len()).filter(|&i| !(sv[i] > cutoff && sv[i] > 0.0)).collect();
    let basis = CMat::from_fn(cols, null_idx.len(), |r, c| v_t[(null_idx[c], r)].conj());
    (basis, rank)
}

/// Classic waterfilling: powers `p_i = (level - noise/gain_i)^+` with
/// `sum p_i = budget`. Gains are channel eigenvalues (squared singular
/// values). Zero gains get zero power.
pub fn waterfill(gains: &[f64], noise: f64, budget: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    idx.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut powers = alloc::vec![0.0; gains.len()];
    if budget <= 0.0 || idx.is_empty() {
        return powers;
    }
    // Largest active set whose water level clears every active floor.
    let mut active = idx.len();
    let mut level = 0.0;
    while active > 0 {
        let floors: f64 = idx[..active].iter().map(|&i| noise / gains[i]).sum();
        level = (budget + floors) / active as f64;
        if level > noise / gains[idx[active - 1]] {
            break;
        }
        active -= 1;
    }
    for &i in &idx[..active] {
        powers[i] = (level - noise / gains[i]).max(0.0);
    }
    powers
}

/// Waterfilling precoder over a whitened channel.
///
/// Given the channel `h` (r × n) and a square-root factor `L` of the
/// dual-weighted matrix `Z = L Lᴴ`, returns `F = L^{-H} V Λ^{1/2}` where `V`
/// holds the right singular vectors of `h L^{-H}` and
/// `ρ_m = (1 - sigma2/η_m)^+` over its eigenvalues `η_m`. `F` has `streams`
/// columns; inactive streams are zero.
pub fn whitened_waterfill(h: &CMat, chol: &Chol, sigma2: f64, streams: usize) -> CMat {
    let n = h.ncols();
    // Bh = L^{-1} Hᴴ, so the whitened channel is Bhᴴ.
    let bh = chol.l_dirty().solve_lower_triangular(&h.adjoint()).unwrap_or_else(|| CMat::zeros(n, h.nrows()));
    let gram = bh.adjoint() * &bh;
    let (eta, u) = hermitian_eig(&gram);
    let mut cols = CMat::zeros(n, streams);
    for m in 0..streams.min(eta.len()) {
        let e = eta[m];
        if !(e > 0.0) {
            continue;
        }
        let rho = 1.0 - sigma2 / e;
        if rho <= 0.0 {
            continue;
        }
        let scale = (rho / e).sqrt();
        let v = &bh * u.column(m);
        for r in 0..n {
            cols[(r, m)] = v[r] * scale;
        }
    }
    chol.l_dirty().ad_solve_lower_triangular(&cols).unwrap_or_else(|| CMat::zeros(n, streams))
}

/// Reference waterfilling precoder built with the Hermitian `Z^{-1/2}`
/// (eigen route). Produces the same `F Fᴴ` as [`whitened_waterfill`].
pub fn whitened_waterfill_eig(h: &CMat, z: &CMat, sigma2: f64, streams: usize, floor: f64) -> CMat {
    let n = h.ncols();
    let zis = inv_sqrt_hermitian(z, floor);
    let b = h * &zis;
    let svd = b.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &c| svd.singular_values[c].total_cmp(&svd.singular_values[a]));
    let mut cols = CMat::zeros(n, streams);
    for (m, &i) in order.iter().take(streams).enumerate() {
        let eta = svd.singular_values[i] * svd.singular_values[i];
        if !(eta > 0.0) {
            continue;
        }
        let rho = (1.0 - sigma2 / eta).max(0.0);
        let s = rho.sqrt();
        for r in 0..n {
            cols[(r, m)] = v_t[(i, r)].conj() * s;
        }
    }
    zis * cols
}

/// Real symmetric solve used by the Newton-type dual polish.
pub(crate) fn solve_real(a: DMatrix<f64>, b: &nalgebra::DVector<f64>) -> Option<nalgebra::DVector<f64>> {
    a.lu().solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn test_matrix(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn inv_sqrt_squares_to_inverse() {
        let a = test_matrix(6, 6, 3);
        let z = &a * a.adjoint() + CMat::identity(6, 6);
        let zis = inv_sqrt_hermitian(&z, 1e-12);
        let prod = &zis * &zis * &z;
        assert!((prod - CMat::identity(6, 6)).norm() < 1e-10);
    }

    #[test]
    fn null_space_of_selector() {
        // [I 0] (2x4): null space is spanned by e3, e4.
        let mut m = CMat::zeros(2, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        let (basis, rank) = null_space(&m, 1e-10);
        assert_eq!(rank, 2);
        assert_eq!(basis.ncols(), 2);
        assert!((&m * &basis).norm() < 1e-14);
        assert!((basis.adjoint() * &basis - CMat::identity(2, 2)).norm() < 1e-12);
        for r in 0..2 {
            for k in 0..2 {
                assert!(basis[(r, k)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn waterfill_equal_gains_split_evenly() {
        let p = waterfill(&[2.0, 2.0, 2.0], 1.0, 3.0);
        for v in p {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn waterfill_small_budget_uses_strongest() {
        let p = waterfill(&[4.0, 1.0], 1.0, 1e-3);
        assert!(p[0] > 0.0);
        assert_eq!(p[1], 0.0);
        assert!((p[0] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn cholesky_and_eig_routes_agree() {
        let h = test_matrix(2, 8, 11);
        let a = test_matrix(8, 3, 5);
        let z = &a * a.adjoint() + CMat::identity(8, 8).scale(0.05);
        let chol = cholesky(&z).unwrap();
        let f1 = whitened_waterfill(&h, &chol, 1.0, 2);
        let f2 = whitened_waterfill_eig(&h, &z, 1.0, 2, 1e-12);
        let s1 = &f1 * f1.adjoint();
        let s2 = &f2 * f2.adjoint();
        assert!((&s1 - &s2).norm() <= 1e-9 * s1.norm().max(1.0));
    }
}
