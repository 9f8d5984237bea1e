//! Small dense linear-algebra helpers shared across modules.

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Eigh, UPLO};

use crate::error::{Error, Result};
use crate::Mat;

/// Spectral radius: maximum eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::invalid("spectral radius of an empty matrix"));
    }
    let (eigs, _) = m
        .eig()
        .map_err(|e| Error::breakdown(format!("eigendecomposition failed: {e}")))?;
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Assemble the joint transition matrix `[[A, 0], [B, C]]`.
pub fn assemble_g(a: &Mat, b: &Mat, c: &Mat) -> Mat {
    let p1 = a.nrows();
    let p2 = c.nrows();
    let mut g = Mat::zeros((p1 + p2, p1 + p2));
    g.slice_mut(s![..p1, ..p1]).assign(a);
    g.slice_mut(s![p1.., ..p1]).assign(b);
    g.slice_mut(s![p1.., p1..]).assign(c);
    g
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eig(m: &Mat) -> Result<(Array1<f64>, Mat)> {
    let (vals, vecs) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::breakdown(format!("symmetric eigendecomposition failed: {e}")))?;
    Ok((vals, vecs))
}

/// Map the spectrum of a symmetric matrix through `f`, rebuilding `V f(D) V'`.
fn sym_map(m: &Mat, f: impl Fn(f64) -> f64) -> Result<Mat> {
    let (vals, vecs) = sym_eig(m)?;
    let scaled = &vecs * &vals.mapv(f).insert_axis(Axis(0));
    Ok(scaled.dot(&vecs.t()))
}

/// Symmetric positive-definite square root.
pub fn spd_sqrt(m: &Mat) -> Result<Mat> {
    let (vals, _) = sym_eig(m)?;
    if vals[0] <= 0.0 {
        return Err(Error::breakdown(format!(
            "matrix is not positive definite (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    sym_map(m, f64::sqrt)
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(m: &Mat) -> Result<Mat> {
    let (vals, _) = sym_eig(m)?;
    if vals[0] <= 0.0 {
        return Err(Error::breakdown(format!(
            "matrix is not positive definite (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    sym_map(m, |v| 1.0 / v)
}

/// Inverse square root of a symmetric positive-definite matrix.
pub fn spd_inv_sqrt(m: &Mat) -> Result<Mat> {
    let (vals, _) = sym_eig(m)?;
    if vals[0] <= 0.0 {
        return Err(Error::breakdown(format!(
            "matrix is not positive definite (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    sym_map(m, |v| 1.0 / v.sqrt())
}

/// Stationary covariance of `w_t = G w_{t-1} + e_t`: the solution of
/// `S = G S G' + Sigma`, computed by doubling (`S = sum_k G^k Sigma G'^k`).
pub fn stationary_covariance(g: &Mat, sigma: &Mat) -> Result<Mat> {
    let rho = spectral_radius(g)?;
    if rho >= 1.0 {
        return Err(Error::invalid(format!(
            "stationary covariance requires a stable system, spectral radius {rho:.6}"
        )));
    }
    let mut s = sigma.clone();
    let mut m = g.clone();
    for _ in 0..128 {
        let update = m.dot(&s).dot(&m.t());
        let delta: f64 = update.iter().map(|v| v.abs()).fold(0.0, f64::max);
        s += &update;
        if delta <= 1e-16 * s.iter().map(|v| v.abs()).fold(0.0, f64::max) {
            break;
        }
        m = m.dot(&m);
    }
    // symmetrize round-off
    Ok((&s + &s.t()) / 2.0)
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn power_lambda_max(m: &Mat, tol: f64, max_iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    // deterministic tie-breaker so the iterate is not orthogonal to the top space
    for (i, x) in v.iter_mut().enumerate() {
        *x += 1e-3 * ((i % 7) as f64 - 3.0) / (n as f64).sqrt();
    }
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = m.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w.dot(&v).abs();
        let done = (next - lambda).abs() <= tol * next.max(1.0);
        lambda = next;
        v = w / norm;
        if done {
            break;
        }
    }
    lambda
}

/// Matrix induced 1-norm (max absolute column sum).
pub fn induced_one_norm(m: &Mat) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix induced infinity-norm (max absolute row sum).
pub fn induced_inf_norm(m: &Mat) -> f64 {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn fro_norm(m: &Mat) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spectral_radius_identity_and_nilpotent() {
        let id = Mat::eye(4);
        assert_abs_diff_eq!(spectral_radius(&id).unwrap(), 1.0, epsilon = 1e-12);
        let mut nil = Mat::zeros((3, 3));
        nil[[0, 1]] = 2.0;
        nil[[1, 2]] = -3.0;
        assert_abs_diff_eq!(spectral_radius(&nil).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn spectral_radius_rejects_non_square() {
        assert!(spectral_radius(&Mat::zeros((2, 3))).is_err());
    }

    #[test]
    fn stationary_covariance_solves_fixed_point() {
        let g = ndarray::array![[0.5, 0.2], [0.0, -0.3]];
        let sigma = ndarray::array![[1.0, 0.1], [0.1, 2.0]];
        let s = stationary_covariance(&g, &sigma).unwrap();
        let resid = &s - &(g.dot(&s).dot(&g.t()) + &sigma);
        assert!(fro_norm(&resid.to_owned()) < 1e-12);
    }

    #[test]
    fn power_iteration_matches_eigh() {
        let m = ndarray::array![[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]];
        let (vals, _) = sym_eig(&m).unwrap();
        let lmax = power_lambda_max(&m, 1e-14, 10_000);
        assert_abs_diff_eq!(lmax, vals[vals.len() - 1], epsilon = 1e-9);
    }

    #[test]
    fn spd_roots_invert() {
        let m = ndarray::array![[2.0, 0.3], [0.3, 1.5]];
        let r = spd_sqrt(&m).unwrap();
        assert!(fro_norm(&(&r.dot(&r) - &m)) < 1e-12);
        let ri = spd_inv_sqrt(&m).unwrap();
        let prod = r.dot(&ri);
        assert!(fro_norm(&(&prod - &Mat::eye(2))) < 1e-12);
    }
}
