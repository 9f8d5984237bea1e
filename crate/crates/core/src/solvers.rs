//! Reusable numerical kernels: proximal operators, penalized regression
//! updates, graphical Lasso and singular value thresholding.
//!
//! All solvers are pure functions of their inputs; workspaces are per-call,
//! so they can run concurrently from independent threads. Coordinate sweeps
//! always visit indices in ascending order so results are deterministic.

use ndarray_linalg::SVD;

use crate::error::{Error, Result};
use crate::linalg::power_lambda_max;
use crate::{Mat, Vec1};

/// Which penalty a weight applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PenaltyKind {
    ElementwiseL1,
    Nuclear,
}

/// A penalty term: kind plus nonnegative weight.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub weight: f64,
}

impl PenaltySpec {
    pub fn l1(weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::ElementwiseL1, weight)
    }

    pub fn nuclear(weight: f64) -> Result<Self> {
        Self::new(PenaltyKind::Nuclear, weight)
    }

    pub fn new(kind: PenaltyKind, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(Error::invalid(format!(
                "penalty weight must be nonnegative, got {weight}"
            )));
        }
        Ok(Self { kind, weight })
    }
}

/// Step-size policy for the proximal gradient solver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum StepSizeRule {
    /// `1/L` with `L` estimated by power iteration, or an explicit step
    /// which must not exceed `1/L`.
    Fixed { step: Option<f64> },
    /// Halving line search on the quadratic majorization.
    Backtracking,
}

/// Iteration caps and tolerances shared by the iterative kernels.
///
/// Convergence is declared when the relative objective change drops below
/// `rel_tol` or the largest parameter change drops below `abs_tol`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverControl {
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub step_size_rule: StepSizeRule,
}

impl Default for SolverControl {
    fn default() -> Self {
        Self {
            max_inner_iters: 500,
            max_outer_iters: 50,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            step_size_rule: StepSizeRule::Fixed { step: None },
        }
    }
}

impl SolverControl {
    pub fn validate(&self) -> Result<()> {
        if self.max_inner_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::invalid("iteration caps must be >= 1"));
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Scalar soft threshold `sign(x) * max(|x| - tau, 0)`.
#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Singular value thresholding: soft-threshold the singular values of `m`
/// at level `tau` and reconstruct.
pub fn svt(m: &Mat, tau: f64) -> Result<Mat> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!(
            "svt threshold must be nonnegative, got {tau}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("svt input has non-finite entries"));
    }
    let (u, s, vt) = m
        .svd(true, true)
        .map_err(|e| Error::breakdown(format!("SVD failed: {e}")))?;
    let u = u.expect("requested U");
    let vt = vt.expect("requested V^T");
    let k = s.len();
    let mut out = Mat::zeros(m.dim());
    for i in 0..k {
        let sv = s[i] - tau;
        if sv <= 0.0 {
            continue;
        }
        let ui = u.column(i);
        let vi = vt.row(i);
        for (r, urv) in ui.iter().enumerate() {
            for (c, vcv) in vi.iter().enumerate() {
                out[[r, c]] += sv * urv * vcv;
            }
        }
    }
    Ok(out)
}

/// Outcome of an iterative kernel that the estimators inspect directly.
#[derive(Debug, Clone)]
pub(crate) struct SolveOutcome<T> {
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Lasso in Gram form: minimize `(weight/t_eff) * (b'Gb - 2q'b) + lambda*|b|_1`
/// by cyclic coordinate descent, warm-started at `beta`.
///
/// `gram = X'X` and `q = X'y` for the original problem
/// `(weight/t_eff)*|y - Xb|_2^2 + lambda*|b|_1`.
pub(crate) fn lasso_gram(
    gram: &Mat,
    q: &Vec1,
    t_eff: f64,
    weight: f64,
    lambda: f64,
    beta: &mut Vec1,
    ctrl: &SolverControl,
) -> SolveOutcome<()> {
    let p = q.len();
    let scale = 2.0 * weight / t_eff;
    // threshold in the unscaled coordinate problem
    let tau = lambda / scale;
    let mut v = gram.dot(beta); // G * beta, maintained incrementally
    let mut obj = {
        let quad = beta.dot(&v) - 2.0 * q.dot(beta);
        (weight / t_eff) * quad + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let mut converged = false;
    let mut iterations = 0;
    for sweep in 0..ctrl.max_inner_iters {
        iterations = sweep + 1;
        let mut max_delta: f64 = 0.0;
        for k in 0..p {
            let gkk = gram[[k, k]];
            let old = beta[k];
            let new = if gkk > 0.0 {
                let ck = q[k] - (v[k] - gkk * old);
                soft_threshold(ck, tau) / gkk
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                v.scaled_add(delta, &gram.column(k));
                beta[k] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        let quad = beta.dot(&v) - 2.0 * q.dot(beta);
        let new_obj =
            (weight / t_eff) * quad + lambda * beta.iter().map(|b| b.abs()).sum::<f64>();
        let rel_change = (obj - new_obj).abs() / new_obj.abs().max(1e-12);
        obj = new_obj;
        if max_delta < ctrl.abs_tol || rel_change < ctrl.rel_tol {
            converged = true;
            break;
        }
    }
    SolveOutcome {
        value: (),
        iterations,
        converged,
    }
}

/// Weighted Lasso row update: the minimizer over `b` of
/// `(weight/T) * |response + offset - design*b|_2^2 + lambda*|b|_1`,
/// solved by cyclic coordinate descent from `warm_start`.
pub fn weighted_lasso_row_update(
    design: &Mat,
    response_col: &Vec1,
    offset_residual: &Vec1,
    weight: f64,
    lambda: f64,
    warm_start: &Vec1,
    ctrl: &SolverControl,
) -> Result<Vec1> {
    ctrl.validate()?;
    if !(weight > 0.0) {
        return Err(Error::invalid(format!(
            "row weight must be positive, got {weight}"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let t = design.nrows();
    if response_col.len() != t || offset_residual.len() != t {
        return Err(Error::invalid(format!(
            "response/offset length {} / {} does not match design rows {}",
            response_col.len(),
            offset_residual.len(),
            t
        )));
    }
    if warm_start.len() != design.ncols() {
        return Err(Error::invalid("warm start length must match design columns"));
    }
    let gram = design.t().dot(design);
    let target = response_col + offset_residual;
    let q = design.t().dot(&target);
    let mut beta = warm_start.clone();
    let out = lasso_gram(&gram, &q, t as f64, weight, lambda, &mut beta, ctrl);
    if !out.converged {
        return Err(Error::Convergence {
            context: "weighted lasso row update".into(),
            last_iterate: beta.to_vec(),
        });
    }
    Ok(beta)
}

fn mean_abs_offdiag(s: &Mat) -> f64 {
    let p = s.nrows();
    if p < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                total += s[[i, j]].abs();
            }
        }
    }
    total / ((p * p - p) as f64)
}

/// Graphical Lasso: maximize `log det(O) - tr(S O) - rho * |O|_{1,off}` over
/// symmetric positive-definite `O`, with the penalty on off-diagonal entries
/// only. Block coordinate descent on the covariance (the dual), one Lasso
/// per column.
pub fn graphical_lasso(s: &Mat, rho: f64, ctrl: &SolverControl) -> Result<Mat> {
    ctrl.validate()?;
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho must be nonnegative"));
    }
    let p = s.nrows();
    if s.ncols() != p || p == 0 {
        return Err(Error::invalid("graphical lasso needs a square matrix"));
    }
    let scale = s.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..p {
        for j in (i + 1)..p {
            if (s[[i, j]] - s[[j, i]]).abs() > 1e-8 * scale {
                return Err(Error::invalid(format!(
                    "S is not symmetric at ({i}, {j}): {} vs {}",
                    s[[i, j]],
                    s[[j, i]]
                )));
            }
        }
        if !(s[[i, i]] > 0.0) {
            return Err(Error::invalid(format!(
                "S must have a strictly positive diagonal, S[{i},{i}] = {}",
                s[[i, i]]
            )));
        }
    }
    if p == 1 {
        return Ok(ndarray::array![[1.0 / s[[0, 0]]]]);
    }

    // W is the working covariance; its diagonal is fixed at diag(S) because
    // the diagonal of Omega is unpenalized.
    let mut w = (s.to_owned() + &s.t()) / 2.0;
    let mut coeffs = Mat::zeros((p - 1, p)); // column-j regression coefficients
    let tol_w = ctrl.abs_tol.max(ctrl.rel_tol * mean_abs_offdiag(s));

    let mut settled = false;
    for _sweep in 0..ctrl.max_outer_iters.max(ctrl.max_inner_iters) {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            // Sub-matrix views with row/column j removed.
            let idx: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let mut w11 = Mat::zeros((p - 1, p - 1));
            let mut s12 = Vec1::zeros(p - 1);
            for (a, &ia) in idx.iter().enumerate() {
                s12[a] = s[[ia, j]];
                for (b, &ib) in idx.iter().enumerate() {
                    w11[[a, b]] = w[[ia, ib]];
                }
            }
            // Lasso: minimize (1/2) b'W11 b - s12'b + rho|b|_1.
            let mut beta = coeffs.column(j).to_owned();
            lasso_quadratic(&w11, &s12, rho, &mut beta, ctrl);
            coeffs.column_mut(j).assign(&beta);
            let w12 = w11.dot(&beta);
            for (a, &ia) in idx.iter().enumerate() {
                max_change = max_change.max((w[[ia, j]] - w12[a]).abs());
                w[[ia, j]] = w12[a];
                w[[j, ia]] = w12[a];
            }
        }
        if max_change < tol_w {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::Convergence {
            context: "graphical lasso".into(),
            last_iterate: w.iter().copied().collect(),
        });
    }

    // Recover Omega from W and the per-column coefficients.
    let mut omega = Mat::zeros((p, p));
    for j in 0..p {
        let idx: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        let beta = coeffs.column(j);
        let mut w12_beta = 0.0;
        for (a, &ia) in idx.iter().enumerate() {
            w12_beta += w[[ia, j]] * beta[a];
        }
        let denom = w[[j, j]] - w12_beta;
        if !(denom > 0.0) {
            return Err(Error::breakdown(format!(
                "graphical lasso lost positive definiteness at column {j}"
            )));
        }
        let theta_jj = 1.0 / denom;
        omega[[j, j]] = theta_jj;
        for (a, &ia) in idx.iter().enumerate() {
            omega[[ia, j]] = -beta[a] * theta_jj;
        }
    }
    // Exact symmetry for downstream consumers.
    let omega = (&omega + &omega.t()) / 2.0;
    let (vals, _) = crate::linalg::sym_eig(&omega)?;
    if vals[0] <= 0.0 {
        return Err(Error::breakdown(format!(
            "graphical lasso produced a non-PD precision (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    Ok(omega)
}

/// Coordinate descent for `min_b (1/2) b'Ab - q'b + rho |b|_1` (A symmetric PSD).
fn lasso_quadratic(a: &Mat, q: &Vec1, rho: f64, beta: &mut Vec1, ctrl: &SolverControl) {
    let p = q.len();
    let mut v = a.dot(beta);
    for _ in 0..ctrl.max_inner_iters {
        let mut max_delta: f64 = 0.0;
        for k in 0..p {
            let akk = a[[k, k]];
            let old = beta[k];
            let new = if akk > 0.0 {
                let ck = q[k] - (v[k] - akk * old);
                soft_threshold(ck, rho) / akk
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                v.scaled_add(delta, &a.column(k));
                beta[k] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < ctrl.abs_tol.min(1e-10) {
            break;
        }
    }
}

/// Proximal gradient with nuclear-norm penalty, in Gram form.
///
/// Minimizes `(1/t_eff)*(target_sq - 2<b, tq> + <b G, b>) + lambda*|b|_*`,
/// which equals `(1/t_eff)*|target - X b'|_F^2 + lambda*|b|_*` when
/// `G = X'X`, `tq = target'X` and `target_sq = |target|_F^2`.
pub(crate) fn fista_nuclear_gram(
    gram: &Mat,
    tq: &Mat,
    target_sq: f64,
    t_eff: f64,
    lambda: f64,
    accelerate: bool,
    warm: Option<&Mat>,
    ctrl: &SolverControl,
) -> Result<SolveOutcome<Mat>> {
    let n = gram.nrows();
    let m = tq.nrows();
    if tq.ncols() != n {
        return Err(Error::invalid("gram/target dimensions do not conform"));
    }
    let lmax = power_lambda_max(gram, 1e-12, 20_000);
    let lips = 2.0 / t_eff * lmax;
    if lips == 0.0 {
        // Zero design: objective reduces to the penalty alone.
        return Ok(SolveOutcome {
            value: Mat::zeros((m, n)),
            iterations: 0,
            converged: true,
        });
    }
    let fixed_step = match ctrl.step_size_rule {
        StepSizeRule::Fixed { step: Some(s) } => {
            if s > 1.0 / lips * (1.0 + 1e-9) {
                return Err(Error::invalid(format!(
                    "fixed step {s:.3e} exceeds 1/L = {:.3e}",
                    1.0 / lips
                )));
            }
            Some(s)
        }
        StepSizeRule::Fixed { step: None } => Some(1.0 / (lips * (1.0 + 1e-9))),
        StepSizeRule::Backtracking => None,
    };

    let g_of = |b: &Mat| -> f64 {
        let quad = (b.dot(gram) * b).sum();
        let cross = (b * tq).sum();
        (target_sq - 2.0 * cross + quad) / t_eff
    };
    let grad_of = |b: &Mat| -> Mat { (b.dot(gram) - tq) * (2.0 / t_eff) };
    // prox step with the nuclear norm of the result read off the SVD
    let prox = |point: &Mat, tau: f64| -> Result<(Mat, f64)> {
        let out = svt(point, tau)?;
        let (_, s, _) = out
            .svd(false, false)
            .map_err(|e| Error::breakdown(format!("SVD failed: {e}")))?;
        let nuc = s.sum();
        Ok((out, nuc))
    };

    let mut b = match warm {
        Some(w0) if w0.dim() == (m, n) => w0.clone(),
        _ => Mat::zeros((m, n)),
    };
    let mut b_prev = b.clone();
    let nuc_b = {
        let (_, s, _) = b
            .svd(false, false)
            .map_err(|e| Error::breakdown(format!("SVD failed: {e}")))?;
        s.sum()
    };
    let mut obj = g_of(&b) + lambda * nuc_b;
    let mut step = fixed_step.unwrap_or(4.0 / lips);
    let mut momentum_t = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..ctrl.max_inner_iters {
        iterations = iter + 1;
        let y = if accelerate && iter > 0 {
            let w = (momentum_t - 1.0) / (momentum_t + 2.0);
            &b + &((&b - &b_prev) * w)
        } else {
            b.clone()
        };
        let grad = grad_of(&y);
        let (mut cand, mut cand_nuc) = prox(&(&y - &(&grad * step)), step * lambda)?;
        if fixed_step.is_none() {
            // backtracking: shrink until the quadratic model majorizes g
            let gy = g_of(&y);
            loop {
                let diff = &cand - &y;
                let lin = (&grad * &diff).sum();
                let quad = diff.iter().map(|v| v * v).sum::<f64>() / (2.0 * step);
                if g_of(&cand) <= gy + lin + quad + 1e-12 * gy.abs().max(1.0) {
                    break;
                }
                step *= 0.5;
                if step < 1e-2 / lips {
                    step = 1.0 / (lips * (1.0 + 1e-9));
                    let (c, nn) = prox(&(&y - &(&grad * step)), step * lambda)?;
                    cand = c;
                    cand_nuc = nn;
                    break;
                }
                let (c, nn) = prox(&(&y - &(&grad * step)), step * lambda)?;
                cand = c;
                cand_nuc = nn;
            }
        }
        let mut new_obj = g_of(&cand) + lambda * cand_nuc;
        if accelerate && new_obj > obj + 1e-12 * obj.abs().max(1.0) {
            // momentum overshot: restart from the plain step at b
            momentum_t = 1.0;
            let grad_b = grad_of(&b);
            let (c, nn) = prox(&(&b - &(&grad_b * step)), step * lambda)?;
            new_obj = g_of(&c) + lambda * nn;
            cand = c;
        }
        let max_change = (&cand - &b)
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        b_prev = std::mem::replace(&mut b, cand);
        momentum_t += 1.0;
        let rel_change = (obj - new_obj).abs() / new_obj.abs().max(1e-12);
        obj = new_obj;
        if max_change < ctrl.abs_tol || rel_change < ctrl.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(SolveOutcome {
        value: b,
        iterations,
        converged,
    })
}

/// Nuclear-norm penalized least squares: the minimizer over `b` of
/// `(1/T) * |target - design * b'|_F^2 + lambda * |b|_*`, T = design rows.
///
/// Proximal gradient with singular value thresholding; with `accelerate`
/// the step carries `(t-1)/(t+2)` momentum.
pub fn fista_nuclear(
    design: &Mat,
    target: &Mat,
    lambda: f64,
    accelerate: bool,
    ctrl: &SolverControl,
) -> Result<Mat> {
    ctrl.validate()?;
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    if design.nrows() != target.nrows() {
        return Err(Error::invalid(format!(
            "design has {} rows, target {}",
            design.nrows(),
            target.nrows()
        )));
    }
    if design.nrows() == 0 {
        return Err(Error::invalid("empty design"));
    }
    let gram = design.t().dot(design);
    let tq = target.t().dot(design);
    let target_sq = target.iter().map(|v| v * v).sum::<f64>();
    let out = fista_nuclear_gram(
        &gram,
        &tq,
        target_sq,
        design.nrows() as f64,
        lambda,
        accelerate,
        None,
        ctrl,
    )?;
    if !out.converged {
        return Err(Error::Convergence {
            context: "nuclear-norm proximal gradient".into(),
            last_iterate: out.value.iter().copied().collect(),
        });
    }
    Ok(out.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(3.25, 0.0), 3.25);
        assert_eq!(soft_threshold(-7.5, 0.0), -7.5);
        // sign(x) * max(|x| - tau, 0) at (-2.3, 0.8)
        assert_abs_diff_eq!(soft_threshold(-2.3, 0.8), -1.5, epsilon = 1e-15);
    }

    #[test]
    fn svt_zero_matrix_and_zero_threshold() {
        let z = Mat::zeros((4, 3));
        assert_eq!(svt(&z, 2.5).unwrap(), z);
        let m = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.25]];
        let back = svt(&m, 0.0).unwrap();
        for (a, b) in back.iter().zip(m.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn svt_rejects_negative_threshold() {
        assert!(svt(&Mat::zeros((2, 2)), -0.1).is_err());
    }

    #[test]
    fn lasso_full_shrinkage_gives_zero() {
        let design = array![[1.0, 0.2], [-0.4, 1.1], [0.3, -0.7]];
        let response = array![0.5, -0.2, 0.9];
        let offset = Vec1::zeros(3);
        let weight = 1.3;
        let t = 3.0;
        let corr = design.t().dot(&response);
        let lambda = 2.0 * weight * corr.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max) / t;
        let beta = weighted_lasso_row_update(
            &design,
            &response,
            &offset,
            weight,
            lambda * 1.0001,
            &Vec1::zeros(2),
            &SolverControl::default(),
        )
        .unwrap();
        assert!(beta.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn lasso_unpenalized_orthonormal_design_is_ols() {
        // orthonormal columns: OLS solution is X'y
        let design = array![
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 0.0]
        ];
        let response = array![2.0, -3.0, 1.0];
        let beta = weighted_lasso_row_update(
            &design,
            &response,
            &Vec1::zeros(3),
            0.7,
            0.0,
            &Vec1::zeros(2),
            &SolverControl::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(beta[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(beta[1], -3.0, epsilon = 1e-9);
    }

    #[test]
    fn lasso_rejects_bad_weight() {
        let design = Mat::zeros((2, 2));
        let v = Vec1::zeros(2);
        assert!(matches!(
            weighted_lasso_row_update(&design, &v, &v, 0.0, 0.1, &v, &SolverControl::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn glasso_diagonal_s_stays_diagonal() {
        let s = array![[2.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.25]];
        let omega = graphical_lasso(&s, 0.1, &SolverControl::default()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert_abs_diff_eq!(omega[[i, j]], 1.0 / s[[i, i]], epsilon = 1e-9);
                } else {
                    assert_eq!(omega[[i, j]], 0.0);
                }
            }
        }
    }

    #[test]
    fn glasso_huge_rho_diagonalizes() {
        let s = array![[1.5, 0.4, -0.2], [0.4, 2.0, 0.3], [-0.2, 0.3, 0.75]];
        let rho = 10.0 * 0.4;
        let omega = graphical_lasso(&s, rho, &SolverControl::default()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(omega[[i, i]], 1.0 / s[[i, i]], epsilon = 1e-8);
            for j in 0..3 {
                if i != j {
                    assert!(omega[[i, j]].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn glasso_rejects_asymmetric_input() {
        let s = array![[1.0, 0.5], [0.2, 1.0]];
        assert!(matches!(
            graphical_lasso(&s, 0.1, &SolverControl::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn fista_unpenalized_matches_least_squares() {
        // invertible Gram, lambda = 0: solution is target'X (X'X)^{-1}
        let design = array![
            [1.0, 0.3, -0.2],
            [0.0, 1.2, 0.4],
            [0.5, -0.1, 0.9],
            [-0.3, 0.8, 0.1],
            [0.2, 0.2, 1.4]
        ];
        let truth = array![[0.5, -1.0, 0.25], [2.0, 0.0, -0.75]];
        let target = design.dot(&truth.t());
        let mut ctrl = SolverControl::default();
        ctrl.max_inner_iters = 20_000;
        ctrl.rel_tol = 1e-14;
        ctrl.abs_tol = 1e-12;
        let b = fista_nuclear(&design, &target, 0.0, false, &ctrl).unwrap();
        for (a, t) in b.iter().zip(truth.iter()) {
            assert_abs_diff_eq!(a, t, epsilon = 1e-6);
        }
    }

    #[test]
    fn fista_full_shrinkage_returns_zero() {
        let design = array![[1.0, 0.1], [-0.2, 0.8], [0.4, 0.3], [0.0, -0.5]];
        let target = array![[0.7, -0.3], [0.1, 0.9], [-0.4, 0.2], [0.6, 0.0]];
        let tq = target.t().dot(&design);
        let (_, s, _) = tq.svd(false, false).unwrap();
        let lambda = 2.0 * s[0] / design.nrows() as f64;
        let b = fista_nuclear(&design, &target, lambda * 1.001, false, &SolverControl::default())
            .unwrap();
        assert!(b.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fista_explicit_step_must_respect_lipschitz() {
        let design = array![[1.0, 0.0], [0.0, 1.0]];
        let target = array![[1.0, 1.0]];
        let mut ctrl = SolverControl::default();
        ctrl.step_size_rule = StepSizeRule::Fixed { step: Some(1e6) };
        assert!(matches!(
            fista_nuclear(&design, &target, 0.1, false, &ctrl),
            Err(Error::InvalidArgument(_))
        ));
    }
}
