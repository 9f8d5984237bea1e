//! Group Granger-causality tests for the inter-block matrix.
//!
//! All tests operate on partial-regression residuals: the lagged first-block
//! design and the second-block response are both projected off the lagged
//! second-block design. The rank test sums the smallest generalized
//! eigenvalues of the partial cross-covariance problem and refers `T` times
//! the sum to a chi-squared law; the trace-form test (sum of all
//! eigenvalues with a diagonal inner weighting) targets the null of no
//! coupling at all and works even when the first block is wider than the
//! sample; the higher-criticism test scans standardized entry statistics
//! for sparse alternatives. Subsample calibration reruns a test over random
//! contiguous blocks.

use ndarray::prelude::*;
use ndarray_linalg::{Cholesky, Inverse, UPLO};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::build_design_response;
use crate::linalg::{spd_inverse, sym_eig};
use crate::panel::TimeSeriesPanel;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::Mat;

pub use crate::special::{chi2_upper_quantile, chi2_upper_tail, std_normal_upper_tail};

/// Partial covariances of the lagged first-block design and the
/// second-block response after projecting off the lagged second block.
#[derive(Debug, Clone)]
pub struct PartialCovariances {
    /// `(Z^T)'(I-P_z)(Z^T)/T`, p2 x p2.
    pub s00: Mat,
    /// `X'(I-P_z)X/T`, p1 x p1.
    pub s11: Mat,
    /// `X'(I-P_z)(Z^T)/T`, p1 x p2.
    pub s10: Mat,
    pub t_eff: usize,
}

/// Which test to run, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum TestMethod {
    Rank { r_null: usize, alpha: f64 },
    Granger { alpha: f64 },
    HigherCriticism,
}

/// Outcome of a single test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub method: String,
    pub statistic: f64,
    /// Chi-squared degrees of freedom, when the reference law has them.
    pub dof: Option<usize>,
    /// Rejection cut-off on the statistic's own scale.
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub reject: bool,
    pub r_null: Option<usize>,
    pub alpha: Option<f64>,
}

/// Project the columns of `m` off the column span of `q` (orthonormal).
fn project_off(q: &Mat, m: &Mat) -> Mat {
    m - &q.dot(&q.t().dot(m))
}

/// Partial covariances from explicit design/response matrices (already
/// centered). `x_design` and `z_response` are projected off `z_design`.
///
/// The projector is built from a rank-revealing orthonormal basis of the
/// Z design (singular vectors above a relative tolerance), so an exactly
/// collinear Z design projects onto its actual span; a numerically zero
/// design (e.g. constant columns) is an error.
pub(crate) fn partial_covariances_from_parts(
    x_design: &Mat,
    z_design: &Mat,
    z_response: &Mat,
    t_eff: usize,
) -> Result<PartialCovariances> {
    let t = z_design.nrows();
    let p2 = z_design.ncols();
    if p2 >= t {
        return Err(Error::rank(
            "Z'Z",
            format!("needs p2 < T for invertibility, got p2 = {p2}, T = {t}"),
        ));
    }
    use ndarray_linalg::{JobSvd, SVDDC};
    let (u, s, _) = z_design
        .svddc(JobSvd::Some)
        .map_err(|e| Error::breakdown(format!("SVD of the Z design failed: {e}")))?;
    let u = u.expect("requested thin U");
    if s.is_empty() || s[0] <= 0.0 {
        return Err(Error::rank(
            "Z'Z",
            "the lagged Z design has no variation".to_string(),
        ));
    }
    let rank = s.iter().filter(|v| **v > 1e-10 * s[0]).count();
    if rank == 0 {
        return Err(Error::rank(
            "Z'Z",
            "the lagged Z design is numerically zero".to_string(),
        ));
    }
    let q = u.slice(s![.., ..rank]).to_owned();
    let rx = project_off(&q, x_design);
    let rz = project_off(&q, z_response);
    let tf = t_eff as f64;
    Ok(PartialCovariances {
        s00: rz.t().dot(&rz) / tf,
        s11: rx.t().dot(&rx) / tf,
        s10: rx.t().dot(&rz) / tf,
        t_eff,
    })
}

/// Partial covariances from raw panels (centered and lagged internally).
pub fn partial_covariances(x: &TimeSeriesPanel, z: &TimeSeriesPanel) -> Result<PartialCovariances> {
    let dr = build_design_response(x, Some(z))?;
    let z_design = dr.z_design.as_ref().expect("Z panel provided");
    let z_response = dr.z_response.as_ref().expect("Z panel provided");
    partial_covariances_from_parts(&dr.x_design, z_design, z_response, dr.t_eff)
}

/// Generalized eigenvalues of `|M - phi S00| = 0` for symmetric PSD `M`
/// and `S00`, sorted descending and clamped at zero.
///
/// `S00` is whitened by Cholesky when positive definite; when it is only
/// semidefinite the whitening falls back to an eigendecomposition that
/// drops null directions (those generalized eigenvalues are zero).
fn generalized_eigenvalues(m: &Mat, s00: &Mat) -> Result<Vec<f64>> {
    let p = s00.nrows();
    let diag_scale = s00.diag().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if diag_scale <= 0.0 {
        return Err(Error::rank("S00", "zero partial covariance".to_string()));
    }
    let chol = s00.cholesky(UPLO::Lower).ok().filter(|l| {
        let min_diag = l.diag().iter().cloned().fold(f64::INFINITY, f64::min);
        min_diag > 1e-6 * diag_scale.sqrt()
    });
    let mut phis = match chol {
        Some(l) => {
            let l_inv = l
                .inv()
                .map_err(|e| Error::breakdown(format!("triangular inverse failed: {e}")))?;
            let k = l_inv.dot(m).dot(&l_inv.t());
            let k = (&k + &k.t()) / 2.0;
            let (vals, _) = sym_eig(&k)?;
            vals.to_vec()
        }
        None => {
            let (vals, vecs) = sym_eig(s00)?;
            let lmax = vals[vals.len() - 1];
            if lmax <= 0.0 {
                return Err(Error::rank("S00", "not positive semidefinite".to_string()));
            }
            let keep: Vec<usize> = (0..p).filter(|&i| vals[i] > 1e-10 * lmax).collect();
            if keep.is_empty() {
                return Err(Error::rank("S00", "numerically zero".to_string()));
            }
            let mut w = Mat::zeros((p, keep.len()));
            for (col, &i) in keep.iter().enumerate() {
                let scaled = vecs.column(i).mapv(|v| v / vals[i].sqrt());
                w.column_mut(col).assign(&scaled);
            }
            let k = w.t().dot(m).dot(&w);
            let k = (&k + &k.t()) / 2.0;
            let (vals, _) = sym_eig(&k)?;
            let mut out = vals.to_vec();
            out.resize(p, 0.0);
            out
        }
    };
    for v in phis.iter_mut() {
        *v = v.max(0.0);
    }
    phis.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(phis)
}

/// Eigenvalues of the rank-test problem `|S01 S11^{-1} S10 - phi S00| = 0`,
/// descending.
pub fn rank_test_eigenvalues(pc: &PartialCovariances) -> Result<Vec<f64>> {
    let (s11_vals, _) = sym_eig(&pc.s11)?;
    if s11_vals[0] <= 0.0 {
        return Err(Error::rank(
            "S11",
            format!("not positive definite (min eigenvalue {:.3e})", s11_vals[0]),
        ));
    }
    let s11_inv = spd_inverse(&pc.s11)?;
    let m = pc.s10.t().dot(&s11_inv).dot(&pc.s10);
    let m = (&m + &m.t()) / 2.0;
    generalized_eigenvalues(&m, &pc.s00)
}

/// Tail sum `Psi_r = sum_{k > r} phi_k` up to `min(p1, p2)` terms.
pub fn psi_statistic(phis: &[f64], r_null: usize, p1: usize, p2: usize) -> f64 {
    let upto = p1.min(p2).min(phis.len());
    phis[r_null.min(upto)..upto].iter().sum()
}

/// Rank test of `rank(B) <= r_null` via partial canonical correlations:
/// `T Psi_r` is referred to the chi-squared law with `(p1-r)(p2-r)` degrees
/// of freedom.
pub fn rank_test(
    x: &TimeSeriesPanel,
    z: &TimeSeriesPanel,
    r_null: usize,
    alpha: f64,
) -> Result<TestReport> {
    let p1 = x.ncols();
    let p2 = z.ncols();
    if r_null >= p1.min(p2) {
        return Err(Error::invalid(format!(
            "null rank {r_null} must be below min(p1, p2) = {}",
            p1.min(p2)
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    let pc = partial_covariances(x, z)?;
    let phis = rank_test_eigenvalues(&pc)?;
    let psi = psi_statistic(&phis, r_null, p1, p2);
    let t = pc.t_eff as f64;
    let dof = (p1 - r_null) * (p2 - r_null);
    let p_value = chi2_upper_tail(dof, t * psi)?;
    let threshold = chi2_upper_quantile(dof, alpha)? / t;
    Ok(TestReport {
        method: "rank-test".to_string(),
        statistic: psi,
        dof: Some(dof),
        threshold,
        p_value: Some(p_value),
        reject: p_value < alpha,
        r_null: Some(r_null),
        alpha: Some(alpha),
    })
}

/// Trace-form test of `B = 0`: `Psi_0 = tr(S00^{-1} S01 diag(S11)^{-1} S10)`,
/// rejected when it exceeds the upper-alpha chi-squared quantile with
/// `p1 p2` degrees of freedom over `T`. The diagonal weighting admits
/// `p1 > T`.
pub fn granger_test(x: &TimeSeriesPanel, z: &TimeSeriesPanel, alpha: f64) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    let p1 = x.ncols();
    let p2 = z.ncols();
    let pc = partial_covariances(x, z)?;
    let psi = granger_statistic(&pc)?;
    let t = pc.t_eff as f64;
    let dof = p1 * p2;
    let threshold = chi2_upper_quantile(dof, alpha)? / t;
    let p_value = chi2_upper_tail(dof, t * psi)?;
    Ok(TestReport {
        method: "granger-corollary".to_string(),
        statistic: psi,
        dof: Some(dof),
        threshold,
        p_value: Some(p_value),
        reject: psi > threshold,
        r_null: Some(0),
        alpha: Some(alpha),
    })
}

/// `Psi_0` in trace form (equals the sum of the generalized eigenvalues of
/// the diagonal-weighted problem).
pub fn granger_statistic(pc: &PartialCovariances) -> Result<f64> {
    for (i, v) in pc.s11.diag().iter().enumerate() {
        if !(*v > 0.0) {
            return Err(Error::rank(
                "S11",
                format!("diagonal entry {i} is not positive: {v}"),
            ));
        }
    }
    let (s00_vals, _) = sym_eig(&pc.s00)?;
    if s00_vals[0] <= 0.0 {
        return Err(Error::rank(
            "S00",
            format!("not positive definite (min eigenvalue {:.3e})", s00_vals[0]),
        ));
    }
    let s00_inv = spd_inverse(&pc.s00)?;
    // S01 diag(S11)^{-1} S10
    let mut weighted = pc.s10.clone();
    for (mut row, d) in weighted.rows_mut().into_iter().zip(pc.s11.diag().iter()) {
        row /= *d;
    }
    let m = pc.s10.t().dot(&weighted);
    Ok((&s00_inv * &m.t()).sum())
}

/// Default scan grid: the integers in `[1, sqrt(5 log(p1 p2))]`.
pub fn hc_default_grid(p1: usize, p2: usize) -> Vec<f64> {
    let hi = (5.0 * ((p1 * p2) as f64).ln()).sqrt();
    (1..=(hi.floor() as usize)).map(|t| t as f64).collect()
}

/// Higher-criticism test of `B = 0` against sparse alternatives: scans the
/// standardized partial cross-covariance entries over a threshold grid and
/// rejects when the supremum exceeds `2 sqrt(log log(p1 p2))`.
pub fn higher_criticism_test(
    x: &TimeSeriesPanel,
    z: &TimeSeriesPanel,
    t_grid: Option<&[f64]>,
) -> Result<TestReport> {
    let p1 = x.ncols();
    let p2 = z.ncols();
    if p1 * p2 < 3 {
        return Err(Error::invalid(
            "higher criticism needs p1 * p2 >= 3 for a positive threshold",
        ));
    }
    let pc = partial_covariances(x, z)?;
    higher_criticism_from(&pc, t_grid)
}

pub(crate) fn higher_criticism_from(
    pc: &PartialCovariances,
    t_grid: Option<&[f64]>,
) -> Result<TestReport> {
    let p1 = pc.s11.nrows();
    let p2 = pc.s00.nrows();
    let grid_owned;
    let grid: &[f64] = match t_grid {
        Some(g) => {
            if g.is_empty() || g.iter().any(|t| !(*t > 0.0)) {
                return Err(Error::invalid("the scan grid must be positive"));
            }
            g
        }
        None => {
            grid_owned = hc_default_grid(p1, p2);
            &grid_owned
        }
    };
    for (i, v) in pc.s11.diag().iter().enumerate() {
        if !(*v > 1e-300) {
            return Err(Error::rank(
                "S11",
                format!("diagonal entry {i} has no variance: {v}"),
            ));
        }
    }
    for (j, v) in pc.s00.diag().iter().enumerate() {
        if !(*v > 1e-300) {
            return Err(Error::rank(
                "S00",
                format!("diagonal entry {j} has no variance: {v}"),
            ));
        }
    }
    let t = pc.t_eff as f64;
    let n = (p1 * p2) as f64;
    let mut standardized = Vec::with_capacity(p1 * p2);
    for i in 0..p1 {
        for j in 0..p2 {
            let denom = (pc.s11[[i, i]] * pc.s00[[j, j]]).sqrt();
            standardized.push(t.sqrt() * pc.s10[[i, j]].abs() / denom);
        }
    }
    let mut best = f64::NEG_INFINITY;
    for &tt in grid {
        let tail = 2.0 * std_normal_upper_tail(tt);
        let frac = standardized.iter().filter(|v| **v > tt).count() as f64 / n;
        let h = (n / (tail * (1.0 - tail))).sqrt() * (frac - tail);
        best = best.max(h);
    }
    let threshold = 2.0 * n.ln().ln().sqrt();
    Ok(TestReport {
        method: "higher-criticism".to_string(),
        statistic: best,
        dof: None,
        threshold,
        p_value: None,
        reject: best > threshold,
        r_null: None,
        alpha: None,
    })
}

/// Run the selected test once.
pub fn run_test(x: &TimeSeriesPanel, z: &TimeSeriesPanel, method: &TestMethod) -> Result<TestReport> {
    match *method {
        TestMethod::Rank { r_null, alpha } => rank_test(x, z, r_null, alpha),
        TestMethod::Granger { alpha } => granger_test(x, z, alpha),
        TestMethod::HigherCriticism => higher_criticism_test(x, z, None),
    }
}

/// Empirical rejection rate of `method` over `n_subsamples` contiguous
/// blocks of `block_length` rows drawn uniformly at random.
pub fn subsample_calibration(
    x: &TimeSeriesPanel,
    z: &TimeSeriesPanel,
    method: &TestMethod,
    n_subsamples: usize,
    block_length: usize,
    rng: &mut Rng,
) -> Result<f64> {
    let t = x.len();
    if block_length >= t {
        return Err(Error::invalid(format!(
            "block length {block_length} must be below the series length {t}"
        )));
    }
    if block_length < 2 {
        return Err(Error::invalid("block length must be at least 2"));
    }
    if n_subsamples == 0 {
        return Err(Error::invalid("need at least one subsample"));
    }
    let starts: Vec<usize> = (0..n_subsamples)
        .map(|_| rng.random_range(0..=t - block_length))
        .collect();
    let decisions: Result<Vec<bool>> = starts
        .par_iter()
        .map(|&start| {
            let xw = x.window(start, block_length)?;
            let zw = z.window(start, block_length)?;
            Ok(run_test(&xw, &zw, method)?.reject)
        })
        .collect();
    let decisions = decisions?;
    Ok(decisions.iter().filter(|d| **d).count() as f64 / n_subsamples as f64)
}

/// Rejection rate over independently simulated replications (fresh data per
/// replication rather than subsamples of one series).
pub fn replicated_rejection_rate(
    spec: &crate::simulate::ExperimentSpec,
    method: &TestMethod,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    let decisions: Result<Vec<bool>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng_from_seed(derive_seed(seed, 11, rep as u64));
            let params = spec.generate_params(&mut rng)?;
            let (x, z) = crate::simulate::simulate_system(
                &params,
                spec.t_len,
                &spec.noise,
                spec.burn_in,
                &mut rng,
            )?;
            Ok(run_test(&x, &z, method)?.reject)
        })
        .collect();
    let decisions = decisions?;
    Ok(decisions.iter().filter(|d| **d).count() as f64 / replications as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::simulate::{
        simulate_system, BGen, BStructure, ExperimentSpec, ModelParams, NoiseSpec, PrecisionKind,
        Preset,
    };
    use approx::assert_abs_diff_eq;

    fn random_panels(seed: u64, p1: usize, p2: usize, t: usize) -> (TimeSeriesPanel, TimeSeriesPanel) {
        let mut rng = rng_from_seed(seed);
        let spec = ExperimentSpec {
            preset: Preset::Custom,
            p1,
            p2,
            b_gen: BGen::Zero,
            rho_a: 0.5,
            rho_c: 0.5,
            t_len: t,
            noise: NoiseSpec::Gaussian,
            precision: PrecisionKind::Identity,
            burn_in: 100,
            replications: 1,
            seed,
        };
        let params = spec.generate_params(&mut rng).unwrap();
        simulate_system(&params, t, &NoiseSpec::Gaussian, 100, &mut rng).unwrap()
    }

    #[test]
    fn partial_covariances_match_explicit_projector() {
        let (x, z) = random_panels(61, 4, 3, 60);
        let pc = partial_covariances(&x, &z).unwrap();
        // oracle: dense projector through an explicit inverse
        let dr = build_design_response(&x, Some(&z)).unwrap();
        let zd = dr.z_design.as_ref().unwrap();
        let zr = dr.z_response.as_ref().unwrap();
        let ztz_inv = spd_inverse(&zd.t().dot(zd)).unwrap();
        let p = zd.dot(&ztz_inv).dot(&zd.t());
        let resid = |m: &Mat| m - &p.dot(m);
        let rx = resid(&dr.x_design);
        let rz = resid(zr);
        let tf = dr.t_eff as f64;
        for (got, want) in [
            (&pc.s11, rx.t().dot(&rx) / tf),
            (&pc.s00, rz.t().dot(&rz) / tf),
            (&pc.s10, rx.t().dot(&rz) / tf),
        ] {
            for (a, b) in got.iter().zip(want.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_variance_z_is_rank_deficient() {
        let x = TimeSeriesPanel::new(Mat::from_shape_fn((20, 2), |(i, j)| (i + j) as f64), "x");
        let z = TimeSeriesPanel::new(Mat::from_elem((20, 2), 3.0), "z");
        match partial_covariances(&x, &z) {
            Err(Error::RankDeficient { block, .. }) => assert_eq!(block, "Z'Z"),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn orthogonal_construction_leaves_grams_unchanged() {
        // design blocks supported on disjoint coordinates: projection off Z
        // removes nothing from X or the response
        let t = 8usize;
        let mut z_design = Mat::zeros((t, 1));
        z_design[[0, 0]] = 1.0;
        z_design[[1, 0]] = -1.0;
        let mut x_design = Mat::zeros((t, 2));
        x_design[[2, 0]] = 1.0;
        x_design[[3, 0]] = -1.0;
        x_design[[4, 1]] = 2.0;
        let mut z_response = Mat::zeros((t, 1));
        z_response[[5, 0]] = 1.5;
        z_response[[6, 0]] = -0.5;
        let pc = partial_covariances_from_parts(&x_design, &z_design, &z_response, t).unwrap();
        let tf = t as f64;
        let want_s11 = x_design.t().dot(&x_design) / tf;
        let want_s00 = z_response.t().dot(&z_response) / tf;
        for (a, b) in pc.s11.iter().zip(want_s11.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for (a, b) in pc.s00.iter().zip(want_s00.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // disjoint supports also mean zero partial cross-covariance ...
        assert!(pc.s10.iter().all(|v| v.abs() < 1e-12));
        // ... so the trace statistic is zero and nothing is rejected
        let psi0 = granger_statistic(&pc).unwrap();
        assert!(psi0.abs() < 1e-12);
        // and every higher-criticism exceedance fraction is zero
        let hc = higher_criticism_from(&pc, None).unwrap();
        assert!(hc.statistic < 0.0);
        assert!(!hc.reject);
    }

    #[test]
    fn rank_test_matches_determinant_roots_3x2() {
        let (x, z) = random_panels(62, 3, 2, 80);
        let pc = partial_covariances(&x, &z).unwrap();
        let phis = rank_test_eigenvalues(&pc).unwrap();
        // oracle: expand det(M - phi S00) = 0 for the 2x2 pencil
        let s11_inv = spd_inverse(&pc.s11).unwrap();
        let m = pc.s10.t().dot(&s11_inv).dot(&pc.s10);
        let s = &pc.s00;
        let a = s[[0, 0]] * s[[1, 1]] - s[[0, 1]] * s[[1, 0]];
        let b = -(m[[0, 0]] * s[[1, 1]] + m[[1, 1]] * s[[0, 0]]
            - m[[0, 1]] * s[[1, 0]]
            - m[[1, 0]] * s[[0, 1]]);
        let c = m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]];
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        let hi = (-b + disc) / (2.0 * a);
        let lo = (-b - disc) / (2.0 * a);
        assert_abs_diff_eq!(phis[0], hi, epsilon = 1e-9);
        assert_abs_diff_eq!(phis[1], lo, epsilon = 1e-9);
    }

    #[test]
    fn psi_is_monotone_and_vanishes_at_min_dim() {
        let (x, z) = random_panels(63, 5, 4, 120);
        let pc = partial_covariances(&x, &z).unwrap();
        let phis = rank_test_eigenvalues(&pc).unwrap();
        let mut last = f64::INFINITY;
        for r in 0..=4 {
            let psi = psi_statistic(&phis, r, 5, 4);
            assert!(psi <= last + 1e-15);
            assert!(psi >= 0.0);
            last = psi;
        }
        assert_eq!(psi_statistic(&phis, 4, 5, 4), 0.0);
    }

    #[test]
    fn rank_test_rejects_boundary_null() {
        let (x, z) = random_panels(64, 3, 3, 50);
        assert!(rank_test(&x, &z, 3, 0.05).is_err());
        assert!(rank_test(&x, &z, 0, 1.5).is_err());
    }

    #[test]
    fn rank_test_report_fields() {
        let (x, z) = random_panels(65, 4, 3, 100);
        let report = rank_test(&x, &z, 1, 0.05).unwrap();
        assert_eq!(report.dof, Some((4 - 1) * (3 - 1)));
        assert_eq!(report.method, "rank-test");
        let p = report.p_value.unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn granger_trace_equals_eigen_sum() {
        let (x, z) = random_panels(66, 4, 3, 90);
        let pc = partial_covariances(&x, &z).unwrap();
        let psi0 = granger_statistic(&pc).unwrap();
        // eigenvalue route for the same diagonal-weighted pencil
        let mut weighted = pc.s10.clone();
        for (mut row, d) in weighted.rows_mut().into_iter().zip(pc.s11.diag().iter()) {
            row /= *d;
        }
        let m = pc.s10.t().dot(&weighted);
        let m = (&m + &m.t()) / 2.0;
        let phis = generalized_eigenvalues(&m, &pc.s00).unwrap();
        let sum: f64 = phis.iter().sum();
        assert_abs_diff_eq!(psi0, sum, epsilon = 1e-9);
    }

    #[test]
    fn noiseless_low_rank_coupling_recovers_rank() {
        // z_t = B x_{t-1} exactly (C = 0, V = 0): the number of eigenvalues
        // above 1e-6 equals rank(B) even though S00 is rank deficient
        let mut rng = rng_from_seed(67);
        let t_len = 400usize;
        let a = crate::simulate::generate_sparse_transition(4, 0.4, 0.5, &mut rng).unwrap();
        let b = crate::simulate::generate_lowrank(3, 4, 2, &mut rng).unwrap();
        let params = ModelParams {
            a: a.clone(),
            b: Mat::zeros((3, 4)),
            c: Mat::zeros((3, 3)),
            omega_u: Mat::eye(4),
            omega_v: Mat::eye(3),
            b_structure: BStructure::Zero,
        };
        let (x, _) = simulate_system(&params, t_len, &NoiseSpec::Gaussian, 100, &mut rng).unwrap();
        let xv = x.values();
        let mut zv = Mat::zeros((t_len, 3));
        for t in 1..t_len {
            let next = b.dot(&xv.row(t - 1));
            zv.row_mut(t).assign(&next);
        }
        let z = TimeSeriesPanel::new(zv, "z");
        let pc = partial_covariances(&x, &z).unwrap();
        let phis = rank_test_eigenvalues(&pc).unwrap();
        let above = phis.iter().filter(|v| **v > 1e-6).count();
        assert_eq!(above, 2, "eigenvalues {phis:?}");
    }

    #[test]
    fn tests_are_invariant_to_column_rescaling() {
        let (x, z) = random_panels(68, 4, 3, 150);
        let scale_x = [3.0, 0.2, 11.0, 0.5];
        let scale_z = [0.01, 40.0, 2.5];
        let mut xs = x.values().clone();
        for (j, s) in scale_x.iter().enumerate() {
            xs.column_mut(j).mapv_inplace(|v| v * s);
        }
        let mut zs = z.values().clone();
        for (j, s) in scale_z.iter().enumerate() {
            zs.column_mut(j).mapv_inplace(|v| v * s);
        }
        let xr = TimeSeriesPanel::new(xs, "x");
        let zr = TimeSeriesPanel::new(zs, "z");

        let psi_base = granger_test(&x, &z, 0.05).unwrap().statistic;
        let psi_scaled = granger_test(&xr, &zr, 0.05).unwrap().statistic;
        assert!((psi_base - psi_scaled).abs() <= 1e-8 * psi_base.abs().max(1.0));

        let hc_base = higher_criticism_test(&x, &z, None).unwrap().statistic;
        let hc_scaled = higher_criticism_test(&xr, &zr, None).unwrap().statistic;
        assert!((hc_base - hc_scaled).abs() <= 1e-8 * hc_base.abs().max(1.0));
    }

    #[test]
    fn hc_threshold_and_grid() {
        let (x, z) = random_panels(69, 5, 4, 200);
        let report = higher_criticism_test(&x, &z, None).unwrap();
        let expected = 2.0 * ((5.0f64 * 4.0).ln().ln()).sqrt();
        assert_abs_diff_eq!(report.threshold, expected, epsilon = 1e-12);
        let grid = hc_default_grid(5, 4);
        assert_eq!(grid.len(), (5.0 * 20.0f64.ln()).sqrt().floor() as usize);
        assert!(higher_criticism_test(&x, &z, Some(&[])).is_err());
        assert!(higher_criticism_test(&x, &z, Some(&[-1.0])).is_err());
    }

    #[test]
    fn subsampling_is_reproducible_and_bounded() {
        let (x, z) = random_panels(70, 3, 2, 300);
        let method = TestMethod::Granger { alpha: 0.05 };
        let mut rng = rng_from_seed(7);
        let rate1 = subsample_calibration(&x, &z, &method, 25, 100, &mut rng).unwrap();
        let mut rng = rng_from_seed(7);
        let rate2 = subsample_calibration(&x, &z, &method, 25, 100, &mut rng).unwrap();
        assert_eq!(rate1, rate2);
        assert!((0.0..=1.0).contains(&rate1));
        // single full-length block equals a single test decision
        let mut rng = rng_from_seed(8);
        let single = subsample_calibration(&x, &z, &method, 1, 299, &mut rng).unwrap();
        assert!(single == 0.0 || single == 1.0);
        // block too long
        let mut rng = rng_from_seed(9);
        assert!(subsample_calibration(&x, &z, &method, 5, 300, &mut rng).is_err());
    }
}
