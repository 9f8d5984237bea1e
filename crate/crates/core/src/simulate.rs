//! Model-parameter generation and trajectory simulation.
//!
//! Transition matrices are drawn sparse (entry-wise Bernoulli support with
//! Uniform([-2.5,-1.5] U [1.5,2.5]) magnitudes, rescaled to a target spectral
//! radius) or low rank (dense Uniform(-10,10) draw truncated by SVD); noise
//! precisions come from an Erdos-Renyi support with the spectrum affinely
//! mapped to a target condition number. Trajectories start from zero,
//! discard a burn-in prefix and support Gaussian, multivariate-t and
//! elliptical (log-normal generating variate) noise.

use ndarray::prelude::*;
use ndarray_linalg::Cholesky;
use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, stationary_covariance, sym_eig};
use crate::panel::TimeSeriesPanel;
use crate::rng::Rng;
use crate::{Mat, Vec1};

pub use crate::linalg::{assemble_g, spectral_radius};

/// Default number of discarded start-up steps.
pub const DEFAULT_BURN_IN: usize = 500;

/// Structure tag for the inter-block matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BStructure {
    LowRank(usize),
    Sparse,
    Zero,
}

/// Full parameter set of the two-block system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub omega_u: Mat,
    pub omega_v: Mat,
    pub b_structure: BStructure,
}

impl ModelParams {
    pub fn p1(&self) -> usize {
        self.a.nrows()
    }

    pub fn p2(&self) -> usize {
        self.c.nrows()
    }

    /// Joint transition matrix `[[A, 0], [B, C]]`.
    pub fn joint_transition(&self) -> Mat {
        assemble_g(&self.a, &self.b, &self.c)
    }

    /// Noise covariance of the first block, `Omega_u^{-1}`.
    pub fn sigma_u(&self) -> Result<Mat> {
        spd_inverse(&self.omega_u)
    }

    /// Noise covariance of the second block, `Omega_v^{-1}`.
    pub fn sigma_v(&self) -> Result<Mat> {
        spd_inverse(&self.omega_v)
    }

    /// Check stability (`rho(A) < 1`, `rho(C) < 1`), conformable shapes and
    /// symmetric positive-definite precisions.
    pub fn validate(&self) -> Result<()> {
        let p1 = self.p1();
        let p2 = self.p2();
        if self.a.ncols() != p1 || self.c.ncols() != p2 {
            return Err(Error::invalid("A and C must be square"));
        }
        if self.b.dim() != (p2, p1) {
            return Err(Error::invalid(format!(
                "B must be {p2}x{p1}, got {}x{}",
                self.b.nrows(),
                self.b.ncols()
            )));
        }
        let rho_a = spectral_radius(&self.a)?;
        let rho_c = spectral_radius(&self.c)?;
        if rho_a >= 1.0 || rho_c >= 1.0 {
            return Err(Error::invalid(format!(
                "unstable system: rho(A) = {rho_a:.6}, rho(C) = {rho_c:.6}"
            )));
        }
        for (name, m, p) in [("Omega_u", &self.omega_u, p1), ("Omega_v", &self.omega_v, p2)] {
            if m.dim() != (p, p) {
                return Err(Error::invalid(format!("{name} must be {p}x{p}")));
            }
            let scale = m.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
            for i in 0..p {
                for j in (i + 1)..p {
                    if (m[[i, j]] - m[[j, i]]).abs() > 1e-8 * scale {
                        return Err(Error::invalid(format!("{name} is not symmetric")));
                    }
                }
            }
            let (vals, _) = sym_eig(m)?;
            if vals[0] <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} is not positive definite (min eigenvalue {:.3e})",
                    vals[0]
                )));
            }
        }
        Ok(())
    }
}

/// Noise family for the innovation processes. Covariances always come from
/// the model's precision matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseSpec {
    Gaussian,
    /// Multivariate t with the stated degrees of freedom (`df > 2` so the
    /// covariance exists) and covariance equal to the model covariance.
    StudentT { df: f64 },
    /// Elliptical draw `R * Sigma^{1/2} * S` with `S` uniform on the sphere
    /// over the whole path (block-diagonal covariance, one block per time
    /// point) and `log R ~ N(mu, sigma^2)`, normalized so each time point
    /// has covariance `Sigma`.
    EllipticalLogNormal { mu: f64, sigma: f64 },
}

impl NoiseSpec {
    /// The log-normal elliptical family used in the experiment presets
    /// (`log R ~ N(0, 2)`).
    pub fn elliptical_preset() -> Self {
        NoiseSpec::EllipticalLogNormal {
            mu: 0.0,
            sigma: std::f64::consts::SQRT_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Gaussian => Ok(()),
            NoiseSpec::StudentT { df } => {
                if df > 2.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "student-t noise needs df > 2 for a finite covariance, got {df}"
                    )))
                }
            }
            NoiseSpec::EllipticalLogNormal { sigma, .. } => {
                if sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("elliptical noise needs sigma > 0"))
                }
            }
        }
    }
}

/// How the inter-block matrix of a scenario is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BGen {
    /// Dense Uniform(-10,10) draw truncated to the given rank.
    LowRank { rank: usize },
    /// Entry-wise Bernoulli support with Uniform(+-[1.5,2.5]) values,
    /// no rescaling.
    Sparse { nonzero_prob: f64 },
    /// Fixed number of active +-1 entries, scaled so that
    /// `sqrt(tr(B Gamma_X B') / tr(Sigma_v)) = snr` (stationary signal-to-
    /// noise ratio of the `z` equation).
    SparseSignal { active: usize, snr: f64 },
    Zero,
}

/// How precision matrices of a scenario are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PrecisionKind {
    ErdosRenyi {
        edge_density: f64,
        condition_number: f64,
    },
    Identity,
}

/// Named scenario presets (dimensions, rank, spectral radii, sample size).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "A.1")]
    A1,
    #[serde(rename = "A.2")]
    A2,
    #[serde(rename = "A.3")]
    A3,
    #[serde(rename = "A.4")]
    A4,
    #[serde(rename = "B.1")]
    B1,
    #[serde(rename = "B.2")]
    B2,
    #[serde(rename = "C.1")]
    C1,
    #[serde(rename = "C.2")]
    C2,
    #[serde(rename = "C.3")]
    C3,
    #[serde(rename = "C.3'")]
    C3Prime,
    #[serde(rename = "custom")]
    Custom,
}

impl Preset {
    /// `(p1, p2, rank_B, rho_A, rho_C, T)` for the named presets.
    pub fn settings(self) -> Option<(usize, usize, usize, f64, f64, usize)> {
        match self {
            Preset::A1 => Some((50, 20, 5, 0.5, 0.5, 200)),
            Preset::A2 => Some((100, 50, 5, 0.5, 0.5, 200)),
            Preset::A3 => Some((200, 50, 5, 0.5, 0.5, 200)),
            Preset::A4 => Some((50, 100, 5, 0.5, 0.5, 200)),
            Preset::B1 => Some((100, 50, 10, 0.5, 0.5, 200)),
            Preset::B2 => Some((100, 50, 20, 0.5, 0.5, 200)),
            Preset::C1 => Some((50, 20, 5, 0.8, 0.5, 200)),
            Preset::C2 => Some((50, 20, 5, 0.5, 0.8, 200)),
            Preset::C3 => Some((50, 20, 5, 0.8, 0.8, 200)),
            Preset::C3Prime => Some((50, 20, 5, 0.8, 0.8, 500)),
            Preset::Custom => None,
        }
    }

    pub fn all_named() -> [Preset; 10] {
        [
            Preset::A1,
            Preset::A2,
            Preset::A3,
            Preset::A4,
            Preset::B1,
            Preset::B2,
            Preset::C1,
            Preset::C2,
            Preset::C3,
            Preset::C3Prime,
        ]
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::A1 => "A.1",
            Preset::A2 => "A.2",
            Preset::A3 => "A.3",
            Preset::A4 => "A.4",
            Preset::B1 => "B.1",
            Preset::B2 => "B.2",
            Preset::C1 => "C.1",
            Preset::C2 => "C.2",
            Preset::C3 => "C.3",
            Preset::C3Prime => "C.3'",
            Preset::Custom => "custom",
        }
    }
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_precision() -> PrecisionKind {
    PrecisionKind::ErdosRenyi {
        edge_density: 0.05,
        condition_number: 3.0,
    }
}

/// A full scenario: dimensions, structures, noise, sample size, replication
/// count and master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub p1: usize,
    pub p2: usize,
    pub b_gen: BGen,
    pub rho_a: f64,
    pub rho_c: f64,
    pub t_len: usize,
    pub noise: NoiseSpec,
    #[serde(default = "default_precision")]
    pub precision: PrecisionKind,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub replications: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Scenario for a named preset with the tabled settings.
    pub fn from_preset(preset: Preset, replications: usize, seed: u64) -> Result<Self> {
        let (p1, p2, rank, rho_a, rho_c, t_len) = preset
            .settings()
            .ok_or_else(|| Error::invalid("custom preset needs explicit settings"))?;
        Ok(Self {
            preset,
            p1,
            p2,
            b_gen: BGen::LowRank { rank },
            rho_a,
            rho_c,
            t_len,
            noise: NoiseSpec::Gaussian,
            precision: default_precision(),
            burn_in: DEFAULT_BURN_IN,
            replications,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.p1 == 0 || self.p2 == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        if self.t_len < 2 {
            return Err(Error::invalid("t_len must be at least 2"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if !(self.rho_a > 0.0 && self.rho_a < 1.0 && self.rho_c > 0.0 && self.rho_c < 1.0) {
            return Err(Error::invalid("spectral radii must lie in (0, 1)"));
        }
        self.noise.validate()?;
        if let Some((p1, p2, rank, rho_a, rho_c, t_len)) = self.preset.settings() {
            let rank_matches = matches!(self.b_gen, BGen::LowRank { rank: r } if r == rank);
            if self.p1 != p1
                || self.p2 != p2
                || !rank_matches
                || self.rho_a != rho_a
                || self.rho_c != rho_c
                || self.t_len != t_len
            {
                return Err(Error::invalid(format!(
                    "fields do not match preset {} (expected p1={p1}, p2={p2}, rank={rank}, \
                     rho_a={rho_a}, rho_c={rho_c}, T={t_len})",
                    self.preset.label()
                )));
            }
        }
        Ok(())
    }

    /// Draw one parameter set for this scenario.
    pub fn generate_params(&self, rng: &mut Rng) -> Result<ModelParams> {
        self.validate()?;
        let a = generate_sparse_transition(self.p1, 2.0 / self.p1 as f64, self.rho_a, rng)?;
        let c = generate_sparse_transition(self.p2, 1.0 / self.p2 as f64, self.rho_c, rng)?;
        let (omega_u, omega_v) = match self.precision {
            PrecisionKind::ErdosRenyi {
                edge_density,
                condition_number,
            } => (
                generate_precision_er(self.p1, edge_density, condition_number, rng)?,
                generate_precision_er(self.p2, edge_density, condition_number, rng)?,
            ),
            PrecisionKind::Identity => (Mat::eye(self.p1), Mat::eye(self.p2)),
        };
        let (b, b_structure) = match self.b_gen {
            BGen::LowRank { rank } => (
                generate_lowrank(self.p2, self.p1, rank, rng)?,
                BStructure::LowRank(rank),
            ),
            BGen::Sparse { nonzero_prob } => (
                generate_sparse_unscaled(self.p2, self.p1, nonzero_prob, rng)?,
                BStructure::Sparse,
            ),
            BGen::SparseSignal { active, snr } => {
                let sigma_u = spd_inverse(&omega_u)?;
                let sigma_v = spd_inverse(&omega_v)?;
                let gamma_x = stationary_covariance(&a, &sigma_u)?;
                (
                    generate_sparse_signal(self.p2, self.p1, active, snr, &gamma_x, &sigma_v, rng)?,
                    BStructure::Sparse,
                )
            }
            BGen::Zero => (Mat::zeros((self.p2, self.p1)), BStructure::Zero),
        };
        let params = ModelParams {
            a,
            b,
            c,
            omega_u,
            omega_v,
            b_structure,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Uniform draw from `[-2.5,-1.5] U [1.5,2.5]`.
fn signed_magnitude(rng: &mut Rng) -> f64 {
    let mag = 1.5 + rng.random::<f64>();
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Sparse square transition matrix: entries are independently nonzero with
/// `nonzero_prob`, values from `Uniform([-2.5,-1.5] U [1.5,2.5])`, and the
/// whole matrix is rescaled so its spectral radius equals `target_radius`.
/// Degenerate draws (zero or nilpotent) are redrawn, at most 100 times.
pub fn generate_sparse_transition(
    p: usize,
    nonzero_prob: f64,
    target_radius: f64,
    rng: &mut Rng,
) -> Result<Mat> {
    if p == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(target_radius > 0.0 && target_radius < 1.0) {
        return Err(Error::invalid(format!(
            "target spectral radius must lie in (0, 1), got {target_radius}"
        )));
    }
    if !(0.0..=1.0).contains(&nonzero_prob) {
        return Err(Error::invalid("nonzero probability must lie in [0, 1]"));
    }
    for _attempt in 0..100 {
        let mut m = Mat::zeros((p, p));
        for i in 0..p {
            for j in 0..p {
                if rng.random::<f64>() < nonzero_prob {
                    m[[i, j]] = signed_magnitude(rng);
                }
            }
        }
        let rho = spectral_radius(&m)?;
        if rho <= 1e-12 {
            continue; // zero or nilpotent draw, cannot be rescaled
        }
        m *= target_radius / rho;
        // extra passes absorb eigenvalue round-off
        for _ in 0..4 {
            let rho = spectral_radius(&m)?;
            if (rho - target_radius).abs() <= 1e-12 {
                break;
            }
            m *= target_radius / rho;
        }
        return Ok(m);
    }
    Err(Error::invalid(format!(
        "could not draw a rescalable sparse transition matrix \
         (p = {p}, nonzero_prob = {nonzero_prob}) in 100 attempts"
    )))
}

/// Sparse rectangular matrix with `Uniform(+-[1.5,2.5])` values and no
/// rescaling (the inter-block matrix is unconstrained by stability).
pub fn generate_sparse_unscaled(
    rows: usize,
    cols: usize,
    nonzero_prob: f64,
    rng: &mut Rng,
) -> Result<Mat> {
    if !(0.0..=1.0).contains(&nonzero_prob) {
        return Err(Error::invalid("nonzero probability must lie in [0, 1]"));
    }
    let mut m = Mat::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < nonzero_prob {
                m[[i, j]] = signed_magnitude(rng);
            }
        }
    }
    Ok(m)
}

/// Sparse matrix with exactly `active` entries of equal magnitude and random
/// signs, scaled so `sqrt(tr(B Gamma_X B') / tr(Sigma_v)) = snr`.
pub fn generate_sparse_signal(
    rows: usize,
    cols: usize,
    active: usize,
    snr: f64,
    gamma_x: &Mat,
    sigma_v: &Mat,
    rng: &mut Rng,
) -> Result<Mat> {
    if active == 0 || active > rows * cols {
        return Err(Error::invalid(format!(
            "active entry count {active} out of range for a {rows}x{cols} matrix"
        )));
    }
    if !(snr > 0.0) {
        return Err(Error::invalid("snr must be positive"));
    }
    // sample the support without replacement
    let mut cells: Vec<usize> = (0..rows * cols).collect();
    for i in 0..active {
        let j = i + rng.random_range(0..cells.len() - i);
        cells.swap(i, j);
    }
    let mut b = Mat::zeros((rows, cols));
    for &cell in &cells[..active] {
        b[[cell / cols, cell % cols]] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let signal = (b.dot(gamma_x) * &b).sum();
    if signal <= 0.0 {
        return Err(Error::breakdown("degenerate signal scaling"));
    }
    let noise = sigma_v.diag().sum();
    let scale = snr * (noise / signal).sqrt();
    Ok(b * scale)
}

/// Dense `Uniform(-10, 10)` draw brought to exact rank `rank` by singular
/// value thresholding at the `(rank+1)`-th singular value: every singular
/// value is soft-shrunk by that level, which zeroes the tail and damps the
/// kept directions. A full-rank request returns the raw draw.
pub fn generate_lowrank(p2: usize, p1: usize, rank: usize, rng: &mut Rng) -> Result<Mat> {
    if rank > p1.min(p2) {
        return Err(Error::invalid(format!(
            "rank {rank} exceeds min dimension {}",
            p1.min(p2)
        )));
    }
    let mut raw = Mat::zeros((p2, p1));
    for v in raw.iter_mut() {
        *v = -10.0 + 20.0 * rng.random::<f64>();
    }
    if rank == p1.min(p2) {
        return Ok(raw);
    }
    use ndarray_linalg::SVD;
    let (_, s, _) = raw
        .svd(false, false)
        .map_err(|e| Error::breakdown(format!("SVD failed: {e}")))?;
    crate::solvers::svt(&raw, s[rank])
}

/// Per-coordinate noise variance the precision generator is normalized to:
/// the returned `Omega` is scaled so `Omega^{-1}` has this mean diagonal.
pub const NOISE_VARIANCE_SCALE: f64 = 2.0;

/// Symmetric positive-definite precision matrix whose off-diagonal support
/// is an Erdos-Renyi graph with the given edge density, with the spectrum
/// mapped affinely onto the target condition number and the overall scale
/// normalized so the implied covariance has mean diagonal
/// [`NOISE_VARIANCE_SCALE`].
pub fn generate_precision_er(
    p: usize,
    edge_density: f64,
    condition_number: f64,
    rng: &mut Rng,
) -> Result<Mat> {
    if p == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(edge_density > 0.0 && edge_density < 1.0) {
        return Err(Error::invalid("edge density must lie in (0, 1)"));
    }
    if !(condition_number >= 1.0) {
        return Err(Error::invalid("condition number must be at least 1"));
    }
    if condition_number == 1.0 {
        return Ok(Mat::eye(p) / NOISE_VARIANCE_SCALE);
    }
    if p < 2 {
        return Err(Error::invalid(
            "a 1x1 SPD matrix always has condition number 1; need p >= 2",
        ));
    }
    for _attempt in 0..100 {
        let mut e = Mat::zeros((p, p));
        let mut any = false;
        for i in 0..p {
            for j in (i + 1)..p {
                if rng.random::<f64>() < edge_density {
                    let w = 0.5 + 0.5 * rng.random::<f64>();
                    let w = if rng.random::<bool>() { w } else { -w };
                    e[[i, j]] = w;
                    e[[j, i]] = w;
                    any = true;
                }
            }
        }
        if !any {
            continue;
        }
        let (vals, _) = sym_eig(&e)?;
        let (lmin, lmax) = (vals[0], vals[vals.len() - 1]);
        if lmax - lmin <= 1e-12 {
            continue;
        }
        // shift so (b + lmax) / (b + lmin) = kappa
        let shift = (lmax - condition_number * lmin) / (condition_number - 1.0);
        if shift + lmin <= 0.0 {
            return Err(Error::breakdown("affine spectrum map lost definiteness"));
        }
        let omega = e / shift + Mat::eye(p);
        // normalize so the implied noise variances average NOISE_VARIANCE_SCALE
        let sigma = spd_inverse(&omega)?;
        let mean_var = sigma.diag().sum() / p as f64;
        return Ok(omega * (mean_var / NOISE_VARIANCE_SCALE));
    }
    Err(Error::invalid(format!(
        "could not draw an Erdos-Renyi support with p = {p}, density = {edge_density} \
         in 100 attempts"
    )))
}

/// One noise path of `steps` vectors of dimension `p` with covariance
/// `sigma` per time point.
fn draw_noise_path(
    sigma: &Mat,
    steps: usize,
    noise: &NoiseSpec,
    rng: &mut Rng,
) -> Result<Vec<Vec1>> {
    let p = sigma.nrows();
    let normal = StandardNormal;
    match *noise {
        NoiseSpec::Gaussian => {
            let chol = sigma
                .cholesky(ndarray_linalg::UPLO::Lower)
                .map_err(|e| Error::breakdown(format!("covariance Cholesky failed: {e}")))?;
            Ok((0..steps)
                .map(|_| {
                    let xi = Vec1::from_iter((0..p).map(|_| -> f64 { normal.sample(rng) }));
                    chol.dot(&xi)
                })
                .collect())
        }
        NoiseSpec::StudentT { df } => {
            // scale matrix sigma*(df-2)/df so the covariance equals sigma
            let scale_mat = sigma * ((df - 2.0) / df);
            let chol = scale_mat
                .cholesky(ndarray_linalg::UPLO::Lower)
                .map_err(|e| Error::breakdown(format!("covariance Cholesky failed: {e}")))?;
            let chisq = ChiSquared::new(df)
                .map_err(|e| Error::invalid(format!("bad student-t df: {e}")))?;
            Ok((0..steps)
                .map(|_| {
                    let xi = Vec1::from_iter((0..p).map(|_| -> f64 { normal.sample(rng) }));
                    let g: f64 = chisq.sample(rng);
                    chol.dot(&xi) * (df / g).sqrt()
                })
                .collect())
        }
        NoiseSpec::EllipticalLogNormal { mu, sigma: sd } => {
            let chol = sigma
                .cholesky(ndarray_linalg::UPLO::Lower)
                .map_err(|e| Error::breakdown(format!("covariance Cholesky failed: {e}")))?;
            let lognormal = LogNormal::new(mu, sd)
                .map_err(|e| Error::invalid(format!("bad log-normal parameters: {e}")))?;
            // direction uniform on the sphere of the whole path
            let n = steps * p;
            let mut dir = Vec1::from_iter((0..n).map(|_| -> f64 { normal.sample(rng) }));
            let norm = dir.dot(&dir).sqrt();
            if norm == 0.0 {
                return Err(Error::breakdown("degenerate sphere draw"));
            }
            dir /= norm;
            let r: f64 = lognormal.sample(rng);
            // E[R^2] = exp(2 mu + 2 sigma^2); normalize so Cov(v_t) = sigma
            let second_moment = (2.0 * mu + 2.0 * sd * sd).exp();
            let scale = r * (n as f64 / second_moment).sqrt();
            Ok((0..steps)
                .map(|t| {
                    let xi = dir.slice(s![t * p..(t + 1) * p]).to_owned();
                    chol.dot(&xi) * scale
                })
                .collect())
        }
    }
}

/// Simulate the two-block system from a zero initial state, discarding
/// `burn_in` steps; returns panels `X` (`t_len` x p1) and `Z` (`t_len` x p2).
pub fn simulate_system(
    params: &ModelParams,
    t_len: usize,
    noise: &NoiseSpec,
    burn_in: usize,
    rng: &mut Rng,
) -> Result<(TimeSeriesPanel, TimeSeriesPanel)> {
    params.validate()?;
    noise.validate()?;
    if t_len < 2 {
        return Err(Error::invalid("t_len must be at least 2"));
    }
    let p1 = params.p1();
    let p2 = params.p2();
    let total = burn_in + t_len;
    let sigma_u = params.sigma_u()?;
    let sigma_v = params.sigma_v()?;
    let u_path = draw_noise_path(&sigma_u, total, noise, rng)?;
    let v_path = draw_noise_path(&sigma_v, total, noise, rng)?;

    let mut x = Vec1::zeros(p1);
    let mut z = Vec1::zeros(p2);
    let mut xs = Mat::zeros((t_len, p1));
    let mut zs = Mat::zeros((t_len, p2));
    for t in 0..total {
        let new_z = params.b.dot(&x) + params.c.dot(&z) + &v_path[t];
        let new_x = params.a.dot(&x) + &u_path[t];
        x = new_x;
        z = new_z;
        if t >= burn_in {
            xs.row_mut(t - burn_in).assign(&x);
            zs.row_mut(t - burn_in).assign(&z);
        }
    }
    Ok((
        TimeSeriesPanel::new(xs, "x"),
        TimeSeriesPanel::new(zs, "z"),
    ))
}
