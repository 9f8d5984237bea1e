//! Metrics, tuning and study orchestration.
//!
//! Support metrics (sensitivity, specificity, relative Frobenius error),
//! BIC selection over a penalty lattice, rolling-window fits, stability
//! selection, the global clustering coefficient, and the replicated
//! experiment harness that drives generate/simulate/estimate pipelines and
//! aggregates per-replication metrics.

use ndarray::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    estimate_block1, estimate_block2, forecast_one_step, rank_of, BKind, Block1Fit, Block2Fit,
    EstimationConfig, DEFAULT_RANK_TOL,
};
use crate::linalg::fro_norm;
use crate::panel::TimeSeriesPanel;
use crate::rng::{derive_seed, rng_from_seed};
use crate::simulate::{simulate_system, ExperimentSpec, ModelParams};
use crate::Mat;

/// Default magnitude below which an entry counts as zero in support
/// metrics. The Lasso produces exact zeros; this only guards round-off.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

/// Support-recovery and error metrics of one estimated matrix.
///
/// Sensitivity/specificity are `None` (undefined) when their denominators
/// are empty: a zero truth has no positives, a full truth has no negatives.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricReport {
    pub sen: Option<f64>,
    pub spc: Option<f64>,
    pub rel_error: f64,
    pub rank: Option<usize>,
}

/// Compare the supports and magnitudes of an estimate against the truth.
pub fn support_metrics(est: &Mat, truth: &Mat, zero_tol: f64) -> Result<MetricReport> {
    if est.dim() != truth.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: estimate {}x{}, truth {}x{}",
            est.nrows(),
            est.ncols(),
            truth.nrows(),
            truth.ncols()
        )));
    }
    if !(zero_tol > 0.0) {
        return Err(Error::invalid("zero tolerance must be positive"));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for (e, t) in est.iter().zip(truth.iter()) {
        let e_on = e.abs() > zero_tol;
        let t_on = t.abs() > zero_tol;
        match (e_on, t_on) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let sen = if tp + fn_ > 0 {
        Some(tp as f64 / (tp + fn_) as f64)
    } else {
        None
    };
    let spc = if fp + tn > 0 {
        Some(tn as f64 / (fp + tn) as f64)
    } else {
        None
    };
    let denom = fro_norm(truth);
    let rel_error = if denom > 0.0 {
        fro_norm(&(est - truth)) / denom
    } else {
        fro_norm(est)
    };
    Ok(MetricReport {
        sen,
        spc,
        rel_error,
        rank: None,
    })
}

/// One linearly spaced penalty axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi >= lo) {
            return Err(Error::invalid("axis range must be positive and ordered"));
        }
        if points == 0 {
            return Err(Error::invalid("axis needs at least one point"));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + step * i as f64).collect()
    }
}

/// Penalty lattice for BIC selection. Block-1 selection scans `lambda_a`;
/// block-2 selection scans `lambda_b x lambda_c`.
///
/// `ebic_gamma` adds the extended-BIC term `2 gamma log(P) df` (with `P`
/// the number of candidate transition entries) to the score; `0` is the
/// plain BIC. At desk scale (`p^2` candidates comparable to `T`) the plain
/// BIC over-selects, so the experiment suites run with `gamma = 0.5`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TuningGrid {
    pub lambda_a: Option<GridAxis>,
    pub lambda_b: Option<GridAxis>,
    pub lambda_c: Option<GridAxis>,
    #[serde(default)]
    pub ebic_gamma: f64,
}

/// Which estimator a BIC search tunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Block1,
    Block2,
}

/// One evaluated lattice point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BicPoint {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub lambda_c: f64,
    pub bic: f64,
    pub df: f64,
    pub fit_error: Option<String>,
}

/// Result of a lattice search: the winning configuration and the surface.
#[derive(Debug, Clone)]
pub struct BicSelection {
    pub config: EstimationConfig,
    pub block1: Option<Block1Fit>,
    pub block2: Option<Block2Fit>,
    pub surface: Vec<BicPoint>,
}

fn nnz(m: &Mat, tol: f64) -> usize {
    m.iter().filter(|v| v.abs() > tol).count()
}

fn nnz_offdiag(m: &Mat, tol: f64) -> usize {
    let mut count = 0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[[i, j]].abs() > tol {
                count += 1;
            }
        }
    }
    count
}

/// `-2 log L + [log(T) + 2 gamma log(P)] df` with the Gaussian likelihood
/// `-2 log L = T (tr(Omega S) - log det Omega)` up to constants.
fn bic_score(goodness: f64, t_eff: f64, df: f64, gamma: f64, ambient: usize) -> f64 {
    t_eff * goodness + (t_eff.ln() + 2.0 * gamma * (ambient as f64).ln()) * df
}

/// Effective dimension of a rank-`r` `m x n` matrix.
fn lowrank_df(rank: usize, rows: usize, cols: usize) -> f64 {
    (rank * (rows + cols - rank)) as f64
}

/// BIC search over the penalty lattice. Ties prefer larger penalties (the
/// lattice is scanned in ascending order and equal scores keep the later
/// point). Lattice points whose fit fails are recorded and skipped; the
/// search errors only when every point fails.
pub fn bic_select(
    x: &TimeSeriesPanel,
    z: Option<&TimeSeriesPanel>,
    grid: &TuningGrid,
    estimator: EstimatorKind,
    base: &EstimationConfig,
) -> Result<BicSelection> {
    base.validate()?;
    if !(grid.ebic_gamma >= 0.0) {
        return Err(Error::invalid("ebic_gamma must be nonnegative"));
    }
    let t_eff = (x.len().saturating_sub(1)) as f64;
    if t_eff < 1.0 {
        return Err(Error::invalid("panel too short"));
    }
    let ambient = match estimator {
        EstimatorKind::Block1 => x.ncols() * x.ncols(),
        EstimatorKind::Block2 => {
            let p2 = z.map(|z| z.ncols()).unwrap_or(0);
            p2 * (x.ncols() + p2)
        }
    };
    let candidates: Vec<EstimationConfig> = match estimator {
        EstimatorKind::Block1 => {
            let axis = grid
                .lambda_a
                .ok_or_else(|| Error::invalid("block-1 tuning needs a lambda_a axis"))?;
            axis.values()
                .into_iter()
                .map(|la| EstimationConfig {
                    lambda_a: la,
                    ..base.clone()
                })
                .collect()
        }
        EstimatorKind::Block2 => {
            let axis_b = grid
                .lambda_b
                .ok_or_else(|| Error::invalid("block-2 tuning needs a lambda_b axis"))?;
            let axis_c = grid
                .lambda_c
                .ok_or_else(|| Error::invalid("block-2 tuning needs a lambda_c axis"))?;
            let mut out = Vec::new();
            for lb in axis_b.values() {
                for lc in axis_c.values() {
                    out.push(EstimationConfig {
                        lambda_b: lb,
                        lambda_c: lc,
                        ..base.clone()
                    });
                }
            }
            out
        }
    };

    enum FitOutcome {
        B1(Block1Fit, f64),
        B2(Block2Fit, f64),
        Failed(String),
    }

    let outcomes: Vec<(EstimationConfig, FitOutcome)> = candidates
        .into_par_iter()
        .map(|cfg| {
            let outcome = match estimator {
                EstimatorKind::Block1 => match estimate_block1(x, &cfg) {
                    Ok(fit) => {
                        let penalties =
                            cfg.lambda_a * fit.a.iter().map(|v| v.abs()).sum::<f64>()
                                + cfg.rho_u
                                    * fit
                                        .omega_u
                                        .indexed_iter()
                                        .filter(|((i, j), _)| i != j)
                                        .map(|(_, v)| v.abs())
                                        .sum::<f64>();
                        let goodness = fit.objective_trace.last().unwrap() - penalties;
                        FitOutcome::B1(fit, goodness)
                    }
                    Err(e) => FitOutcome::Failed(e.to_string()),
                },
                EstimatorKind::Block2 => {
                    let z = match z {
                        Some(z) => z,
                        None => {
                            return (
                                cfg,
                                FitOutcome::Failed("block-2 tuning needs a Z panel".into()),
                            )
                        }
                    };
                    match estimate_block2(x, z, &cfg) {
                        Ok(fit) => {
                            // strip the penalty terms off the tracked objective
                            let omega_half = crate::linalg::spd_sqrt(&fit.omega_v);
                            let b_pen = match (cfg.b_structure, omega_half) {
                                (BKind::Sparse, _) => {
                                    cfg.lambda_b * fit.b.iter().map(|v| v.abs()).sum::<f64>()
                                }
                                (BKind::LowRank, Ok(half)) => {
                                    use ndarray_linalg::SVD;
                                    let tb = half.dot(&fit.b);
                                    let (_, s, _) = tb.svd(false, false).expect("svd");
                                    cfg.lambda_b * s.sum()
                                }
                                (BKind::LowRank, Err(_)) => f64::NAN,
                            };
                            let penalties = b_pen
                                + cfg.lambda_c * fit.c.iter().map(|v| v.abs()).sum::<f64>()
                                + cfg.rho_v
                                    * fit
                                        .omega_v
                                        .indexed_iter()
                                        .filter(|((i, j), _)| i != j)
                                        .map(|(_, v)| v.abs())
                                        .sum::<f64>();
                            let goodness = fit.objective_trace.last().unwrap() - penalties;
                            FitOutcome::B2(fit, goodness)
                        }
                        Err(e) => FitOutcome::Failed(e.to_string()),
                    }
                }
            };
            (cfg, outcome)
        })
        .collect();

    let mut surface = Vec::with_capacity(outcomes.len());
    let mut best: Option<(f64, usize)> = None;
    let mut kept: Vec<Option<(Option<Block1Fit>, Option<Block2Fit>)>> = Vec::new();
    for (idx, (cfg, outcome)) in outcomes.iter().enumerate() {
        let (bic, df, err, fits) = match outcome {
            FitOutcome::B1(fit, goodness) => {
                let df = nnz(&fit.a, DEFAULT_ZERO_TOL) as f64
                    + nnz_offdiag(&fit.omega_u, DEFAULT_ZERO_TOL) as f64 / 2.0;
                (
                    bic_score(*goodness, t_eff, df, grid.ebic_gamma, ambient),
                    df,
                    None,
                    Some((Some(fit.clone()), None)),
                )
            }
            FitOutcome::B2(fit, goodness) => {
                let df_b = match cfg.b_structure {
                    BKind::Sparse => nnz(&fit.b, DEFAULT_ZERO_TOL) as f64,
                    BKind::LowRank => {
                        let r = rank_of(&fit.b, DEFAULT_RANK_TOL).unwrap_or(0);
                        lowrank_df(r, fit.b.nrows(), fit.b.ncols())
                    }
                };
                let df = df_b
                    + nnz(&fit.c, DEFAULT_ZERO_TOL) as f64
                    + nnz_offdiag(&fit.omega_v, DEFAULT_ZERO_TOL) as f64 / 2.0;
                (
                    bic_score(*goodness, t_eff, df, grid.ebic_gamma, ambient),
                    df,
                    None,
                    Some((None, Some(fit.clone()))),
                )
            }
            FitOutcome::Failed(msg) => (f64::INFINITY, f64::NAN, Some(msg.clone()), None),
        };
        surface.push(BicPoint {
            lambda_a: cfg.lambda_a,
            lambda_b: cfg.lambda_b,
            lambda_c: cfg.lambda_c,
            bic,
            df,
            fit_error: err,
        });
        kept.push(fits);
        if bic.is_finite() {
            let better = match best {
                None => true,
                Some((score, _)) => bic <= score,
            };
            if better {
                best = Some((bic, idx));
            }
        }
    }
    let (_, best_idx) = best.ok_or_else(|| {
        Error::breakdown(format!(
            "every lattice point failed: {}",
            surface
                .iter()
                .filter_map(|p| p.fit_error.as_deref())
                .collect::<Vec<_>>()
                .join("; ")
        ))
    })?;
    let (block1, block2) = kept[best_idx].clone().expect("winning point has a fit");
    let mut config = base.clone();
    config.lambda_a = surface[best_idx].lambda_a;
    config.lambda_b = surface[best_idx].lambda_b;
    config.lambda_c = surface[best_idx].lambda_c;
    Ok(BicSelection {
        config,
        block1,
        block2,
        surface,
    })
}

/// Independent fits over contiguous windows: window `k` covers rows
/// `k*step .. k*step + window_length`.
pub fn rolling_windows(
    x: &TimeSeriesPanel,
    z: Option<&TimeSeriesPanel>,
    window_length: usize,
    step: usize,
    cfg: &EstimationConfig,
) -> Result<Vec<crate::estimate::FitResult>> {
    let t = x.len();
    if window_length > t {
        return Err(Error::invalid(format!(
            "window length {window_length} exceeds the series length {t}"
        )));
    }
    if window_length < 2 {
        return Err(Error::invalid("window length must be at least 2"));
    }
    if step == 0 {
        return Err(Error::invalid("step must be at least 1"));
    }
    let count = (t - window_length) / step + 1;
    (0..count)
        .into_par_iter()
        .map(|k| {
            let start = k * step;
            let xw = x.window(start, window_length)?;
            let block1 = Some(estimate_block1(&xw, cfg)?);
            let block2 = match z {
                Some(z) => {
                    let zw = z.window(start, window_length)?;
                    Some(estimate_block2(&xw, &zw, cfg)?)
                }
                None => None,
            };
            Ok(crate::estimate::FitResult { block1, block2 })
        })
        .collect()
}

/// Entry `(i, j)` is selected when the fraction of matrices with
/// `|entry| > zero_tol` reaches `threshold`.
pub fn stability_selection(mats: &[&Mat], threshold: f64, zero_tol: f64) -> Result<Mat> {
    if mats.is_empty() {
        return Err(Error::invalid("stability selection needs at least one fit"));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid("threshold must lie in (0, 1]"));
    }
    let dim = mats[0].dim();
    if mats.iter().any(|m| m.dim() != dim) {
        return Err(Error::invalid("matrices must share dimensions"));
    }
    let mut freq = Mat::zeros(dim);
    for m in mats {
        for (f, v) in freq.iter_mut().zip(m.iter()) {
            if v.abs() > zero_tol {
                *f += 1.0;
            }
        }
    }
    freq /= mats.len() as f64;
    Ok(freq.mapv(|f| if f >= threshold { 1.0 } else { 0.0 }))
}

/// Global clustering coefficient: `3 * triangles / connected triples` of
/// the symmetrized skeleton (self-loops ignored), `0` when no triples.
pub fn global_clustering_coefficient(adjacency: &Mat) -> Result<f64> {
    let p = adjacency.nrows();
    if adjacency.ncols() != p {
        return Err(Error::invalid("adjacency matrix must be square"));
    }
    // symmetrize by OR, drop self-loops
    let mut adj = vec![vec![false; p]; p];
    for i in 0..p {
        for j in 0..p {
            if i != j && (adjacency[[i, j]] != 0.0 || adjacency[[j, i]] != 0.0) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    let mut triangles = 0usize;
    let mut triples = 0usize;
    for i in 0..p {
        let deg = adj[i].iter().filter(|v| **v).count();
        triples += deg * deg.saturating_sub(1) / 2;
        for j in (i + 1)..p {
            if !adj[i][j] {
                continue;
            }
            for k in (j + 1)..p {
                if adj[i][k] && adj[j][k] {
                    triangles += 1;
                }
            }
        }
    }
    if triples == 0 {
        return Ok(0.0);
    }
    Ok(3.0 * triangles as f64 / triples as f64)
}

/// How the harness picks penalties for each replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Tuning {
    Fixed,
    Bic { grid: TuningGrid },
}

/// Options of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub base: EstimationConfig,
    pub tuning: Tuning,
    /// Simulate one extra point and record one-step forecast errors.
    pub forecast: bool,
    pub zero_tol: f64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            base: EstimationConfig::default(),
            tuning: Tuning::Fixed,
            forecast: false,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

/// Per-replication metrics of a full generate/simulate/estimate cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub replication: usize,
    pub a: MetricReport,
    pub b: MetricReport,
    pub c: MetricReport,
    /// Metrics of the iteration-0 (penalized least squares) estimates.
    pub a_initial: MetricReport,
    pub b_initial: MetricReport,
    pub c_initial: MetricReport,
    pub forecast_x: Option<f64>,
    pub forecast_z: Option<f64>,
    /// Largest increase observed across both objective traces (descent
    /// violation; should not exceed ~1e-9).
    pub max_trace_violation: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub lambda_c: f64,
}

/// Mean and (for more than one replication) sample standard deviation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: Option<f64>,
    pub count: usize,
}

/// Two-pass mean/sd over the values of one metric.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(var.sqrt())
    } else {
        None
    };
    Some(Summary {
        mean,
        sd,
        count: values.len(),
    })
}

/// Aggregated outcome of `run_experiment`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub label: String,
    pub replications: Vec<ReplicationMetrics>,
    /// `(replication index, error)` of failed replications; not fatal.
    pub failures: Vec<(usize, String)>,
    pub aggregate: Vec<(String, Summary)>,
}

impl ExperimentReport {
    pub fn summary(&self, metric: &str) -> Option<Summary> {
        self.aggregate
            .iter()
            .find(|(name, _)| name == metric)
            .map(|(_, s)| *s)
    }

    /// Flat CSV: one row per replication per metric.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["label", "replication", "metric", "value"])?;
        for rep in &self.replications {
            for (name, value) in metric_rows(rep) {
                w.write_record([
                    self.label.as_str(),
                    &rep.replication.to_string(),
                    &name,
                    &format!("{value:.12e}"),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn metric_rows(rep: &ReplicationMetrics) -> Vec<(String, f64)> {
    let mut rows = Vec::new();
    let mut push = |name: &str, v: Option<f64>| {
        if let Some(v) = v {
            rows.push((name.to_string(), v));
        }
    };
    push("sen_a", rep.a.sen);
    push("spc_a", rep.a.spc);
    push("err_a", Some(rep.a.rel_error));
    push("rank_b", rep.b.rank.map(|r| r as f64));
    push("err_b", Some(rep.b.rel_error));
    push("sen_b", rep.b.sen);
    push("spc_b", rep.b.spc);
    push("sen_c", rep.c.sen);
    push("spc_c", rep.c.spc);
    push("err_c", Some(rep.c.rel_error));
    push("err_a_two_step", Some(rep.a_initial.rel_error));
    push("err_b_two_step", Some(rep.b_initial.rel_error));
    push("err_c_two_step", Some(rep.c_initial.rel_error));
    push("forecast_x", rep.forecast_x);
    push("forecast_z", rep.forecast_z);
    push("lambda_a", Some(rep.lambda_a));
    push("lambda_b", Some(rep.lambda_b));
    push("lambda_c", Some(rep.lambda_c));
    rows
}

fn trace_violation(trace: &[f64]) -> f64 {
    trace
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .fold(0.0, f64::max)
}

/// Run one replication: generate parameters, simulate, fit both blocks
/// (tuning per options), compute metrics against the truth.
fn run_replication(
    spec: &ExperimentSpec,
    options: &HarnessOptions,
    rep: usize,
) -> Result<ReplicationMetrics> {
    let mut rng = rng_from_seed(derive_seed(spec.seed, 1, rep as u64));
    let params: ModelParams = spec.generate_params(&mut rng)?;
    let sim_len = spec.t_len + usize::from(options.forecast);
    let (x_full, z_full) = simulate_system(&params, sim_len, &spec.noise, spec.burn_in, &mut rng)?;
    let (x, z) = if options.forecast {
        (
            x_full.window(0, spec.t_len)?,
            z_full.window(0, spec.t_len)?,
        )
    } else {
        (x_full.clone(), z_full.clone())
    };

    let (fit1, fit2, cfg_used) = match &options.tuning {
        Tuning::Fixed => {
            let fit1 = estimate_block1(&x, &options.base)?;
            let fit2 = estimate_block2(&x, &z, &options.base)?;
            (fit1, fit2, options.base.clone())
        }
        Tuning::Bic { grid } => {
            let sel1 = bic_select(&x, None, grid, EstimatorKind::Block1, &options.base)?;
            let fit1 = sel1.block1.expect("block-1 selection");
            let sel2 = bic_select(&x, Some(&z), grid, EstimatorKind::Block2, &options.base)?;
            let fit2 = sel2.block2.expect("block-2 selection");
            let mut cfg = sel2.config;
            cfg.lambda_a = sel1.config.lambda_a;
            (fit1, fit2, cfg)
        }
    };

    let mut a = support_metrics(&fit1.a, &params.a, options.zero_tol)?;
    a.rank = None;
    let mut b = support_metrics(&fit2.b, &params.b, options.zero_tol)?;
    b.rank = Some(rank_of(&fit2.b, DEFAULT_RANK_TOL)?);
    let c = support_metrics(&fit2.c, &params.c, options.zero_tol)?;
    let a_initial = support_metrics(&fit1.initial_a, &params.a, options.zero_tol)?;
    let mut b_initial = support_metrics(&fit2.initial_b, &params.b, options.zero_tol)?;
    b_initial.rank = Some(rank_of(&fit2.initial_b, DEFAULT_RANK_TOL)?);
    let c_initial = support_metrics(&fit2.initial_c, &params.c, options.zero_tol)?;

    let (forecast_x, forecast_z) = if options.forecast {
        let last = spec.t_len - 1;
        let x_t = x.values().row(last).to_owned();
        let z_t = z.values().row(last).to_owned();
        let (xh, zh) = forecast_one_step(&fit1.a, &fit2.b, &fit2.c, &x_t, &z_t)?;
        let x_true = x_full.values().row(spec.t_len).to_owned();
        let z_true = z_full.values().row(spec.t_len).to_owned();
        let rel = |pred: &crate::Vec1, truth: &crate::Vec1| {
            let denom = truth.dot(truth).sqrt();
            let diff = pred - truth;
            diff.dot(&diff).sqrt() / denom
        };
        (Some(rel(&xh, &x_true)), Some(rel(&zh, &z_true)))
    } else {
        (None, None)
    };

    let max_trace_violation = trace_violation(&fit1.objective_trace)
        .max(trace_violation(&fit2.objective_trace));

    Ok(ReplicationMetrics {
        replication: rep,
        a,
        b,
        c,
        a_initial,
        b_initial,
        c_initial,
        forecast_x,
        forecast_z,
        max_trace_violation,
        lambda_a: cfg_used.lambda_a,
        lambda_b: cfg_used.lambda_b,
        lambda_c: cfg_used.lambda_c,
    })
}

/// Run the replicated experiment described by `spec`: per replication,
/// generate parameters, simulate, estimate and score. Replication `r`
/// derives its own seed from `(spec.seed, r)`, so results are independent
/// of execution order. Failed replications are recorded, not fatal.
pub fn run_experiment(spec: &ExperimentSpec, options: &HarnessOptions) -> Result<ExperimentReport> {
    spec.validate()?;
    options.base.validate()?;
    let results: Vec<(usize, Result<ReplicationMetrics>)> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| (rep, run_replication(spec, options, rep)))
        .collect();

    let mut replications = Vec::new();
    let mut failures = Vec::new();
    for (rep, res) in results {
        match res {
            Ok(m) => replications.push(m),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    if replications.is_empty() {
        return Err(Error::breakdown(format!(
            "every replication failed: {}",
            failures
                .iter()
                .map(|(r, e)| format!("#{r}: {e}"))
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }

    let metric_names: Vec<String> = {
        let mut names: Vec<String> = Vec::new();
        for rep in &replications {
            for (name, _) in metric_rows(rep) {
                if !names.contains(&name) {
                    names.push(name);
                }
            }
        }
        names
    };
    let mut aggregate = Vec::new();
    for name in metric_names {
        let values: Vec<f64> = replications
            .iter()
            .flat_map(|rep| {
                metric_rows(rep)
                    .into_iter()
                    .filter(|(n, _)| *n == name)
                    .map(|(_, v)| v)
            })
            .collect();
        if let Some(summary) = summarize(&values) {
            aggregate.push((name, summary));
        }
    }
    Ok(ExperimentReport {
        label: spec.preset.label().to_string(),
        replications,
        failures,
        aggregate,
    })
}
