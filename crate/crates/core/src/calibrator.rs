//! Pixel-ratio regression loss, its analytic gradient with respect to the six
//! pose parameters, and the fixed-step gradient-descent trainer.
//!
//! The loss per correspondence is `0.5 ((u - u')^2 + (v - v')^2)` where
//! `(u, v)` comes from the arctangent-branch model and `(u', v')` is the
//! target. Gradients chain through the rigid transform analytically; a
//! central-finite-difference checker is provided as the independent oracle.

use nalgebra::{Matrix3, Vector3, Vector6};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::geometry::{
    self, h_form, reconstruct_uv, rotation_matrix, ExtrinsicPose, GeomError, PanoPixelRatio,
    Point3, Variant,
};

/// One training sample: a LiDAR-frame point and its observed pixel ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub lidar_point: Point3,
    pub target: PanoPixelRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossAggregation {
    /// Average over accepted points; step sizes stay meaningful when the
    /// dataset grows.
    #[default]
    Mean,
    Sum,
}

/// Optimizer settings.
///
/// The step-size defaults are tuned on the standard synthetic scene
/// (targets 6 to 9 m out, mean aggregation): there the loss curvature along
/// translation directions is two orders of magnitude below the rotation
/// directions, so angles take a tenth of the translation step. The largest
/// curvature is about 2.9e-2, putting the stability limit near
/// `learning_rate * rotation_rate_scale = 70`; the defaults sit at 20,
/// a 3.5x margin. A conservative `learning_rate` of 1.0 descends
/// monotonically on that scene, two orders of magnitude inside the limit,
/// at the cost of far more iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub max_iterations: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the three angle gradients on each step.
    pub rotation_rate_scale: f64,
    /// Early stop when the spread of the last 10 losses falls below this.
    /// Zero disables early stopping (the spread is never negative).
    pub convergence_epsilon: f64,
    pub loss_aggregation: LossAggregation,
    pub variant: Variant,
    /// Number of random initializations for [`train_multistart`].
    pub restarts: usize,
    pub rng_seed: u64,
    /// Per-axis bounds for sampled initial translations, meters.
    pub translation_box: (f64, f64),
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            learning_rate: 200.0,
            rotation_rate_scale: 0.1,
            convergence_epsilon: 0.0,
            loss_aggregation: LossAggregation::Mean,
            variant: Variant::Signed,
            restarts: 16,
            rng_seed: 7,
            translation_box: (-5.0, 5.0),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig("learning_rate must be finite and > 0".into()));
        }
        if !(self.rotation_rate_scale.is_finite() && self.rotation_rate_scale > 0.0) {
            return Err(TrainError::InvalidConfig(
                "rotation_rate_scale must be finite and > 0".into(),
            ));
        }
        if !(self.convergence_epsilon.is_finite() && self.convergence_epsilon >= 0.0) {
            return Err(TrainError::InvalidConfig(
                "convergence_epsilon must be finite and >= 0".into(),
            ));
        }
        if self.restarts < 1 {
            return Err(TrainError::InvalidConfig("restarts must be >= 1".into()));
        }
        let (lo, hi) = self.translation_box;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(TrainError::InvalidConfig(
                "translation_box must be finite with min < max".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no correspondences given")]
    EmptyDataset,
    #[error("all {total} correspondences rejected by branch guards")]
    AllPointsRejected { total: usize },
    #[error("all {total} correspondences rejected by branch guards at iteration {iteration}")]
    AllPointsRejectedAt { iteration: usize, total: usize },
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Converged,
    IterationLimit,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub loss: f64,
    /// Parameters at this iterate, ordered (alpha, beta, gamma, b1, b2, b3).
    pub params: [f64; 6],
    pub grad_inf_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
    pub status: TrainStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub pose: ExtrinsicPose,
    /// Loss recomputed at the returned pose over its accepted point set.
    pub final_loss: f64,
    pub trace: TrainingTrace,
    /// Correspondences excluded by branch guards at the returned pose.
    pub skipped_points: usize,
}

/// Loss for a single correspondence at a pose. Branch-guard failures
/// propagate as geometry errors so callers can decide to skip or abort.
pub fn point_loss(
    c: &Correspondence,
    pose: &ExtrinsicPose,
    variant: Variant,
) -> Result<f64, GeomError> {
    let cam = geometry::transform(&c.lidar_point, pose)?;
    let uv = reconstruct_uv(&h_form(&cam, variant)?, variant)?;
    let du = uv.u() - c.target.u();
    let dv = uv.v() - c.target.v();
    Ok(0.5 * (du * du + dv * dv))
}

/// Aggregated loss and the number of accepted correspondences.
///
/// Points failing branch guards are skipped; a point whose transform blows up
/// to non-finite values contributes an infinite loss instead (the trainer
/// treats that as divergence). Accumulation is a fixed-order sequential sum,
/// so results are bit-stable for a given input order.
pub fn batch_loss(
    cs: &[Correspondence],
    pose: &ExtrinsicPose,
    config: &TrainingConfig,
) -> Result<(f64, usize), TrainError> {
    if cs.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut sum = 0.0;
    let mut accepted = 0usize;
    for c in cs {
        match point_loss(c, pose, config.variant) {
            Ok(l) => {
                sum += l;
                accepted += 1;
            }
            Err(GeomError::BranchDomain | GeomError::PoleSingularity) => {}
            Err(_) => {
                sum = f64::INFINITY;
                accepted += 1;
            }
        }
    }
    if accepted == 0 {
        return Err(TrainError::AllPointsRejected { total: cs.len() });
    }
    let loss = match config.loss_aggregation {
        LossAggregation::Mean => sum / accepted as f64,
        LossAggregation::Sum => sum,
    };
    Ok((loss, accepted))
}

struct BatchEval {
    loss: f64,
    grad: Vector6<f64>,
    accepted: usize,
}

/// Angle derivatives of the rotation matrix, same composition order as
/// [`rotation_matrix`].
fn rotation_matrix_derivatives(e: &geometry::EulerZXZ) -> [Matrix3<f64>; 3] {
    let rz_a = geometry::rot_z(e.alpha);
    let rx_b = geometry::rot_x(e.beta);
    let rz_g = geometry::rot_z(e.gamma);
    let (sa, ca) = e.alpha.sin_cos();
    let (sb, cb) = e.beta.sin_cos();
    let (sg, cg) = e.gamma.sin_cos();
    let dz_a = Matrix3::new(-sa, -ca, 0.0, ca, -sa, 0.0, 0.0, 0.0, 0.0);
    let dx_b = Matrix3::new(0.0, 0.0, 0.0, 0.0, -sb, -cb, 0.0, cb, -sb);
    let dz_g = Matrix3::new(-sg, -cg, 0.0, cg, -sg, 0.0, 0.0, 0.0, 0.0);
    [dz_a * rx_b * rz_g, rz_a * dx_b * rz_g, rz_a * rx_b * dz_g]
}

/// Loss and analytic gradient in one pass. Skipped points contribute nothing
/// to either; the accepted count divides both under mean aggregation.
fn evaluate_batch(
    cs: &[Correspondence],
    pose: &ExtrinsicPose,
    config: &TrainingConfig,
) -> Result<BatchEval, TrainError> {
    if cs.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let r = rotation_matrix(&pose.rotation)?;
    let dr = rotation_matrix_derivatives(&pose.rotation);

    let mut sum = 0.0;
    let mut grad = Vector6::zeros();
    let mut accepted = 0usize;
    for c in cs {
        let cam = Point3::from(r * c.lidar_point.coords + pose.translation);
        let (x, y, z) = (cam.x, cam.y, cam.z);
        let rho2 = x * x + y * y;
        if rho2 <= geometry::EPS_POLE || x <= geometry::EPS_BRANCH {
            continue;
        }
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            sum = f64::INFINITY;
            accepted += 1;
            continue;
        }
        let rho = rho2.sqrt();
        let r2 = rho2 + z * z;

        // Residuals through the same reconstruction as point_loss.
        let u_hat = (PI - (y / x).atan()) / TAU;
        let (v_hat, dv_sign) = match config.variant {
            Variant::Signed => ((0.5 * PI - (z / rho).atan()) / PI, 1.0),
            Variant::Squared => {
                // d|z|/dz, with the symmetric choice 0 at the kink.
                let s = if z == 0.0 { 0.0 } else { z.signum() };
                ((0.5 * PI - (z.abs() / rho).atan()) / PI, s)
            }
        };
        let du = u_hat - c.target.u();
        let dv = v_hat - c.target.v();
        sum += 0.5 * (du * du + dv * dv);
        accepted += 1;

        // d(point loss)/d(camera point): du * grad(u) + dv * grad(v).
        let gu = Vector3::new(y, -x, 0.0) / (TAU * rho2);
        let gv = match config.variant {
            Variant::Signed => Vector3::new(z * x / rho, z * y / rho, -rho) / (PI * r2),
            Variant::Squared => {
                Vector3::new(z.abs() * x / rho, z.abs() * y / rho, -dv_sign * rho) / (PI * r2)
            }
        };
        let g_cam = du * gu + dv * gv;

        // Chain rule: translation sees g_cam directly, angle j sees
        // g_cam . (dR_j * lidar_point).
        for j in 0..3 {
            grad[j] += g_cam.dot(&(dr[j] * c.lidar_point.coords));
        }
        grad[3] += g_cam.x;
        grad[4] += g_cam.y;
        grad[5] += g_cam.z;
    }
    if accepted == 0 {
        return Err(TrainError::AllPointsRejected { total: cs.len() });
    }
    let (loss, grad) = match config.loss_aggregation {
        LossAggregation::Mean => (sum / accepted as f64, grad / accepted as f64),
        LossAggregation::Sum => (sum, grad),
    };
    Ok(BatchEval { loss, grad, accepted })
}

/// Analytic gradient of the aggregated loss, ordered
/// (alpha, beta, gamma, b1, b2, b3).
pub fn loss_gradient(
    cs: &[Correspondence],
    pose: &ExtrinsicPose,
    config: &TrainingConfig,
) -> Result<Vector6<f64>, TrainError> {
    Ok(evaluate_batch(cs, pose, config)?.grad)
}

/// Central finite differences of [`batch_loss`], the oracle the analytic
/// gradient is checked against. Valid only where every correspondence keeps
/// its accept/reject status across the +-step perturbations.
pub fn finite_difference_gradient(
    cs: &[Correspondence],
    pose: &ExtrinsicPose,
    config: &TrainingConfig,
    step: f64,
) -> Result<Vector6<f64>, TrainError> {
    let base = pose.params();
    let mut out = Vector6::zeros();
    for j in 0..6 {
        let mut plus = base;
        let mut minus = base;
        plus[j] += step;
        minus[j] -= step;
        let (lp, _) = batch_loss(cs, &ExtrinsicPose::from_params(plus)?, config)?;
        let (lm, _) = batch_loss(cs, &ExtrinsicPose::from_params(minus)?, config)?;
        out[j] = (lp - lm) / (2.0 * step);
    }
    Ok(out)
}

/// Fixed-step full-batch gradient descent from `init`.
///
/// Each iteration evaluates loss and gradient at the current parameters,
/// records a trace entry, then steps. Angle gradients are scaled by
/// `rotation_rate_scale`. Stops at the iteration budget, on convergence
/// (spread of the trailing 10 losses below `convergence_epsilon`), or on
/// divergence (non-finite loss or loss above 1e6 times the initial loss).
/// Returns the best parameters seen, preferring fewer guard-skipped points
/// first and lower loss second; comparing raw losses across different
/// accepted subsets would reward poses that fit a handful of points while
/// rejecting the rest.
pub fn train(
    cs: &[Correspondence],
    init: &ExtrinsicPose,
    config: &TrainingConfig,
) -> Result<CalibrationResult, TrainError> {
    config.validate()?;
    if cs.is_empty() {
        return Err(TrainError::EmptyDataset);
    }

    let lr = config.learning_rate;
    let angle_lr = lr * config.rotation_rate_scale;

    let mut params = init.params();
    let mut records: Vec<TraceRecord> = Vec::with_capacity(config.max_iterations + 1);
    let mut status = TrainStatus::IterationLimit;
    let mut initial_loss = f64::NAN;
    // (skipped, loss, params), ordered lexicographically.
    let mut best: Option<(usize, f64, [f64; 6])> = None;

    for iteration in 0..=config.max_iterations {
        if !params.iter().all(|p| p.is_finite()) {
            status = TrainStatus::Diverged;
            break;
        }
        let pose = ExtrinsicPose::from_params(params)?;
        let ev = match evaluate_batch(cs, &pose, config) {
            Ok(ev) => ev,
            Err(TrainError::AllPointsRejected { total }) => {
                return Err(TrainError::AllPointsRejectedAt { iteration, total });
            }
            Err(e) => return Err(e),
        };
        if !ev.loss.is_finite() {
            status = TrainStatus::Diverged;
            break;
        }
        if iteration == 0 {
            initial_loss = ev.loss;
        }
        records.push(TraceRecord {
            iteration,
            loss: ev.loss,
            params,
            grad_inf_norm: ev.grad.amax(),
        });

        let skipped = cs.len() - ev.accepted;
        let better = match &best {
            None => true,
            Some((bs, bl, _)) => skipped < *bs || (skipped == *bs && ev.loss < *bl),
        };
        if better {
            best = Some((skipped, ev.loss, params));
        }

        if ev.loss > 1e6 * initial_loss {
            status = TrainStatus::Diverged;
            break;
        }
        if records.len() >= 10 {
            let window = &records[records.len() - 10..];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for rec in window {
                lo = lo.min(rec.loss);
                hi = hi.max(rec.loss);
            }
            if hi - lo < config.convergence_epsilon {
                status = TrainStatus::Converged;
                break;
            }
        }
        if iteration == config.max_iterations {
            break;
        }
        for (j, p) in params.iter_mut().enumerate() {
            let rate = if j < 3 { angle_lr } else { lr };
            *p -= rate * ev.grad[j];
        }
    }

    let best_params = best.map(|(_, _, p)| p).unwrap_or_else(|| init.params());
    let pose = ExtrinsicPose::from_params(best_params)?;
    let (final_loss, accepted) = batch_loss(cs, &pose, config)?;
    Ok(CalibrationResult {
        pose,
        final_loss,
        trace: TrainingTrace { records, status },
        skipped_points: cs.len() - accepted,
    })
}

/// Runs [`train`] from `config.restarts` seeded random initializations and
/// returns the best result, preferring fewer skipped points, then lower
/// final loss. Angles are drawn uniformly from [0, 2pi) x [0, pi] x [0, 2pi),
/// translations uniformly from the per-axis `translation_box`. Sampling and
/// training are sequential, so the result is a pure function of the inputs.
/// Individual restart failures are tolerated unless every restart fails.
pub fn train_multistart(
    cs: &[Correspondence],
    config: &TrainingConfig,
) -> Result<CalibrationResult, TrainError> {
    config.validate()?;
    if cs.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let (lo, hi) = config.translation_box;
    let mut best: Option<CalibrationResult> = None;
    let mut first_err: Option<TrainError> = None;
    for _ in 0..config.restarts {
        let init = ExtrinsicPose::from_params([
            rng.random_range(0.0..TAU),
            rng.random_range(0.0..=PI),
            rng.random_range(0.0..TAU),
            rng.random_range(lo..=hi),
            rng.random_range(lo..=hi),
            rng.random_range(lo..=hi),
        ])?;
        match train(cs, &init, config) {
            Ok(result) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        result.skipped_points < b.skipped_points
                            || (result.skipped_points == b.skipped_points
                                && result.final_loss < b.final_loss)
                    }
                };
                if better {
                    best = Some(result);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        None => Err(first_err.expect("restarts >= 1 so at least one outcome exists")),
    }
}

/// Settings for the sampled gradient self-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub samples: usize,
    pub seed: u64,
    /// Central-difference step, applied to angles (rad) and translations (m).
    pub step: f64,
    pub rel_tolerance: f64,
    /// Components whose analytic and numeric values both sit below this are
    /// accepted without a relative comparison.
    pub abs_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { samples: 1000, seed: 1, step: 1e-6, rel_tolerance: 1e-5, abs_floor: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub samples: usize,
    pub failures: usize,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares the analytic gradient against central finite differences on
/// seeded random poses and correspondences.
///
/// Samples are drawn inside the branch domain with margin (camera-frame
/// azimuth within +-1.2 rad of forward, radius 0.5 to 15 m) so the finite
/// differences never straddle a guard; the squared variant additionally
/// keeps z away from its |z| kink. Variants and aggregation modes alternate
/// across samples.
pub fn gradient_check(cfg: &GradCheckConfig) -> Result<GradCheckReport, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut failures = 0usize;
    let mut max_rel = 0.0f64;
    for i in 0..cfg.samples {
        let variant = if i % 2 == 0 { Variant::Signed } else { Variant::Squared };
        let aggregation = if i % 4 < 2 { LossAggregation::Mean } else { LossAggregation::Sum };
        let pose = ExtrinsicPose::from_params([
            rng.random_range(0.0..TAU),
            rng.random_range(0.0..=PI),
            rng.random_range(0.0..TAU),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ])?;

        let azimuth: f64 = rng.random_range(-1.2..1.2);
        let elevation: f64 = match variant {
            Variant::Signed => rng.random_range(-1.3..1.3),
            Variant::Squared => rng.random_range(0.1..1.3),
        };
        let radius: f64 = rng.random_range(0.5..15.0);
        let cam = Vector3::new(
            radius * elevation.cos() * azimuth.cos(),
            radius * elevation.cos() * azimuth.sin(),
            radius * elevation.sin(),
        );
        let r = rotation_matrix(&pose.rotation)?;
        let lidar = Point3::from(r.transpose() * (cam - pose.translation));
        let target = PanoPixelRatio::new(
            rng.random_range(0.05..0.95),
            rng.random_range(0.05..0.95),
        )?;
        let cs = [Correspondence { lidar_point: lidar, target }];

        let config = TrainingConfig { variant, loss_aggregation: aggregation, ..Default::default() };
        let analytic = loss_gradient(&cs, &pose, &config)?;
        let numeric = finite_difference_gradient(&cs, &pose, &config, cfg.step)?;

        let mut sample_ok = true;
        for j in 0..6 {
            let scale = analytic[j].abs().max(numeric[j].abs());
            let err = (analytic[j] - numeric[j]).abs();
            if err > cfg.abs_floor.max(cfg.rel_tolerance * scale) {
                sample_ok = false;
            }
            if scale > cfg.abs_floor {
                max_rel = max_rel.max(err / scale);
            }
        }
        if !sample_ok {
            failures += 1;
        }
    }
    Ok(GradCheckReport { samples: cfg.samples, failures, max_rel_error: max_rel })
}
