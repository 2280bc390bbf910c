//! Pixel-space evaluation of a calibrated pose: reprojection error reports,
//! point-cloud overlays onto a panorama, and point-cloud colorization by
//! pixel lookup. All projection here goes through the full model, never the
//! regression h-form, so the metrics also audit the branch restriction.

use thiserror::Error;

use crate::dataset::{ImageRaster, PointCloud};
use crate::geometry::{project, transform, ExtrinsicPose, GeomError, PanoPixelRatio, Point3};

/// Overlay marker color.
const MARKER: [u8; 3] = [255, 0, 0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("image dimensions must be positive, got {0}x{1}")]
    InvalidDimensions(usize, usize),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Per-point absolute reprojection errors in pixel ratios, plus the image
/// size that converts them to pixels. Horizontal errors are wrap-aware:
/// min(|du|, 1 - |du|), since u is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct ReprojectionReport {
    pub width: usize,
    pub height: usize,
    /// (|du| wrap-aware, |dv|) per accepted point, in ratios, input order.
    pub per_point: Vec<(f64, f64)>,
    pub accepted: usize,
    /// Points that projected onto a view pole.
    pub skipped: usize,
}

/// Mean of absolute values summed in sorted order, so the result does not
/// depend on input permutation. Empty input means zero.
fn sorted_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

impl ReprojectionReport {
    pub fn mean_horizontal_px(&self) -> f64 {
        sorted_mean(self.per_point.iter().map(|e| e.0)) * self.width as f64
    }

    pub fn mean_vertical_px(&self) -> f64 {
        sorted_mean(self.per_point.iter().map(|e| e.1)) * self.height as f64
    }

    pub fn max_horizontal_px(&self) -> f64 {
        self.per_point.iter().map(|e| e.0).fold(0.0, f64::max) * self.width as f64
    }

    pub fn max_vertical_px(&self) -> f64 {
        self.per_point.iter().map(|e| e.1).fold(0.0, f64::max) * self.height as f64
    }

    pub fn to_text(&self) -> String {
        format!(
            "reprojection over {} points ({} skipped) at {}x{}:\n\
             \x20 horizontal: mean {:.4} px, max {:.4} px\n\
             \x20 vertical:   mean {:.4} px, max {:.4} px\n",
            self.accepted,
            self.skipped,
            self.width,
            self.height,
            self.mean_horizontal_px(),
            self.max_horizontal_px(),
            self.mean_vertical_px(),
            self.max_vertical_px()
        )
    }

    /// Machine-readable key = value block, same shape as config files.
    pub fn to_kv(&self) -> String {
        format!(
            "width = {}\nheight = {}\naccepted = {}\nskipped = {}\n\
             mean_horizontal_px = {}\nmean_vertical_px = {}\n\
             max_horizontal_px = {}\nmax_vertical_px = {}\n",
            self.width,
            self.height,
            self.accepted,
            self.skipped,
            self.mean_horizontal_px(),
            self.mean_vertical_px(),
            self.max_horizontal_px(),
            self.max_vertical_px()
        )
    }
}

/// Projects every correspondence through `pose` and differences against its
/// target. Pole-singular points are skipped and counted; everything else,
/// including points behind the x = 0 plane, projects fine under the full
/// model.
pub fn reprojection_report(
    cs: &[crate::calibrator::Correspondence],
    pose: &ExtrinsicPose,
    width: usize,
    height: usize,
) -> Result<ReprojectionReport, EvalError> {
    if width == 0 || height == 0 {
        return Err(EvalError::InvalidDimensions(width, height));
    }
    let mut per_point = Vec::with_capacity(cs.len());
    let mut skipped = 0usize;
    for c in cs {
        let cam = transform(&c.lidar_point, pose)?;
        let uv = match project(&cam) {
            Ok(uv) => uv,
            Err(GeomError::PoleSingularity) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let du = (uv.u() - c.target.u()).abs();
        let du = du.min(1.0 - du);
        let dv = (uv.v() - c.target.v()).abs();
        per_point.push((du, dv));
    }
    Ok(ReprojectionReport { width, height, accepted: per_point.len(), per_point, skipped })
}

/// Nearest pixel for a ratio coordinate: u wraps around the seam, v clamps
/// at the poles.
fn pixel_index(uv: &PanoPixelRatio, width: usize, height: usize) -> (usize, usize) {
    let x = (uv.u() * width as f64).round() as usize % width;
    let y = ((uv.v() * height as f64).round() as usize).min(height - 1);
    (x, y)
}

/// Draws each projected cloud point as a one-pixel marker dot on a copy of
/// the panorama. Returns the overlay and the count of points that failed to
/// project; drawn + skipped = input count.
pub fn project_overlay(
    cloud: &PointCloud,
    image: &ImageRaster,
    pose: &ExtrinsicPose,
) -> (ImageRaster, usize) {
    let mut out = image.clone();
    let mut skipped = 0usize;
    for p in &cloud.points {
        match projected_pixel(p, pose, image.width(), image.height()) {
            Some((x, y)) => out.set_pixel(x, y, MARKER),
            None => skipped += 1,
        }
    }
    (out, skipped)
}

fn projected_pixel(
    p: &Point3,
    pose: &ExtrinsicPose,
    width: usize,
    height: usize,
) -> Option<(usize, usize)> {
    let cam = transform(p, pose).ok()?;
    let uv = project(&cam).ok()?;
    Some(pixel_index(&uv, width, height))
}

/// Colors each point with the panorama pixel it projects onto
/// (nearest-neighbor, no interpolation). Unprojectable points are dropped by
/// default; with `keep_unprojectable` they stay in the output colored black.
/// Returns the colorized cloud and the unprojectable count.
pub fn colorize_cloud(
    cloud: &PointCloud,
    image: &ImageRaster,
    pose: &ExtrinsicPose,
    keep_unprojectable: bool,
) -> (PointCloud, usize) {
    let mut points = Vec::with_capacity(cloud.points.len());
    let mut colors = Vec::with_capacity(cloud.points.len());
    let mut skipped = 0usize;
    for p in &cloud.points {
        match projected_pixel(p, pose, image.width(), image.height()) {
            Some((x, y)) => {
                points.push(*p);
                colors.push(image.pixel(x, y));
            }
            None => {
                skipped += 1;
                if keep_unprojectable {
                    points.push(*p);
                    colors.push([0, 0, 0]);
                }
            }
        }
    }
    (PointCloud { points, colors: Some(colors) }, skipped)
}
