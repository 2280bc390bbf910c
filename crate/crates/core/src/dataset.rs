//! On-disk formats: five-column correspondence CSV, ASCII point clouds,
//! binary P6 pixmaps, and the flat key = value run configuration. Everything
//! is plain text or trivially framed binary so other implementations can
//! interoperate without codec dependencies.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

use crate::calibrator::{Correspondence, LossAggregation, TrainingConfig};
use crate::geometry::{ExtrinsicPose, PanoPixelRatio, Point3, Variant};
use crate::synthdata::{standard_placements, NoiseSpec, ScanLayout, SynthError, TargetRig};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Image { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, line: usize, message: String) -> DataError {
    DataError::Parse { path: path.display().to_string(), line, message }
}

/// Splits a data row on commas and/or whitespace into finite f64 tokens.
fn numeric_row(line: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for tok in line.split(',').flat_map(str::split_whitespace) {
        let v: f64 = tok.parse().map_err(|_| format!("unparseable number {tok:?}"))?;
        if !v.is_finite() {
            return Err(format!("non-finite value {tok:?}"));
        }
        out.push(v);
    }
    Ok(out)
}

/// True for a line that reads as a column-name header: at least one token
/// and none of them numeric.
fn looks_like_header(line: &str) -> bool {
    let mut any = false;
    for tok in line.split(',').flat_map(str::split_whitespace) {
        if tok.parse::<f64>().is_ok() {
            return false;
        }
        any = true;
    }
    any
}

/// Reads five-column correspondence rows (x, y, z, u, v). Blank lines and
/// `#` comments are skipped; one leading non-numeric header line is allowed.
pub fn read_correspondences(path: impl AsRef<Path>) -> Result<Vec<Correspondence>, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    let mut saw_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_data && looks_like_header(line) {
            continue;
        }
        saw_data = true;
        let row = numeric_row(line).map_err(|m| parse_err(path, line_no, m))?;
        if row.len() != 5 {
            return Err(parse_err(path, line_no, format!("expected 5 columns, found {}", row.len())));
        }
        let target = PanoPixelRatio::new(row[3], row[4]).map_err(|_| {
            parse_err(
                path,
                line_no,
                format!("pixel ratio out of range: u = {}, v = {}", row[3], row[4]),
            )
        })?;
        out.push(Correspondence { lidar_point: Point3::new(row[0], row[1], row[2]), target });
    }
    Ok(out)
}

/// Writes correspondences with a comment header; 17 significant digits so
/// values round-trip exactly.
pub fn write_correspondences(
    cs: &[Correspondence],
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut s = String::from("# x_l, y_l, z_l, u, v\n");
    for c in cs {
        let p = c.lidar_point;
        let _ = writeln!(
            s,
            "{:.16e}, {:.16e}, {:.16e}, {:.16e}, {:.16e}",
            p.x,
            p.y,
            p.z,
            c.target.u(),
            c.target.v()
        );
    }
    fs::write(path, s).map_err(|e| io_err(path, e))
}

/// XYZ points with optional per-point RGB.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    /// Present iff the file had six columns; same length as `points`.
    pub colors: Option<Vec<[u8; 3]>>,
}

/// Reads 3-column (x y z) or 6-column (x y z r g b) rows; the first data row
/// fixes the column count for the whole file.
pub fn read_pointcloud(path: impl AsRef<Path>) -> Result<PointCloud, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut cloud = PointCloud::default();
    let mut columns: Option<usize> = None;
    let mut saw_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_data && looks_like_header(line) {
            continue;
        }
        saw_data = true;
        let row = numeric_row(line).map_err(|m| parse_err(path, line_no, m))?;
        let cols = *columns.get_or_insert(row.len());
        if row.len() != cols {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {cols} columns as in the first row, found {}", row.len()),
            ));
        }
        match cols {
            3 => cloud.points.push(Point3::new(row[0], row[1], row[2])),
            6 => {
                let mut rgb = [0u8; 3];
                for (slot, &v) in rgb.iter_mut().zip(&row[3..6]) {
                    if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                        return Err(parse_err(
                            path,
                            line_no,
                            format!("color component {v} is not a byte"),
                        ));
                    }
                    *slot = v as u8;
                }
                cloud.points.push(Point3::new(row[0], row[1], row[2]));
                cloud.colors.get_or_insert_with(Vec::new).push(rgb);
            }
            n => {
                return Err(parse_err(path, line_no, format!("expected 3 or 6 columns, found {n}")))
            }
        }
    }
    Ok(cloud)
}

pub fn write_pointcloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    if let Some(colors) = &cloud.colors {
        assert_eq!(colors.len(), cloud.points.len(), "color count must match point count");
    }
    let mut s = String::new();
    match &cloud.colors {
        None => {
            s.push_str("# x, y, z\n");
            for p in &cloud.points {
                let _ = writeln!(s, "{:.16e}, {:.16e}, {:.16e}", p.x, p.y, p.z);
            }
        }
        Some(colors) => {
            s.push_str("# x, y, z, r, g, b\n");
            for (p, c) in cloud.points.iter().zip(colors) {
                let _ = writeln!(
                    s,
                    "{:.16e}, {:.16e}, {:.16e}, {}, {}, {}",
                    p.x, p.y, p.z, c[0], c[1], c[2]
                );
            }
        }
    }
    fs::write(path, s).map_err(|e| io_err(path, e))
}

/// Row-major RGB raster; the on-disk form is binary P6 with maxval 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageRaster {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&color);
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&color);
    }

    /// Equirectangular panoramas are twice as wide as tall; anything else is
    /// suspicious but still usable.
    pub fn aspect_warning(&self) -> Option<String> {
        if self.width == 2 * self.height {
            None
        } else {
            Some(format!(
                "image is {}x{}, not the 2:1 aspect of an equirectangular panorama",
                self.width, self.height
            ))
        }
    }
}

/// Reads a binary P6 pixmap. The header accepts PNM whitespace and `#`
/// comments; maxval must be 255 and the payload exactly width*height*3 bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageRaster, DataError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let img_err = |message: String| DataError::Image { path: path.display().to_string(), message };

    let mut pos = 0usize;
    let token = |bytes: &[u8], pos: &mut usize| -> Result<String, DataError> {
        loop {
            match bytes.get(*pos) {
                Some(b) if b.is_ascii_whitespace() => *pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(*pos) {
                        *pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = *pos;
        while let Some(b) = bytes.get(*pos) {
            if b.is_ascii_whitespace() {
                break;
            }
            *pos += 1;
        }
        if start == *pos {
            return Err(img_err(format!("truncated header at byte {start}")));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = token(&bytes, &mut pos)?;
    if magic != "P6" {
        return Err(img_err(format!("magic {magic:?} is not binary pixmap P6")));
    }
    let dim = |name: &str, pos: &mut usize| -> Result<usize, DataError> {
        let t = token(&bytes, pos)?;
        let v: usize =
            t.parse().map_err(|_| img_err(format!("{name} {t:?} is not a positive integer")))?;
        if v == 0 {
            return Err(img_err(format!("{name} must be positive")));
        }
        Ok(v)
    };
    let width = dim("width", &mut pos)?;
    let height = dim("height", &mut pos)?;
    let maxval = dim("maxval", &mut pos)?;
    if maxval != 255 {
        return Err(img_err(format!("maxval {maxval} unsupported, expected 255")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(img_err(format!("missing payload separator at byte {pos}"))),
    }
    let expected = width * height * 3;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(img_err(format!(
            "payload at byte {pos}: expected {expected} bytes for {width}x{height}, found {}",
            payload.len()
        )));
    }
    Ok(ImageRaster { width, height, pixels: payload.to_vec() })
}

pub fn write_image(image: &ImageRaster, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut bytes = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    bytes.extend_from_slice(&image.pixels);
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementChoice {
    /// The eight-disc ring from the synthetic suite.
    Standard,
    /// One disc at the configured center and radius.
    Single,
}

/// Flat configuration covering training, noise, and scene generation. Every
/// key has a default; explicitly set keys are tracked so effective-config
/// echoes can mark the rest as defaulted.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub noise: NoiseSpec,
    pub placements: PlacementChoice,
    pub disc_center: Point3,
    pub disc_radius: f64,
    /// Generator ground-truth pose parameters (alpha, beta, gamma, b1, b2, b3).
    pub truth: [f64; 6],
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    pub elevation_step_deg: f64,
    pub azimuth_step_deg: f64,
    explicit: BTreeSet<String>,
}

/// All recognized configuration keys, in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "max_iterations",
    "learning_rate",
    "rotation_rate_scale",
    "convergence_epsilon",
    "loss_aggregation",
    "variant",
    "restarts",
    "rng_seed",
    "translation_box_min",
    "translation_box_max",
    "point_sigma",
    "pixel_sigma_u",
    "pixel_sigma_v",
    "noise_seed",
    "placements",
    "disc_center_x",
    "disc_center_y",
    "disc_center_z",
    "disc_radius",
    "truth_alpha",
    "truth_beta",
    "truth_gamma",
    "truth_b1",
    "truth_b2",
    "truth_b3",
    "elevation_min_deg",
    "elevation_max_deg",
    "elevation_step_deg",
    "azimuth_step_deg",
];

impl Default for RunConfig {
    fn default() -> Self {
        let truth = crate::synthdata::standard_truth_pose().params();
        Self {
            training: TrainingConfig::default(),
            noise: NoiseSpec::noiseless(9),
            placements: PlacementChoice::Standard,
            disc_center: Point3::new(6.4, 0.0, 0.0),
            disc_radius: 0.4,
            truth,
            elevation_min_deg: -15.0,
            elevation_max_deg: 15.0,
            elevation_step_deg: 2.0,
            azimuth_step_deg: 0.2,
            explicit: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    /// Assigns one key, marking it explicitly set. Unknown keys and
    /// unparseable values are rejected with a plain message.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
        }
        fn fin(key: &str, value: &str) -> Result<f64, String> {
            let v: f64 = num(key, value)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite value for {key}"))
            }
        }
        match key {
            "max_iterations" => self.training.max_iterations = num(key, value)?,
            "learning_rate" => self.training.learning_rate = fin(key, value)?,
            "rotation_rate_scale" => self.training.rotation_rate_scale = fin(key, value)?,
            "convergence_epsilon" => self.training.convergence_epsilon = fin(key, value)?,
            "loss_aggregation" => {
                self.training.loss_aggregation = match value {
                    "mean" => LossAggregation::Mean,
                    "sum" => LossAggregation::Sum,
                    _ => return Err(format!("loss_aggregation must be mean or sum, got {value:?}")),
                }
            }
            "variant" => {
                self.training.variant = match value {
                    "signed" => Variant::Signed,
                    "squared" => Variant::Squared,
                    _ => return Err(format!("variant must be signed or squared, got {value:?}")),
                }
            }
            "restarts" => self.training.restarts = num(key, value)?,
            "rng_seed" => self.training.rng_seed = num(key, value)?,
            "translation_box_min" => self.training.translation_box.0 = fin(key, value)?,
            "translation_box_max" => self.training.translation_box.1 = fin(key, value)?,
            "point_sigma" => self.noise.point_sigma = fin(key, value)?,
            "pixel_sigma_u" => self.noise.pixel_sigma_u = fin(key, value)?,
            "pixel_sigma_v" => self.noise.pixel_sigma_v = fin(key, value)?,
            "noise_seed" => self.noise.rng_seed = num(key, value)?,
            "placements" => {
                self.placements = match value {
                    "standard" => PlacementChoice::Standard,
                    "single" => PlacementChoice::Single,
                    _ => return Err(format!("placements must be standard or single, got {value:?}")),
                }
            }
            "disc_center_x" => self.disc_center.x = fin(key, value)?,
            "disc_center_y" => self.disc_center.y = fin(key, value)?,
            "disc_center_z" => self.disc_center.z = fin(key, value)?,
            "disc_radius" => self.disc_radius = fin(key, value)?,
            "truth_alpha" => self.truth[0] = fin(key, value)?,
            "truth_beta" => self.truth[1] = fin(key, value)?,
            "truth_gamma" => self.truth[2] = fin(key, value)?,
            "truth_b1" => self.truth[3] = fin(key, value)?,
            "truth_b2" => self.truth[4] = fin(key, value)?,
            "truth_b3" => self.truth[5] = fin(key, value)?,
            "elevation_min_deg" => self.elevation_min_deg = fin(key, value)?,
            "elevation_max_deg" => self.elevation_max_deg = fin(key, value)?,
            "elevation_step_deg" => self.elevation_step_deg = fin(key, value)?,
            "azimuth_step_deg" => self.azimuth_step_deg = fin(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        self.explicit.insert(key.to_string());
        Ok(())
    }

    pub fn is_default(&self, key: &str) -> bool {
        !self.explicit.contains(key)
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "max_iterations" => self.training.max_iterations.to_string(),
            "learning_rate" => self.training.learning_rate.to_string(),
            "rotation_rate_scale" => self.training.rotation_rate_scale.to_string(),
            "convergence_epsilon" => self.training.convergence_epsilon.to_string(),
            "loss_aggregation" => match self.training.loss_aggregation {
                LossAggregation::Mean => "mean".into(),
                LossAggregation::Sum => "sum".into(),
            },
            "variant" => match self.training.variant {
                Variant::Signed => "signed".into(),
                Variant::Squared => "squared".into(),
            },
            "restarts" => self.training.restarts.to_string(),
            "rng_seed" => self.training.rng_seed.to_string(),
            "translation_box_min" => self.training.translation_box.0.to_string(),
            "translation_box_max" => self.training.translation_box.1.to_string(),
            "point_sigma" => self.noise.point_sigma.to_string(),
            "pixel_sigma_u" => self.noise.pixel_sigma_u.to_string(),
            "pixel_sigma_v" => self.noise.pixel_sigma_v.to_string(),
            "noise_seed" => self.noise.rng_seed.to_string(),
            "placements" => match self.placements {
                PlacementChoice::Standard => "standard".into(),
                PlacementChoice::Single => "single".into(),
            },
            "disc_center_x" => self.disc_center.x.to_string(),
            "disc_center_y" => self.disc_center.y.to_string(),
            "disc_center_z" => self.disc_center.z.to_string(),
            "disc_radius" => self.disc_radius.to_string(),
            "truth_alpha" => self.truth[0].to_string(),
            "truth_beta" => self.truth[1].to_string(),
            "truth_gamma" => self.truth[2].to_string(),
            "truth_b1" => self.truth[3].to_string(),
            "truth_b2" => self.truth[4].to_string(),
            "truth_b3" => self.truth[5].to_string(),
            "elevation_min_deg" => self.elevation_min_deg.to_string(),
            "elevation_max_deg" => self.elevation_max_deg.to_string(),
            "elevation_step_deg" => self.elevation_step_deg.to_string(),
            "azimuth_step_deg" => self.azimuth_step_deg.to_string(),
            _ => unreachable!("value_of called with unknown key {key}"),
        }
    }

    /// (key, value, explicitly-set) for every key in echo order.
    pub fn effective_entries(&self) -> Vec<(&'static str, String, bool)> {
        CONFIG_KEYS.iter().map(|&k| (k, self.value_of(k), !self.is_default(k))).collect()
    }

    /// Full config text; defaulted keys carry a trailing marker comment.
    /// Parsing the rendered text reproduces the same values.
    pub fn render_effective(&self) -> String {
        let mut s = String::new();
        for (key, value, explicit) in self.effective_entries() {
            let _ = if explicit {
                writeln!(s, "{key} = {value}")
            } else {
                writeln!(s, "{key} = {value}  # default")
            };
        }
        s
    }

    pub fn truth_pose(&self) -> ExtrinsicPose {
        ExtrinsicPose::from_params(self.truth).expect("set() rejects non-finite values")
    }

    pub fn layout(&self) -> Result<ScanLayout, String> {
        if !self.elevation_step_deg.is_finite() || self.elevation_step_deg <= 0.0 {
            return Err("elevation_step_deg must be > 0".into());
        }
        let mut elevations = Vec::new();
        let mut e = self.elevation_min_deg;
        while e <= self.elevation_max_deg + 1e-9 {
            elevations.push(e.to_radians());
            e += self.elevation_step_deg;
        }
        ScanLayout::new(elevations, self.azimuth_step_deg.to_radians()).map_err(|e| e.to_string())
    }

    pub fn rigs(&self) -> Result<Vec<TargetRig>, SynthError> {
        match self.placements {
            PlacementChoice::Standard => Ok(standard_placements()),
            PlacementChoice::Single => {
                Ok(vec![TargetRig::vertical_facing_origin(self.disc_center, self.disc_radius)?])
            }
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment anywhere, blank lines are
/// skipped, duplicate and unknown keys are rejected with their line number.
/// The resulting training and noise settings must validate.
pub fn parse_config(text: &str, origin: impl AsRef<Path>) -> Result<RunConfig, DataError> {
    let path = origin.as_ref();
    let mut cfg = RunConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, line_no, format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(parse_err(path, line_no, format!("empty value for {key}")));
        }
        if !seen.insert(key.to_string()) {
            return Err(parse_err(path, line_no, format!("duplicate key {key:?}")));
        }
        cfg.set(key, value).map_err(|m| parse_err(path, line_no, m))?;
    }
    cfg.training.validate().map_err(|e| DataError::Invalid {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    cfg.noise.validate().map_err(|e| DataError::Invalid {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(cfg)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<RunConfig, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_config(&text, path)
}
