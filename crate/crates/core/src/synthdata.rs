//! Synthetic scans of a circular calibration disc: chord extraction per scan
//! channel, ground-truth projection to pixel targets, seeded noise injection,
//! and the small-angle chord-to-pixel mapping used when only the detected
//! circle is available in the image.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::calibrator::Correspondence;
use crate::geometry::{project, transform, ExtrinsicPose, GeomError, PanoPixelRatio, Point3};

/// Unit-length and orthogonality slack for rig direction vectors.
const EPS_UNIT: f64 = 1e-10;
/// Chords shorter than this are treated as grazing misses, meters.
const MIN_CHORD_LENGTH: f64 = 1e-6;
/// |offset| below this tags a chord as passing through the center, meters.
const EPS_CENTER: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid target rig: {0}")]
    InvalidRig(&'static str),
    #[error("invalid scan layout: {0}")]
    InvalidLayout(&'static str),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(&'static str),
    #[error("sensor origin lies on the disc")]
    SensorOnDisc,
    #[error("requested chord offset {0} exceeds the disc radius")]
    OffsetOutsideDisc(f64),
    #[error("circle pixel radius must be positive, got ({0}, {1})")]
    InvalidPixelRadius(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// A circular planar target placed in the LiDAR frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRig {
    pub disc_center: Point3,
    /// Unit normal of the disc plane.
    pub disc_normal: Vector3<f64>,
    /// Unit in-plane reference, orthogonal to the normal. Defines "up" for
    /// chord offsets and the pixel mapping.
    pub disc_up: Vector3<f64>,
    pub disc_radius: f64,
}

impl TargetRig {
    pub fn new(
        disc_center: Point3,
        disc_normal: Vector3<f64>,
        disc_up: Vector3<f64>,
        disc_radius: f64,
    ) -> Result<Self, SynthError> {
        if !(disc_center.coords.iter().all(|c| c.is_finite())
            && disc_normal.iter().all(|c| c.is_finite())
            && disc_up.iter().all(|c| c.is_finite())
            && disc_radius.is_finite())
        {
            return Err(SynthError::InvalidRig("non-finite field"));
        }
        if disc_radius <= 0.0 {
            return Err(SynthError::InvalidRig("radius must be > 0"));
        }
        if (disc_normal.norm() - 1.0).abs() > EPS_UNIT || (disc_up.norm() - 1.0).abs() > EPS_UNIT {
            return Err(SynthError::InvalidRig("normal and up must be unit length"));
        }
        if disc_normal.dot(&disc_up).abs() > EPS_UNIT {
            return Err(SynthError::InvalidRig("normal and up must be orthogonal"));
        }
        Ok(Self { disc_center, disc_normal, disc_up, disc_radius })
    }

    /// Standing disc whose normal points back at the sensor origin and whose
    /// up reference is world-vertical. The center must be off the z axis.
    pub fn vertical_facing_origin(disc_center: Point3, disc_radius: f64) -> Result<Self, SynthError> {
        let rho = disc_center.coords.xy().norm();
        if rho <= EPS_UNIT {
            return Err(SynthError::InvalidRig("center on the vertical axis cannot face the origin"));
        }
        let normal = Vector3::new(-disc_center.x / rho, -disc_center.y / rho, 0.0);
        Self::new(disc_center, normal, Vector3::z(), disc_radius)
    }

    /// In-plane direction that reads as rightward to a sensor the normal
    /// points at: right = forward x up with forward = -normal.
    pub fn screen_right(&self) -> Vector3<f64> {
        self.disc_up.cross(&self.disc_normal)
    }
}

/// Spinning-LiDAR beam geometry: one scan ring per elevation angle, beams at
/// fixed azimuth increments, sensor at the LiDAR frame origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanLayout {
    /// Channel elevations in radians, strictly increasing.
    pub elevation_angles: Vec<f64>,
    /// Azimuth spacing of successive beams, radians.
    pub azimuth_step: f64,
}

impl ScanLayout {
    pub fn new(elevation_angles: Vec<f64>, azimuth_step: f64) -> Result<Self, SynthError> {
        if elevation_angles.is_empty() {
            return Err(SynthError::InvalidLayout("at least one channel required"));
        }
        if !elevation_angles.iter().all(|e| e.is_finite()) || !azimuth_step.is_finite() {
            return Err(SynthError::InvalidLayout("non-finite field"));
        }
        if !elevation_angles.windows(2).all(|w| w[0] < w[1]) {
            return Err(SynthError::InvalidLayout("elevations must be strictly increasing"));
        }
        if azimuth_step <= 0.0 {
            return Err(SynthError::InvalidLayout("azimuth_step must be > 0"));
        }
        Ok(Self { elevation_angles, azimuth_step })
    }

    pub fn channel_count(&self) -> usize {
        self.elevation_angles.len()
    }

    /// 16 channels, -15 to 15 degrees in 2-degree steps, 0.2-degree azimuth
    /// resolution.
    pub fn standard() -> Self {
        let elevations = (-15..=15).step_by(2).map(|d| f64::from(d).to_radians()).collect();
        Self::new(elevations, 0.2_f64.to_radians()).expect("constants are valid")
    }
}

/// Where a chord sits on the disc relative to its center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscSide {
    Above,
    Center,
    Below,
}

/// One scan line clipped to the disc boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordSegment {
    /// On the disc boundary, ordered along the rig's screen-right direction.
    pub endpoints: [Point3; 2],
    /// Signed distance from the disc center to the chord, positive toward
    /// `disc_up`, meters.
    pub offset: f64,
    /// Half the chord length, meters. offset^2 + half_length^2 = radius^2.
    pub half_length: f64,
    pub side: DiscSide,
}

impl ChordSegment {
    /// Horizontal chord at a given signed offset, built directly from the
    /// disc geometry rather than from a scan.
    pub fn on_disc(rig: &TargetRig, offset: f64) -> Result<Self, SynthError> {
        if !offset.is_finite() || offset.abs() > rig.disc_radius {
            return Err(SynthError::OffsetOutsideDisc(offset));
        }
        let half = (rig.disc_radius * rig.disc_radius - offset * offset).sqrt();
        let right = rig.screen_right();
        let mid = rig.disc_center + rig.disc_up * offset;
        Ok(Self {
            endpoints: [mid - right * half, mid + right * half],
            offset,
            half_length: half,
            side: side_of(offset),
        })
    }
}

fn side_of(offset: f64) -> DiscSide {
    if offset > EPS_CENTER {
        DiscSide::Above
    } else if offset < -EPS_CENTER {
        DiscSide::Below
    } else {
        DiscSide::Center
    }
}

/// Gaussian corruption of generated samples. Pixel sigmas are separate per
/// axis so a one-pixel error can be expressed on a 2:1 panorama.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Isotropic sigma on LiDAR point coordinates, meters.
    pub point_sigma: f64,
    /// Sigma on the horizontal pixel ratio, dimensionless.
    pub pixel_sigma_u: f64,
    /// Sigma on the vertical pixel ratio, dimensionless.
    pub pixel_sigma_v: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn noiseless(rng_seed: u64) -> Self {
        Self { point_sigma: 0.0, pixel_sigma_u: 0.0, pixel_sigma_v: 0.0, rng_seed }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = |s: f64| s.is_finite() && s >= 0.0;
        if ok(self.point_sigma) && ok(self.pixel_sigma_u) && ok(self.pixel_sigma_v) {
            Ok(())
        } else {
            Err(SynthError::InvalidNoise("sigmas must be finite and >= 0"))
        }
    }
}

/// Intersects every scan channel with the disc and returns the resulting
/// chords. Channels that miss the disc or graze it below the minimum chord
/// length contribute nothing.
///
/// Each channel is modeled as the plane through the sensor origin tangent to
/// the channel's scan cone at the beam azimuth nearest the disc center, which
/// is exact at the disc center's bearing and drifts only quadratically across
/// the disc's small angular width.
pub fn scan_target(rig: &TargetRig, layout: &ScanLayout) -> Result<Vec<ChordSegment>, SynthError> {
    let c = rig.disc_center.coords;
    let n_d = rig.disc_normal;

    // Sensor-on-disc rejection: origin in the disc plane and inside the rim.
    let plane_dist = n_d.dot(&(-c));
    let in_plane = (-c) - n_d * plane_dist;
    if plane_dist.abs() < 1e-9 && in_plane.norm() < rig.disc_radius {
        return Err(SynthError::SensorOnDisc);
    }

    let bearing = c.y.atan2(c.x);
    let beam_azimuth = (bearing / layout.azimuth_step).round() * layout.azimuth_step;
    let (s_az, c_az) = beam_azimuth.sin_cos();

    let mut chords = Vec::new();
    for &elevation in &layout.elevation_angles {
        let (s_el, c_el) = elevation.sin_cos();
        // Plane through the origin holding the beam direction, tilted with
        // the channel: normal is the cone's outward surface normal at the
        // beam azimuth.
        let n_p = Vector3::new(-s_el * c_az, -s_el * s_az, c_el);

        let line = n_p.cross(&n_d);
        let norm = line.norm();
        if norm < 1e-12 {
            continue;
        }
        let l_hat = line / norm;

        // Least-norm point on both planes: w = a n_p + b n_d with
        // n_p . w = 0 and n_d . w = n_d . c.
        let g = n_p.dot(&n_d);
        let det = 1.0 - g * g;
        if det.abs() < 1e-12 {
            continue;
        }
        let d2 = n_d.dot(&c);
        let b = d2 / det;
        let a = -g * b;
        let w = n_p * a + n_d * b;

        // Clip the line w + t l_hat to the disc rim.
        let m = w - c;
        let t_mid = -m.dot(&l_hat);
        let disc = t_mid * t_mid - (m.norm_squared() - rig.disc_radius * rig.disc_radius);
        if disc <= 0.0 {
            continue;
        }
        let half = disc.sqrt();
        if 2.0 * half <= MIN_CHORD_LENGTH {
            continue;
        }

        let foot = w + l_hat * t_mid;
        let offset_vec = foot - c;
        let mut q = n_d.cross(&l_hat);
        if q.dot(&rig.disc_up) < 0.0 {
            q = -q;
        }
        let offset = offset_vec.dot(&q);

        let mut e1 = Point3::from(foot - l_hat * half);
        let mut e2 = Point3::from(foot + l_hat * half);
        if (e2 - e1).dot(&rig.screen_right()) < 0.0 {
            std::mem::swap(&mut e1, &mut e2);
        }
        chords.push(ChordSegment {
            endpoints: [e1, e2],
            offset,
            half_length: half,
            side: side_of(offset),
        });
    }
    Ok(chords)
}

/// Scans the rig and pairs every chord endpoint with its ground-truth pixel
/// ratio under `truth`, then applies seeded Gaussian noise. Returns the
/// correspondences and the count of endpoints skipped for projecting onto a
/// view pole. Deterministic given the seed.
pub fn generate_correspondences(
    rig: &TargetRig,
    layout: &ScanLayout,
    truth: &ExtrinsicPose,
    noise: &NoiseSpec,
) -> Result<(Vec<Correspondence>, usize), SynthError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
    let mut out = Vec::new();
    let skipped = generate_into(rig, layout, truth, noise, &mut rng, &mut out)?;
    Ok((out, skipped))
}

/// Generation core shared by the single-rig and multi-rig entry points; the
/// caller owns the RNG so multiple rigs can share one noise stream.
fn generate_into(
    rig: &TargetRig,
    layout: &ScanLayout,
    truth: &ExtrinsicPose,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Correspondence>,
) -> Result<usize, SynthError> {
    let mut skipped = 0usize;
    for seg in scan_target(rig, layout)? {
        for endpoint in seg.endpoints {
            let cam = transform(&endpoint, truth)?;
            let uv = match project(&cam) {
                Ok(uv) => uv,
                Err(GeomError::PoleSingularity) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            // Fixed draw order per endpoint: three point draws, two pixel
            // draws, consumed even at zero sigma so the stream layout never
            // depends on the sigma values.
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            let dz: f64 = rng.sample(StandardNormal);
            let du: f64 = rng.sample(StandardNormal);
            let dv: f64 = rng.sample(StandardNormal);
            let lidar_point = Point3::new(
                endpoint.x + noise.point_sigma * dx,
                endpoint.y + noise.point_sigma * dy,
                endpoint.z + noise.point_sigma * dz,
            );
            // u wraps across the seam; v is clamped inside its open range.
            let mut u = (uv.u() + noise.pixel_sigma_u * du).rem_euclid(1.0);
            if u >= 1.0 {
                u -= 1.0;
            }
            let v = (uv.v() + noise.pixel_sigma_v * dv).clamp(1e-9, 1.0 - 1e-9);
            out.push(Correspondence { lidar_point, target: PanoPixelRatio::new(u, v)? });
        }
    }
    Ok(skipped)
}

/// Maps a chord's endpoints to pixel ratios using only the detected circle:
/// in-plane metric coordinates scale by circle_radius_px / disc_radius about
/// the circle center, horizontal along screen-right, vertical against
/// disc_up. A small-angle approximation of the true projection, accurate
/// when the disc subtends a few degrees.
pub fn chord_pixel_endpoints(
    seg: &ChordSegment,
    circle_center_px: &PanoPixelRatio,
    circle_radius_px: (f64, f64),
    rig: &TargetRig,
) -> Result<[PanoPixelRatio; 2], SynthError> {
    let (r_u, r_v) = circle_radius_px;
    if !(r_u.is_finite() && r_v.is_finite() && r_u > 0.0 && r_v > 0.0) {
        return Err(SynthError::InvalidPixelRadius(r_u, r_v));
    }
    let right = rig.screen_right();
    let mut px = [*circle_center_px; 2];
    for (slot, endpoint) in px.iter_mut().zip(seg.endpoints) {
        let rel = endpoint - rig.disc_center;
        let a = rel.dot(&right);
        let b = rel.dot(&rig.disc_up);
        let u = circle_center_px.u() + a * (r_u / rig.disc_radius);
        // Image v grows downward.
        let v = circle_center_px.v() - b * (r_v / rig.disc_radius);
        *slot = PanoPixelRatio::new(u, v)?;
    }
    Ok(px)
}

/// Reference pose used by the synthetic suite, angles in radians and meters.
pub fn standard_truth_pose() -> ExtrinsicPose {
    ExtrinsicPose::from_params([4.7112, 0.8932, 1.8420, 2.8673, 0.6389, -1.7732])
        .expect("constants are finite")
}

/// Eight disc placements ringing the sensor. Each (azimuth, distance,
/// channel elevation) triple hangs the disc center on one scan channel so
/// the standard layout cuts exactly three chords: a diameter plus one chord
/// above and one below.
pub fn standard_placements() -> Vec<TargetRig> {
    const PLACEMENTS: [(f64, f64, f64); 8] = [
        (-115.0, 6.4, -1.0),
        (-87.0, 7.2, 1.0),
        (-59.0, 8.0, 3.0),
        (-31.0, 6.8, -3.0),
        (-3.0, 7.6, 1.0),
        (25.0, 8.4, 5.0),
        (53.0, 7.0, -1.0),
        (81.0, 6.6, 3.0),
    ];
    PLACEMENTS
        .iter()
        .map(|&(az_deg, dist, ch_deg)| {
            let az = az_deg.to_radians();
            let z = dist * ch_deg.to_radians().tan();
            let center = Point3::new(dist * az.cos(), dist * az.sin(), z);
            TargetRig::vertical_facing_origin(center, 0.4).expect("placement is off-axis")
        })
        .collect()
}

/// Scans several rigs with one layout, sharing a single noise stream seeded
/// once, so the dataset is a pure function of (rigs, layout, truth, noise).
/// Returns the correspondences in rig order plus the pole-skip count.
pub fn generate_dataset(
    rigs: &[TargetRig],
    layout: &ScanLayout,
    truth: &ExtrinsicPose,
    noise: &NoiseSpec,
) -> Result<(Vec<Correspondence>, usize), SynthError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for rig in rigs {
        skipped += generate_into(rig, layout, truth, noise, &mut rng, &mut out)?;
    }
    Ok((out, skipped))
}

/// The full synthetic dataset: all standard placements scanned with the
/// standard layout under `truth`.
pub fn standard_dataset(
    truth: &ExtrinsicPose,
    noise: &NoiseSpec,
) -> Result<(Vec<Correspondence>, usize), SynthError> {
    generate_dataset(&standard_placements(), &ScanLayout::standard(), truth, noise)
}
