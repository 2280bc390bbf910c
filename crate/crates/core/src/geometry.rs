//! Rigid-body pose, zxz Euler rotations, the spherical panorama projection
//! model, and its preprocessed arctangent form.
//!
//! Conventions, fixed once here and relied on everywhere else:
//! - Rotation composition is intrinsic `Rz(alpha) * Rx(beta) * Rz(gamma)`
//!   with right-handed elementary rotations.
//! - `transform` maps LiDAR-frame points into the camera frame,
//!   `X_c = R * X_l + T`.
//! - Pixel ratios: `u = (pi - atan2(y, x)) / 2pi` grows rightward from the
//!   back seam, `v = (pi - 2 atan(z / sqrt(x^2 + y^2))) / 2pi` grows downward
//!   from the north pole. Both are dimensionless fractions of the image size.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Point3 = nalgebra::Point3<f64>;

/// Squared distance from the vertical axis below which projection is refused.
pub const EPS_POLE: f64 = 1e-12;

/// x below which the arctangent branch of the h-form is refused (the branch
/// only covers the camera-front half space x > 0).
pub const EPS_BRANCH: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeomError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("point is on the vertical axis (x^2 + y^2 <= {EPS_POLE}); projection undefined")]
    PoleSingularity,
    #[error("point has x <= {EPS_BRANCH}; outside the arctangent branch domain")]
    BranchDomain,
    #[error("squared h-form needs h2 >= 0, got {0}")]
    NegativeH2(f64),
    #[error("pixel ratio out of range: u={u}, v={v} (need 0 <= u < 1, 0 < v < 1)")]
    PixelRatioRange { u: f64, v: f64 },
}

/// zxz Euler angles in radians, describing `Rz(alpha) * Rx(beta) * Rz(gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerZXZ {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerZXZ {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, GeomError> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(GeomError::NonFinite("Euler angle"));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// Equivalent angles with alpha, gamma in [0, 2pi) and beta in [0, pi].
    ///
    /// Uses the identity `Rz(a) Rx(-b) Rz(g) = Rz(a+pi) Rx(b) Rz(g+pi)`, so
    /// the rotation matrix is unchanged to rounding error.
    pub fn normalized(&self) -> Self {
        let beta = wrap_tau(self.beta);
        if beta <= PI {
            Self {
                alpha: wrap_tau(self.alpha),
                beta,
                gamma: wrap_tau(self.gamma),
            }
        } else {
            Self {
                alpha: wrap_tau(self.alpha + PI),
                beta: TAU - beta,
                gamma: wrap_tau(self.gamma + PI),
            }
        }
    }
}

/// Wraps into [0, 2pi). `rem_euclid` can round up to exactly 2pi for tiny
/// negative inputs, hence the second reduction.
fn wrap_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        r - TAU
    } else {
        r
    }
}

/// The six learnable parameters: rotation angles plus translation in meters.
/// Maps LiDAR-frame points into the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrinsicPose {
    pub rotation: EulerZXZ,
    pub translation: Vector3<f64>,
}

impl ExtrinsicPose {
    pub fn new(rotation: EulerZXZ, translation: Vector3<f64>) -> Result<Self, GeomError> {
        if !(translation.x.is_finite() && translation.y.is_finite() && translation.z.is_finite()) {
            return Err(GeomError::NonFinite("translation component"));
        }
        EulerZXZ::new(rotation.alpha, rotation.beta, rotation.gamma)?;
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self {
            rotation: EulerZXZ { alpha: 0.0, beta: 0.0, gamma: 0.0 },
            translation: Vector3::zeros(),
        }
    }

    /// Parameter vector in the fixed order (alpha, beta, gamma, b1, b2, b3).
    pub fn params(&self) -> [f64; 6] {
        [
            self.rotation.alpha,
            self.rotation.beta,
            self.rotation.gamma,
            self.translation.x,
            self.translation.y,
            self.translation.z,
        ]
    }

    pub fn from_params(p: [f64; 6]) -> Result<Self, GeomError> {
        Self::new(EulerZXZ::new(p[0], p[1], p[2])?, Vector3::new(p[3], p[4], p[5]))
    }

    /// Pose with the same rotation matrix and angles in canonical ranges.
    pub fn normalized(&self) -> Self {
        Self { rotation: self.rotation.normalized(), translation: self.translation }
    }
}

/// Dimensionless image coordinates, u in [0, 1) and v in (0, 1).
/// Conversion to pixels happens only where an image size is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanoPixelRatio {
    u: f64,
    v: f64,
}

impl PanoPixelRatio {
    pub fn new(u: f64, v: f64) -> Result<Self, GeomError> {
        if !(0.0..1.0).contains(&u) || !(v > 0.0 && v < 1.0) {
            return Err(GeomError::PixelRatioRange { u, v });
        }
        Ok(Self { u, v })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Which arctangent preprocessing the model output runs through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// h2 = z^2 / (x^2 + y^2). Squaring discards the sign of z, so this form
    /// is faithful only for points at or above the camera's horizontal plane.
    Squared,
    /// h2 = z / sqrt(x^2 + y^2). Keeps the sign of z and is valid on the
    /// whole x > 0 branch; the default for training.
    #[default]
    Signed,
}

/// Preprocessed projection output. `h1 = y / x` always; the meaning of `h2`
/// depends on the [`Variant`] that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HForm {
    pub h1: f64,
    pub h2: f64,
}

/// Rotation matrix for zxz Euler angles: `Rz(alpha) * Rx(beta) * Rz(gamma)`.
pub fn rotation_matrix(e: &EulerZXZ) -> Result<Matrix3<f64>, GeomError> {
    if !(e.alpha.is_finite() && e.beta.is_finite() && e.gamma.is_finite()) {
        return Err(GeomError::NonFinite("Euler angle"));
    }
    Ok(rot_z(e.alpha) * rot_x(e.beta) * rot_z(e.gamma))
}

pub(crate) fn rot_z(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub(crate) fn rot_x(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// LiDAR frame to camera frame: `R * p + T`.
pub fn transform(p: &Point3, pose: &ExtrinsicPose) -> Result<Point3, GeomError> {
    let r = rotation_matrix(&pose.rotation)?;
    Ok(Point3::from(r * p.coords + pose.translation))
}

/// Camera-frame point to pixel ratios on the equirectangular panorama.
pub fn project(p: &Point3) -> Result<PanoPixelRatio, GeomError> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(GeomError::NonFinite("point component"));
    }
    let rho2 = p.x * p.x + p.y * p.y;
    if rho2 <= EPS_POLE {
        return Err(GeomError::PoleSingularity);
    }
    let mut u = (PI - p.y.atan2(p.x)) / TAU;
    // atan2(-0.0, x<0) = -pi puts u at exactly 1; same ray as u = 0.
    if u >= 1.0 {
        u -= 1.0;
    }
    let v = (PI - 2.0 * (p.z / rho2.sqrt()).atan()) / TAU;
    Ok(PanoPixelRatio { u, v })
}

/// Unit direction in the camera frame whose projection is `px`.
pub fn unproject(px: &PanoPixelRatio) -> Point3 {
    let phi = PI - TAU * px.u();
    let elev = FRAC_PI_2 - PI * px.v();
    let (se, ce) = elev.sin_cos();
    Point3::new(ce * phi.cos(), ce * phi.sin(), se)
}

/// Arctangent-branch preprocessing of a camera-frame point.
///
/// The guard is one-sided: arctan(y/x) agrees with atan2(y, x) only for
/// x > 0, so points at or behind the camera's x = 0 plane are outside the
/// domain. This also removes the mirror pose (all signs of x flipped) that
/// would otherwise fit the same h values.
pub fn h_form(p: &Point3, variant: Variant) -> Result<HForm, GeomError> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(GeomError::NonFinite("point component"));
    }
    let rho2 = p.x * p.x + p.y * p.y;
    if rho2 <= EPS_POLE {
        return Err(GeomError::PoleSingularity);
    }
    if p.x <= EPS_BRANCH {
        return Err(GeomError::BranchDomain);
    }
    let h1 = p.y / p.x;
    let h2 = match variant {
        Variant::Squared => p.z * p.z / rho2,
        Variant::Signed => p.z / rho2.sqrt(),
    };
    Ok(HForm { h1, h2 })
}

/// Pixel ratios from an h-form. On the x > 0 branch this agrees with
/// [`project`]; the squared variant additionally needs z >= 0.
pub fn reconstruct_uv(h: &HForm, variant: Variant) -> Result<PanoPixelRatio, GeomError> {
    if !(h.h1.is_finite() && h.h2.is_finite()) {
        return Err(GeomError::NonFinite("h component"));
    }
    let u = (PI - h.h1.atan()) / TAU;
    let v = match variant {
        Variant::Squared => {
            if h.h2 < 0.0 {
                return Err(GeomError::NegativeH2(h.h2));
            }
            (FRAC_PI_2 - h.h2.sqrt().atan()) / PI
        }
        Variant::Signed => (FRAC_PI_2 - h.h2.atan()) / PI,
    };
    Ok(PanoPixelRatio { u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pose(a: f64, b: f64, g: f64, t: [f64; 3]) -> ExtrinsicPose {
        ExtrinsicPose::from_params([a, b, g, t[0], t[1], t[2]]).unwrap()
    }

    #[test]
    fn rotation_identity_for_zero_angles() {
        let r = rotation_matrix(&EulerZXZ { alpha: 0.0, beta: 0.0, gamma: 0.0 }).unwrap();
        assert_relative_eq!(r, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_single_axis_cases() {
        let r = rotation_matrix(&EulerZXZ { alpha: FRAC_PI_2, beta: 0.0, gamma: 0.0 }).unwrap();
        let v = r * Vector3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(v, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);

        let r = rotation_matrix(&EulerZXZ { alpha: 0.0, beta: FRAC_PI_2, gamma: 0.0 }).unwrap();
        let v = r * Vector3::new(0.0, 1.0, 0.0);
        assert_relative_eq!(v, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn rotation_matches_reference_evaluation() {
        // Entries computed independently (numpy, same composition order) and
        // frozen; guards both the convention and its numeric evaluation.
        let r = rotation_matrix(&EulerZXZ { alpha: 4.7112, beta: 0.8932, gamma: 1.8420 }).unwrap();
        let expect = Matrix3::new(
            6.043_257_248_527_512_7e-1,
            -1.668_013_621_218_910_6e-1,
            -7.790_813_332_865_052_0e-1,
            2.671_729_659_726_453_4e-1,
            9.636_481_454_337_290_1e-1,
            9.263_128_598_574_261_4e-4,
            7.506_057_717_168_024_3e-1,
            -2.087_092_652_385_523_5e-1,
            6.269_221_786_386_306_4e-1,
        );
        assert_relative_eq!(r, expect, epsilon = 1e-12);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_is_orthonormal_for_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let e = EulerZXZ {
                alpha: rng.random_range(-10.0..10.0),
                beta: rng.random_range(-10.0..10.0),
                gamma: rng.random_range(-10.0..10.0),
            };
            let r = rotation_matrix(&e).unwrap();
            let err = (r * r.transpose() - Matrix3::identity()).abs().max();
            assert!(err < 1e-10, "R R^T deviates from I by {err} at {e:?}");
            assert!((r.determinant() - 1.0).abs() < 1e-10, "det != 1 at {e:?}");
        }
    }

    #[test]
    fn rotation_rejects_non_finite_angles() {
        assert_eq!(
            rotation_matrix(&EulerZXZ { alpha: f64::NAN, beta: 0.0, gamma: 0.0 }),
            Err(GeomError::NonFinite("Euler angle"))
        );
    }

    #[test]
    fn normalized_keeps_rotation_and_canonical_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2_000 {
            let e = EulerZXZ {
                alpha: rng.random_range(-12.0..12.0),
                beta: rng.random_range(-12.0..12.0),
                gamma: rng.random_range(-12.0..12.0),
            };
            let n = e.normalized();
            assert!((0.0..TAU).contains(&n.alpha), "alpha out of range: {n:?}");
            assert!((0.0..=PI).contains(&n.beta), "beta out of range: {n:?}");
            assert!((0.0..TAU).contains(&n.gamma), "gamma out of range: {n:?}");
            let before = rotation_matrix(&e).unwrap();
            let after = rotation_matrix(&n).unwrap();
            assert_relative_eq!(before, after, epsilon = 1e-12);
        }
    }

    #[test]
    fn transform_identity_and_translation() {
        let p = Point3::new(1.0, 2.0, 3.0);
        let got = transform(&p, &ExtrinsicPose::identity()).unwrap();
        assert_relative_eq!(got, p, epsilon = 1e-15);

        let got = transform(&Point3::origin(), &pose(0.0, 0.0, 0.0, [1.0, 2.0, 3.0])).unwrap();
        assert_relative_eq!(got, Point3::new(1.0, 2.0, 3.0), epsilon = 1e-15);
    }

    #[test]
    fn transform_of_origin_yields_translation_for_any_rotation() {
        let got = transform(
            &Point3::origin(),
            &pose(4.7112, 0.8932, 1.8420, [2.8673, 0.6389, -1.7732]),
        )
        .unwrap();
        assert_relative_eq!(got, Point3::new(2.8673, 0.6389, -1.7732), epsilon = 1e-15);
    }

    #[test]
    fn transform_is_exactly_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1_000 {
            let ps = pose(
                rng.random_range(0.0..TAU),
                rng.random_range(0.0..PI),
                rng.random_range(0.0..TAU),
                [
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                ],
            );
            let p = Point3::new(
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
            );
            let fwd = transform(&p, &ps).unwrap();
            let r = rotation_matrix(&ps.rotation).unwrap();
            let back = Point3::from(r.transpose() * (fwd.coords - ps.translation));
            assert_relative_eq!(back, p, epsilon = 1e-10);
        }
    }

    #[test]
    fn project_axis_examples() {
        let px = project(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(px.u(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(px.v(), 0.5, epsilon = 1e-15);

        let px = project(&Point3::new(0.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(px.u(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(px.v(), 0.5, epsilon = 1e-15);

        let px = project(&Point3::new(1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(px.u(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(px.v(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn project_rejects_vertical_axis() {
        assert_eq!(project(&Point3::new(0.0, 0.0, 1.0)), Err(GeomError::PoleSingularity));
    }

    #[test]
    fn project_wraps_back_seam_to_zero() {
        // atan2(-0.0, -1.0) = -pi; u must wrap to 0, not land on 1.
        let px = project(&Point3::new(-1.0, -0.0, 0.0)).unwrap();
        assert_eq!(px.u(), 0.0, "back seam should map to u = 0");
    }

    #[test]
    fn project_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..1_000 {
            let p = Point3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            if p.x * p.x + p.y * p.y <= 1e-6 {
                continue;
            }
            let s = rng.random_range(0.1..100.0);
            let a = project(&p).unwrap();
            let b = project(&Point3::from(p.coords * s)).unwrap();
            assert_relative_eq!(a.u(), b.u(), epsilon = 1e-12);
            assert_relative_eq!(a.v(), b.v(), epsilon = 1e-12);
        }
    }

    #[test]
    fn unproject_axis_examples() {
        let d = unproject(&PanoPixelRatio::new(0.5, 0.5).unwrap());
        assert_relative_eq!(d, Point3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        let d = unproject(&PanoPixelRatio::new(0.25, 0.5).unwrap());
        assert_relative_eq!(d, Point3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn project_unproject_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10_000 {
            let px = PanoPixelRatio::new(
                rng.random_range(0.0..1.0),
                rng.random_range(1e-6..(1.0 - 1e-6)),
            )
            .unwrap();
            let d = unproject(&px);
            assert_relative_eq!(d.coords.norm(), 1.0, epsilon = 1e-12);
            let back = project(&d).unwrap();
            assert!(
                (back.u() - px.u()).abs() < 1e-12 && (back.v() - px.v()).abs() < 1e-12,
                "round trip drifted: {px:?} -> {back:?}"
            );
        }
    }

    #[test]
    fn h_form_examples() {
        let h = h_form(&Point3::new(1.0, 1.0, 0.0), Variant::Squared).unwrap();
        assert_relative_eq!(h.h1, 1.0, epsilon = 1e-15);
        assert_relative_eq!(h.h2, 0.0, epsilon = 1e-15);

        let h = h_form(&Point3::new(1.0, 0.0, 1.0), Variant::Squared).unwrap();
        assert_relative_eq!(h.h1, 0.0, epsilon = 1e-15);
        assert_relative_eq!(h.h2, 1.0, epsilon = 1e-15);

        assert_eq!(
            h_form(&Point3::new(0.0, 1.0, 0.0), Variant::Squared),
            Err(GeomError::BranchDomain)
        );
        assert_eq!(
            h_form(&Point3::new(-1.0, 1.0, 0.0), Variant::Signed),
            Err(GeomError::BranchDomain),
            "points behind the x = 0 plane are outside the branch"
        );
    }

    #[test]
    fn h_form_matches_tangent_identities_on_upper_front_octants() {
        // For x > 0, z > 0: h1 = tan(pi - 2 pi u) and h2 = tan^2(pi/2 - pi v).
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..2_000 {
            let p = Point3::new(
                rng.random_range(0.1..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(0.01..5.0),
            );
            let px = project(&p).unwrap();
            let h = h_form(&p, Variant::Squared).unwrap();
            let t1 = (PI - TAU * px.u()).tan();
            let t2 = (FRAC_PI_2 - PI * px.v()).tan();
            assert_relative_eq!(h.h1, t1, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(h.h2, t2 * t2, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn reconstruct_center_example() {
        let px = reconstruct_uv(&HForm { h1: 0.0, h2: 0.0 }, Variant::Squared).unwrap();
        assert_relative_eq!(px.u(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(px.v(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn reconstruct_rejects_negative_h2_in_squared_mode() {
        assert_eq!(
            reconstruct_uv(&HForm { h1: 0.0, h2: -0.5 }, Variant::Squared),
            Err(GeomError::NegativeH2(-0.5))
        );
    }

    #[test]
    fn branch_agreement_with_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5_000 {
            let x = rng.random_range(0.05..8.0);
            let y = rng.random_range(-8.0..8.0);
            let z_pos = rng.random_range(0.001..8.0);
            let z_any = rng.random_range(-8.0..8.0);

            // Squared variant: valid for z > 0.
            let p = Point3::new(x, y, z_pos);
            let direct = project(&p).unwrap();
            let via_h = reconstruct_uv(&h_form(&p, Variant::Squared).unwrap(), Variant::Squared)
                .unwrap();
            assert!((direct.u() - via_h.u()).abs() < 1e-12, "u branch mismatch at {p:?}");
            assert!((direct.v() - via_h.v()).abs() < 1e-12, "v branch mismatch at {p:?}");

            // Signed variant: valid for any z.
            let p = Point3::new(x, y, z_any);
            let direct = project(&p).unwrap();
            let via_h =
                reconstruct_uv(&h_form(&p, Variant::Signed).unwrap(), Variant::Signed).unwrap();
            assert!((direct.u() - via_h.u()).abs() < 1e-12, "u signed mismatch at {p:?}");
            assert!((direct.v() - via_h.v()).abs() < 1e-12, "v signed mismatch at {p:?}");
        }
    }

    #[test]
    fn squared_variant_mirrors_lower_hemisphere() {
        // With z < 0 the squared form reconstructs the mirrored upper point,
        // while the signed form stays faithful.
        let p = Point3::new(2.0, 0.5, -1.0);
        let direct = project(&p).unwrap();
        let squared =
            reconstruct_uv(&h_form(&p, Variant::Squared).unwrap(), Variant::Squared).unwrap();
        let signed =
            reconstruct_uv(&h_form(&p, Variant::Signed).unwrap(), Variant::Signed).unwrap();
        assert!((squared.v() - direct.v()).abs() > 0.1, "squared form should not match below z=0");
        assert_relative_eq!(squared.v(), 1.0 - direct.v(), epsilon = 1e-12);
        assert!((signed.v() - direct.v()).abs() < 1e-12, "signed form must match below z=0");
    }

    #[test]
    fn pixel_ratio_rejects_out_of_range() {
        assert!(PanoPixelRatio::new(1.0, 0.5).is_err());
        assert!(PanoPixelRatio::new(-0.1, 0.5).is_err());
        assert!(PanoPixelRatio::new(0.5, 0.0).is_err());
        assert!(PanoPixelRatio::new(0.5, 1.0).is_err());
        assert!(PanoPixelRatio::new(0.0, 0.5).is_ok());
    }

    #[test]
    fn pose_params_round_trip() {
        let p = pose(0.1, 0.2, 0.3, [1.0, -2.0, 3.0]);
        assert_eq!(ExtrinsicPose::from_params(p.params()).unwrap(), p);
        assert!(ExtrinsicPose::from_params([f64::INFINITY, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }
}
