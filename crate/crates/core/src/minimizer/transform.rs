use std::fmt;
use std::fs;
use std::ops::Mul;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Tolerance on `RᵀR = I` and `det R = 1` when accepting a rotation from
/// outside (files, user input). Accepted rotations are re-orthonormalized.
const ROTATION_INPUT_TOL: f64 = 1e-6;

/// An element of SE(3): `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Build from a rotation matrix, checking orthonormality and handedness.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ortho_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det = rotation.determinant();
        if !(ortho_err <= ROTATION_INPUT_TOL && (det - 1.0).abs() <= ROTATION_INPUT_TOL) {
            return Err(Error::InvalidArgument(format!(
                "not a rotation matrix (|RᵀR - I| = {ortho_err:e}, det = {det})"
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        }
        .orthonormalized())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation of `angle` radians about `axis` (any non-zero length).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        Self::from_rotation_vector(&(axis.normalize() * angle), translation)
    }

    /// Rotation `exp([ω]ₓ)` for the rotation vector `ω`.
    pub fn from_rotation_vector(omega: &Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: *Rotation3::new(*omega).matrix(),
            translation,
        }
    }

    /// SE(3) exponential of the twist `(ω, v)`.
    pub fn exp(omega: &Vector3<f64>, v: &Vector3<f64>) -> Self {
        let theta2 = omega.norm_squared();
        let theta = theta2.sqrt();
        let w = skew(omega);
        // Series forms below 1e-4 rad keep full precision.
        let (a, b) = if theta < 1e-4 {
            (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
        } else {
            (
                (1.0 - theta.cos()) / theta2,
                (theta - theta.sin()) / (theta2 * theta),
            )
        };
        let jacobian = Matrix3::identity() + w * a + w * w * b;
        Self {
            rotation: *Rotation3::new(*omega).matrix(),
            translation: jacobian * v,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle in `[0, π]`: `arccos((trace R − 1) / 2)`.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    pub fn translation_norm(&self) -> f64 {
        self.translation.norm()
    }

    /// Project the rotation back onto SO(3) (nearest orthonormal matrix).
    pub fn orthonormalized(&self) -> Self {
        let svd = self.rotation.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Self {
            rotation: r,
            translation: self.translation,
        }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        let expected = [0.0, 0.0, 0.0, 1.0];
        if bottom
            .iter()
            .zip(expected)
            .any(|(a, b)| (a - b).abs() > ROTATION_INPUT_TOL)
        {
            return Err(Error::InvalidArgument(format!(
                "bottom row must be 0 0 0 1, got {bottom:?}"
            )));
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    /// Parse a 4×4 row-major homogeneous matrix: 16 whitespace-separated
    /// numbers, conventionally one row per line.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut vals = Vec::with_capacity(16);
        for (ln, line) in text.lines().enumerate() {
            for tok in line.split_whitespace() {
                let v = tok
                    .parse::<f64>()
                    .map_err(|_| Error::parse(ln + 1, format!("`{tok}` is not a number")))?;
                vals.push(v);
            }
        }
        if vals.len() != 16 {
            return Err(Error::parse(
                0,
                format!("expected 16 matrix entries, found {}", vals.len()),
            ));
        }
        Self::from_matrix(&Matrix4::from_row_slice(&vals))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

/// Writes the 4×4 row-major matrix, one row per line, 17 significant digits.
impl fmt::Display for RigidTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.to_matrix();
        for r in 0..4 {
            let row: Vec<String> = (0..4).map(|c| format!("{:.16e}", m[(r, c)])).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a RigidTransform> for &'a RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &'a RigidTransform) -> RigidTransform {
        self.compose(rhs)
    }
}

pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn sample() -> RigidTransform {
        RigidTransform::from_axis_angle(
            &Vector3::new(1.0, -2.0, 0.5),
            0.7,
            Vector3::new(0.3, -1.2, 4.0),
        )
    }

    #[test]
    fn identity_and_inverse() {
        let t = sample();
        assert_eq!(t.compose(&RigidTransform::identity()), t);
        let e = t.compose(&t.inverse());
        assert!((e.rotation - Matrix3::identity()).amax() < 1e-9);
        assert!(e.translation.amax() < 1e-9);
    }

    #[test]
    fn inverse_matches_matrix_inverse() {
        let t = sample();
        let inv = t.to_matrix().try_inverse().unwrap();
        assert!((t.inverse().to_matrix() - inv).amax() < 1e-12);
    }

    #[test]
    fn quarter_turns_z_then_x() {
        let rz = RigidTransform::from_axis_angle(&Vector3::z(), FRAC_PI_2, Vector3::zeros());
        let rx = RigidTransform::from_axis_angle(&Vector3::x(), FRAC_PI_2, Vector3::zeros());
        // z first, then x: Rx · Rz.
        let c = rx.compose(&rz);
        #[rustfmt::skip]
        let expected = Matrix3::new(
            0.0, -1.0, 0.0,
            0.0,  0.0, -1.0,
            1.0,  0.0, 0.0,
        );
        assert!((c.rotation - expected).amax() < 1e-15);
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let t = sample();
        let back = RigidTransform::parse_text(&t.to_string()).unwrap();
        assert!((back.to_matrix() - t.to_matrix()).amax() < 1e-15);
        assert_eq!(t.to_string().lines().count(), 4);
    }

    #[test]
    fn rejects_non_rotations() {
        let bad = "2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";
        assert!(RigidTransform::parse_text(bad).is_err());
        let reflect = "-1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";
        assert!(RigidTransform::parse_text(reflect).is_err());
        assert!(RigidTransform::parse_text("1 0 0").is_err());
    }

    #[test]
    fn angle_of_quarter_turn() {
        let r = RigidTransform::from_axis_angle(&Vector3::z(), FRAC_PI_2, Vector3::zeros());
        assert!((r.rotation_angle() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(RigidTransform::identity().rotation_angle(), 0.0);
    }

    #[test]
    fn exp_of_pure_translation_and_small_angle_series() {
        let t = RigidTransform::exp(&Vector3::zeros(), &Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(*t.translation(), Vector3::new(1.0, 2.0, 3.0));
        // the series and closed form agree across the switch point
        let v = Vector3::new(0.3, -0.2, 0.9);
        let w = Vector3::new(1.0, 2.0, -1.0).normalize();
        let below = RigidTransform::exp(&(w * 0.999_99e-4), &v);
        let above = RigidTransform::exp(&(w * 1.000_01e-4), &v);
        assert!((below.translation - above.translation).amax() < 1e-9);
    }
}
