//! Rigid-body math for the tool frame: rotations stored as 3x3 matrices,
//! poses as rotation + translation, and the planar-axis exponential used by
//! the rotational alignment step.

use core::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::math;

/// Vectors in the world or tool frame. Units depend on use.
pub type Vec3 = Vector3<f64>;

/// Tolerance on `|axis| = 1` accepted by [`skew`].
pub const UNIT_AXIS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum Se3Error {
    #[error("axis must have unit length, got |axis| = {0}")]
    NonUnitAxis(f64),
    #[error("axis must lie in the tool x-y plane, got z = {0}")]
    NonPlanarAxis(f64),
}

/// Skew-symmetric matrix of an in-plane unit axis `[w1, w2, 0]`.
///
/// Only the entries of the planar layout are populated; the z column of the
/// general cross-product matrix is zero because `w3 = 0`.
pub fn skew(axis: &Vec3) -> Result<Matrix3<f64>, Se3Error> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > UNIT_AXIS_TOLERANCE {
        return Err(Se3Error::NonUnitAxis(norm));
    }
    if axis.z != 0.0 {
        return Err(Se3Error::NonPlanarAxis(axis.z));
    }
    let (w1, w2) = (axis.x, axis.y);
    #[rustfmt::skip]
    let s = Matrix3::new(
        0.0, 0.0, w2,
        0.0, 0.0, -w1,
        -w2, w1,  0.0,
    );
    Ok(s)
}

fn cross_matrix(v: &Vec3) -> Matrix3<f64> {
    #[rustfmt::skip]
    let m = Matrix3::new(
        0.0, -v.z, v.y,
        v.z, 0.0, -v.x,
        -v.y, v.x, 0.0,
    );
    m
}

/// A proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix without checking orthonormality.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    /// Rotation about the world z axis.
    pub fn about_z(angle: f64) -> Self {
        rot_exp(&Vec3::z(), angle)
    }

    pub fn about_x(angle: f64) -> Self {
        rot_exp(&Vec3::x(), angle)
    }

    /// Rotation whose third column is `z_axis`, with the first column taken
    /// from `x_hint` projected onto the orthogonal plane.
    ///
    /// Falls back to another hint when `x_hint` is parallel to `z_axis`.
    pub fn from_z_axis(z_axis: &Vec3, x_hint: &Vec3) -> Self {
        let z = z_axis.normalize();
        let mut x = x_hint - z * z.dot(x_hint);
        if x.norm() < 1e-9 {
            let alt = if z.x.abs() < 0.9 {
                Vec3::x()
            } else {
                Vec3::y()
            };
            x = alt - z * z.dot(&alt);
        }
        let x = x.normalize();
        let y = z.cross(&x);
        Rotation(Matrix3::from_columns(&[x, y, z]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let axis_sin = Vec3::new(
            self.0[(2, 1)] - self.0[(1, 2)],
            self.0[(0, 2)] - self.0[(2, 0)],
            self.0[(1, 0)] - self.0[(0, 1)],
        )
        .norm()
            * 0.5;
        let cos = (self.0.trace() - 1.0) * 0.5;
        math::atan2(axis_sin, cos)
    }

    /// Rotation vector (axis times angle). Accurate away from angle = pi.
    pub fn log(&self) -> Vec3 {
        let v = Vec3::new(
            self.0[(2, 1)] - self.0[(1, 2)],
            self.0[(0, 2)] - self.0[(2, 0)],
            self.0[(1, 0)] - self.0[(0, 1)],
        ) * 0.5;
        let sin = v.norm();
        let angle = self.angle();
        if sin < 1e-12 {
            if angle < 1.0 {
                return v;
            }
            // Near pi: axis from the symmetric part.
            let b = (self.0 + Matrix3::identity()) * 0.5;
            let mut best = 0;
            for i in 1..3 {
                if b[(i, i)] > b[(best, best)] {
                    best = i;
                }
            }
            let col: Vec3 = b.column(best).into_owned();
            return col.normalize() * angle;
        }
        v * (angle / sin)
    }

    /// Largest deviation from orthonormality and from unit determinant.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let gram = self.0.transpose() * self.0 - Matrix3::identity();
        let ortho = gram.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        (ortho, (self.0.determinant() - 1.0).abs())
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Rotation by `angle` (rad) about the unit `axis`, in closed form.
///
/// `axis` must have unit length; this is not checked.
pub fn rot_exp(axis: &Vec3, angle: f64) -> Rotation {
    let k = cross_matrix(axis);
    let (s, c) = (math::sin(angle), math::cos(angle));
    Rotation(Matrix3::identity() + k * s + (k * k) * (1.0 - c))
}

/// Tool pose in the world frame. The tool origin is the lip-plane center `O`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Pose::new(Rotation::identity(), t)
    }

    /// `self * increment`: applies an increment expressed in this pose's frame.
    pub fn compose(&self, increment: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * increment.rotation,
            translation: self.translation + self.rotation.apply(&increment.translation),
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -rt.apply(&self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation.apply(v)
    }

    /// Tool z axis expressed in the world frame.
    pub fn z_axis(&self) -> Vec3 {
        self.rotation.column(2)
    }
}

/// Homogeneous increment with rotation block `r` and translation
/// `[dlx, dly, dlz]`, both expressed in the tool frame about `O`.
pub fn compose_transform(r: Rotation, dlx: f64, dly: f64, dlz: f64) -> Pose {
    Pose::new(r, Vec3::new(dlx, dly, dlz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    /// Truncated power series of `exp(angle * S)`; independent of Rodrigues.
    fn series_exp(s: &Matrix3<f64>, angle: f64, terms: usize) -> Matrix3<f64> {
        let a = s * angle;
        let mut sum = Matrix3::identity();
        let mut term = Matrix3::identity();
        for n in 1..terms {
            term = term * a / n as f64;
            sum += term;
        }
        sum
    }

    fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn skew_planar_layout() {
        let s = skew(&Vec3::x()).unwrap();
        assert_eq!(s[(1, 2)], -1.0);
        assert_eq!(s[(2, 1)], 1.0);
        assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 2);

        let s = skew(&Vec3::y()).unwrap();
        assert_eq!(s[(0, 2)], 1.0);
        assert_eq!(s[(2, 0)], -1.0);
        assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn skew_rejects_bad_axes() {
        assert!(matches!(
            skew(&Vec3::zeros()),
            Err(Se3Error::NonUnitAxis(_))
        ));
        assert!(matches!(
            skew(&Vec3::new(2.0, 0.0, 0.0)),
            Err(Se3Error::NonUnitAxis(_))
        ));
        assert!(matches!(skew(&Vec3::z()), Err(Se3Error::NonPlanarAxis(_))));
    }

    #[test]
    fn zero_angle_is_identity() {
        let a = Vec3::new(0.6, 0.8, 0.0);
        assert_eq!(rot_exp(&a, 0.0), Rotation::identity());
    }

    #[test]
    fn quarter_turn_about_x_matches_series() {
        let r = rot_exp(&Vec3::x(), PI / 2.0);
        let oracle = series_exp(&skew(&Vec3::x()).unwrap(), PI / 2.0, 40);
        assert!(max_abs_diff(r.matrix(), &oracle) < 1e-12);
        // Frozen from the series oracle: y maps to +z.
        let y = r.apply(&Vec3::y());
        assert!((y - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn half_degree_about_y_matches_series() {
        let angle = 0.5_f64.to_radians();
        let r = rot_exp(&Vec3::y(), angle);
        let oracle = series_exp(&skew(&Vec3::y()).unwrap(), angle, 20);
        assert!(max_abs_diff(r.matrix(), &oracle) < 1e-12);
    }

    #[test]
    fn compose_transform_examples() {
        assert_eq!(
            compose_transform(Rotation::identity(), 0.0, 0.0, 0.0),
            Pose::identity()
        );
        let t = compose_transform(Rotation::identity(), 5e-4, 0.0, 0.0);
        assert_eq!(t.translation, Vec3::new(5e-4, 0.0, 0.0));
        let r = rot_exp(&Vec3::x(), 0.5_f64.to_radians());
        let t = compose_transform(r, 0.0, 0.0, 0.0);
        assert_eq!(t.translation, Vec3::zeros());
        assert!((t.rotation.angle() - 0.5_f64.to_radians()).abs() < 1e-14);
    }

    #[test]
    fn pose_compose_rotates_about_origin() {
        let start = Pose::from_translation(Vec3::new(1.0, 2.0, 3.0));
        let inc = compose_transform(rot_exp(&Vec3::x(), 0.3), 0.0, 0.0, 0.0);
        let next = start.compose(&inc);
        assert_eq!(next.translation, start.translation);
        let back = next.compose(&inc.inverse());
        assert!((back.rotation.matrix() - Matrix3::identity()).norm() < 1e-14);
    }

    #[test]
    fn log_recovers_rotation_vector() {
        let axis = Vec3::new(0.0, 0.6, 0.8);
        for angle in [1e-6, 0.2, 1.5, 3.0] {
            let v = rot_exp(&axis, angle).log();
            assert!((v - axis * angle).norm() < 1e-9, "angle {angle}");
        }
    }

    fn planar_axis() -> impl Strategy<Value = Vec3> {
        (0.0..2.0 * PI).prop_map(|t| Vec3::new(libm::cos(t), libm::sin(t), 0.0))
    }

    proptest! {
        #[test]
        fn inverse_angle_cancels(a in planar_axis(), th in -PI..PI) {
            let p = rot_exp(&a, th) * rot_exp(&a, -th);
            prop_assert!((p.matrix() - Matrix3::identity()).iter().all(|x| x.abs() < 1e-9));
        }

        #[test]
        fn axis_is_fixed(a in planar_axis(), th in -PI..PI) {
            prop_assert!((rot_exp(&a, th).apply(&a) - a).norm() < 1e-9);
        }

        #[test]
        fn skew_is_antisymmetric(a in planar_axis()) {
            let s = skew(&a).unwrap();
            prop_assert_eq!(s + s.transpose(), Matrix3::zeros());
        }

        #[test]
        fn small_steps_add_up(a in planar_axis(), th in -0.02..0.02f64, n in 1usize..200) {
            let step = rot_exp(&a, th);
            let mut acc = Rotation::identity();
            for _ in 0..n {
                acc = acc * step;
            }
            let direct = rot_exp(&a, th * n as f64);
            let err = max_abs_diff(acc.matrix(), direct.matrix());
            prop_assert!(err <= n as f64 * 1e-10, "err {err}");
        }
    }
}
