use nalgebra::{Matrix3, Point3, Rotation3, Vector3};

/// Placement of a primitive: `world = rotation * (scale ⊙ local) + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub scale: Vector3<f64>,
}

impl Default for Frame {
    fn default() -> Self {
        Self::identity()
    }
}

impl Frame {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros(), scale: Vector3::new(1.0, 1.0, 1.0) }
    }

    pub fn to_world(&self, local: &Point3<f64>) -> Point3<f64> {
        let scaled = local.coords.component_mul(&self.scale);
        Point3::from(self.rotation * scaled + self.translation)
    }

    /// Euler rotation about x, then y, then z.
    pub fn euler_xyz(rx: f64, ry: f64, rz: f64) -> Matrix3<f64> {
        let x = Rotation3::from_axis_angle(&Vector3::x_axis(), rx);
        let y = Rotation3::from_axis_angle(&Vector3::y_axis(), ry);
        let z = Rotation3::from_axis_angle(&Vector3::z_axis(), rz);
        (z * y * x).into_inner()
    }

    pub fn determinant_scale(&self) -> f64 {
        self.scale.x * self.scale.y * self.scale.z
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let should_be_identity = self.rotation.transpose() * self.rotation;
        (should_be_identity - Matrix3::identity()).abs().max() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn euler_order_is_x_then_y_then_z() {
        // x-rotation by 90° sends +y to +z; a following z-rotation leaves +z alone.
        let m = Frame::euler_xyz(FRAC_PI_2, 0.0, FRAC_PI_2);
        let v = m * Vector3::new(0.0, 1.0, 0.0);
        assert!((v - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        // +x: untouched by Rx, then Rz(90°) sends it to +y.
        let w = m * Vector3::new(1.0, 0.0, 0.0);
        assert!((w - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn composed_rotation_stays_orthonormal() {
        let mut f = Frame::identity();
        for i in 0..50 {
            let a = i as f64 * 0.37;
            f.rotation = Frame::euler_xyz(a, -0.5 * a, 1.3 * a) * f.rotation;
        }
        assert!(f.is_orthonormal(1e-9));
    }
}
