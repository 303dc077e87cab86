//! Small helpers around `nalgebra::Vector3<f64>`.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[inline]
pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Matrix of `w -> a x w`.
#[inline]
pub fn cross_matrix(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Projects onto the unit sphere; the zero vector is returned unchanged.
#[inline]
pub fn normalize_or_keep(v: &Vec3) -> Vec3 {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        *v
    }
}

/// Some unit vector orthogonal to `v` (deterministic).
pub fn any_orthogonal(v: &Vec3) -> Vec3 {
    let a = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    normalize_or_keep(&v.cross(&a))
}

/// Great-circle interpolation between `a` and `b`, with the radius
/// interpolated linearly so that off-sphere endpoints are reproduced.
pub fn slerp(a: &Vec3, b: &Vec3, s: f64) -> Vec3 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return a * (1.0 - s) + b * s;
    }
    let (ua, ub) = (a / na, b / nb);
    let radius = (1.0 - s) * na + s * nb;
    let cos = ua.dot(&ub).clamp(-1.0, 1.0);
    if (ua - ub).norm() == 0.0 {
        return ua * radius;
    }
    let angle = cos.acos();
    if angle < 1e-8 {
        return normalize_or_keep(&(ua * (1.0 - s) + ub * s)) * radius;
    }
    let axis = if std::f64::consts::PI - angle < 1e-8 {
        any_orthogonal(&ua)
    } else {
        normalize_or_keep(&(ub - ua * cos))
    };
    let phi = s * angle;
    (ua * phi.cos() + axis * phi.sin()) * radius
}
