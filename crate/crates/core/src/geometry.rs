//! Rigid transforms in SE(3), closed-form registration of point
//! correspondences and translation/rotation error metrics.

use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point in a named Cartesian frame, in meters.
pub type Point3 = nalgebra::Point3<f64>;

/// Per-entry tolerance for orthonormality and determinant checks.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Ratio of the second to first source-covariance eigenvalue below which
/// the source points are treated as collinear.
pub const COLLINEARITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least 3 correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("source points are degenerate (collinear or coincident)")]
    DegenerateGeometry,
    #[error("non-finite coordinate in correspondence {0}")]
    NonFinite(usize),
    #[error("empty correspondence set")]
    EmptyCorrespondences,
    #[error("matrix is not a proper rotation (max orthonormality error {orthonormality:e}, det {det})")]
    InvalidRotation { orthonormality: f64, det: f64 },
    #[error("non-finite translation")]
    NonFiniteTranslation,
}

/// An element of SE(3): `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, checking that `rotation` is orthonormal with
    /// determinant +1 to within [`ROTATION_TOLERANCE`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFiniteTranslation);
        }
        let orthonormality = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det = rotation.determinant();
        if !(orthonormality <= ROTATION_TOLERANCE) || !((det - 1.0).abs() <= ROTATION_TOLERANCE) {
            return Err(GeometryError::InvalidRotation { orthonormality, det });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Builds a transform from a (not necessarily normalized) quaternion
    /// `w + xi + yj + zk`. Returns `None` for a zero quaternion.
    pub fn from_quaternion(q: [f64; 4], translation: Vector3<f64>) -> Option<Self> {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        let unit = UnitQuaternion::from_quaternion(quat);
        Some(Self {
            rotation: unit.to_rotation_matrix().into_inner(),
            translation,
        })
    }

    /// Axis-angle rotation plus translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self {
            rotation: rot.into_inner(),
            translation,
        }
    }

    /// Uniformly random rotation (Shoemake's method) with a translation
    /// drawn uniformly from `[-translation_extent, translation_extent]³`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, translation_extent: f64) -> Self {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let u3: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        let q = [b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin()];
        let t = Vector3::from_fn(|_, _| {
            if translation_extent > 0.0 {
                rng.random_range(-translation_extent..=translation_extent)
            } else {
                0.0
            }
        });
        Self::from_quaternion(q, t).expect("unit quaternion")
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Unit quaternion `[w, x, y, z]` with `w ≥ 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot).into_inner();
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }

    /// Homogeneous 4×4 matrix `[R t; 0 1]`.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn apply(&self, point: &Point3) -> Point3 {
        Point3::from(self.rotation * point.coords + self.translation)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Largest absolute entry of the difference of the homogeneous matrices.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        (self.to_homogeneous() - other.to_homogeneous()).amax()
    }
}

/// Free-function forms mirroring the method API.
pub fn apply(transform: &RigidTransform, point: &Point3) -> Point3 {
    transform.apply(point)
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

/// Ordered `(source, target)` point pairs; non-empty with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceSet {
    pairs: Vec<(Point3, Point3)>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<(Point3, Point3)>) -> Result<Self, GeometryError> {
        if pairs.is_empty() {
            return Err(GeometryError::EmptyCorrespondences);
        }
        for (i, (a, b)) in pairs.iter().enumerate() {
            if !a.coords.iter().chain(b.coords.iter()).all(|v| v.is_finite()) {
                return Err(GeometryError::NonFinite(i));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(Point3, Point3)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Sum of squared residuals `Σ ‖b − (R a + t)‖²`.
    pub fn sum_squared_residuals(&self, transform: &RigidTransform) -> f64 {
        self.pairs
            .iter()
            .map(|(a, b)| (b - transform.apply(a)).norm_squared())
            .sum()
    }

    pub fn residual_rms(&self, transform: &RigidTransform) -> f64 {
        (self.sum_squared_residuals(transform) / self.pairs.len() as f64).sqrt()
    }
}

fn centroid<'a>(points: impl Iterator<Item = &'a Point3>) -> Vector3<f64> {
    let mut sum = Vector3::zeros();
    let mut n = 0usize;
    for p in points {
        sum += p.coords;
        n += 1;
    }
    sum / n as f64
}

/// Least-squares rigid alignment of `source → target` (Arun et al.):
/// centroid subtraction, SVD of the 3×3 cross-covariance, and a sign flip
/// on the singular vector of the smallest singular value when the raw
/// solution is a reflection.
pub fn estimate_rigid_transform(
    correspondences: &CorrespondenceSet,
) -> Result<RigidTransform, GeometryError> {
    let pairs = correspondences.pairs();
    if pairs.len() < 3 {
        return Err(GeometryError::TooFewCorrespondences(pairs.len()));
    }

    let src_centroid = centroid(pairs.iter().map(|(a, _)| a));
    let dst_centroid = centroid(pairs.iter().map(|(_, b)| b));

    let mut cross = Matrix3::zeros();
    let mut src_cov = Matrix3::zeros();
    for (a, b) in pairs {
        let da = a.coords - src_centroid;
        let db = b.coords - dst_centroid;
        cross += da * db.transpose();
        src_cov += da * da.transpose();
    }

    let mut eig = src_cov.symmetric_eigen().eigenvalues;
    eig.as_mut_slice().sort_by(|x, y| y.total_cmp(x));
    if !(eig[0] > 0.0) || eig[1] < COLLINEARITY_TOLERANCE * eig[0] {
        return Err(GeometryError::DegenerateGeometry);
    }

    // identical clouds: the answer is exact, skip SVD round-off
    if pairs.iter().all(|(a, b)| a == b) {
        return Ok(RigidTransform::identity());
    }

    // cross = U Σ Vᵀ, R = V Uᵀ
    let svd = cross.svd(true, true);
    let u = svd.u.expect("U requested");
    let v = svd.v_t.expect("Vᵀ requested").transpose();
    let mut rotation = v * u.transpose();
    if rotation.determinant() < 0.0 {
        let smallest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .unwrap_or(2);
        let mut v_fixed = v;
        v_fixed.column_mut(smallest).neg_mut();
        rotation = v_fixed * u.transpose();
    }

    let translation = dst_centroid - rotation * src_centroid;
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

/// Euclidean norm of the translation difference, in meters.
pub fn translation_rmse(estimated: &RigidTransform, reference: &RigidTransform) -> f64 {
    (estimated.translation - reference.translation).norm()
}

/// Root of the mean squared translation error over a set of pairs.
/// Returns 0 for an empty set.
pub fn translation_rmse_over(pairs: &[(RigidTransform, RigidTransform)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let sum: f64 = pairs
        .iter()
        .map(|(e, r)| (e.translation - r.translation).norm_squared())
        .sum();
    (sum / pairs.len() as f64).sqrt()
}

/// Geodesic angle of `R_aᵀ R_b`, in radians.
pub fn rotation_error_rad(a: &RigidTransform, b: &RigidTransform) -> f64 {
    let rel = a.rotation.transpose() * b.rotation;
    let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    // acos loses precision near zero; use the skew part there.
    let skew = Vector3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    );
    let sin = skew.norm() / 2.0;
    sin.atan2(cos)
}
