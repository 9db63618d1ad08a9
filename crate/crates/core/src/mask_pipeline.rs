//! Mask statistics to metric rover-frame detections.
//!
//! A mask is summarized by its pixel centroid, pixel count, 2×2 pixel
//! covariance and a boundary flag. Its isotropic spread `σ` is the root of
//! the mean covariance eigenvalue. Physical size is `σ · depth · α` with
//! `α` the camera's angular resolution.
//!
//! Camera convention: the camera looks along +z, `u` grows to the right
//! (+x), `v` grows downward (+y), and the principal point is the image
//! center.

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point3, RigidTransform};

/// Eigenvalues at or below this are treated as zero.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("disparity must be positive, got {0}")]
    NonPositiveDisparity(f64),
    #[error("mask covariance is degenerate (smallest eigenvalue {0:e})")]
    DegenerateMask(f64),
    #[error("centroid ({u}, {v}) lies outside the image")]
    CentroidOutOfBounds { u: f64, v: f64 },
    #[error("invalid mask: {0}")]
    InvalidMask(&'static str),
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("invalid filter config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskObservation {
    centroid_px: [f64; 2],
    pixel_count: usize,
    spread_px: f64,
    covariance_px: Matrix2<f64>,
    touches_boundary: bool,
}

impl MaskObservation {
    /// Builds an observation from summary statistics. `spread_px` is
    /// derived from the covariance.
    pub fn new(
        centroid_px: [f64; 2],
        pixel_count: usize,
        covariance_px: Matrix2<f64>,
        touches_boundary: bool,
    ) -> Result<Self, MaskError> {
        if pixel_count == 0 {
            return Err(MaskError::InvalidMask("pixel_count must be at least 1"));
        }
        if !centroid_px.iter().all(|v| v.is_finite()) || !covariance_px.iter().all(|v| v.is_finite()) {
            return Err(MaskError::InvalidMask("non-finite statistics"));
        }
        if (covariance_px[(0, 1)] - covariance_px[(1, 0)]).abs() > 1e-9 {
            return Err(MaskError::InvalidMask("covariance not symmetric"));
        }
        let (lo, _) = eigenvalues(&covariance_px);
        if lo < -DEGENERATE_EIGENVALUE {
            return Err(MaskError::InvalidMask("covariance not positive semidefinite"));
        }
        let spread_px = (covariance_px.trace() / 2.0).max(0.0).sqrt();
        Ok(Self {
            centroid_px,
            pixel_count,
            spread_px,
            covariance_px,
            touches_boundary,
        })
    }

    /// Computes centroid and population covariance of a pixel set. The
    /// boundary flag is set when any pixel lies on the outermost row or
    /// column of a `width × height` image.
    pub fn from_pixels(pixels: &[(u32, u32)], width: u32, height: u32) -> Result<Self, MaskError> {
        if pixels.is_empty() {
            return Err(MaskError::InvalidMask("pixel_count must be at least 1"));
        }
        let n = pixels.len() as f64;
        let (su, sv) = pixels
            .iter()
            .fold((0.0, 0.0), |(a, b), &(u, v)| (a + u as f64, b + v as f64));
        let (mu, mv) = (su / n, sv / n);
        let mut cov = Matrix2::zeros();
        for &(u, v) in pixels {
            let d = nalgebra::Vector2::new(u as f64 - mu, v as f64 - mv);
            cov += d * d.transpose();
        }
        cov /= n;
        let touches = pixels
            .iter()
            .any(|&(u, v)| u == 0 || v == 0 || u + 1 >= width || v + 1 >= height);
        Self::new([mu, mv], pixels.len(), cov, touches)
    }

    pub fn centroid_px(&self) -> [f64; 2] {
        self.centroid_px
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    pub fn spread_px(&self) -> f64 {
        self.spread_px
    }

    pub fn covariance_px(&self) -> &Matrix2<f64> {
        &self.covariance_px
    }

    pub fn touches_boundary(&self) -> bool {
        self.touches_boundary
    }
}

/// Eigenvalues of a symmetric 2×2 matrix, `(min, max)`.
fn eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - radius, mean + radius)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Radians per pixel.
    pub angular_resolution: f64,
    pub focal_length_px: f64,
    pub baseline_m: f64,
    pub image_width_px: u32,
    pub image_height_px: u32,
    /// Camera frame to rover frame.
    pub extrinsics: RigidTransform,
}

impl CameraModel {
    pub fn new(
        angular_resolution: f64,
        focal_length_px: f64,
        baseline_m: f64,
        image_width_px: u32,
        image_height_px: u32,
        extrinsics: RigidTransform,
    ) -> Result<Self, MaskError> {
        let cam = Self {
            angular_resolution,
            focal_length_px,
            baseline_m,
            image_width_px,
            image_height_px,
            extrinsics,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Pinhole camera whose angular resolution is `1 / focal_length_px`.
    pub fn pinhole(
        focal_length_px: f64,
        baseline_m: f64,
        image_width_px: u32,
        image_height_px: u32,
        extrinsics: RigidTransform,
    ) -> Result<Self, MaskError> {
        Self::new(
            1.0 / focal_length_px,
            focal_length_px,
            baseline_m,
            image_width_px,
            image_height_px,
            extrinsics,
        )
    }

    pub fn validate(&self) -> Result<(), MaskError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.angular_resolution) || !positive(self.focal_length_px) || !positive(self.baseline_m) {
            return Err(MaskError::InvalidCamera("intrinsics must be strictly positive"));
        }
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return Err(MaskError::InvalidCamera("image dimensions must be positive"));
        }
        let implied = 1.0 / self.focal_length_px;
        if (self.angular_resolution - implied).abs() > 0.1 * implied {
            return Err(MaskError::InvalidCamera(
                "angular resolution differs from 1/focal length by more than 10%",
            ));
        }
        Ok(())
    }

    pub fn principal_point(&self) -> [f64; 2] {
        [self.image_width_px as f64 / 2.0, self.image_height_px as f64 / 2.0]
    }

    /// Projects a camera-frame point to `(u, v, depth)`.
    pub fn project(&self, p_cam: &Point3) -> [f64; 3] {
        let [cx, cy] = self.principal_point();
        [
            cx + self.focal_length_px * p_cam.x / p_cam.z,
            cy + self.focal_length_px * p_cam.y / p_cam.z,
            p_cam.z,
        ]
    }

    /// Back-projects pixel `(u, v)` at z-depth `depth` into the camera frame.
    pub fn back_project(&self, u: f64, v: f64, depth: f64) -> Point3 {
        let [cx, cy] = self.principal_point();
        Point3::new(
            (u - cx) * depth / self.focal_length_px,
            (v - cy) * depth / self.focal_length_px,
            depth,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskFilterConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub tau_elong: f64,
}

impl Default for MaskFilterConfig {
    /// Boulder-scale defaults; tune per scene.
    fn default() -> Self {
        Self {
            s_min: 0.05,
            s_max: 2.0,
            tau_elong: 3.0,
        }
    }
}

impl MaskFilterConfig {
    pub fn validate(&self) -> Result<(), MaskError> {
        if !(self.s_min > 0.0 && self.s_min < self.s_max) {
            return Err(MaskError::InvalidConfig("need 0 < s_min < s_max"));
        }
        if !(self.tau_elong >= 1.0) {
            return Err(MaskError::InvalidConfig("tau_elong must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoverFrameDetection {
    pub position: Point3,
    pub size_m: f64,
    pub source_camera: String,
}

/// `σ · D · α`.
pub fn estimate_size(mask: &MaskObservation, depth_m: f64, camera: &CameraModel) -> Result<f64, MaskError> {
    if !(depth_m > 0.0) {
        return Err(MaskError::NonPositiveDepth(depth_m));
    }
    Ok(mask.spread_px * depth_m * camera.angular_resolution)
}

/// `λ_max / λ_min` of the pixel covariance.
pub fn elongation_ratio(mask: &MaskObservation) -> Result<f64, MaskError> {
    let (lo, hi) = eigenvalues(&mask.covariance_px);
    if lo <= DEGENERATE_EIGENVALUE {
        return Err(MaskError::DegenerateMask(lo));
    }
    Ok(hi / lo)
}

fn passes(mask: &MaskObservation, depth_m: f64, camera: &CameraModel, config: &MaskFilterConfig) -> Option<f64> {
    if mask.touches_boundary {
        return None;
    }
    let size = estimate_size(mask, depth_m, camera).ok()?;
    if !(config.s_min <= size && size <= config.s_max) {
        return None;
    }
    let ratio = elongation_ratio(mask).ok()?;
    (ratio <= config.tau_elong).then_some(size)
}

/// Keeps fully visible masks whose size lies in `[s_min, s_max]` and whose
/// elongation is at most `tau_elong`. Degenerate masks and masks with
/// non-positive depth are dropped. Input order is preserved.
pub fn filter_masks(
    masks: &[(MaskObservation, f64)],
    camera: &CameraModel,
    config: &MaskFilterConfig,
) -> Vec<(MaskObservation, f64)> {
    masks
        .iter()
        .filter_map(|(mask, depth)| passes(mask, *depth, camera, config).map(|size| (mask.clone(), size)))
        .collect()
}

/// Back-projects the mask centroid at `depth_m` and moves it into the
/// rover frame.
pub fn project_detection(
    mask: &MaskObservation,
    depth_m: f64,
    size_m: f64,
    camera: &CameraModel,
    source_camera: &str,
) -> Result<RoverFrameDetection, MaskError> {
    if !(depth_m > 0.0) {
        return Err(MaskError::NonPositiveDepth(depth_m));
    }
    let [u, v] = mask.centroid_px;
    if !(0.0..=camera.image_width_px as f64).contains(&u) || !(0.0..=camera.image_height_px as f64).contains(&v) {
        return Err(MaskError::CentroidOutOfBounds { u, v });
    }
    let p_cam = camera.back_project(u, v, depth_m);
    Ok(RoverFrameDetection {
        position: camera.extrinsics.apply(&p_cam),
        size_m,
        source_camera: source_camera.to_owned(),
    })
}

/// `D = f · B / d`.
pub fn depth_from_disparity(disparity_px: f64, camera: &CameraModel) -> Result<f64, MaskError> {
    if !(disparity_px > 0.0) {
        return Err(MaskError::NonPositiveDisparity(disparity_px));
    }
    Ok(camera.focal_length_px * camera.baseline_m / disparity_px)
}

/// Disparity of a camera-frame point for a rectified pair with the
/// second camera displaced by `+baseline` along x.
pub fn disparity_of(p_cam: &Point3, camera: &CameraModel) -> f64 {
    camera.focal_length_px * camera.baseline_m / p_cam.z
}

/// Convenience: full chain from filtered masks to rover-frame detections.
pub fn detections_from_masks(
    masks: &[(MaskObservation, f64)],
    camera: &CameraModel,
    config: &MaskFilterConfig,
    source_camera: &str,
) -> Vec<RoverFrameDetection> {
    masks
        .iter()
        .filter_map(|(mask, depth)| {
            let size = passes(mask, *depth, camera, config)?;
            project_detection(mask, *depth, size, camera, source_camera).ok()
        })
        .collect()
}

/// Unit ray direction through pixel `(u, v)` in the camera frame.
pub fn pixel_ray(camera: &CameraModel, u: f64, v: f64) -> Vector3<f64> {
    camera.back_project(u, v, 1.0).coords.normalize()
}
