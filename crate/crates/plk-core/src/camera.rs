//! Pinhole camera model, SE(3) rigid motions, and depth-map back-projection.
//!
//! Back-projection follows the single-focal pinhole form: a pixel `(u, v)`
//! with depth `d` becomes `(x, y, z) = ((u-Cx)·d/f, (v-Cy)·d/f, d)`.

use serde::{Deserialize, Serialize};

use crate::error::{PlkError, Result};
use crate::grid::DenseGrid;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const MAT3_IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

#[inline]
pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

#[inline]
pub fn mat3_apply(a: &Mat3, v: &Vec3) -> Vec3 {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

#[inline]
pub fn mat3_det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Single-focal pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    /// Focal length in pixels (one focal for both axes).
    pub f: f64,
    /// Principal point, pixels.
    pub cx: f64,
    pub cy: f64,
    /// Image extents, pixels.
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(f: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Self {
            f,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(PlkError::InvalidConfig(format!(
                "focal length must be positive, got {}",
                self.f
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(PlkError::InvalidConfig(format!(
                "cx = {} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(PlkError::InvalidConfig(format!(
                "cy = {} outside [0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    /// The 3x3 calibration matrix [[f,0,cx],[0,f,cy],[0,0,1]].
    pub fn k_matrix(&self) -> Mat3 {
        [
            [self.f, 0.0, self.cx],
            [0.0, self.f, self.cy],
            [0.0, 0.0, 1.0],
        ]
    }
}

/// Rigid motion: rotation matrix plus translation, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSE3 {
    pub r: Mat3,
    pub t: Vec3,
}

const POSE_ORTHO_TOL: f64 = 1e-9;

impl PoseSE3 {
    /// Validating constructor: `r` must be orthonormal with det +1.
    pub fn new(r: Mat3, t: Vec3) -> Result<Self> {
        let pose = Self { r, t };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self {
            r: MAT3_IDENTITY,
            t: [0.0; 3],
        }
    }

    /// Rotation by `angle` radians about the z axis, zero translation.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            r: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            t: [0.0; 3],
        }
    }

    pub fn translation(t: Vec3) -> Self {
        Self {
            r: MAT3_IDENTITY,
            t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rt_r = mat3_mul(&mat3_transpose(&self.r), &self.r);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (rt_r[i][j] - expect).abs() > POSE_ORTHO_TOL {
                    return Err(PlkError::InvalidPose(format!(
                        "R^T R deviates from identity at ({i},{j}) by {}",
                        (rt_r[i][j] - expect).abs()
                    )));
                }
            }
        }
        let det = mat3_det(&self.r);
        if (det - 1.0).abs() > POSE_ORTHO_TOL {
            return Err(PlkError::InvalidPose(format!("det(R) = {det}, expected +1")));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.r == MAT3_IDENTITY && self.t == [0.0; 3]
    }

    /// Composition `a.compose(b)`: apply `b` first, then `a`.
    pub fn compose(&self, b: &PoseSE3) -> PoseSE3 {
        PoseSE3 {
            r: mat3_mul(&self.r, &b.r),
            t: {
                let rb = mat3_apply(&self.r, &b.t);
                [rb[0] + self.t[0], rb[1] + self.t[1], rb[2] + self.t[2]]
            },
        }
    }

    pub fn inverse(&self) -> PoseSE3 {
        let rt = mat3_transpose(&self.r);
        let rt_t = mat3_apply(&rt, &self.t);
        PoseSE3 {
            r: rt,
            t: [-rt_t[0], -rt_t[1], -rt_t[2]],
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        let rp = mat3_apply(&self.r, p);
        [rp[0] + self.t[0], rp[1] + self.t[1], rp[2] + self.t[2]]
    }
}

/// Pseudo-LiDAR point set with per-point source-pixel provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    /// (x, y, z) in meters, camera frame.
    pub points: Vec<Vec3>,
    /// (u, v) pixel each point was generated from.
    pub source_pixel: Vec<[u32; 2]>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_depth_shape(depth: &DenseGrid, cam: &CameraIntrinsics) -> Result<()> {
    if depth.dims().len() != 2 || depth.channels() != 1 {
        return Err(PlkError::InvalidShape(format!(
            "depth must be a 1-channel 2D grid, got {:?} x {}",
            depth.dims(),
            depth.channels()
        )));
    }
    if depth.dims() != [cam.height, cam.width] {
        return Err(PlkError::InvalidShape(format!(
            "depth {:?} does not match camera extents {}x{}",
            depth.dims(),
            cam.height,
            cam.width
        )));
    }
    Ok(())
}

/// Back-project a depth map into a point cloud.
///
/// Pixels with depth outside `[min_depth, max_depth]` are dropped. Points are
/// emitted in row-major pixel order, so outputs are deterministic.
pub fn backproject(
    depth: &DenseGrid,
    cam: &CameraIntrinsics,
    min_depth: f64,
    max_depth: f64,
) -> Result<PointCloud> {
    check_depth_shape(depth, cam)?;
    if !(min_depth > 0.0) {
        return Err(PlkError::InvalidConfig(format!(
            "min_depth must be positive, got {min_depth}"
        )));
    }
    let mut points = Vec::new();
    let mut source_pixel = Vec::new();
    for v in 0..cam.height {
        for u in 0..cam.width {
            let d = depth.at2(v, u, 0);
            if d < min_depth || d > max_depth {
                continue;
            }
            let x = (u as f64 - cam.cx) * d / cam.f;
            let y = (v as f64 - cam.cy) * d / cam.f;
            points.push([x, y, d]);
            source_pixel.push([u as u32, v as u32]);
        }
    }
    Ok(PointCloud {
        points,
        source_pixel,
    })
}

/// Derivative of point `point_index` w.r.t. the depth of its generating
/// pixel: `((u-Cx)/f, (v-Cy)/f, 1)`. Zero w.r.t. every other pixel.
pub fn backproject_grad(
    depth: &DenseGrid,
    cam: &CameraIntrinsics,
    min_depth: f64,
    max_depth: f64,
    point_index: usize,
) -> Result<Vec3> {
    let cloud = backproject(depth, cam, min_depth, max_depth)?;
    let [u, v] = *cloud
        .source_pixel
        .get(point_index)
        .ok_or_else(|| {
            PlkError::InvalidIndex(format!(
                "point index {point_index} out of bounds for cloud of {}",
                cloud.len()
            ))
        })?;
    Ok([
        (u as f64 - cam.cx) / cam.f,
        (v as f64 - cam.cy) / cam.f,
        1.0,
    ])
}

/// Project a camera-frame point to pixel coordinates: `(f·x/z + Cx, f·y/z + Cy)`.
pub fn project(p: &Vec3, cam: &CameraIntrinsics) -> Result<(f64, f64)> {
    if p[2] <= 0.0 {
        return Err(PlkError::BehindCamera { z: p[2] });
    }
    Ok((cam.f * p[0] / p[2] + cam.cx, cam.f * p[1] / p[2] + cam.cy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam_100() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 50.0, 40.0, 200, 160).unwrap()
    }

    #[test]
    fn principal_point_ray() {
        let cam = cam_100();
        let mut depth = DenseGrid::new(&[160, 200], 1, 0.0).unwrap();
        *depth.at2_mut(40, 50, 0) = 7.0;
        let cloud = backproject(&depth, &cam, 0.1, 100.0).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.points[0], [0.0, 0.0, 7.0]);
        assert_eq!(cloud.source_pixel[0], [50, 40]);
    }

    #[test]
    fn direct_substitution() {
        let cam = cam_100();
        let mut depth = DenseGrid::new(&[160, 200], 1, 0.0).unwrap();
        *depth.at2_mut(40, 150, 0) = 2.0;
        let cloud = backproject(&depth, &cam, 0.1, 100.0).unwrap();
        assert_eq!(cloud.points[0], [2.0, 0.0, 2.0]);
    }

    #[test]
    fn grad_at_principal_point_and_offset() {
        let cam = cam_100();
        let mut depth = DenseGrid::new(&[160, 200], 1, 0.0).unwrap();
        *depth.at2_mut(40, 50, 0) = 5.0;
        let g = backproject_grad(&depth, &cam, 0.1, 100.0, 0).unwrap();
        assert_eq!(g, [0.0, 0.0, 1.0]);

        let mut depth = DenseGrid::new(&[160, 200], 1, 0.0).unwrap();
        *depth.at2_mut(40, 150, 0) = 5.0;
        let g = backproject_grad(&depth, &cam, 0.1, 100.0, 0).unwrap();
        assert_eq!(g, [1.0, 0.0, 1.0]);

        assert!(matches!(
            backproject_grad(&depth, &cam, 0.1, 100.0, 1),
            Err(PlkError::InvalidIndex(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let cam = cam_100();
        let depth = DenseGrid::new(&[8, 8], 1, 1.0).unwrap();
        assert!(matches!(
            backproject(&depth, &cam, 0.1, 100.0),
            Err(PlkError::InvalidShape(_))
        ));
    }

    #[test]
    fn pose_identity_apply() {
        let p = [1.0, 2.0, 3.0];
        assert_eq!(PoseSE3::identity().apply(&p), p);
    }

    #[test]
    fn pose_compose_inverse_is_identity() {
        let a = PoseSE3::new(
            PoseSE3::rotation_z(0.73).r,
            [0.4, -1.2, 2.5],
        )
        .unwrap();
        let id = a.compose(&a.inverse());
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((id.r[i][j] - expect).abs() < 1e-12);
            }
            assert!(id.t[i].abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_z_quarter_turn() {
        let rot = PoseSE3::rotation_z(std::f64::consts::FRAC_PI_2);
        let p = rot.apply(&[1.0, 0.0, 0.0]);
        assert!((p[0]).abs() < 1e-12);
        assert!((p[1] - 1.0).abs() < 1e-12);
        assert!((p[2]).abs() < 1e-12);
    }

    #[test]
    fn non_orthonormal_rejected() {
        let r = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            PoseSE3::new(r, [0.0; 3]),
            Err(PlkError::InvalidPose(_))
        ));
    }

    #[test]
    fn project_optical_axis_and_behind() {
        let cam = cam_100();
        let (u, v) = project(&[0.0, 0.0, 5.0], &cam).unwrap();
        assert_eq!((u, v), (cam.cx, cam.cy));
        assert!(matches!(
            project(&[0.0, 0.0, 0.0], &cam),
            Err(PlkError::BehindCamera { .. })
        ));
    }

    #[test]
    fn project_backproject_round_trip() {
        let cam = cam_100();
        let mut depth = DenseGrid::new(&[160, 200], 1, 0.0).unwrap();
        *depth.at2_mut(33, 121, 0) = 4.7;
        let cloud = backproject(&depth, &cam, 0.1, 100.0).unwrap();
        let (u, v) = project(&cloud.points[0], &cam).unwrap();
        assert!((u - 121.0).abs() < 1e-9);
        assert!((v - 33.0).abs() < 1e-9);
    }
}
