//! Pinhole camera: right-handed world, +y up, yaw 0 looking down -z.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::math::{Mat4, Vec3};

pub const DEFAULT_VIEWPORT: (u32, u32) = (960, 540);

/// Angles are in degrees. Positive yaw turns left, positive pitch looks up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Camera {
    pub position: Vec3,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub fov_y: f64,
    pub near: f64,
    pub far: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            position: Vec3::default(),
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            fov_y: 60.0,
            near: 0.05,
            far: 200.0,
            width: DEFAULT_VIEWPORT.0,
            height: DEFAULT_VIEWPORT.1,
        }
    }
}

/// Orthonormal camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.near > 0.0) || !(self.far > self.near) {
            return Err(Error::InvalidArgument(format!(
                "camera planes need 0 < near < far, got near {} far {}",
                self.near, self.far
            )));
        }
        if !(self.fov_y > 0.0 && self.fov_y < 180.0) {
            return Err(Error::InvalidArgument(format!(
                "vertical fov must lie in (0, 180) degrees, got {}",
                self.fov_y
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument(format!(
                "viewport {}x{} is empty",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn basis(&self) -> Basis {
        let (yaw, pitch, roll) = (
            self.yaw.to_radians(),
            self.pitch.to_radians(),
            self.roll.to_radians(),
        );
        let forward = Vec3::new(
            -yaw.sin() * pitch.cos(),
            pitch.sin(),
            -yaw.cos() * pitch.cos(),
        );
        let flat_right = Vec3::new(yaw.cos(), 0.0, -yaw.sin());
        let flat_up = flat_right.cross(forward);
        let right = flat_right * roll.cos() + flat_up * roll.sin();
        let up = flat_up * roll.cos() - flat_right * roll.sin();
        Basis { right, up, forward }
    }

    /// World to view space; the camera looks down -z.
    pub fn view_matrix(&self) -> Mat4 {
        let Basis {
            right: r,
            up: u,
            forward: f,
        } = self.basis();
        let p = self.position;
        Mat4([
            [r.x, r.y, r.z, -r.dot(p)],
            [u.x, u.y, u.z, -u.dot(p)],
            [-f.x, -f.y, -f.z, f.dot(p)],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// View to clip space, OpenGL depth convention (ndc z in [-1, 1]).
    pub fn projection_matrix(&self) -> Mat4 {
        let f = 1.0 / (self.fov_y.to_radians() * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let (n, fa) = (self.near, self.far);
        Mat4([
            [f / aspect, 0.0, 0.0, 0.0],
            [0.0, f, 0.0, 0.0],
            [0.0, 0.0, (fa + n) / (n - fa), 2.0 * fa * n / (n - fa)],
            [0.0, 0.0, -1.0, 0.0],
        ])
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.yaw = yaw;
        self
    }

    pub fn with_viewport(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    /// Left and right eye cameras displaced by `separation / 2` along the right vector.
    pub fn eye_pair(&self, separation: f64) -> (Camera, Camera) {
        let offset = self.basis().right * (separation * 0.5);
        let mut left = *self;
        let mut right = *self;
        left.position = self.position - offset;
        right.position = self.position + offset;
        (left, right)
    }
}
