//! Scripted camera paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::{Camera, Vec3};

pub const DEFAULT_STEP_DEGREES: f64 = 6.0;
pub const DEFAULT_FRAMES: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    /// Yaw rotation in place.
    Rotate,
    /// Circle around the base camera's look-at point, facing it.
    Orbit,
    Static,
}

impl std::str::FromStr for PathKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotate" => Ok(PathKind::Rotate),
            "orbit" => Ok(PathKind::Orbit),
            "static" => Ok(PathKind::Static),
            _ => Err(Error::InvalidArgument(format!(
                "unknown camera path {s:?} (expected rotate, orbit or static)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPath {
    pub kind: PathKind,
    pub poses: Vec<Camera>,
}

impl CameraPath {
    /// Frame `i` has yaw `base.yaw + i * step`.
    pub fn rotate(base: Camera, step_degrees: f64, frames: usize) -> Self {
        let poses = (0..frames)
            .map(|i| base.with_yaw(base.yaw + i as f64 * step_degrees))
            .collect();
        Self {
            kind: PathKind::Rotate,
            poses,
        }
    }

    pub fn static_view(base: Camera, frames: usize) -> Self {
        Self {
            kind: PathKind::Static,
            poses: vec![base; frames],
        }
    }

    /// `frames` evenly spaced positions on a horizontal circle of `radius` around the
    /// point `radius` meters ahead of `base`, each facing the center.
    pub fn orbit(base: Camera, radius: f64, frames: usize) -> Self {
        let fwd = base.basis().forward;
        let flat = Vec3::new(fwd.x, 0.0, fwd.z).normalize();
        let center = base.position + flat * radius;
        let poses = (0..frames)
            .map(|i| {
                let yaw = base.yaw + 360.0 * i as f64 / frames.max(1) as f64;
                let mut c = base.with_yaw(yaw);
                let f = c.basis().forward;
                let dir = Vec3::new(f.x, 0.0, f.z).normalize();
                c.position = center - dir * radius;
                c.position.y = base.position.y;
                c
            })
            .collect();
        Self {
            kind: PathKind::Orbit,
            poses,
        }
    }

    pub fn generate(
        kind: PathKind,
        base: Camera,
        frames: usize,
        step_degrees: f64,
    ) -> Result<Self> {
        if frames == 0 {
            return Err(Error::InvalidArgument(
                "a camera path needs at least one frame".into(),
            ));
        }
        Ok(match kind {
            PathKind::Rotate => Self::rotate(base, step_degrees, frames),
            PathKind::Orbit => Self::orbit(base, 2.0, frames),
            PathKind::Static => Self::static_view(base, frames),
        })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}
