//! Camera sets as JSON:
//!
//! ```json
//! {"cameras": [{"id": 0, "width": 64, "height": 48, "fx": 60, "fy": 60,
//!   "cx": 32, "cy": 24, "world_to_cam": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1],
//!   "image_path": "view0.ppm"}]}
//! ```
//!
//! `world_to_cam` is row-major and maps world points into a frame with +x
//! right, +y down and +z forward. `image_path` (optional) is relative to the
//! JSON file. `near` is optional.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Camera;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub id: u64,
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub world_to_cam: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near: Option<f64>,
}

impl CameraEntry {
    pub fn from_camera<T: Real>(id: u64, cam: &Camera<T>, image_path: Option<PathBuf>) -> Self {
        Self {
            id,
            width: cam.width,
            height: cam.height,
            fx: cam.fx.as_f64(),
            fy: cam.fy.as_f64(),
            cx: cam.cx.as_f64(),
            cy: cam.cy.as_f64(),
            world_to_cam: cam.world_to_cam.iter().flatten().map(|v| v.as_f64()).collect(),
            image_path,
            near: Some(cam.near.as_f64()),
        }
    }

    pub fn camera<T: Real>(&self) -> Result<Camera<T>> {
        if self.world_to_cam.len() != 16 {
            return Err(Error::Camera(format!(
                "camera {}: world_to_cam has {} values, expected 16",
                self.id,
                self.world_to_cam.len()
            )));
        }
        let mut m = [[T::zero(); 4]; 4];
        for (i, v) in self.world_to_cam.iter().enumerate() {
            m[i / 4][i % 4] = T::lit(*v);
        }
        let mut cam = Camera::new(
            m,
            T::lit(self.fx),
            T::lit(self.fy),
            T::lit(self.cx),
            T::lit(self.cy),
            self.width,
            self.height,
        )
        .map_err(|e| Error::Camera(format!("camera {}: {e}", self.id)))?;
        if let Some(n) = self.near {
            if !(n > 0.0) {
                return Err(Error::Camera(format!("camera {}: near must be positive", self.id)));
            }
            cam.near = T::lit(n);
        }
        Ok(cam)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CameraSet {
    pub cameras: Vec<CameraEntry>,
}

impl CameraSet {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.cameras {
            if !seen.insert(c.id) {
                return Err(Error::Camera(format!("duplicate camera id {}", c.id)));
            }
            c.camera::<f64>()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(text).map_err(|e| Error::Camera(format!("camera JSON: {e}")))?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("camera set serialises")
    }
}

pub fn load_cameras(path: impl AsRef<Path>) -> Result<CameraSet> {
    CameraSet::from_json(&fs::read_to_string(path)?)
}

pub fn save_cameras(set: &CameraSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, set.to_json())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"cameras": [{"id": 3, "width": 8, "height": 6, "fx": 10, "fy": 11, "cx": 4, "cy": 3,
        "world_to_cam": [1,0,0,0.5, 0,1,0,0, 0,0,1,2, 0,0,0,1], "image_path": "a.ppm"}]}"#;

    #[test]
    fn parses_and_builds_camera() {
        let set = CameraSet::from_json(ONE).unwrap();
        let cam: Camera<f64> = set.cameras[0].camera().unwrap();
        assert_eq!(cam.translation(), [0.5, 0.0, 2.0]);
        assert_eq!((cam.fx, cam.fy, cam.width, cam.height), (10.0, 11.0, 8, 6));
        assert_eq!(set.cameras[0].image_path.as_deref(), Some(Path::new("a.ppm")));
    }

    #[test]
    fn round_trips_through_json() {
        let cam = Camera::<f64>::look_at([1.0, 2.0, -3.0], [0.0; 3], [0.0, -1.0, 0.0], 32, 24, 30.0).unwrap();
        let set = CameraSet {
            cameras: vec![CameraEntry::from_camera(0, &cam, None)],
        };
        let back = CameraSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back.cameras[0].camera::<f64>().unwrap(), cam);
    }

    #[test]
    fn rejects_duplicates_and_bad_transforms() {
        let dup = ONE.replace(r#"}]}"#, r#"}, {"id": 3, "width": 8, "height": 6, "fx": 10, "fy": 11, "cx": 4, "cy": 3, "world_to_cam": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]}]}"#);
        assert!(CameraSet::from_json(&dup).is_err());
        let skew = ONE.replace("[1,0,0,0.5,", "[2,0,0,0.5,");
        assert!(CameraSet::from_json(&skew).is_err());
        let short = ONE.replace(", 0,0,0,1]", "]");
        assert!(CameraSet::from_json(&short).is_err());
        assert!(CameraSet::from_json(&ONE.replace("\"id\"", "\"idd\"")).is_err());
    }
}
