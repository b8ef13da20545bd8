//! Deterministic synthetic LiDAR-video generator.
//!
//! Scenes are flat worlds seen from above: oriented rectangular actors, an
//! ego sensor that casts rays in the ground plane, and a fixed-rate sweep
//! clock. Nearer actors shadow farther ones, so occlusion (and the resulting
//! missed detections for single-frame models) emerges from geometry alone.
//! Labels exist only on keyframes, in the keyframe's ego-aligned frame.

mod dataset;
mod generate;
mod raycast;

pub use dataset::{read_dataset, write_dataset, Dataset, DatasetMeta, SceneData, SceneMeta};
pub use generate::{generate_scene, keyframe_ground_truth, CrossingMode, SceneConfig};
pub use raycast::{cast_sweep, ray_obb_intersect, Obb};

use crate::error::{Error, Result};

/// Normalize an angle into (-pi, pi].
pub fn normalize_yaw(yaw: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut v = yaw.rem_euclid(two_pi); // [0, 2pi)
    if v > std::f64::consts::PI {
        v -= two_pi;
    }
    v
}

/// 2D rigid pose: translation in meters plus yaw in radians.
///
/// A pose maps local coordinates into the world frame. `compose` chains a
/// child pose expressed in this pose's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Pose {
        Pose {
            x,
            y,
            yaw: normalize_yaw(yaw),
        }
    }

    pub fn identity() -> Pose {
        Pose {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
        }
    }

    /// world = self . other (apply other within self's frame).
    pub fn compose(&self, other: &Pose) -> Pose {
        let (s, c) = self.yaw.sin_cos();
        Pose::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.yaw + other.yaw,
        )
    }

    pub fn inverse(&self) -> Pose {
        let (s, c) = self.yaw.sin_cos();
        Pose::new(
            -(c * self.x + s * self.y),
            -(-s * self.x + c * self.y),
            -self.yaw,
        )
    }

    /// Map a point from this pose's local frame into the world frame.
    pub fn transform_point(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (self.x + c * p.0 - s * p.1, self.y + s * p.0 + c * p.1)
    }

    /// Map a world point into this pose's local frame.
    pub fn inverse_transform_point(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let dx = p.0 - self.x;
        let dy = p.1 - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Rotate a direction (or velocity) without translating.
    pub fn rotate_vec(&self, v: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (c * v.0 - s * v.1, s * v.0 + c * v.1)
    }

    /// Rotate a world direction into this pose's local frame.
    pub fn inverse_rotate_vec(&self, v: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (c * v.0 + s * v.1, -s * v.0 + c * v.1)
    }
}

/// Oriented bird's-eye-view box with velocity. Ground truth carries score 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevBox {
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub width: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    pub class_id: u32,
    pub score: f64,
}

impl BevBox {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: f64,
        y: f64,
        length: f64,
        width: f64,
        yaw: f64,
        vx: f64,
        vy: f64,
        class_id: u32,
        score: f64,
    ) -> Result<BevBox> {
        if length <= 0.0 || width <= 0.0 {
            return Err(Error::Contract(format!(
                "box size must be positive, got {length} x {width}"
            )));
        }
        Ok(BevBox {
            x,
            y,
            length,
            width,
            yaw: normalize_yaw(yaw),
            vx,
            vy,
            class_id,
            score,
        })
    }

    pub fn center_distance(&self, other: &BevBox) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Corner coordinates, counter-clockwise.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.yaw.sin_cos();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        let rot = |px: f64, py: f64| (self.x + c * px - s * py, self.y + s * px + c * py);
        [rot(hl, hw), rot(-hl, hw), rot(-hl, -hw), rot(hl, -hw)]
    }

    /// Whether a BEV point falls inside the oriented rectangle.
    pub fn contains(&self, p: (f64, f64)) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let dx = p.0 - self.x;
        let dy = p.1 - self.y;
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        lx.abs() <= self.length / 2.0 && ly.abs() <= self.width / 2.0
    }

    /// The same box re-expressed in `target`'s frame (world box -> local).
    pub fn into_frame(&self, target: &Pose) -> BevBox {
        let (x, y) = target.inverse_transform_point((self.x, self.y));
        let (vx, vy) = target.inverse_rotate_vec((self.vx, self.vy));
        BevBox {
            x,
            y,
            yaw: normalize_yaw(self.yaw - target.yaw),
            vx,
            vy,
            ..*self
        }
    }
}

/// One LiDAR sweep: sensor-frame points (x, y, z, reflectance).
#[derive(Debug, Clone, PartialEq)]
pub struct PointFrame {
    pub timestamp_index: usize,
    pub ego_pose: Pose,
    pub points: Vec<[f64; 4]>,
}

/// M sweeps concatenated into a keyframe: 5-dim points (x, y, z, r, dt) in
/// the keyframe's ego-aligned frame, plus ground-truth boxes (keyframes only).
#[derive(Debug, Clone, PartialEq)]
pub struct MergedFrame {
    pub keyframe_index: usize,
    pub points: Vec<[f64; 5]>,
    pub gt_boxes: Vec<BevBox>,
}

/// One actor's life over a scene: per-sweep pose and velocity.
#[derive(Debug, Clone)]
pub struct ActorTrack {
    pub class_id: u32,
    pub length: f64,
    pub width: f64,
    pub states: Vec<(Pose, (f64, f64))>,
}

/// Per-class geometry for the simulator. `labeled` distinguishes detection
/// targets from environment geometry such as occluder walls.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassSpec {
    pub name: String,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub labeled: bool,
}

/// Desk-scale class table: two labeled target classes and an unlabeled
/// barrier class used for occluders.
pub fn default_classes() -> Vec<ClassSpec> {
    vec![
        ClassSpec {
            name: "car".into(),
            length: 2.4,
            width: 1.2,
            height: 1.5,
            labeled: true,
        },
        ClassSpec {
            name: "pedestrian".into(),
            length: 0.5,
            width: 0.5,
            height: 1.7,
            labeled: true,
        },
        ClassSpec {
            name: "barrier".into(),
            length: 3.6,
            width: 0.3,
            height: 2.2,
            labeled: false,
        },
    ]
}

/// Re-express a sweep in `target`'s frame (points move from the frame's own
/// ego frame through the world into the target frame).
pub fn transform_frame(frame: &PointFrame, target: &Pose) -> PointFrame {
    let points = frame
        .points
        .iter()
        .map(|&[x, y, z, r]| {
            let world = frame.ego_pose.transform_point((x, y));
            let local = target.inverse_transform_point(world);
            [local.0, local.1, z, r]
        })
        .collect();
    PointFrame {
        timestamp_index: frame.timestamp_index,
        ego_pose: *target,
        points,
    }
}

/// Merge ordered sweeps into the last frame (the keyframe): every point is
/// aligned to the keyframe ego pose and tagged with its time lag
/// dt = (t_keyframe - t_sweep) in seconds. `gt` are the keyframe's labels,
/// already in the keyframe ego frame.
pub fn merge_sweeps(frames: &[PointFrame], gt: &[BevBox], sweep_hz: f64) -> Result<MergedFrame> {
    if frames.is_empty() {
        return Err(Error::Contract("merge_sweeps: no frames".into()));
    }
    for pair in frames.windows(2) {
        if pair[0].timestamp_index >= pair[1].timestamp_index {
            return Err(Error::Contract(format!(
                "merge_sweeps: timestamps not strictly ascending ({} then {})",
                pair[0].timestamp_index, pair[1].timestamp_index
            )));
        }
    }
    let keyframe = frames.last().unwrap();
    let mut points = Vec::new();
    for f in frames {
        let dt = (keyframe.timestamp_index - f.timestamp_index) as f64 / sweep_hz;
        let aligned = transform_frame(f, &keyframe.ego_pose);
        points.extend(aligned.points.iter().map(|&[x, y, z, r]| [x, y, z, r, dt]));
    }
    Ok(MergedFrame {
        keyframe_index: keyframe.timestamp_index,
        points,
        gt_boxes: gt.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yaw_normalization_range() {
        assert!((normalize_yaw(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((normalize_yaw(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(normalize_yaw(0.5), 0.5);
    }

    #[test]
    fn pose_compose_inverse_is_identity() {
        let p = Pose::new(1.5, -2.0, 0.7);
        let id = p.compose(&p.inverse());
        assert!(id.x.abs() < 1e-12 && id.y.abs() < 1e-12 && id.yaw.abs() < 1e-12);
    }

    #[test]
    fn pose_composition_is_associative() {
        let a = Pose::new(1.0, 0.0, 0.3);
        let b = Pose::new(-0.5, 2.0, -1.1);
        let c = Pose::new(0.2, 0.2, 2.0);
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        assert!((left.x - right.x).abs() < 1e-12);
        assert!((left.y - right.y).abs() < 1e-12);
        assert!((normalize_yaw(left.yaw - right.yaw)).abs() < 1e-12);
    }

    #[test]
    fn transform_identity_is_noop() {
        let f = PointFrame {
            timestamp_index: 0,
            ego_pose: Pose::identity(),
            points: vec![[1.0, 2.0, 0.5, 0.3]],
        };
        let g = transform_frame(&f, &Pose::identity());
        assert_eq!(f, g);
    }

    #[test]
    fn translation_flips_sign_in_target_frame() {
        // a world-origin point seen from a sensor at (1, 0) sits at (-1, 0)
        let f = PointFrame {
            timestamp_index: 0,
            ego_pose: Pose::identity(),
            points: vec![[0.0, 0.0, 0.0, 0.0]],
        };
        let g = transform_frame(&f, &Pose::new(1.0, 0.0, 0.0));
        assert!((g.points[0][0] + 1.0).abs() < 1e-12);
        assert!(g.points[0][1].abs() < 1e-12);
    }

    #[test]
    fn static_point_maps_to_same_world_coordinate() {
        // the same world point observed from two ego poses
        let world = (2.0, 3.0);
        let ego1 = Pose::new(0.5, -1.0, 0.4);
        let ego2 = Pose::new(-1.0, 0.7, -2.0);
        let local1 = ego1.inverse_transform_point(world);
        let local2 = ego2.inverse_transform_point(world);
        let f1 = PointFrame {
            timestamp_index: 0,
            ego_pose: ego1,
            points: vec![[local1.0, local1.1, 0.0, 0.0]],
        };
        let f2 = PointFrame {
            timestamp_index: 1,
            ego_pose: ego2,
            points: vec![[local2.0, local2.1, 0.0, 0.0]],
        };
        let target = Pose::new(0.1, 0.1, 1.0);
        let g1 = transform_frame(&f1, &target);
        let g2 = transform_frame(&f2, &target);
        assert!((g1.points[0][0] - g2.points[0][0]).abs() < 1e-9);
        assert!((g1.points[0][1] - g2.points[0][1]).abs() < 1e-9);
    }

    #[test]
    fn merge_single_frame_appends_zero_dt() {
        let f = PointFrame {
            timestamp_index: 7,
            ego_pose: Pose::identity(),
            points: vec![[1.0, 2.0, 0.1, 0.9]],
        };
        let m = merge_sweeps(&[f], &[], 20.0).unwrap();
        assert_eq!(m.keyframe_index, 7);
        assert_eq!(m.points, vec![[1.0, 2.0, 0.1, 0.9, 0.0]]);
    }

    #[test]
    fn merge_two_static_sweeps_duplicates_geometry() {
        let mk = |t| PointFrame {
            timestamp_index: t,
            ego_pose: Pose::identity(),
            points: vec![[1.0, 0.0, 0.0, 0.5]],
        };
        let m = merge_sweeps(&[mk(0), mk(1)], &[], 20.0).unwrap();
        assert_eq!(m.points.len(), 2);
        assert_eq!(m.points[0][..4], m.points[1][..4]);
        assert!((m.points[0][4] - 0.05).abs() < 1e-12); // older sweep: dt = 1/20 s
        assert_eq!(m.points[1][4], 0.0);
    }

    #[test]
    fn merge_rejects_unordered_timestamps() {
        let mk = |t| PointFrame {
            timestamp_index: t,
            ego_pose: Pose::identity(),
            points: vec![],
        };
        assert!(matches!(
            merge_sweeps(&[mk(3), mk(2)], &[], 20.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn box_frame_change_round_trips() {
        let b = BevBox::new(3.0, -1.0, 2.0, 1.0, 0.8, 1.0, -0.5, 0, 1.0).unwrap();
        let frame = Pose::new(0.7, 0.2, -0.9);
        let local = b.into_frame(&frame);
        // map back by composing with the frame
        let (wx, wy) = frame.transform_point((local.x, local.y));
        let (wvx, wvy) = frame.rotate_vec((local.vx, local.vy));
        assert!((wx - b.x).abs() < 1e-12 && (wy - b.y).abs() < 1e-12);
        assert!((wvx - b.vx).abs() < 1e-12 && (wvy - b.vy).abs() < 1e-12);
        assert!((normalize_yaw(local.yaw + frame.yaw - b.yaw)).abs() < 1e-12);
    }
}
