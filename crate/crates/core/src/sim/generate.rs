//! Scene synthesis: ego motion, actor placement, and sweep rendering.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::raycast::{cast_sweep, Obb};
use super::{ActorTrack, ClassSpec, PointFrame, Pose};
use crate::error::{Error, Result};
use crate::par;

/// Whether and where a scripted occlusion crossing happens: an occluder wall
/// slides onto the line of sight of a static target for exactly one keyframe
/// window, then clears again.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingMode {
    None,
    /// The occluded window is drawn per scene.
    RandomWindow,
    /// The last window is occluded: visible history, hidden present.
    LastWindow,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SceneConfig {
    /// Total sweeps per scene; must be a positive multiple of
    /// `sweeps_per_keyframe`.
    pub sweeps: usize,
    pub sweep_hz: f64,
    pub sweeps_per_keyframe: usize,
    /// Labeled actors placed at random (the scripted crossing target, when
    /// present, is additional).
    pub actors: usize,
    pub moving_fraction: f64,
    pub actor_speed: (f64, f64),
    pub ego_speed: (f64, f64),
    /// Freestanding occluder walls beyond any scripted one.
    pub occluders: usize,
    pub crossing: CrossingMode,
    pub rings: usize,
    pub azimuth_steps: usize,
    pub max_range: f64,
    /// Actors live within this radius of the world origin.
    pub world_extent: f64,
    pub classes: Vec<ClassSpec>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            sweeps: 24,
            sweep_hz: 20.0,
            sweeps_per_keyframe: 4,
            actors: 5,
            moving_fraction: 0.5,
            actor_speed: (1.0, 3.0),
            ego_speed: (0.0, 1.5),
            occluders: 1,
            crossing: CrossingMode::RandomWindow,
            rings: 2,
            azimuth_steps: 360,
            max_range: 20.0,
            world_extent: 5.0,
            classes: super::default_classes(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::Config("scene needs at least one sweep".into()));
        }
        if self.sweeps_per_keyframe == 0 || self.sweeps % self.sweeps_per_keyframe != 0 {
            return Err(Error::Config(format!(
                "sweep count {} must be a positive multiple of sweeps_per_keyframe {}",
                self.sweeps, self.sweeps_per_keyframe
            )));
        }
        if self.actors == 0 {
            return Err(Error::Config("scene needs at least one actor".into()));
        }
        if self.rings == 0 || self.azimuth_steps == 0 {
            return Err(Error::Config("sensor needs rings and azimuth steps".into()));
        }
        if !self.classes.iter().any(|c| c.labeled) {
            return Err(Error::Config("class table has no labeled class".into()));
        }
        Ok(())
    }

    fn labeled_class_ids(&self) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.labeled)
            .map(|(i, _)| i)
            .collect()
    }

    fn barrier_class_id(&self) -> Option<usize> {
        self.classes.iter().position(|c| !c.labeled)
    }
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 > 0.0 {
        ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let cx = a.0 + t * ab.0 - p.0;
    let cy = a.1 + t * ab.1 - p.1;
    (cx * cx + cy * cy).sqrt()
}

/// Constant-velocity track over `n` sweeps.
fn linear_track(
    class_id: u32,
    length: f64,
    width: f64,
    start: (f64, f64),
    yaw: f64,
    vel: (f64, f64),
    n: usize,
    dt: f64,
) -> ActorTrack {
    let states = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            (
                Pose::new(start.0 + vel.0 * t, start.1 + vel.1 * t, yaw),
                vel,
            )
        })
        .collect();
    ActorTrack {
        class_id,
        length,
        width,
        states,
    }
}

/// Track through a list of per-sweep positions; velocities follow the
/// forward difference so poses and velocities stay mutually consistent.
fn track_through(
    class_id: u32,
    length: f64,
    width: f64,
    positions: Vec<(f64, f64)>,
    yaw: f64,
    dt: f64,
) -> ActorTrack {
    let n = positions.len();
    let states = (0..n)
        .map(|k| {
            let vel = if k + 1 < n {
                (
                    (positions[k + 1].0 - positions[k].0) / dt,
                    (positions[k + 1].1 - positions[k].1) / dt,
                )
            } else if n >= 2 {
                (
                    (positions[n - 1].0 - positions[n - 2].0) / dt,
                    (positions[n - 1].1 - positions[n - 2].1) / dt,
                )
            } else {
                (0.0, 0.0)
            };
            (Pose::new(positions[k].0, positions[k].1, yaw), vel)
        })
        .collect();
    ActorTrack {
        class_id,
        length,
        width,
        states,
    }
}

/// Deterministic scene synthesis: ego trajectory, actor tracks, and one
/// rendered point frame per sweep. Identical (config, seed) pairs produce
/// bit-identical output.
pub fn generate_scene(
    config: &SceneConfig,
    seed: u64,
) -> Result<(Vec<PointFrame>, Vec<ActorTrack>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.sweeps;
    let dt = 1.0 / config.sweep_hz;

    // ego: straight line through the neighborhood of the origin
    let heading = rng.random_range(0.0..std::f64::consts::TAU);
    let speed = rng.random_range(config.ego_speed.0..=config.ego_speed.1);
    let dir = (heading.cos(), heading.sin());
    let half_t = n as f64 * dt / 2.0;
    let lateral = rng.random_range(-0.5..0.5);
    let start = (
        -dir.0 * speed * half_t - dir.1 * lateral,
        -dir.1 * speed * half_t + dir.0 * lateral,
    );
    let ego_poses: Vec<Pose> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            Pose::new(start.0 + dir.0 * speed * t, start.1 + dir.1 * speed * t, heading)
        })
        .collect();

    let mut tracks: Vec<ActorTrack> = Vec::new();
    let mut centers: Vec<(f64, f64)> = Vec::new();
    // keep-out segments for random placement: the ego path, plus the
    // scripted line of sight when a crossing is staged
    let mut keep_out: Vec<((f64, f64), (f64, f64))> = vec![(
        (ego_poses[0].x, ego_poses[0].y),
        (ego_poses[n - 1].x, ego_poses[n - 1].y),
    )];

    // scripted crossing: static target + wall that parks on the line of
    // sight for exactly one keyframe window
    if config.crossing != CrossingMode::None {
        let barrier_id = config.barrier_class_id().ok_or_else(|| {
            Error::Config("crossing mode needs an unlabeled barrier class".into())
        })?;
        let m = config.sweeps_per_keyframe;
        let windows = n / m;
        let w = match config.crossing {
            CrossingMode::LastWindow => windows - 1,
            CrossingMode::RandomWindow => rng.random_range(0..windows),
            CrossingMode::None => unreachable!(),
        };
        let tc = w * m + m / 2;
        let ego_tc = ego_poses[tc.min(n - 1)];

        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let dist = rng.random_range(3.2..4.2_f64).min(config.world_extent - 0.5);
        let u = (phi.cos(), phi.sin());
        let target = (ego_tc.x + dist * u.0, ego_tc.y + dist * u.1);
        let target_class = config.labeled_class_ids()[0];
        let spec = &config.classes[target_class];
        tracks.push(linear_track(
            target_class as u32,
            spec.length,
            spec.width,
            target,
            rng.random_range(0.0..std::f64::consts::TAU),
            (0.0, 0.0),
            n,
            dt,
        ));
        centers.push(target);

        // wall path: parked clear, slide in over a few sweeps, parked on the
        // line of sight for the whole window, slide out, parked clear
        let bspec = &config.classes[barrier_id];
        let db = 0.45 * dist;
        let blocking = (ego_tc.x + db * u.0, ego_tc.y + db * u.1);
        let perp = (-u.1, u.0);
        let clear = 3.0;
        // one-sweep slides keep every pre-window keyframe fully visible and
        // the whole occluded window fully hidden
        let slide = 1;
        let w_start = w * m;
        let w_end = w_start + m; // exclusive
        let slide_in = slide.min(w_start);
        let mut positions = Vec::with_capacity(n);
        for k in 0..n {
            let pos = if k < w_start.saturating_sub(slide_in) {
                (blocking.0 + clear * perp.0, blocking.1 + clear * perp.1)
            } else if k < w_start {
                let f = (w_start - k) as f64 / slide_in as f64;
                (blocking.0 + clear * f * perp.0, blocking.1 + clear * f * perp.1)
            } else if k < w_end {
                blocking
            } else {
                let f = ((k - w_end + 1) as f64 / slide.max(1) as f64).min(1.0);
                (blocking.0 - clear * f * perp.0, blocking.1 - clear * f * perp.1)
            };
            positions.push(pos);
        }
        tracks.push(track_through(
            barrier_id as u32,
            bspec.length,
            bspec.width,
            positions,
            Pose::new(0.0, 0.0, phi + std::f64::consts::FRAC_PI_2).yaw,
            dt,
        ));
        centers.push(blocking);
        keep_out.push(((ego_tc.x, ego_tc.y), target));
    }

    // freestanding occluders
    if let Some(barrier_id) = config.barrier_class_id() {
        for _ in 0..config.occluders {
            let spec = &config.classes[barrier_id];
            let mut pos = (0.0, 0.0);
            for _attempt in 0..20 {
                let r = rng.random_range(2.0..config.world_extent);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                pos = (r * a.cos(), r * a.sin());
                if keep_out
                    .iter()
                    .all(|&(s, e)| point_segment_distance(pos, s, e) > 2.4)
                {
                    break;
                }
            }
            let yaw = rng.random_range(0.0..std::f64::consts::TAU);
            tracks.push(linear_track(
                barrier_id as u32,
                spec.length,
                spec.width,
                pos,
                yaw,
                (0.0, 0.0),
                n,
                dt,
            ));
            centers.push(pos);
        }
    }

    // random labeled actors
    let labeled = config.labeled_class_ids();
    for _ in 0..config.actors {
        let class_idx = if labeled.len() > 1 && rng.random_range(0.0..1.0) > 0.65 {
            labeled[1 + rng.random_range(0..labeled.len() - 1)]
        } else {
            labeled[0]
        };
        let spec = &config.classes[class_idx];
        let jitter = rng.random_range(0.85..1.15);
        let (length, width) = (spec.length * jitter, spec.width * jitter);

        let mut pos = (0.0, 0.0);
        for _attempt in 0..20 {
            let r = rng.random_range(1.5..config.world_extent);
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            pos = (r * a.cos(), r * a.sin());
            let clear_of_actors = centers
                .iter()
                .all(|&c| (c.0 - pos.0).hypot(c.1 - pos.1) > 1.4);
            let clear_of_segments = keep_out
                .iter()
                .all(|&(s, e)| point_segment_distance(pos, s, e) > 1.2);
            if clear_of_actors && clear_of_segments {
                break;
            }
        }
        centers.push(pos);

        let moving = rng.random_range(0.0..1.0) < config.moving_fraction;
        let (vel, yaw) = if moving {
            let s = rng.random_range(config.actor_speed.0..=config.actor_speed.1);
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            ((s * a.cos(), s * a.sin()), a)
        } else {
            ((0.0, 0.0), rng.random_range(0.0..std::f64::consts::TAU))
        };
        tracks.push(linear_track(
            class_idx as u32,
            length,
            width,
            pos,
            yaw,
            vel,
            n,
            dt,
        ));
    }

    // per-actor reflectance, fixed for the scene
    let reflectance: Vec<f64> = tracks
        .iter()
        .map(|_| rng.random_range(0.2..0.9))
        .collect();
    let heights: Vec<f64> = tracks
        .iter()
        .map(|t| config.classes[t.class_id as usize].height)
        .collect();

    // render sweeps in parallel; assembly stays in sweep order
    let frames: Vec<PointFrame> = par::map_range(n, |k| {
        let boxes: Vec<Obb> = tracks
            .iter()
            .map(|t| {
                let (pose, _) = t.states[k];
                Obb {
                    cx: pose.x,
                    cy: pose.y,
                    half_length: t.length / 2.0,
                    half_width: t.width / 2.0,
                    yaw: pose.yaw,
                }
            })
            .collect();
        let pts = cast_sweep(
            &ego_poses[k],
            &boxes,
            &heights,
            &reflectance,
            config.rings,
            config.azimuth_steps,
            config.max_range,
        );
        PointFrame {
            timestamp_index: k,
            ego_pose: ego_poses[k],
            points: pts.into_iter().map(|(_, p)| p).collect(),
        }
    });

    Ok((frames, tracks))
}

/// Ground-truth boxes of labeled actors at a sweep, in the ego frame.
pub fn keyframe_ground_truth(
    tracks: &[ActorTrack],
    classes: &[ClassSpec],
    sweep: usize,
    ego: &Pose,
) -> Vec<super::BevBox> {
    tracks
        .iter()
        .filter(|t| classes[t.class_id as usize].labeled)
        .map(|t| {
            let (pose, vel) = t.states[sweep];
            super::BevBox {
                x: pose.x,
                y: pose.y,
                length: t.length,
                width: t.width,
                yaw: pose.yaw,
                vx: vel.0,
                vy: vel.1,
                class_id: t.class_id,
                score: 1.0,
            }
            .into_frame(ego)
        })
        .collect()
}
