//! 2D ray casting against oriented rectangles.

use super::Pose;
use crate::par;

/// Oriented bounding rectangle in the ground plane.
#[derive(Debug, Clone, Copy)]
pub struct Obb {
    pub cx: f64,
    pub cy: f64,
    pub half_length: f64,
    pub half_width: f64,
    pub yaw: f64,
}

/// Distance along the ray to the first surface of `obb`, if hit.
///
/// Slab test in the box frame. Rays starting inside the box return None
/// (the sensor never sits inside an actor; a degenerate overlap would
/// produce no return rather than a bogus one).
pub fn ray_obb_intersect(origin: (f64, f64), dir: (f64, f64), obb: &Obb) -> Option<f64> {
    let (s, c) = obb.yaw.sin_cos();
    let ox = origin.0 - obb.cx;
    let oy = origin.1 - obb.cy;
    let lo = (c * ox + s * oy, -s * ox + c * oy);
    let ld = (c * dir.0 + s * dir.1, -s * dir.0 + c * dir.1);

    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for (o, d, half) in [
        (lo.0, ld.0, obb.half_length),
        (lo.1, ld.1, obb.half_width),
    ] {
        if d.abs() < 1e-12 {
            if o.abs() > half {
                return None;
            }
            continue;
        }
        let t1 = (-half - o) / d;
        let t2 = (half - o) / d;
        let (lo_t, hi_t) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        t_enter = t_enter.max(lo_t);
        t_exit = t_exit.min(hi_t);
    }
    if t_enter <= t_exit && t_enter > 1e-9 {
        Some(t_enter)
    } else {
        None
    }
}

/// Cast one full sweep from `ego`: `azimuth_steps` rays over 360 degrees,
/// each hitting the nearest of `boxes` within `max_range`.
///
/// Every hit emits `rings` sensor-frame points that share the (x, y) impact
/// and stack in z according to the actor's height; `heights[i]` and
/// `reflectance[i]` describe actor i. Returns (actor index, point) pairs in
/// ray order, so the caller can attribute visibility per actor.
pub fn cast_sweep(
    ego: &Pose,
    boxes: &[Obb],
    heights: &[f64],
    reflectance: &[f64],
    rings: usize,
    azimuth_steps: usize,
    max_range: f64,
) -> Vec<(usize, [f64; 4])> {
    let step = 2.0 * std::f64::consts::PI / azimuth_steps as f64;
    let per_ray = par::map_range(azimuth_steps, |a| {
        let theta = a as f64 * step;
        let world_dir = ego.rotate_vec((theta.cos(), theta.sin()));
        let mut best: Option<(f64, usize)> = None;
        for (i, obb) in boxes.iter().enumerate() {
            if let Some(t) = ray_obb_intersect((ego.x, ego.y), world_dir, obb) {
                if t <= max_range && best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best.map(|(t, i)| {
            let x = t * theta.cos();
            let y = t * theta.sin();
            let mut pts = Vec::with_capacity(rings);
            for ring in 0..rings {
                let z = heights[i] * (ring as f64 + 0.5) / rings as f64;
                pts.push((i, [x, y, z, reflectance[i]]));
            }
            pts
        })
    });
    per_ray.into_iter().flatten().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_axis_aligned_box_front_face() {
        let obb = Obb {
            cx: 5.0,
            cy: 0.0,
            half_length: 1.0,
            half_width: 1.0,
            yaw: 0.0,
        };
        let t = ray_obb_intersect((0.0, 0.0), (1.0, 0.0), &obb).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ray_misses_to_the_side() {
        let obb = Obb {
            cx: 5.0,
            cy: 3.0,
            half_length: 1.0,
            half_width: 1.0,
            yaw: 0.0,
        };
        assert!(ray_obb_intersect((0.0, 0.0), (1.0, 0.0), &obb).is_none());
    }

    #[test]
    fn rotated_box_hit_distance() {
        // 45-degree box centered at (4, 0): nearest corner at 4 - sqrt(2)
        let obb = Obb {
            cx: 4.0,
            cy: 0.0,
            half_length: 1.0,
            half_width: 1.0,
            yaw: std::f64::consts::FRAC_PI_4,
        };
        let t = ray_obb_intersect((0.0, 0.0), (1.0, 0.0), &obb).unwrap();
        assert!((t - (4.0 - std::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn nearer_box_shadows_farther_one() {
        let near = Obb {
            cx: 3.0,
            cy: 0.0,
            half_length: 0.5,
            half_width: 2.0,
            yaw: 0.0,
        };
        let far = Obb {
            cx: 8.0,
            cy: 0.0,
            half_length: 0.5,
            half_width: 0.5,
            yaw: 0.0,
        };
        let pts = cast_sweep(
            &Pose::identity(),
            &[near, far],
            &[1.0, 1.0],
            &[0.5, 0.5],
            1,
            360,
            20.0,
        );
        assert!(pts.iter().all(|&(i, _)| i == 0), "far box must be fully shadowed");
        assert!(!pts.is_empty());
    }

    #[test]
    fn sweep_points_are_in_sensor_frame() {
        let obb = Obb {
            cx: 0.0,
            cy: 6.0,
            half_length: 1.0,
            half_width: 1.0,
            yaw: 0.0,
        };
        // ego rotated 90 degrees: the box sits straight ahead in sensor frame
        let ego = Pose::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let pts = cast_sweep(&ego, &[obb], &[1.0], &[0.5], 1, 360, 20.0);
        let hit = pts.iter().map(|(_, p)| p).find(|p| p[1].abs() < 1e-9).unwrap();
        assert!((hit[0] - 5.0).abs() < 1e-9);
    }
}
