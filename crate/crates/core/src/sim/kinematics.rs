use crate::geometry::Vec3;
use crate::nav::{ActionCall, ActionName};

use super::{quantize_angle, Pose, Scene};

/// Forward and strafe speed, world units per second.
pub const MOVE_SPEED: f64 = 1.5;
/// In-place rotation speed, degrees per second.
pub const ROTATE_SPEED: f64 = 45.0;
/// Look up/down speed, degrees per second.
pub const PITCH_SPEED: f64 = 30.0;
/// Minimum clearance kept between the agent and any box or the scene bounds.
pub const COLLISION_MARGIN: f64 = 0.2;

const EPS: f64 = 1e-9;

/// Horizontal unit vector the agent faces at `yaw` degrees.
pub fn heading(yaw: f64) -> Vec3 {
    let r = yaw.to_radians();
    Vec3::new(-r.sin(), 0.0, r.cos())
}

/// Horizontal unit vector pointing to the agent's right at `yaw` degrees.
pub fn right_of(yaw: f64) -> Vec3 {
    let r = yaw.to_radians();
    Vec3::new(r.cos(), 0.0, r.sin())
}

/// Furthest distance (at most `max_distance`) the agent can travel from `origin` along
/// the unit vector `dir` before coming within the collision margin of an object or the
/// scene bounds.
pub fn travel_limit(scene: &Scene, origin: Vec3, dir: Vec3, max_distance: f64) -> f64 {
    let mut limit = max_distance.max(0.0);

    let walkable = scene.bounds().expanded(-COLLISION_MARGIN);
    match walkable.ray_interval(origin, dir) {
        Some((_, exit)) => limit = limit.min(exit.max(0.0)),
        None => return 0.0,
    }

    for obj in scene.objects() {
        let padded = obj.aabb.expanded(COLLISION_MARGIN);
        if padded.contains_strict(origin) && !near_boundary(&padded, origin) {
            // Already inside the margin band (possible only for hand-placed poses):
            // never let the point reach the box itself.
            if let Some((enter, _)) = obj.aabb.ray_interval(origin, dir) {
                if enter >= 0.0 {
                    limit = limit.min((enter - 1e-6).max(0.0));
                }
            }
            continue;
        }
        if let Some((enter, exit)) = padded.ray_interval(origin, dir) {
            if exit > EPS && enter >= -1e-7 {
                limit = limit.min(enter.max(0.0));
            }
        }
    }
    limit
}

/// True when `p` sits on the padded box surface up to rounding, as it does after a
/// clamped move.
fn near_boundary(b: &crate::geometry::Aabb, p: Vec3) -> bool {
    (0..3).any(|a| {
        let v = p.component(a);
        (v - b.min.component(a)).abs() < 1e-7 || (v - b.max.component(a)).abs() < 1e-7
    })
}

fn translate(scene: &Scene, pose: &Pose, dir: Vec3, distance: f64) -> Pose {
    let travel = travel_limit(scene, pose.position, dir, distance);
    pose.with_position(pose.position + dir * travel)
}

/// Applies one validated action to `pose` and returns the resulting pose.
///
/// Movement is clamped at the first obstacle, never rejected. `scan_360` is expanded
/// into rotation steps by the caller; here it leaves the pose unchanged.
pub fn apply_action(scene: &Scene, pose: &Pose, action: &ActionCall) -> Pose {
    let seconds = action.duration().unwrap_or(0.0);
    let turn = quantize_angle(ROTATE_SPEED * seconds);
    let tilt = quantize_angle(PITCH_SPEED * seconds);
    match action.name() {
        ActionName::MoveForward => translate(scene, pose, heading(pose.yaw()), MOVE_SPEED * seconds),
        ActionName::MoveLeft => translate(scene, pose, -right_of(pose.yaw()), MOVE_SPEED * seconds),
        ActionName::MoveRight => translate(scene, pose, right_of(pose.yaw()), MOVE_SPEED * seconds),
        ActionName::InPlaceRotateToLeft => pose.with_yaw(pose.yaw() + turn),
        ActionName::InPlaceRotateToRight => pose.with_yaw(pose.yaw() - turn),
        ActionName::LookUp => pose.with_pitch(pose.pitch() + tilt),
        ActionName::LookDown => pose.with_pitch(pose.pitch() - tilt),
        ActionName::Scan360 => *pose,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::sim::SceneObject;

    fn open_scene() -> Scene {
        Scene::new(
            "open",
            Aabb::new(Vec3::new(-50.0, 0.0, -50.0), Vec3::new(50.0, 5.0, 50.0)),
            Pose::new(Vec3::new(0.0, 1.6, 0.0), 0.0, 0.0),
            vec![],
        )
        .unwrap()
    }

    fn walled_scene(wall_distance: f64) -> Scene {
        let wall = SceneObject {
            id: "wall".into(),
            label: "wall".into(),
            color: [200, 200, 200],
            aabb: Aabb::new(
                Vec3::new(-5.0, 0.0, wall_distance),
                Vec3::new(5.0, 3.0, wall_distance + 0.3),
            ),
            features: vec![],
        };
        Scene::new(
            "walled",
            Aabb::new(Vec3::new(-50.0, 0.0, -50.0), Vec3::new(50.0, 5.0, 50.0)),
            Pose::new(Vec3::new(0.0, 1.6, 0.0), 0.0, 0.0),
            vec![wall],
        )
        .unwrap()
    }

    fn call(name: ActionName, d: f64) -> ActionCall {
        ActionCall::new(name, Some(d)).unwrap()
    }

    #[test]
    fn forward_two_seconds_moves_three_units() {
        let s = open_scene();
        let p = apply_action(&s, &s.agent_start(), &call(ActionName::MoveForward, 2.0));
        assert!((p.position.z - 3.0).abs() < 1e-12);
        assert!(p.position.x.abs() < 1e-12);
        assert_eq!(p.yaw(), 0.0);
        assert_eq!(p.pitch(), 0.0);
    }

    #[test]
    fn rotate_left_two_seconds_is_ninety_degrees() {
        let s = open_scene();
        let p = apply_action(&s, &s.agent_start(), &call(ActionName::InPlaceRotateToLeft, 2.0));
        assert_eq!(p.yaw(), 90.0);
        assert_eq!(p.position, s.agent_start().position);
        let back = apply_action(&s, &p, &call(ActionName::InPlaceRotateToRight, 2.0));
        assert_eq!(back.yaw(), 0.0);
    }

    #[test]
    fn left_turn_then_forward_heads_to_negative_x() {
        let s = open_scene();
        let p = apply_action(&s, &s.agent_start(), &call(ActionName::InPlaceRotateToLeft, 2.0));
        let p = apply_action(&s, &p, &call(ActionName::MoveForward, 2.0));
        assert!((p.position.x + 3.0).abs() < 1e-9);
        assert!(p.position.z.abs() < 1e-9);
    }

    #[test]
    fn strafes_are_perpendicular() {
        let s = open_scene();
        let l = apply_action(&s, &s.agent_start(), &call(ActionName::MoveLeft, 2.0));
        let r = apply_action(&s, &s.agent_start(), &call(ActionName::MoveRight, 2.0));
        assert!((l.position.x + 3.0).abs() < 1e-12);
        assert!((r.position.x - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pitch_clamps_at_sixty() {
        let s = open_scene();
        let p = apply_action(&s, &s.agent_start(), &call(ActionName::LookUp, 10.0));
        assert_eq!(p.pitch(), 60.0);
        let p = apply_action(&s, &s.agent_start(), &call(ActionName::LookDown, 1.0));
        assert_eq!(p.pitch(), -30.0);
    }

    /// Independent oracle: march in 0.001-unit steps until the next point would come
    /// within the margin of the wall (point-in-padded-box test).
    fn brute_force_stop(scene: &Scene, origin: Vec3, dir: Vec3, max: f64) -> f64 {
        let step = 0.001;
        let mut travelled: f64 = 0.0;
        loop {
            let next = travelled + step;
            if next > max + 1e-12 {
                return travelled;
            }
            let p = origin + dir * next;
            let blocked = scene
                .objects()
                .iter()
                .any(|o| o.aabb.expanded(COLLISION_MARGIN).contains_strict(p))
                || !scene.bounds().expanded(-COLLISION_MARGIN).contains(p);
            if blocked {
                return travelled;
            }
            travelled = next;
        }
    }

    #[test]
    fn wall_one_unit_ahead_stops_at_point_eight() {
        let s = walled_scene(1.0);
        let p = apply_action(&s, &s.agent_start(), &call(ActionName::MoveForward, 2.0));
        let oracle = brute_force_stop(&s, s.agent_start().position, heading(0.0), 3.0);
        assert!((oracle - 0.8).abs() < 0.01, "oracle {oracle}");
        assert!((p.position.z - oracle).abs() < 0.01, "got {}", p.position.z);
        assert!((p.position.z - 0.8).abs() < 1e-9);
    }

    #[test]
    fn oblique_approach_matches_oracle() {
        let s = walled_scene(1.0);
        let start = s.agent_start().with_yaw(-30.0);
        let dir = heading(start.yaw());
        let p = apply_action(&s, &start, &call(ActionName::MoveForward, 2.0));
        let travelled = (p.position - start.position).length();
        let oracle = brute_force_stop(&s, start.position, dir, 3.0);
        assert!((travelled - oracle).abs() < 0.01, "{travelled} vs {oracle}");
    }

    #[test]
    fn blocked_agent_can_back_away_and_slide() {
        let s = walled_scene(1.0);
        let pinned = apply_action(&s, &s.agent_start(), &call(ActionName::MoveForward, 2.0));
        let again = apply_action(&s, &pinned, &call(ActionName::MoveForward, 2.0));
        assert!((again.position.z - pinned.position.z).abs() < 1e-9);
        let slid = apply_action(&s, &pinned, &call(ActionName::MoveRight, 1.0));
        assert!((slid.position.x - 1.5).abs() < 1e-9);
        let turned = apply_action(&s, &pinned, &call(ActionName::InPlaceRotateToLeft, 4.0));
        let back = apply_action(&s, &turned, &call(ActionName::MoveForward, 1.0));
        assert!((back.position.z - (pinned.position.z - 1.5)).abs() < 1e-9);
    }

    #[test]
    fn scene_bounds_clamp_movement() {
        let s = open_scene();
        let far = s.agent_start().with_position(Vec3::new(0.0, 1.6, 48.0));
        let p = apply_action(&s, &far, &call(ActionName::MoveForward, 10.0));
        assert!((p.position.z - 49.8).abs() < 1e-9);
    }
}
