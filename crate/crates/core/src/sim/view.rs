use serde::Serialize;

use crate::geometry::Vec3;
use crate::grid::{GridCell, GridSpec};

use super::kinematics::{heading, right_of};
use super::{Pose, Scene, SceneObject};

/// Near clipping distance in world units.
pub const NEAR_PLANE: f64 = 0.05;

/// Pinhole camera at the agent's eye with a 90-degree horizontal field of view.
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    pub eye: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Camera {
    pub fn from_pose(pose: &Pose) -> Self {
        let pitch = pose.pitch().to_radians();
        let flat = heading(pose.yaw());
        let forward = flat * pitch.cos() + Vec3::UP * pitch.sin();
        let up = Vec3::UP * pitch.cos() - flat * pitch.sin();
        Self {
            eye: pose.position,
            right: right_of(pose.yaw()),
            up,
            forward,
        }
    }

    /// World point to camera space: `x` right, `y` up, `z` depth along the view axis.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = p - self.eye;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }
}

/// A point projected onto the unit image plane (square aspect).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Projection {
    /// Horizontal NDC in `[-1, 1]` inside the frustum, positive to the right.
    pub ndc_x: f64,
    /// Vertical NDC in `[-1, 1]` inside the frustum, positive up.
    pub ndc_y: f64,
    pub depth: f64,
}

impl Projection {
    pub fn in_frustum(&self) -> bool {
        self.depth > NEAR_PLANE && self.ndc_x.abs() <= 1.0 && self.ndc_y.abs() <= 1.0
    }

    /// Normalized screen coordinates: `u` right, `v` down, both in `[0, 1]`.
    pub fn screen(&self) -> (f64, f64) {
        ((self.ndc_x + 1.0) / 2.0, (1.0 - self.ndc_y) / 2.0)
    }
}

/// Projects `p` through the camera of `pose`. Returns `None` for points at or behind
/// the eye plane.
pub fn project(pose: &Pose, p: Vec3) -> Option<Projection> {
    let c = Camera::from_pose(pose).to_camera(p);
    if c.z <= 1e-12 {
        return None;
    }
    Some(Projection {
        ndc_x: c.x / c.z,
        ndc_y: c.y / c.z,
        depth: c.z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibleObject<'a> {
    pub object: &'a SceneObject,
    pub cell: GridCell,
    /// Eye-to-centroid distance.
    pub distance: f64,
    pub projection: Projection,
}

/// Objects whose centroid lies in the view frustum and is not hidden behind another
/// box, nearest first.
pub fn visible_objects<'a>(scene: &'a Scene, pose: &Pose, grid: &GridSpec) -> Vec<VisibleObject<'a>> {
    let eye = pose.position;
    let mut out: Vec<VisibleObject<'a>> = scene
        .objects()
        .iter()
        .filter_map(|obj| {
            let centroid = obj.aabb.centroid();
            let projection = project(pose, centroid)?;
            if !projection.in_frustum() {
                return None;
            }
            let ray = centroid - eye;
            let occluded = scene.objects().iter().any(|other| {
                other.id != obj.id
                    && other
                        .aabb
                        .ray_interval(eye, ray)
                        .is_some_and(|(enter, exit)| exit > 0.0 && enter < 1.0)
            });
            if occluded {
                return None;
            }
            let (u, v) = projection.screen();
            Some(VisibleObject {
                object: obj,
                cell: grid.cell_at(u, v),
                distance: ray.length(),
                projection,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.object.id.cmp(&b.object.id))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn cube(id: &str, center: Vec3, half: f64) -> SceneObject {
        let h = Vec3::new(half, half, half);
        SceneObject {
            id: id.into(),
            label: id.into(),
            color: [100, 100, 100],
            aabb: Aabb::new(center - h, center + h),
            features: vec![],
        }
    }

    fn scene(objects: Vec<SceneObject>) -> Scene {
        Scene::new(
            "t",
            Aabb::new(Vec3::new(-30.0, 0.0, -30.0), Vec3::new(30.0, 10.0, 30.0)),
            Pose::new(Vec3::new(0.0, 1.6, 0.0), 0.0, 0.0),
            objects,
        )
        .unwrap()
    }

    #[test]
    fn object_behind_is_excluded() {
        let s = scene(vec![cube("behind", Vec3::new(0.0, 1.6, -5.0), 0.5)]);
        assert!(visible_objects(&s, &s.agent_start(), &GridSpec::default()).is_empty());
    }

    #[test]
    fn centered_object_lands_in_middle_column() {
        let s = scene(vec![cube("c", Vec3::new(0.0, 1.6, 5.0), 0.5)]);
        let v = visible_objects(&s, &s.agent_start(), &GridSpec::default());
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0].cell.column, 3 | 4));
        assert!((v[0].distance - 5.0).abs() < 1e-12);
    }

    #[test]
    fn right_side_object_maps_right_of_center() {
        let s = scene(vec![cube("r", Vec3::new(4.0, 1.6, 5.0), 0.5)]);
        let v = visible_objects(&s, &s.agent_start(), &GridSpec::default());
        // ndc_x = 0.8 -> u = 0.9 -> column H.
        assert_eq!(v[0].cell.to_string(), "H5");
    }

    #[test]
    fn yaw_left_brings_left_object_to_center() {
        let s = scene(vec![cube("l", Vec3::new(-5.0, 1.6, 0.0), 0.5)]);
        assert!(visible_objects(&s, &s.agent_start(), &GridSpec::default()).is_empty());
        let turned = s.agent_start().with_yaw(90.0);
        let v = visible_objects(&s, &turned, &GridSpec::default());
        assert_eq!(v.len(), 1);
        assert!(v[0].projection.ndc_x.abs() < 1e-9);
    }

    /// Independent oracle: sample the eye-to-centroid segment densely and test each
    /// sample for containment in the other boxes.
    fn sampled_occluded(scene: &Scene, eye: Vec3, target: &SceneObject) -> bool {
        let c = target.aabb.centroid();
        (1..10_000).any(|i| {
            let p = eye.lerp(c, f64::from(i) / 10_000.0);
            scene
                .objects()
                .iter()
                .any(|o| o.id != target.id && o.aabb.contains_strict(p))
        })
    }

    #[test]
    fn nearer_object_hides_farther_on_same_ray() {
        let s = scene(vec![
            cube("near", Vec3::new(0.0, 1.6, 4.0), 0.5),
            cube("far", Vec3::new(0.0, 1.6, 9.0), 0.5),
            cube("side", Vec3::new(3.0, 1.6, 9.0), 0.5),
        ]);
        let eye = s.agent_start().position;
        let v = visible_objects(&s, &s.agent_start(), &GridSpec::default());
        let ids: Vec<&str> = v.iter().map(|e| e.object.id.as_str()).collect();
        for obj in s.objects() {
            assert_eq!(
                ids.contains(&obj.id.as_str()),
                !sampled_occluded(&s, eye, obj),
                "{}",
                obj.id
            );
        }
        assert_eq!(ids, ["near", "side"]);
    }

    #[test]
    fn projection_sign_conventions() {
        let pose = Pose::new(Vec3::ZERO, 0.0, 0.0);
        let p = project(&pose, Vec3::new(1.0, 1.0, 2.0)).unwrap();
        assert!((p.ndc_x - 0.5).abs() < 1e-12);
        assert!((p.ndc_y - 0.5).abs() < 1e-12);
        let up = pose.with_pitch(45.0);
        let q = project(&up, Vec3::new(0.0, 1.0, 1.0)).unwrap();
        assert!(q.ndc_y.abs() < 1e-9 && q.ndc_x.abs() < 1e-9);
    }
}
