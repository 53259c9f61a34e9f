//! Deterministic first-person scene simulator: scene graph, agent pose, kinematics,
//! visibility queries and a software renderer.

mod kinematics;
mod render;
mod scenes;
mod view;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

pub use kinematics::{
    apply_action, heading, right_of, travel_limit, COLLISION_MARGIN, MOVE_SPEED, PITCH_SPEED, ROTATE_SPEED,
};
pub use render::{render, Frame, FrameError, BACKGROUND};
pub use scenes::{bundled_scene_names, bundled_scene_source, load_bundled, resolve_scene};
pub use view::{project, visible_objects, Camera, Projection, VisibleObject, NEAR_PLANE};

pub const MAX_PITCH: f64 = 60.0;

/// Angles are kept on a binary grid of 2^-16 degrees so that rotations compose and
/// cancel exactly in floating point.
const ANGLE_QUANTUM_INV: f64 = 65536.0;

pub(crate) fn quantize_angle(deg: f64) -> f64 {
    (deg * ANGLE_QUANTUM_INV).round() / ANGLE_QUANTUM_INV
}

pub(crate) fn normalize_yaw(deg: f64) -> f64 {
    let y = quantize_angle(deg).rem_euclid(360.0);
    if y >= 360.0 {
        0.0
    } else {
        y
    }
}

pub(crate) fn clamp_pitch(deg: f64) -> f64 {
    quantize_angle(deg).clamp(-MAX_PITCH, MAX_PITCH)
}

/// Agent position and view orientation. Yaw grows when turning left; yaw 0 faces `+z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    yaw: f64,
    pitch: f64,
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64, pitch: f64) -> Self {
        Self {
            position,
            yaw: normalize_yaw(yaw),
            pitch: clamp_pitch(pitch),
        }
    }

    /// Yaw in degrees, always in `[0, 360)`.
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    /// Pitch in degrees, always in `[-60, 60]`. Positive looks up.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn with_yaw(self, yaw: f64) -> Self {
        Self::new(self.position, yaw, self.pitch)
    }

    pub fn with_pitch(self, pitch: f64) -> Self {
        Self::new(self.position, self.yaw, pitch)
    }

    pub fn with_position(self, position: Vec3) -> Self {
        Self { position, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    pub color: [u8; 3],
    pub aabb: Aabb,
    #[serde(default)]
    pub features: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene document is malformed at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("scene field `{field}` is invalid: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown scene {0:?}")]
    Unknown(String),
    #[error("failed to read scene file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SceneError {
    SceneError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// A validated, immutable scene.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scene {
    name: String,
    bounds: Aabb,
    agent_start: Pose,
    objects: Vec<SceneObject>,
}

impl Scene {
    pub fn new(
        name: impl Into<String>,
        bounds: Aabb,
        agent_start: Pose,
        objects: Vec<SceneObject>,
    ) -> Result<Self, SceneError> {
        if let Some(axis) = bounds.first_inverted_axis() {
            return Err(invalid(
                format!("bounds.min[{axis}]"),
                "min corner must be strictly less than max corner",
            ));
        }
        let walkable = bounds.expanded(-COLLISION_MARGIN);
        if walkable.first_inverted_axis().is_some() {
            return Err(invalid("bounds", "scene is smaller than the collision margin"));
        }
        if !walkable.contains(agent_start.position) {
            return Err(invalid(
                "agent_start.pos",
                format!("start position must lie inside bounds by at least {COLLISION_MARGIN} units"),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, obj) in objects.iter().enumerate() {
            if obj.id.trim().is_empty() {
                return Err(invalid(format!("objects[{i}].id"), "id must be non-empty"));
            }
            if !seen.insert(obj.id.as_str()) {
                return Err(invalid(
                    format!("objects[{i}].id"),
                    format!("duplicate object id {:?}", obj.id),
                ));
            }
            if obj.label.trim().is_empty() {
                return Err(invalid(format!("objects[{i}].label"), "label must be non-empty"));
            }
            if let Some(axis) = obj.aabb.first_inverted_axis() {
                return Err(invalid(
                    format!("objects[{i}].min[{axis}]"),
                    "min corner must be strictly less than max corner",
                ));
            }
            if obj.aabb.contains(agent_start.position) {
                return Err(invalid(
                    "agent_start.pos",
                    format!("start position lies inside object {:?}", obj.id),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            bounds,
            agent_start,
            objects,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn agent_start(&self) -> Pose {
        self.agent_start
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// First object whose label matches `label`, ignoring case and surrounding space.
    pub fn find_by_label(&self, label: &str) -> Option<&SceneObject> {
        let wanted = label.trim();
        self.objects
            .iter()
            .find(|o| o.label.trim().eq_ignore_ascii_case(wanted))
    }

    /// Copy of this scene with a different object list; re-validated.
    pub fn with_objects(&self, objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        Self::new(self.name.clone(), self.bounds, self.agent_start, objects)
    }

    pub fn to_document(&self) -> String {
        let doc = SceneDocument {
            name: self.name.clone(),
            bounds: BoundsDoc {
                min: self.bounds.min,
                max: self.bounds.max,
            },
            agent_start: StartDoc {
                pos: self.agent_start.position,
                yaw: self.agent_start.yaw(),
                pitch: self.agent_start.pitch(),
            },
            objects: self
                .objects
                .iter()
                .map(|o| ObjectDoc {
                    id: o.id.clone(),
                    label: o.label.clone(),
                    color: o.color,
                    min: o.aabb.min,
                    max: o.aabb.max,
                    features: o.features.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("scene document serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDocument {
    name: String,
    bounds: BoundsDoc,
    agent_start: StartDoc,
    #[serde(default)]
    objects: Vec<ObjectDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsDoc {
    min: Vec3,
    max: Vec3,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartDoc {
    pos: Vec3,
    #[serde(default)]
    yaw: f64,
    #[serde(default)]
    pitch: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: String,
    label: String,
    color: [u8; 3],
    min: Vec3,
    max: Vec3,
    #[serde(default)]
    features: Vec<String>,
}

/// Parses and validates a JSON scene document.
pub fn load_scene(document: &[u8]) -> Result<Scene, SceneError> {
    let de = &mut serde_json::Deserializer::from_slice(document);
    let doc: SceneDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SceneError::Parse {
            field: if path == "." { "<document>".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    if !(-MAX_PITCH..=MAX_PITCH).contains(&doc.agent_start.pitch) {
        return Err(invalid("agent_start.pitch", "pitch must lie in [-60, 60]"));
    }
    if !doc.agent_start.yaw.is_finite() {
        return Err(invalid("agent_start.yaw", "yaw must be finite"));
    }
    let start = Pose::new(doc.agent_start.pos, doc.agent_start.yaw, doc.agent_start.pitch);
    let objects = doc
        .objects
        .into_iter()
        .map(|o| SceneObject {
            id: o.id,
            label: o.label,
            color: o.color,
            aabb: Aabb::new(o.min, o.max),
            features: o.features,
        })
        .collect();
    Scene::new(doc.name, Aabb::new(doc.bounds.min, doc.bounds.max), start, objects)
}
