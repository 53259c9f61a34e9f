use std::path::Path;

use super::{load_scene, Scene, SceneError};

const BUNDLED: &[(&str, &str)] = &[
    ("highway", include_str!("../../assets/scenes/highway.scene")),
    ("country_house", include_str!("../../assets/scenes/country_house.scene")),
    ("ship", include_str!("../../assets/scenes/ship.scene")),
];

fn canonical(name: &str) -> String {
    name.trim()
        .to_ascii_lowercase()
        .replace([' ', '-'], "_")
        .trim_end_matches(".scene")
        .to_string()
}

pub fn bundled_scene_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Raw document of a bundled scene. Accepts `"Country House"`, `"country-house"` etc.
pub fn bundled_scene_source(name: &str) -> Option<&'static str> {
    let key = canonical(name);
    BUNDLED.iter().find(|(n, _)| *n == key).map(|(_, src)| *src)
}

pub fn load_bundled(name: &str) -> Result<Scene, SceneError> {
    let src = bundled_scene_source(name).ok_or_else(|| SceneError::Unknown(name.to_string()))?;
    load_scene(src.as_bytes())
}

/// Resolves a scene reference: a bundled scene name, or a path to a scene file
/// (relative paths are taken from `base_dir` when given).
pub fn resolve_scene(reference: &str, base_dir: Option<&Path>) -> Result<Scene, SceneError> {
    if let Some(src) = bundled_scene_source(reference) {
        return load_scene(src.as_bytes());
    }
    let mut path = Path::new(reference).to_path_buf();
    if path.is_relative() {
        if let Some(base) = base_dir {
            path = base.join(path);
        }
    }
    if !path.exists() {
        return Err(SceneError::Unknown(reference.to_string()));
    }
    let bytes = std::fs::read(&path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scene(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_scenes_load() {
        for name in bundled_scene_names() {
            let s = load_bundled(name).unwrap();
            assert_eq!(s.name(), name);
        }
    }

    #[test]
    fn highway_has_yellow_bus() {
        let s = load_bundled("Highway").unwrap();
        assert!(s.find_by_label("yellow bus").is_some());
    }

    #[test]
    fn name_aliases() {
        assert!(bundled_scene_source("Country House").is_some());
        assert!(bundled_scene_source("country-house").is_some());
        assert!(bundled_scene_source("ship.scene").is_some());
        assert!(matches!(load_bundled("moon"), Err(SceneError::Unknown(_))));
    }
}
