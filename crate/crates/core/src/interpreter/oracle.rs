use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use chrono::Utc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{GridCell, GridSpec};
use crate::sim::{visible_objects, Pose, Scene};

use super::{
    GroundTruthObject, InterpretError, InterpretTiming, Interpreter, Observation, SceneContext, TextualDescription,
    TextualEntry, VisualEntry, VisualInterpretation,
};

/// Seeded perturbation of oracle output. Both probabilities default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpreterNoise {
    /// Probability that a visible object is left out of both halves.
    #[serde(default)]
    pub drop_p: f64,
    /// Probability that an object's cell is moved one column left or right.
    #[serde(default)]
    pub shift_p: f64,
}

impl InterpreterNoise {
    pub fn is_zero(&self) -> bool {
        self.drop_p <= 0.0 && self.shift_p <= 0.0
    }
}

/// Ground-truth interpreter built on the simulator's visibility query.
#[derive(Debug, Default)]
pub struct OracleInterpreter {
    grid: GridSpec,
    noise: InterpreterNoise,
    seed: u64,
    calls: AtomicU64,
}

impl Clone for OracleInterpreter {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            noise: self.noise,
            seed: self.seed,
            calls: AtomicU64::new(self.calls.load(Ordering::Relaxed)),
        }
    }
}

impl OracleInterpreter {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            ..Self::default()
        }
    }

    pub fn with_noise(mut self, noise: InterpreterNoise, seed: u64) -> Self {
        self.noise = noise;
        self.seed = seed;
        self
    }

    /// The noise stream depends on the task seed, the frame and the call index, so a
    /// replayed run sees the same perturbations turn by turn while revisiting a pose
    /// draws fresh ones.
    fn rng_for(&self, frame_digest: &str, call: u64) -> ChaCha8Rng {
        let mut prefix = [0u8; 8];
        if let Ok(bytes) = hex::decode(frame_digest.get(..16).unwrap_or("")) {
            prefix.copy_from_slice(&bytes);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(prefix));
        rng.set_stream(call);
        rng
    }

    fn shift(&self, cell: GridCell, right: bool) -> GridCell {
        let last = self.grid.columns() - 1;
        let column = match (right, cell.column) {
            (true, c) if c < last => c + 1,
            (false, c) if c > 0 => c - 1,
            (_, 0) => 1,
            _ => last - 1,
        };
        GridCell { column, ..cell }
    }
}

impl Interpreter for OracleInterpreter {
    fn interpret(&self, obs: &Observation<'_>) -> Result<SceneContext, InterpretError> {
        let frame_digest = obs.frame.digest();
        let call = self.calls.fetch_add(1, Ordering::Relaxed);

        let started = Instant::now();
        let mut seen: Vec<(&str, GridCell, &[String])> = visible_objects(obs.scene, obs.pose, &self.grid)
            .into_iter()
            .map(|v| (v.object.label.as_str(), v.cell, v.object.features.as_slice()))
            .collect();
        if !self.noise.is_zero() {
            let mut rng = self.rng_for(&frame_digest, call);
            let mut kept = Vec::with_capacity(seen.len());
            for (label, cell, features) in seen {
                let drop = rng.random_bool(self.noise.drop_p.clamp(0.0, 1.0));
                let shift = rng.random_bool(self.noise.shift_p.clamp(0.0, 1.0));
                let right = rng.random_bool(0.5);
                if drop {
                    continue;
                }
                let cell = if shift { self.shift(cell, right) } else { cell };
                kept.push((label, cell, features));
            }
            seen = kept;
        }
        let visual = VisualInterpretation {
            entries: seen
                .iter()
                .map(|(label, cell, _)| VisualEntry {
                    label: label.to_string(),
                    cell: *cell,
                })
                .collect(),
        };
        let visual_s = started.elapsed().as_secs_f64();

        let started = Instant::now();
        let textual = TextualDescription {
            entries: seen
                .iter()
                .map(|(label, _, features)| TextualEntry {
                    name: label.to_string(),
                    features: features.join(", "),
                })
                .collect(),
        };
        let textual_s = started.elapsed().as_secs_f64();

        Ok(SceneContext {
            visual,
            textual,
            frame_digest,
            produced_at: Utc::now(),
            timing: InterpretTiming { visual_s, textual_s },
            ground_truth: None,
        })
    }
}

/// Clearance and visibility of every object from `pose`.
pub fn ground_truth(scene: &Scene, pose: &Pose, grid: &GridSpec) -> Vec<GroundTruthObject> {
    let visible = visible_objects(scene, pose, grid);
    scene
        .objects()
        .iter()
        .map(|o| GroundTruthObject {
            label: o.label.clone(),
            clearance: o.aabb.footprint_distance(pose.position),
            visible: visible.iter().any(|v| v.object.id == o.id),
        })
        .collect()
}
