//! Core of the navigation pipeline: a deterministic first-person simulator, scene
//! interpretation, the decision voter, control mapping, the model gateway and the
//! turn-loop orchestrator.

pub mod gateway;
pub mod geometry;
pub mod grid;
pub mod interpreter;
pub mod nav;
pub mod orchestrator;
pub mod prompts;
pub mod sim;
