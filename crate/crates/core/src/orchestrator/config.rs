use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::gateway::{Cassette, CassetteMode, Gateway, HttpTransport, ModelEndpoint, Transport};
use crate::grid::GridSpec;

use super::SetupError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(default = "default_frame")]
    pub frame_width: u32,
    #[serde(default = "default_frame")]
    pub frame_height: u32,
    #[serde(default = "default_grid")]
    pub grid_columns: u16,
    #[serde(default = "default_grid")]
    pub grid_rows: u16,
    /// Send the two interpreter requests concurrently.
    #[serde(default)]
    pub parallel_interpretation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpreter_temperature: Option<f64>,
}

fn default_frame() -> u32 {
    512
}

fn default_grid() -> u16 {
    8
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            frame_width: default_frame(),
            frame_height: default_frame(),
            grid_columns: default_grid(),
            grid_rows: default_grid(),
            parallel_interpretation: false,
            interpreter_temperature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    #[serde(default)]
    pub interpreter: Option<ModelEndpoint>,
    #[serde(default)]
    pub classifier: Option<ModelEndpoint>,
    #[serde(default)]
    pub action: Option<ModelEndpoint>,
    #[serde(default)]
    pub voters: Vec<ModelEndpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CassetteConfig {
    pub path: PathBuf,
    pub mode: CassetteMode,
}

/// Endpoint and default settings, loaded from TOML or JSON. Secrets are never stored
/// here; endpoints name the environment variable holding their key.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default)]
    pub endpoints: Endpoints,
    #[serde(default)]
    pub cassette: Option<CassetteConfig>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, SetupError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SetupError::Config(format!("read {}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str::<Config>(&text).map_err(|e| SetupError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str::<Config>(&text).map_err(|e| SetupError::Config(format!("{}: {e}", path.display())))?
        };
        if let (Some(c), Some(dir)) = (cfg.cassette.as_mut(), path.parent()) {
            if c.path.is_relative() {
                c.path = dir.join(&c.path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SetupError> {
        self.grid()?;
        if self.defaults.frame_width == 0 || self.defaults.frame_height == 0 {
            return Err(SetupError::Config("frame size must be positive".into()));
        }
        let all = [
            &self.endpoints.interpreter,
            &self.endpoints.classifier,
            &self.endpoints.action,
        ];
        for ep in all.into_iter().flatten().chain(self.endpoints.voters.iter()) {
            ep.validate().map_err(|e| SetupError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, SetupError> {
        GridSpec::new(self.defaults.grid_columns, self.defaults.grid_rows)
            .map_err(|e| SetupError::Config(e.to_string()))
    }
}

/// Configuration plus the shared model gateway, if any model calls are possible.
#[derive(Debug, Clone)]
pub struct Runtime {
    pub config: Config,
    gateway: Option<Gateway>,
    cassette: Option<Arc<Cassette>>,
    cassette_path: Option<PathBuf>,
}

impl Runtime {
    /// Oracle-only runtime: no endpoints, no network.
    pub fn oracle() -> Self {
        Self {
            config: Config::default(),
            gateway: None,
            cassette: None,
            cassette_path: None,
        }
    }

    /// Live HTTP transport, wrapped in the configured cassette.
    pub fn from_config(config: Config) -> Result<Self, SetupError> {
        let needs_http = !matches!(&config.cassette, Some(c) if c.mode == CassetteMode::Replay);
        let inner: Option<Arc<dyn Transport>> = if needs_http {
            Some(Arc::new(
                HttpTransport::new().map_err(|e| SetupError::Config(e.to_string()))?,
            ))
        } else {
            None
        };
        Self::build(config, inner)
    }

    /// Uses `transport` in place of HTTP; a configured cassette still wraps it.
    pub fn with_transport(config: Config, transport: Arc<dyn Transport>) -> Result<Self, SetupError> {
        Self::build(config, Some(transport))
    }

    fn build(config: Config, inner: Option<Arc<dyn Transport>>) -> Result<Self, SetupError> {
        config.validate()?;
        let (cassette, cassette_path) = match &config.cassette {
            None => (None, None),
            Some(c) => {
                let cassette = match c.mode {
                    CassetteMode::Replay => Cassette::load(&c.path).map_err(|e| SetupError::Config(e.to_string()))?,
                    CassetteMode::Record => Cassette::record(inner.clone().ok_or_else(no_transport)?),
                    CassetteMode::Passthrough => Cassette::passthrough(inner.clone().ok_or_else(no_transport)?),
                };
                (Some(Arc::new(cassette)), Some(c.path.clone()))
            }
        };
        let transport: Option<Arc<dyn Transport>> = match (&cassette, inner) {
            (Some(c), _) => Some(c.clone() as Arc<dyn Transport>),
            (None, t) => t,
        };
        Ok(Self {
            config,
            gateway: transport.map(Gateway::new),
            cassette,
            cassette_path,
        })
    }

    pub fn gateway(&self) -> Result<&Gateway, SetupError> {
        self.gateway
            .as_ref()
            .ok_or_else(|| SetupError::Config("this task needs model endpoints but none are configured".into()))
    }

    pub fn cassette(&self) -> Option<&Arc<Cassette>> {
        self.cassette.as_ref()
    }

    /// Writes a recording cassette back to its configured path.
    pub fn save_cassette(&self) -> Result<(), SetupError> {
        match (&self.cassette, &self.cassette_path) {
            (Some(c), Some(path)) if c.mode() == CassetteMode::Record => {
                c.save(path).map_err(|e| SetupError::Config(e.to_string()))
            }
            _ => Ok(()),
        }
    }
}

fn no_transport() -> SetupError {
    SetupError::Config("cassette recording needs a live transport".into())
}
