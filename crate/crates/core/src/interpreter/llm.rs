use std::sync::LazyLock;
use std::time::Instant;

use chrono::Utc;
use regex::Regex;

use crate::gateway::{ChatMessage, ChatRequest, Gateway, GatewayError, ModelEndpoint};
use crate::grid::GridSpec;
use crate::prompts;
use crate::sim::Frame;

use super::overlay::overlay_grid;
use super::{
    normalize_label, Half, InterpretError, InterpretTiming, Interpreter, Observation, SceneContext, TextualDescription,
    TextualEntry, VisualEntry, VisualInterpretation,
};

static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(?:[-*•]|\d+[.)])\s+(.*)$").unwrap());
static VISUAL_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:[-*•]|\d+[.)])?\s*(.+?)\s*(?::|=|->|\s-\s)\s*\(?([A-Za-z])\s*(\d{1,2})\)?\s*\.?\s*$").unwrap()
});

fn is_none_reply(text: &str) -> bool {
    let t = text.trim().trim_end_matches('.').to_ascii_lowercase();
    t.is_empty() || t == "none" || t == "no objects"
}

/// Parses `- name: features` lines. Lines without a bullet are ignored unless the
/// reply has no bulleted lines at all.
pub fn parse_textual_reply(text: &str) -> TextualDescription {
    if is_none_reply(text) {
        return TextualDescription::default();
    }
    let bulleted: Vec<String> = text
        .lines()
        .filter_map(|l| BULLET.captures(l).map(|c| c[1].to_string()))
        .collect();
    let lines: Vec<String> = if bulleted.is_empty() {
        text.lines().filter(|l| l.contains(':')).map(str::to_string).collect()
    } else {
        bulleted
    };
    let mut entries = Vec::new();
    for line in lines {
        let (name, features) = match line.split_once(':') {
            Some((n, f)) => (n.trim(), f.trim()),
            None => (line.trim(), ""),
        };
        let name = name.trim_matches(|c: char| c == '*' || c == '`').trim();
        if name.is_empty() || normalize_label(name).is_empty() {
            continue;
        }
        entries.push(TextualEntry {
            name: name.to_string(),
            features: features.to_string(),
        });
    }
    TextualDescription { entries }
}

/// Parses `name: D3` lines, keeping only cells that exist in `grid`.
pub fn parse_visual_reply(text: &str, grid: &GridSpec) -> VisualInterpretation {
    if is_none_reply(text) {
        return VisualInterpretation::default();
    }
    let mut entries = Vec::new();
    for line in text.lines() {
        let Some(c) = VISUAL_LINE.captures(line) else {
            continue;
        };
        let label = c[1].trim_matches(|c: char| c == '*' || c == '`').trim();
        let cell_label = format!("{}{}", c[2].to_ascii_uppercase(), &c[3]);
        match grid.parse_cell(&cell_label) {
            Ok(cell) if !label.is_empty() => entries.push(VisualEntry {
                label: label.to_string(),
                cell,
            }),
            Ok(_) => {}
            Err(e) => tracing::warn!(line, error = %e, "dropping grid entry"),
        }
    }
    VisualInterpretation { entries }
}

/// Two-request interpreter: a textual description of the clean frame and a
/// grid-coordinate pass over the overlaid frame.
#[derive(Debug, Clone)]
pub struct LlmInterpreter {
    gateway: Gateway,
    endpoint: ModelEndpoint,
    grid: GridSpec,
    temperature: Option<f64>,
    parallel: bool,
}

impl LlmInterpreter {
    pub fn new(gateway: Gateway, endpoint: ModelEndpoint, grid: GridSpec) -> Self {
        Self {
            gateway,
            endpoint,
            grid,
            temperature: None,
            parallel: false,
        }
    }

    pub fn with_temperature(mut self, t: Option<f64>) -> Self {
        self.temperature = t;
        self
    }

    /// Issue both requests at once. The context is the same as sequential, but the two
    /// half timings then overlap instead of adding up to the wall time.
    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    fn request(&self, text: String, png: Vec<u8>) -> ChatRequest {
        let req = ChatRequest::new(vec![ChatMessage::user(text).with_image(png)]);
        match self.temperature {
            Some(t) => req.with_temperature(t),
            None => req,
        }
    }

    pub fn textual_request(&self, frame: &Frame) -> Result<ChatRequest, InterpretError> {
        let png = frame.to_png().map_err(|e| InterpretError::Frame {
            half: Half::Textual,
            message: e.to_string(),
        })?;
        let text = prompts::TEXTUAL
            .render(&[])
            .expect("textual template has no placeholders");
        Ok(self.request(text, png))
    }

    pub fn visual_request(&self, frame: &Frame) -> Result<ChatRequest, InterpretError> {
        let frame_error = |message: String| InterpretError::Frame {
            half: Half::Visual,
            message,
        };
        let overlaid = overlay_grid(frame, &self.grid).map_err(|e| frame_error(e.to_string()))?;
        let png = overlaid.to_png().map_err(|e| frame_error(e.to_string()))?;
        let text = prompts::VISUAL
            .render(&[("grid_labels", &self.grid.describe_labels())])
            .expect("visual template placeholders");
        Ok(self.request(text, png))
    }

    fn textual(&self, frame: &Frame) -> Result<(TextualDescription, f64), InterpretError> {
        let started = Instant::now();
        let req = self.textual_request(frame)?;
        let resp = self.call(&req, Half::Textual)?;
        Ok((parse_textual_reply(&resp), started.elapsed().as_secs_f64()))
    }

    fn visual(&self, frame: &Frame) -> Result<(VisualInterpretation, f64), InterpretError> {
        let started = Instant::now();
        let req = self.visual_request(frame)?;
        let resp = self.call(&req, Half::Visual)?;
        Ok((parse_visual_reply(&resp, &self.grid), started.elapsed().as_secs_f64()))
    }

    fn call(&self, req: &ChatRequest, half: Half) -> Result<String, InterpretError> {
        let resp = self
            .gateway
            .complete(&self.endpoint, req)
            .map_err(|source| InterpretError::Gateway { half, source })?;
        resp.as_text().map(str::to_string).ok_or(InterpretError::Gateway {
            half,
            source: GatewayError::MalformedBody {
                endpoint: self.endpoint.name.clone(),
                message: "expected a text reply, got a tool call".into(),
            },
        })
    }
}

impl Interpreter for LlmInterpreter {
    fn interpret(&self, obs: &Observation<'_>) -> Result<SceneContext, InterpretError> {
        let frame = obs.frame;
        let ((textual, textual_s), (visual, visual_s)) = if self.parallel {
            std::thread::scope(|s| {
                let t = s.spawn(|| self.textual(frame));
                let v = self.visual(frame);
                let t = t.join().unwrap_or_else(|_| {
                    Err(InterpretError::Frame {
                        half: Half::Textual,
                        message: "textual request thread panicked".into(),
                    })
                });
                Ok::<_, InterpretError>((t?, v?))
            })?
        } else {
            (self.textual(frame)?, self.visual(frame)?)
        };
        Ok(SceneContext {
            visual,
            textual,
            frame_digest: frame.digest(),
            produced_at: Utc::now(),
            timing: InterpretTiming { visual_s, textual_s },
            ground_truth: None,
        })
    }
}
