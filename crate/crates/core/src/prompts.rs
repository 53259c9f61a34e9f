//! Versioned prompt templates. Placeholders are `{query}`, `{context}` and
//! `{grid_labels}`; a template must not be rendered with any left unfilled.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: &'static str,
    pub version: u32,
    pub text: &'static str,
}

pub const TEXTUAL: PromptTemplate = PromptTemplate {
    name: "textual",
    version: 1,
    text: include_str!("../prompts/textual.v1.txt"),
};

pub const VISUAL: PromptTemplate = PromptTemplate {
    name: "visual",
    version: 1,
    text: include_str!("../prompts/visual.v1.txt"),
};

pub const CLASSIFIER: PromptTemplate = PromptTemplate {
    name: "classifier",
    version: 1,
    text: include_str!("../prompts/classifier.v1.txt"),
};

pub const VOTER: PromptTemplate = PromptTemplate {
    name: "voter",
    version: 1,
    text: include_str!("../prompts/voter.v1.txt"),
};

pub const ACTION: PromptTemplate = PromptTemplate {
    name: "action",
    version: 1,
    text: include_str!("../prompts/action.v1.txt"),
};

pub const ALL: [PromptTemplate; 5] = [TEXTUAL, VISUAL, CLASSIFIER, VOTER, ACTION];

const PLACEHOLDERS: [&str; 3] = ["query", "context", "grid_labels"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template {template} needs a value for {{{placeholder}}}")]
    Unfilled {
        template: &'static str,
        placeholder: &'static str,
    },
    #[error("template {template} has no placeholder {{{placeholder}}}")]
    Unused {
        template: &'static str,
        placeholder: String,
    },
}

impl PromptTemplate {
    pub fn placeholders(&self) -> Vec<&'static str> {
        PLACEHOLDERS
            .into_iter()
            .filter(|p| self.text.contains(&format!("{{{p}}}")))
            .collect()
    }

    /// Substitutes every placeholder. Supplying a value the template does not use, or
    /// leaving one of its placeholders out, is an error.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let wanted = self.placeholders();
        for (key, _) in values {
            if !wanted.contains(key) {
                return Err(PromptError::Unused {
                    template: self.name,
                    placeholder: key.to_string(),
                });
            }
        }
        let mut out = self.text.to_string();
        for p in wanted {
            let value = values
                .iter()
                .find(|(k, _)| *k == p)
                .map(|(_, v)| *v)
                .ok_or(PromptError::Unfilled {
                    template: self.name,
                    placeholder: p,
                })?;
            out = out.replace(&format!("{{{p}}}"), value);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_placeholders() {
        assert!(TEXTUAL.placeholders().is_empty());
        assert_eq!(VISUAL.placeholders(), vec!["grid_labels"]);
        assert_eq!(CLASSIFIER.placeholders(), vec!["query", "context"]);
        assert_eq!(VOTER.placeholders(), vec!["query", "context"]);
        assert_eq!(ACTION.placeholders(), vec!["query", "context"]);
    }

    #[test]
    fn render_fills_everything() {
        let text = VOTER.render(&[("query", "go to the bus"), ("context", "CTX")]).unwrap();
        assert!(text.contains("Goal: go to the bus"));
        assert!(text.contains("CTX"));
        assert!(!text.contains("{query}"));
    }

    #[test]
    fn render_rejects_mismatched_values() {
        assert!(matches!(
            VOTER.render(&[("query", "q")]),
            Err(PromptError::Unfilled { .. })
        ));
        assert!(matches!(
            TEXTUAL.render(&[("query", "q")]),
            Err(PromptError::Unused { .. })
        ));
    }
}
