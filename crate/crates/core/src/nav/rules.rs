//! Keyword patterns for explicit commands and goal requests.

use std::sync::LazyLock;

use regex::Regex;

use super::{ActionName, DEFAULT_DURATION};

/// An explicit single-action command recognized in a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub action: ActionName,
    /// Duration stated in the query ("for 3 seconds"), if any.
    pub duration: Option<f64>,
}

impl Command {
    pub fn duration_or_default(&self) -> f64 {
        self.duration.unwrap_or(DEFAULT_DURATION)
    }
}

static COMMANDS: LazyLock<Vec<(Regex, ActionName)>> = LazyLock::new(|| {
    let table: [(&str, ActionName); 8] = [
        (
            r"\b(scan|survey)\b|\b360\b|\blook\s+(all\s+)?around\b",
            ActionName::Scan360,
        ),
        (
            r"\b(turn|rotate|spin)\s+(yourself\s+)?(to\s+(the\s+)?)?left\b",
            ActionName::InPlaceRotateToLeft,
        ),
        (
            r"\b(turn|rotate|spin)\s+(yourself\s+)?(to\s+(the\s+)?)?right\b",
            ActionName::InPlaceRotateToRight,
        ),
        (r"\blook\s+(up|upward|upwards)\b|\btilt\s+up\b", ActionName::LookUp),
        (
            r"\blook\s+(down|downward|downwards)\b|\btilt\s+down\b",
            ActionName::LookDown,
        ),
        (
            r"\b(move|go|walk|step|strafe|shift|slide)\s+(to\s+(the\s+)?)?left\b",
            ActionName::MoveLeft,
        ),
        (
            r"\b(move|go|walk|step|strafe|shift|slide)\s+(to\s+(the\s+)?)?right\b",
            ActionName::MoveRight,
        ),
        (
            r"\b(move|go|walk|step|head)\s+(forward|forwards|ahead|straight)\b",
            ActionName::MoveForward,
        ),
    ];
    table
        .into_iter()
        .map(|(p, a)| (Regex::new(p).expect("command pattern"), a))
        .collect()
});

static DURATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(\d+(?:\.\d+)?)\s*(?:s|sec|secs|second|seconds)\b").unwrap());

static GOAL_MOTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b(?:go|get|walk|head|navigate|travel|proceed|move|run|make\s+your\s+way)\b(?:\s+\w+){0,2}?\s+(?:to|towards|toward|through|into|inside|up\s+to)\s+(.+)$",
    )
    .unwrap()
});

static GOAL_SEEK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:approach|reach|find|locate|search\s+for|look\s+for)\s+(.+)$").unwrap());

/// Goal phrases that are really directions, as in "move to the left".
static DIRECTION_ONLY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:the\s+)?(?:left|right|front|forward|back)\b(?:\s+side)?\s*(?:for\b.*)?$").unwrap()
});

fn normalize(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_article(s: &str) -> &str {
    for a in ["the ", "a ", "an ", "that ", "this "] {
        if let Some(rest) = s.strip_prefix(a) {
            return rest;
        }
    }
    s
}

/// The target phrase of a goal request, e.g. `"yellow bus"` for "I want to go to the
/// yellow bus". `None` when the query is not a goal request.
pub fn goal_target(text: &str) -> Option<String> {
    let t = normalize(text);
    let phrase = GOAL_MOTION
        .captures(&t)
        .or_else(|| GOAL_SEEK.captures(&t))
        .map(|c| c[1].trim_end_matches(['.', '!', '?']).trim().to_string())?;
    if phrase.is_empty() || DIRECTION_ONLY.is_match(&phrase) {
        return None;
    }
    Some(strip_article(&phrase).to_string())
}

/// An explicit control command in the query, if it names one.
pub fn parse_command(text: &str) -> Option<Command> {
    let t = normalize(text);
    let action = COMMANDS.iter().find(|(re, _)| re.is_match(&t)).map(|(_, a)| *a)?;
    let duration = if action.takes_duration() {
        DURATION.captures(&t).and_then(|c| c[1].parse::<f64>().ok())
    } else {
        None
    };
    Some(Command { action, duration })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognizes_all_basic_commands() {
        let cases = [
            ("move forward", ActionName::MoveForward),
            ("Move left", ActionName::MoveLeft),
            ("move to the right", ActionName::MoveRight),
            ("turn left", ActionName::InPlaceRotateToLeft),
            ("Rotate to the right", ActionName::InPlaceRotateToRight),
            ("look up", ActionName::LookUp),
            ("look down please", ActionName::LookDown),
            ("scan the room", ActionName::Scan360),
            ("do a 360", ActionName::Scan360),
            ("look around", ActionName::Scan360),
        ];
        for (q, a) in cases {
            assert_eq!(parse_command(q).map(|c| c.action), Some(a), "{q}");
        }
        assert_eq!(parse_command("Where am I?"), None);
    }

    #[test]
    fn explicit_durations() {
        let c = parse_command("move forward for 3.5 seconds").unwrap();
        assert_eq!(c.duration, Some(3.5));
        assert_eq!(parse_command("turn left").unwrap().duration_or_default(), 2.0);
        assert_eq!(parse_command("scan for 4 s").unwrap().duration, None);
    }

    #[test]
    fn goal_targets() {
        assert_eq!(
            goal_target("I want to go to the yellow bus").as_deref(),
            Some("yellow bus")
        );
        assert_eq!(
            goal_target("Walk over to the cannon on your right.").as_deref(),
            Some("cannon on your right")
        );
        assert!(
            goal_target("Get to the back of the yellow bus and avoid hitting other cars, going around them.").is_some()
        );
        assert!(goal_target("Walk through the doorway on the left and enter the bedroom.").is_some());
        assert_eq!(goal_target("find the helm").as_deref(), Some("helm"));
        assert_eq!(goal_target("move to the left"), None);
        assert_eq!(goal_target("move forward"), None);
        assert_eq!(goal_target("Where am I?"), None);
    }
}
