//! Operator utterance → intent, by keyword rules and alias matching.

use serde::Serialize;

use crate::model::AutonomyModel;

/// Tokens that turn a leading "why" into a why-not question.
pub const NEGATIONS: &[&str] = &[
    "not", "isnt", "hasnt", "wont", "doesnt", "no", "cant", "cannot", "didnt", "arent", "dont",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "behavior", rename_all = "snake_case")]
pub enum IntentKind {
    Why(String),
    WhyNot(String),
    Status,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Intent {
    pub kind: IntentKind,
    pub matched_alias: Option<String>,
    /// Set for Unknown intents: what went wrong and what is known.
    pub diagnostic: Option<String>,
}

impl Intent {
    fn new(kind: IntentKind) -> Self {
        Intent { kind, matched_alias: None, diagnostic: None }
    }

    pub fn behavior(&self) -> Option<&str> {
        match &self.kind {
            IntentKind::Why(b) | IntentKind::WhyNot(b) => Some(b),
            _ => None,
        }
    }

    /// Short label used on the wire: `why`, `why_not`, `status`, `unknown`.
    pub fn label(&self) -> &'static str {
        match self.kind {
            IntentKind::Why(_) => "why",
            IntentKind::WhyNot(_) => "why_not",
            IntentKind::Status => "status",
            IntentKind::Unknown => "unknown",
        }
    }
}

/// Lowercases, deletes apostrophes (so "isn't" becomes "isnt"), treats any
/// other non-alphanumeric character as a separator.
pub fn normalize(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars() {
        if matches!(c, '\'' | '\u{2019}' | '`') {
            continue;
        }
        if c.is_alphanumeric() {
            cleaned.extend(c.to_lowercase());
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().map(str::to_string).collect()
}

const STATUS_PREFIX: &[&str] = &["what", "are", "you", "doing"];

pub fn parse_query(text: &str, model: &AutonomyModel) -> Intent {
    let tokens = normalize(text);
    let status_prefix = tokens.len() >= STATUS_PREFIX.len()
        && tokens.iter().zip(STATUS_PREFIX).all(|(t, p)| t == p);
    if tokens.first().is_some_and(|t| t == "status") || status_prefix {
        return Intent::new(IntentKind::Status);
    }
    if tokens.first().map(String::as_str) != Some("why") {
        return Intent::new(IntentKind::Unknown);
    }

    let Some((behavior, alias, span)) = match_alias(&tokens, model) else {
        let known: Vec<&str> = model.behavior_ids().collect();
        return Intent {
            diagnostic: Some(format!(
                "no known behavior mentioned; known behaviors: {}",
                known.join(", ")
            )),
            ..Intent::new(IntentKind::Unknown)
        };
    };
    let negated = tokens
        .iter()
        .enumerate()
        .skip(1)
        .any(|(i, t)| !span.contains(&i) && NEGATIONS.contains(&t.as_str()));
    let kind = if negated { IntentKind::WhyNot(behavior) } else { IntentKind::Why(behavior) };
    Intent { kind, matched_alias: Some(alias), diagnostic: None }
}

/// Longest alias occurring contiguously in `tokens`; ties go to the alias
/// declared first. Returns (behavior id, alias, token span).
fn match_alias(
    tokens: &[String],
    model: &AutonomyModel,
) -> Option<(String, String, std::ops::Range<usize>)> {
    let mut best: Option<(usize, String, String, std::ops::Range<usize>)> = None;
    for b in &model.behaviors {
        for alias in &b.aliases {
            let needle = normalize(alias);
            if needle.is_empty() || best.as_ref().is_some_and(|(len, ..)| needle.len() <= *len) {
                continue;
            }
            if let Some(start) = tokens.windows(needle.len()).position(|w| w == needle.as_slice()) {
                best = Some((needle.len(), b.id.clone(), alias.clone(), start..start + needle.len()));
            }
        }
    }
    best.map(|(_, id, alias, span)| (id, alias, span))
}
