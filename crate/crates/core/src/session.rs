//! One mission's model, state, answer policy and transcript: the pipeline
//! behind the chat service, with no transport attached.

use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    apply_answer_policy, explain_why, explain_why_not, AnswerPolicy, EngineError,
};
use crate::model::{has_errors, parse_model, validate_model, AutonomyModel, Diagnostic, ModelError};
use crate::nlg::{certainty_band, CertaintyBand, Realizer};
use crate::query::{parse_query, IntentKind};
use crate::state::{MissionEvent, MissionState, StateError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model failed validation: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("policy threshold {0} is outside [0, 1]")]
    BadPolicy(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerItem {
    /// Reason id, or `guard_<n>` for why-not blockers.
    pub id: String,
    pub probability: f64,
    pub band: CertaintyBand,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerRecord {
    pub intent: &'static str,
    pub behavior: Option<String>,
    pub answer: String,
    pub items: Vec<AnswerItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptEntry {
    /// Mission clock when the question was answered.
    pub t: f64,
    pub question: String,
    pub answer: AnswerRecord,
}

#[derive(Debug, Clone)]
pub struct MissionSession {
    pub model: AutonomyModel,
    pub state: MissionState,
    pub policy: AnswerPolicy,
    pub show_numbers: bool,
    transcript: Vec<TranscriptEntry>,
    realizer: Realizer,
}

impl MissionSession {
    /// Parses and validates `source`; warnings are allowed, errors are not.
    pub fn create(source: &str, policy: AnswerPolicy, show_numbers: bool) -> Result<Self, SessionError> {
        let model = parse_model(source)?;
        let diags = validate_model(&model);
        if has_errors(&diags) {
            return Err(SessionError::Invalid(diags));
        }
        Self::with_model(model, policy, show_numbers)
    }

    pub fn with_model(
        model: AutonomyModel,
        policy: AnswerPolicy,
        show_numbers: bool,
    ) -> Result<Self, SessionError> {
        if !policy.is_valid() {
            return Err(SessionError::BadPolicy(policy.threshold));
        }
        Ok(MissionSession {
            model,
            state: MissionState::new(0.0),
            policy,
            show_numbers,
            transcript: Vec::new(),
            realizer: Realizer::default(),
        })
    }

    pub fn set_realizer(&mut self, realizer: Realizer) {
        self.realizer = realizer;
    }

    pub fn post_event(&mut self, event: MissionEvent) -> Result<(), StateError> {
        self.state.ingest(event)
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Answers and records the exchange in the transcript.
    pub fn ask(&mut self, question: &str) -> AnswerRecord {
        let answer = self.answer(question);
        self.transcript.push(TranscriptEntry {
            t: self.state.clock,
            question: question.to_string(),
            answer: answer.clone(),
        });
        answer
    }

    /// Answers against the current state without touching anything.
    pub fn answer(&self, question: &str) -> AnswerRecord {
        let intent = parse_query(question, &self.model);
        let behavior = intent.behavior().map(str::to_string);
        let (answer, items) = match &intent.kind {
            IntentKind::Why(b) => self.why(b),
            IntentKind::WhyNot(b) => self.why_not(b),
            IntentKind::Status => (self.status_line(), Vec::new()),
            IntentKind::Unknown => (self.help_text(), Vec::new()),
        };
        AnswerRecord { intent: intent.label(), behavior, answer, items }
    }

    fn why(&self, behavior: &str) -> (String, Vec<AnswerItem>) {
        let result = match explain_why(&self.model, &self.state, behavior) {
            Ok(r) => apply_answer_policy(&r, &self.policy),
            Err(EngineError::CannotExplain { .. }) | Err(_) => {
                return (self.realizer.phrasing.cannot_explain.clone(), Vec::new())
            }
        };
        let items = result
            .reasons
            .iter()
            .map(|r| AnswerItem {
                id: r.reason_id.clone(),
                probability: r.probability,
                band: band(r.probability),
                text: self.realizer.reason_text(&self.model, behavior, &r.reason_id, &self.state),
            })
            .collect();
        let text = self.realizer.realize_why(&result, &self.model, &self.state, &self.policy, self.show_numbers);
        (text, items)
    }

    fn why_not(&self, behavior: &str) -> (String, Vec<AnswerItem>) {
        let Ok(result) = explain_why_not(&self.model, &self.state, behavior) else {
            return (self.realizer.phrasing.cannot_explain.clone(), Vec::new());
        };
        let items = result
            .blockers
            .iter()
            .map(|b| AnswerItem {
                id: format!("guard_{}", b.guard_index),
                probability: b.block_credence,
                band: band(b.block_credence),
                text: self.realizer.guard_text(&self.model, behavior, b.guard_index, &self.state),
            })
            .collect();
        let text = self.realizer.realize_why_not(&result, &self.model, &self.state, self.show_numbers);
        (text, items)
    }

    pub fn status_line(&self) -> String {
        let s = &self.state;
        let zones = if s.zones_inside.is_empty() {
            "none".to_string()
        } else {
            s.zones_inside.iter().cloned().collect::<Vec<_>>().join(", ")
        };
        let vars = if s.vars.is_empty() {
            "no readings yet".to_string()
        } else {
            s.vars.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
        };
        format!(
            "Mission clock {}s; phase {}; zones: {}; {}.",
            s.clock,
            s.phase.as_deref().unwrap_or("unknown"),
            zones,
            vars
        )
    }

    pub fn help_text(&self) -> String {
        let behaviors: Vec<String> = self
            .model
            .behaviors
            .iter()
            .map(|b| match b.aliases.first() {
                Some(a) => format!("{} (\"{a}\")", b.id),
                None => b.id.clone(),
            })
            .collect();
        format!(
            "Sorry, I didn't understand. Ask \"why ...\" or \"why not ...\" about one of: {}; or ask for \"status\".",
            behaviors.join(", ")
        )
    }
}

fn band(p: f64) -> CertaintyBand {
    certainty_band(p.clamp(0.0, 1.0)).unwrap_or(CertaintyBand::Low)
}

/// Plain-text transcript, one `Q:` and one `A:` line per exchange.
pub fn render_transcript(entries: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "[t={}] Q: {}", e.t, e.question);
        let _ = writeln!(out, "[t={}] A: {}", e.t, e.answer.answer);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEMO_MODEL_SOURCE;

    fn demo() -> MissionSession {
        MissionSession::create(DEMO_MODEL_SOURCE, AnswerPolicy::complete(), true).unwrap()
    }

    #[test]
    fn create_rejects_bad_models() {
        assert!(matches!(
            MissionSession::create("behavior {", AnswerPolicy::complete(), true),
            Err(SessionError::Model(ModelError::Syntax(_)))
        ));
        assert!(matches!(
            MissionSession::create("behavior b { tree { null } }", AnswerPolicy::complete(), true),
            Err(SessionError::Invalid(_))
        ));
        assert!(matches!(
            MissionSession::create(DEMO_MODEL_SOURCE, AnswerPolicy::sound(2.0), true),
            Err(SessionError::BadPolicy(_))
        ));
    }

    #[test]
    fn ask_does_not_touch_state() {
        let mut s = demo();
        s.post_event(MissionEvent::new(50.0, "gps_fix")).unwrap();
        let before = s.state.clone();
        for q in ["why is it surfacing", "why not a gps fix", "status", "hello"] {
            s.ask(q);
        }
        assert_eq!(s.state, before);
        assert_eq!(s.transcript().len(), 4);
    }

    #[test]
    fn status_and_help() {
        let mut s = demo();
        s.post_event(MissionEvent::new(0.0, "phase_change").with("phase", "transit")).unwrap();
        s.post_event(MissionEvent::new(100.0, "telemetry").with("depth", 30.0)).unwrap();
        let r = s.ask("status");
        assert_eq!(r.intent, "status");
        assert_eq!(r.answer, "Mission clock 100s; phase transit; zones: none; depth=30.");
        let r = s.ask("hello");
        assert_eq!(r.intent, "unknown");
        assert!(r.answer.contains("surface (\"surfacing\"), gps_fix (\"a gps fix\")"));
        assert!(r.items.is_empty());
    }

    #[test]
    fn cannot_explain_is_an_answer() {
        let mut s = MissionSession::create(
            r#"behavior b { alias "b" tree { if x < 1 { null } else { reason a "a" } } }"#,
            AnswerPolicy::complete(),
            true,
        )
        .unwrap();
        s.post_event(MissionEvent::new(0.0, "telemetry").with("x", 0.0)).unwrap();
        let r = s.ask("why b");
        assert_eq!(r.answer, "I cannot explain that with my current model.");
        assert!(r.items.is_empty());
    }

    #[test]
    fn transcript_text() {
        let mut s = demo();
        s.ask("status");
        assert_eq!(
            render_transcript(s.transcript()),
            "[t=0] Q: status\n[t=0] A: Mission clock 0s; phase unknown; zones: none; no readings yet.\n"
        );
    }
}
