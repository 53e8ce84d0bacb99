//! Template-based realization of why / why-not answers with certainty-banded
//! wording.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{AnswerPolicy, PolicyMode, WhyNotResult, WhyResult};
use crate::model::{AutonomyModel, Segment, TemplateError, TemplateText};
use crate::state::MissionState;

/// Ordered from least to most certain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CertaintyBand {
    Low,
    Medium,
    High,
}

impl fmt::Display for CertaintyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertaintyBand::High => "High",
            CertaintyBand::Medium => "Medium",
            CertaintyBand::Low => "Low",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlgError {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("malformed template: {0}")]
    Template(#[from] TemplateError),
}

/// High above 0.8, Low below 0.4, Medium in between (both ends inclusive).
pub fn certainty_band(p: f64) -> Result<CertaintyBand, NlgError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NlgError::ProbabilityOutOfRange(p));
    }
    Ok(if p > 0.8 {
        CertaintyBand::High
    } else if p >= 0.4 {
        CertaintyBand::Medium
    } else {
        CertaintyBand::Low
    })
}

/// Operator-facing wording. Deployments may swap the strings; tests pin the
/// defaults byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhrasingTable {
    pub high: String,
    pub medium: String,
    pub low: String,
    pub also: String,
    pub why_not: String,
    pub refusal: String,
    pub cannot_explain: String,
    pub no_constraint: String,
    pub unknown_value: String,
}

impl Default for PhrasingTable {
    fn default() -> Self {
        PhrasingTable {
            high: "It is because".into(),
            medium: "It is likely because".into(),
            low: "It is possibly because".into(),
            also: "It may also be that".into(),
            why_not: "It can't because".into(),
            refusal: "I am not confident enough to say.".into(),
            cannot_explain: "I cannot explain that with my current model.".into(),
            no_constraint: "No known constraint prevents it.".into(),
            unknown_value: "unknown".into(),
        }
    }
}

impl PhrasingTable {
    pub fn lead_in(&self, band: CertaintyBand) -> &str {
        match band {
            CertaintyBand::High => &self.high,
            CertaintyBand::Medium => &self.medium,
            CertaintyBand::Low => &self.low,
        }
    }

    /// Why-not lead-in: a certain blocker "can't"; uncertain ones reuse the
    /// banded why wording.
    pub fn blocker_lead_in(&self, band: CertaintyBand) -> &str {
        match band {
            CertaintyBand::High => &self.why_not,
            other => self.lead_in(other),
        }
    }
}

/// Formats a duration as `Nh Nm Ns`, omitting zero components (`0s` for zero).
pub fn format_duration(seconds: f64) -> String {
    let total = seconds.round().max(0.0) as u64;
    let (h, m, s) = (total / 3600, total % 3600 / 60, total % 60);
    let mut parts = Vec::new();
    if h > 0 {
        parts.push(format!("{h}h"));
    }
    if m > 0 {
        parts.push(format!("{m}m"));
    }
    if s > 0 || parts.is_empty() {
        parts.push(format!("{s}s"));
    }
    parts.join(" ")
}

/// Sentence-ready percentage: " (70%)".
fn percent(p: f64) -> String {
    format!(" ({}%)", (p * 100.0).round() as i64)
}

#[derive(Debug, Clone, Default)]
pub struct Realizer {
    pub phrasing: PhrasingTable,
}

impl Realizer {
    pub fn new(phrasing: PhrasingTable) -> Self {
        Realizer { phrasing }
    }

    pub fn render_template(&self, t: &TemplateText, state: &MissionState) -> String {
        t.fill(|slot| match slot {
            Segment::Var(v) => match state.var(v) {
                Some(value) => value.to_string(),
                None => self.phrasing.unknown_value.clone(),
            },
            Segment::ElapsedSince(kind) => {
                let secs = state.elapsed_since(kind);
                if secs.is_finite() {
                    format_duration(secs)
                } else {
                    self.phrasing.unknown_value.clone()
                }
            }
            Segment::Literal(s) => s.clone(),
        })
    }

    /// Rendered reason text for `reason_id`, or the id itself if the model
    /// has no such leaf.
    pub fn reason_text(
        &self,
        model: &AutonomyModel,
        behavior: &str,
        reason_id: &str,
        state: &MissionState,
    ) -> String {
        model
            .behavior(behavior)
            .and_then(|b| b.reason(reason_id))
            .map(|r| self.render_template(&r.template, state))
            .unwrap_or_else(|| reason_id.to_string())
    }

    pub fn guard_text(
        &self,
        model: &AutonomyModel,
        behavior: &str,
        guard_index: usize,
        state: &MissionState,
    ) -> String {
        model
            .behavior(behavior)
            .and_then(|b| b.guards.get(guard_index))
            .map(|g| self.render_template(&g.explain_template, state))
            .unwrap_or_else(|| format!("guard {guard_index}"))
    }

    pub fn realize_why(
        &self,
        result: &WhyResult,
        model: &AutonomyModel,
        state: &MissionState,
        policy: &AnswerPolicy,
        show_numbers: bool,
    ) -> String {
        if result.reasons.is_empty() {
            return match policy.mode {
                PolicyMode::Sound => self.phrasing.refusal.clone(),
                PolicyMode::Complete => self.phrasing.cannot_explain.clone(),
            };
        }
        let sentences: Vec<String> = result
            .reasons
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let lead = if i == 0 {
                    self.lead_in(r.probability)
                } else {
                    self.phrasing.also.as_str()
                };
                let text = self.reason_text(model, &result.behavior, &r.reason_id, state);
                self.sentence(lead, &text, r.probability, show_numbers)
            })
            .collect();
        sentences.join(" ")
    }

    pub fn realize_why_not(
        &self,
        result: &WhyNotResult,
        model: &AutonomyModel,
        state: &MissionState,
        show_numbers: bool,
    ) -> String {
        if result.blockers.is_empty() {
            return self.phrasing.no_constraint.clone();
        }
        let sentences: Vec<String> = result
            .blockers
            .iter()
            .map(|b| {
                let band = certainty_band(b.block_credence.clamp(0.0, 1.0)).unwrap_or(CertaintyBand::Low);
                let text = self.guard_text(model, &result.behavior, b.guard_index, state);
                self.sentence(self.phrasing.blocker_lead_in(band), &text, b.block_credence, show_numbers)
            })
            .collect();
        sentences.join(" ")
    }

    fn lead_in(&self, p: f64) -> &str {
        self.phrasing.lead_in(certainty_band(p.clamp(0.0, 1.0)).unwrap_or(CertaintyBand::Low))
    }

    fn sentence(&self, lead: &str, text: &str, p: f64, show_numbers: bool) -> String {
        let mut s = format!("{lead} {text}");
        if show_numbers {
            s.push_str(&percent(p));
        }
        s.push('.');
        s
    }
}

/// Renders template source against the state. Fails only on malformed slots.
pub fn render_template(template: &str, state: &MissionState) -> Result<String, NlgError> {
    let t = TemplateText::parse(template)?;
    Ok(Realizer::default().render_template(&t, state))
}

pub fn realize_why(
    result: &WhyResult,
    model: &AutonomyModel,
    state: &MissionState,
    policy: &AnswerPolicy,
    show_numbers: bool,
) -> String {
    Realizer::default().realize_why(result, model, state, policy, show_numbers)
}

pub fn realize_why_not(
    result: &WhyNotResult,
    model: &AutonomyModel,
    state: &MissionState,
    show_numbers: bool,
) -> String {
    Realizer::default().realize_why_not(result, model, state, show_numbers)
}
