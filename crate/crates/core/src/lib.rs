//! On-demand explanations for a remotely operated autonomous vehicle.
//!
//! An expert-authored [`model`] describes, per behavior, the guard
//! constraints that enable it and a decision tree of reasons for it. The
//! [`engine`] checks that model against the current [`state`] of the mission
//! to score *why* a behavior is happening or *why not*, [`nlg`] turns the
//! scores into certainty-banded sentences, and [`query`] maps operator
//! questions onto behaviors. [`session`] ties these together per mission and
//! [`sim`] replays mission logs into it.

pub mod engine;
pub mod model;
pub mod nlg;
pub mod query;
pub mod session;
pub mod sim;
pub mod state;

pub use engine::{
    apply_answer_policy, enumerate_explain, explain_why, explain_why_not, AnswerPolicy, EngineError,
    PolicyMode, ScoredBlocker, ScoredReason, WhyNotResult, WhyResult,
};
pub use model::{parse_condition, parse_model, serialize_model, validate_model, AutonomyModel};
pub use nlg::{certainty_band, CertaintyBand};
pub use query::{parse_query, Intent, IntentKind};
pub use session::{AnswerItem, AnswerRecord, MissionSession};
pub use state::{MissionEvent, MissionState, TruthValue, Value};
