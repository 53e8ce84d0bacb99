//! Mission log loading, the canned demo mission, and paced replay.

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::state::MissionEvent;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: event at t={t} is earlier than the previous event at t={previous}")]
    Order { line: usize, previous: f64, t: f64 },
    #[error("cannot read log: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses newline-delimited JSON events. Blank lines are skipped.
pub fn parse_log(text: &str) -> Result<Vec<MissionEvent>, LogError> {
    let mut events: Vec<MissionEvent> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let e: MissionEvent = serde_json::from_str(raw)
            .map_err(|err| LogError::Parse { line, message: err.to_string() })?;
        if !e.t.is_finite() || e.t < 0.0 {
            return Err(LogError::Parse { line, message: format!("invalid timestamp {}", e.t) });
        }
        if e.kind.is_empty() {
            return Err(LogError::Parse { line, message: "empty event kind".into() });
        }
        if let Some(prev) = events.last() {
            if e.t < prev.t {
                return Err(LogError::Order { line, previous: prev.t, t: e.t });
            }
        }
        events.push(e);
    }
    Ok(events)
}

pub fn load_log(path: impl AsRef<Path>) -> Result<Vec<MissionEvent>, LogError> {
    parse_log(&std::fs::read_to_string(path)?)
}

/// One JSON object per line, newline-terminated.
pub fn write_log(events: &[MissionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

/// The demo mission: an early surfacing with battery unknown (around t=500),
/// a no-surface zone entered at t=700 while at the surface, and a late
/// surfacing at t=1400 after a long gap without a GPS fix.
pub fn gen_demo_mission() -> Vec<MissionEvent> {
    vec![
        MissionEvent::new(0.0, "phase_change").with("phase", "transit"),
        MissionEvent::new(50.0, "gps_fix"),
        MissionEvent::new(100.0, "telemetry").with("depth", 30.0),
        MissionEvent::new(450.0, "surfaced").with("depth", 0.0),
        MissionEvent::new(600.0, "telemetry").with("battery_pct", 85.0),
        MissionEvent::new(700.0, "zone_entered").with("zone", "no_surface"),
        MissionEvent::new(1400.0, "surfaced"),
    ]
}

/// A question asked at a given mission time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedQuestion {
    pub t: f64,
    pub text: String,
}

/// Parses `time<TAB>question` lines; `#` starts a comment line.
pub fn parse_questions(text: &str) -> Result<Vec<ScriptedQuestion>, LogError> {
    let mut out: Vec<ScriptedQuestion> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let Some((t, question)) = raw.split_once('\t') else {
            return Err(LogError::Parse { line, message: "expected `time<TAB>question`".into() });
        };
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| LogError::Parse { line, message: format!("invalid time `{}`", t.trim()) })?;
        if !t.is_finite() || t < 0.0 {
            return Err(LogError::Parse { line, message: format!("invalid time {t}") });
        }
        if let Some(prev) = out.last() {
            if t < prev.t {
                return Err(LogError::Order { line, previous: prev.t, t });
            }
        }
        out.push(ScriptedQuestion { t, text: question.to_string() });
    }
    Ok(out)
}

/// The demo question script, matching the demo mission.
pub const DEMO_QUESTIONS: &str = include_str!("../fixtures/demo_questions.tsv");

/// Kind of the bookkeeping event that moves the clock to a question's time.
pub const TICK_KIND: &str = "tick";

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Event(MissionEvent),
    Ask(ScriptedQuestion),
}

impl Step {
    pub fn t(&self) -> f64 {
        match self {
            Step::Event(e) => e.t,
            Step::Ask(q) => q.t,
        }
    }
}

/// Interleaves questions with events: a question at time `t` is asked after
/// every event with timestamp <= `t`. If the clock would still be behind
/// `t`, a `tick` event at `t` is inserted first.
pub fn interleave(events: &[MissionEvent], questions: &[ScriptedQuestion]) -> Vec<Step> {
    let mut steps = Vec::with_capacity(events.len() + questions.len());
    let mut clock = f64::NEG_INFINITY;
    let mut ev = events.iter().peekable();
    for q in questions {
        while let Some(e) = ev.next_if(|e| e.t <= q.t) {
            clock = e.t;
            steps.push(Step::Event(e.clone()));
        }
        if clock < q.t {
            clock = q.t;
            steps.push(Step::Event(MissionEvent::new(q.t, TICK_KIND)));
        }
        steps.push(Step::Ask(q.clone()));
    }
    steps.extend(ev.cloned().map(Step::Event));
    steps
}

/// Replay pacing: a time-compression factor, or as fast as possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Factor(f64),
    Max,
}

impl std::str::FromStr for Speed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(Speed::Max);
        }
        match s.parse::<f64>() {
            Ok(f) if f.is_infinite() && f > 0.0 => Ok(Speed::Max),
            Ok(f) if f > 0.0 && f.is_finite() => Ok(Speed::Factor(f)),
            _ => Err(format!("speed must be a positive number or `max`, got `{s}`")),
        }
    }
}

/// Receives replayed steps. Asking is optional.
pub trait ReplaySink {
    type Error: fmt::Display;

    fn event(&mut self, event: &MissionEvent) -> Result<(), Self::Error>;

    fn ask(&mut self, _question: &ScriptedQuestion) -> Result<(), Self::Error> {
        Ok(())
    }
}

/// Adapts a closure into an event-only sink.
pub struct FnSink<F>(pub F);

impl<F, E> ReplaySink for FnSink<F>
where
    F: FnMut(&MissionEvent) -> Result<(), E>,
    E: fmt::Display,
{
    type Error = E;

    fn event(&mut self, event: &MissionEvent) -> Result<(), E> {
        (self.0)(event)
    }
}

/// Cooperative cancellation, checked between deliveries.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub delivered: usize,
    pub wall_time: Duration,
    pub cancelled: bool,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("sink failed at step {index}: {message}")]
    Sink { index: usize, message: String },
}

pub fn replay(
    events: &[MissionEvent],
    speed: Speed,
    sink: &mut impl ReplaySink,
) -> Result<ReplayReport, ReplayError> {
    let steps: Vec<Step> = events.iter().cloned().map(Step::Event).collect();
    replay_steps(&steps, speed, sink, &CancelToken::new())
}

/// Delivers steps paced by mission time: step `i` goes out at
/// `(t_i - t_0) / factor` after the start. `delivered` counts steps.
pub fn replay_steps(
    steps: &[Step],
    speed: Speed,
    sink: &mut impl ReplaySink,
    cancel: &CancelToken,
) -> Result<ReplayReport, ReplayError> {
    let start = Instant::now();
    let t0 = steps.first().map(Step::t).unwrap_or(0.0);
    let mut delivered = 0;
    for (index, step) in steps.iter().enumerate() {
        if let Speed::Factor(factor) = speed {
            let due = Duration::from_secs_f64(((step.t() - t0) / factor).max(0.0));
            while let Some(wait) = due.checked_sub(start.elapsed()).filter(|w| !w.is_zero()) {
                if cancel.is_cancelled() {
                    break;
                }
                std::thread::sleep(wait.min(Duration::from_millis(50)));
            }
        }
        if cancel.is_cancelled() {
            return Ok(ReplayReport { delivered, wall_time: start.elapsed(), cancelled: true });
        }
        let result = match step {
            Step::Event(e) => sink.event(e),
            Step::Ask(q) => sink.ask(q),
        };
        result.map_err(|e| ReplayError::Sink { index, message: e.to_string() })?;
        delivered += 1;
    }
    Ok(ReplayReport { delivered, wall_time: start.elapsed(), cancelled: false })
}
