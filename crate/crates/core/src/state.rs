//! Mission state built from a timestamped event stream, and three-valued
//! evaluation of model conditions against it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{BitAnd, BitOr, Not};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CmpOp, Condition, Operand};

/// Event kinds with built-in meaning. Any other identifier is accepted as a
/// custom kind.
pub const EVENT_KINDS: &[&str] = &[
    "telemetry",
    "gps_fix",
    "surfaced",
    "dived",
    "zone_entered",
    "zone_exited",
    "phase_change",
    "fault",
    "custom",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Num(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

/// One record of the mission log: `{"t":100.0,"kind":"telemetry","data":{...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionEvent {
    pub t: f64,
    pub kind: String,
    #[serde(default)]
    pub data: BTreeMap<String, Value>,
}

impl MissionEvent {
    pub fn new(t: f64, kind: impl Into<String>) -> Self {
        MissionEvent { t, kind: kind.into(), data: BTreeMap::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.data.insert(key.into(), value.into());
        self
    }

    fn text_field(&self, key: &str) -> Result<&str, StateError> {
        match self.data.get(key) {
            Some(Value::Text(s)) => Ok(s),
            _ => Err(StateError::MissingField { kind: self.kind.clone(), field: key.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("out-of-order event: t={event_t} is earlier than the mission clock t={clock}")]
    OutOfOrder { event_t: f64, clock: f64 },
    #[error("invalid event timestamp {0} (must be finite and >= 0)")]
    BadTimestamp(f64),
    #[error("event kind must not be empty")]
    EmptyKind,
    #[error("`{kind}` event needs a text `{field}` field")]
    MissingField { kind: String, field: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TruthValue {
    True,
    False,
    Unknown,
}

impl TruthValue {
    pub fn is_known(self) -> bool {
        self != TruthValue::Unknown
    }
}

impl From<bool> for TruthValue {
    fn from(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }
}

impl Not for TruthValue {
    type Output = Self;

    fn not(self) -> Self {
        match self {
            TruthValue::True => TruthValue::False,
            TruthValue::False => TruthValue::True,
            TruthValue::Unknown => TruthValue::Unknown,
        }
    }
}

// Kleene strong conjunction: False dominates.
impl BitAnd for TruthValue {
    type Output = Self;

    fn bitand(self, other: Self) -> Self {
        use TruthValue::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => True,
        }
    }
}

// Kleene strong disjunction: True dominates.
impl BitOr for TruthValue {
    type Output = Self;

    fn bitor(self, other: Self) -> Self {
        use TruthValue::*;
        match (self, other) {
            (True, _) | (_, True) => True,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => False,
        }
    }
}

/// Recorded when a comparison cannot be evaluated because operand types do
/// not fit; the comparison itself evaluates to Unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalDiagnostic {
    pub condition: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionState {
    pub clock: f64,
    pub vars: BTreeMap<String, Value>,
    pub history: Vec<MissionEvent>,
    pub zones_inside: BTreeSet<String>,
    pub phase: Option<String>,
    pub start_known: bool,
    #[serde(skip)]
    last_seen: BTreeMap<String, f64>,
}

impl MissionState {
    pub fn new(start: f64) -> Self {
        MissionState {
            clock: start,
            vars: BTreeMap::new(),
            history: Vec::new(),
            zones_inside: BTreeSet::new(),
            phase: None,
            start_known: true,
            last_seen: BTreeMap::new(),
        }
    }

    /// Applies one event. Timestamps must be non-decreasing; on error the
    /// state is left untouched.
    ///
    /// Payload fields become variables, except the control fields `zone`
    /// (zone events) and `phase` (phase changes).
    pub fn ingest(&mut self, e: MissionEvent) -> Result<(), StateError> {
        if !e.t.is_finite() || e.t < 0.0 {
            return Err(StateError::BadTimestamp(e.t));
        }
        if e.t < self.clock {
            return Err(StateError::OutOfOrder { event_t: e.t, clock: self.clock });
        }
        if e.kind.is_empty() {
            return Err(StateError::EmptyKind);
        }
        let control = match e.kind.as_str() {
            "zone_entered" => {
                self.zones_inside.insert(e.text_field("zone")?.to_string());
                Some("zone")
            }
            "zone_exited" => {
                self.zones_inside.remove(e.text_field("zone")?);
                Some("zone")
            }
            "phase_change" => {
                self.phase = Some(e.text_field("phase")?.to_string());
                Some("phase")
            }
            _ => None,
        };
        for (k, v) in &e.data {
            if Some(k.as_str()) != control {
                self.vars.insert(k.clone(), v.clone());
            }
        }
        self.clock = e.t;
        self.last_seen.insert(e.kind.clone(), e.t);
        self.history.push(e);
        Ok(())
    }

    /// Value-style counterpart of [`MissionState::ingest`].
    pub fn ingested(mut self, e: MissionEvent) -> Result<Self, StateError> {
        self.ingest(e)?;
        Ok(self)
    }

    /// Moves the mission clock forward without recording an event.
    pub fn advance_clock(&mut self, t: f64) -> Result<(), StateError> {
        if !t.is_finite() {
            return Err(StateError::BadTimestamp(t));
        }
        if t < self.clock {
            return Err(StateError::OutOfOrder { event_t: t, clock: self.clock });
        }
        self.clock = t;
        Ok(())
    }

    pub fn var(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    /// Seconds since the latest event of `kind`, or +inf if none has occurred
    /// since mission start.
    pub fn elapsed_since(&self, kind: &str) -> f64 {
        match self.last_seen.get(kind) {
            Some(t) => self.clock - t,
            None => f64::INFINITY,
        }
    }

    pub fn in_zone(&self, zone: &str) -> bool {
        self.zones_inside.contains(zone)
    }

    pub fn eval(&self, c: &Condition) -> TruthValue {
        self.eval_with(c, &mut Vec::new())
    }

    /// Kleene three-valued evaluation. Absent variables make a comparison
    /// Unknown; type mismatches do too and are reported in `diags`.
    pub fn eval_with(&self, c: &Condition, diags: &mut Vec<EvalDiagnostic>) -> TruthValue {
        match c {
            Condition::Not(inner) => !self.eval_with(inner, diags),
            Condition::And(a, b) => {
                let a = self.eval_with(a, diags);
                a & self.eval_with(b, diags)
            }
            Condition::Or(a, b) => {
                let a = self.eval_with(a, diags);
                a | self.eval_with(b, diags)
            }
            Condition::InZone(z) => self.in_zone(z).into(),
            Condition::Phase(p) => match &self.phase {
                Some(current) => (current == p).into(),
                None => TruthValue::Unknown,
            },
            Condition::Compare { lhs, op, rhs } => {
                let (Some(l), Some(r)) = (self.resolve(lhs), self.resolve(rhs)) else {
                    return TruthValue::Unknown;
                };
                match compare(&l, *op, &r) {
                    Some(b) => b.into(),
                    None => {
                        diags.push(EvalDiagnostic {
                            condition: c.to_string(),
                            message: format!(
                                "cannot compare {} with {} using `{}`",
                                type_name(&l),
                                type_name(&r),
                                op.symbol()
                            ),
                        });
                        TruthValue::Unknown
                    }
                }
            }
        }
    }

    fn resolve(&self, o: &Operand) -> Option<Value> {
        Some(match o {
            Operand::Var(v) => return self.vars.get(v).cloned(),
            Operand::Num(n) => Value::Num(*n),
            Operand::Duration(d) => Value::Num(d.seconds()),
            Operand::Text(s) => Value::Text(s.clone()),
            Operand::Bool(b) => Value::Bool(*b),
            Operand::ElapsedSince(k) => Value::Num(self.elapsed_since(k)),
        })
    }
}

pub fn new_state(start: f64) -> MissionState {
    MissionState::new(start)
}

pub fn ingest_event(state: &MissionState, e: MissionEvent) -> Result<MissionState, StateError> {
    state.clone().ingested(e)
}

pub fn eval_condition(c: &Condition, state: &MissionState) -> TruthValue {
    state.eval(c)
}

pub fn elapsed_since(state: &MissionState, kind: &str) -> f64 {
    state.elapsed_since(kind)
}

fn compare(l: &Value, op: CmpOp, r: &Value) -> Option<bool> {
    match (l, r) {
        (Value::Num(a), Value::Num(b)) => Some(match op {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }),
        (Value::Text(a), Value::Text(b)) => equality(op, a == b),
        (Value::Bool(a), Value::Bool(b)) => equality(op, a == b),
        _ => None,
    }
}

fn equality(op: CmpOp, eq: bool) -> Option<bool> {
    match op {
        CmpOp::Eq => Some(eq),
        CmpOp::Ne => Some(!eq),
        _ => None,
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Bool(_) => "boolean",
        Value::Num(_) => "number",
        Value::Text(_) => "text",
    }
}
