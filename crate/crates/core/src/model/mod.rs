//! The autonomy model: guarded decision trees, one per behavior, written in a
//! small text DSL.
//!
//! ```text
//! behavior surface {
//!   alias "surfacing", "coming up"
//!   guard not in_zone("no_surface") explain "the vehicle is inside a no-surface zone"
//!   tree {
//!     if battery_pct < 20 [prior 0.3] { reason low_battery "the battery is at {battery_pct}%" }
//!     else { reason mission_complete "the mission plan is complete" }
//!   }
//! }
//! ```

mod lexer;
mod parser;
mod serialize;
mod template;
mod validate;

use std::fmt;

use serde::Serialize;

pub use parser::{parse_condition, parse_model, ModelError, ParseError};
pub use serialize::{serialize_condition, serialize_model};
pub use template::{Segment, TemplateError, TemplateText};
pub use validate::{has_errors, validate_model, Diagnostic, DiagnosticKind, Severity};

/// Prior used when a decision node or guard carries no `[prior p]` annotation.
pub const DEFAULT_PRIOR: f64 = 0.5;

/// The demo surfacing model shipped with the crate.
pub const DEMO_MODEL_SOURCE: &str = include_str!("../../fixtures/demo.axm");

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AutonomyModel {
    /// Not part of the DSL; set by the loader (e.g. from a file name).
    pub model_name: String,
    pub version: String,
    pub behaviors: Vec<BehaviorSpec>,
}

impl AutonomyModel {
    pub fn behavior(&self, id: &str) -> Option<&BehaviorSpec> {
        self.behaviors.iter().find(|b| b.id == id)
    }

    pub fn behavior_ids(&self) -> impl Iterator<Item = &str> {
        self.behaviors.iter().map(|b| b.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSpec {
    pub id: String,
    pub aliases: Vec<String>,
    pub guards: Vec<GuardConstraint>,
    pub tree: TreeNode,
}

impl BehaviorSpec {
    /// Reason leaves in declaration order (true branch before false branch).
    pub fn reasons(&self) -> Vec<&ReasonLeaf> {
        let mut out = Vec::new();
        self.tree.for_each_leaf(&mut |leaf| {
            if let TreeNode::Reason(r) = leaf {
                out.push(r);
            }
        });
        out
    }

    pub fn reason(&self, reason_id: &str) -> Option<&ReasonLeaf> {
        self.reasons().into_iter().find(|r| r.reason_id == reason_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardConstraint {
    pub condition: Condition,
    pub prior_true: f64,
    pub explain_template: TemplateText,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Decision(DecisionNode),
    Reason(ReasonLeaf),
    /// The behavior would not fire on this path.
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionNode {
    pub condition: Condition,
    pub prior_true: f64,
    pub if_true: Box<TreeNode>,
    pub if_false: Box<TreeNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasonLeaf {
    pub reason_id: String,
    pub template: TemplateText,
}

impl TreeNode {
    pub fn decision(
        condition: Condition,
        prior_true: f64,
        if_true: TreeNode,
        if_false: TreeNode,
    ) -> Self {
        TreeNode::Decision(DecisionNode {
            condition,
            prior_true,
            if_true: Box::new(if_true),
            if_false: Box::new(if_false),
        })
    }

    pub fn reason(reason_id: impl Into<String>, template: TemplateText) -> Self {
        TreeNode::Reason(ReasonLeaf { reason_id: reason_id.into(), template })
    }

    /// Visits leaves (reason and null) in declaration order.
    pub fn for_each_leaf<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        match self {
            TreeNode::Decision(d) => {
                d.if_true.for_each_leaf(f);
                d.if_false.for_each_leaf(f);
            }
            leaf => f(leaf),
        }
    }

    /// Visits decision nodes in pre-order together with their path from the
    /// root, written as `root`, `root.T`, `root.T.F`, ...
    pub fn for_each_decision<'a>(&'a self, f: &mut impl FnMut(&'a DecisionNode, &str)) {
        fn walk<'a>(node: &'a TreeNode, path: &mut String, f: &mut impl FnMut(&'a DecisionNode, &str)) {
            if let TreeNode::Decision(d) = node {
                f(d, path);
                let len = path.len();
                path.push_str(".T");
                walk(&d.if_true, path, f);
                path.truncate(len);
                path.push_str(".F");
                walk(&d.if_false, path, f);
                path.truncate(len);
            }
        }
        walk(self, &mut String::from("root"), f)
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Decision(d) => 1 + d.if_true.depth().max(d.if_false.depth()),
            _ => 0,
        }
    }
}

/// Boolean expression over mission-state variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Compare { lhs: Operand, op: CmpOp, rhs: Operand },
    InZone(String),
    /// `phase == "<id>"`
    Phase(String),
    Not(Box<Condition>),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
}

impl Condition {
    pub fn compare(lhs: Operand, op: CmpOp, rhs: Operand) -> Self {
        Condition::Compare { lhs, op, rhs }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Condition) -> Self {
        Condition::Not(Box::new(inner))
    }

    pub fn and(a: Condition, b: Condition) -> Self {
        Condition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Condition, b: Condition) -> Self {
        Condition::Or(Box::new(a), Box::new(b))
    }

    /// Calls `f` for every operand in the expression.
    pub fn for_each_operand<'a>(&'a self, f: &mut impl FnMut(&'a Operand)) {
        match self {
            Condition::Compare { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            Condition::InZone(_) | Condition::Phase(_) => {}
            Condition::Not(c) => c.for_each_operand(f),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.for_each_operand(f);
                b.for_each_operand(f);
            }
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_condition(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Var(String),
    Num(f64),
    Duration(Duration),
    Text(String),
    Bool(bool),
    ElapsedSince(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duration {
    pub value: f64,
    pub unit: DurationUnit,
}

impl Duration {
    pub fn seconds(self) -> f64 {
        self.value * self.unit.seconds()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationUnit {
    Seconds,
    Minutes,
    Hours,
}

impl DurationUnit {
    pub fn seconds(self) -> f64 {
        match self {
            DurationUnit::Seconds => 1.0,
            DurationUnit::Minutes => 60.0,
            DurationUnit::Hours => 3600.0,
        }
    }

    pub fn suffix(self) -> char {
        match self {
            DurationUnit::Seconds => 's',
            DurationUnit::Minutes => 'm',
            DurationUnit::Hours => 'h',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// Words the DSL reserves; they cannot be used as identifiers.
pub const KEYWORDS: &[&str] = &[
    "behavior",
    "alias",
    "guard",
    "prior",
    "explain",
    "tree",
    "if",
    "else",
    "reason",
    "null",
    "not",
    "and",
    "or",
    "true",
    "false",
    "elapsed_since",
    "in_zone",
    "phase",
];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&s)
}
