use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{AutonomyModel, BehaviorSpec, Condition, Operand, Segment, TemplateText, TreeNode};
use crate::query::normalize;
use crate::state::EVENT_KINDS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    DuplicateCondition,
    PriorOutOfRange,
    NoReasonLeaf,
    DuplicateReasonId,
    EmptyAlias,
    EmptyExplanation,
    UnknownSlotVariable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub behavior: String,
    /// Node paths (`root.T.F`) or guard references (`guard[1]`) involved.
    pub locations: Vec<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: behavior `{}`", self.behavior)?;
        if !self.locations.is_empty() {
            write!(f, " at {}", self.locations.join(", "))?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Semantic checks over a parsed model. Returns every finding; an empty list
/// means the model is fit for the engine.
pub fn validate_model(model: &AutonomyModel) -> Vec<Diagnostic> {
    let known = KnownNames::collect(model);
    let mut out = Vec::new();
    for b in &model.behaviors {
        check_behavior(b, &known, &mut out);
    }
    out
}

struct KnownNames<'a> {
    vars: BTreeSet<&'a str>,
    kinds: BTreeSet<&'a str>,
}

impl<'a> KnownNames<'a> {
    fn collect(model: &'a AutonomyModel) -> Self {
        let mut names = KnownNames { vars: BTreeSet::new(), kinds: EVENT_KINDS.iter().copied().collect() };
        let mut visit = |c: &'a Condition| {
            c.for_each_operand(&mut |o| match o {
                Operand::Var(v) => {
                    names.vars.insert(v);
                }
                Operand::ElapsedSince(k) => {
                    names.kinds.insert(k);
                }
                _ => {}
            })
        };
        for b in &model.behaviors {
            b.guards.iter().for_each(|g| visit(&g.condition));
            b.tree.for_each_decision(&mut |d, _| visit(&d.condition));
        }
        names
    }
}

fn check_behavior(b: &BehaviorSpec, known: &KnownNames<'_>, out: &mut Vec<Diagnostic>) {
    let mut emit = |severity, kind, locations: Vec<String>, message: String| {
        out.push(Diagnostic { severity, kind, behavior: b.id.clone(), locations, message })
    };

    for alias in &b.aliases {
        if normalize(alias).is_empty() {
            emit(
                Severity::Error,
                DiagnosticKind::EmptyAlias,
                vec![],
                format!("alias \"{alias}\" contains no words and can never match"),
            );
        }
    }

    let mut templates: Vec<(String, &TemplateText)> = Vec::new();
    for (i, g) in b.guards.iter().enumerate() {
        let loc = format!("guard[{i}]");
        if !in_open_unit(g.prior_true) {
            emit(
                Severity::Error,
                DiagnosticKind::PriorOutOfRange,
                vec![loc.clone()],
                format!("prior {} must lie strictly between 0 and 1", g.prior_true),
            );
        }
        if g.explain_template.is_empty() {
            emit(
                Severity::Error,
                DiagnosticKind::EmptyExplanation,
                vec![loc.clone()],
                "guard explanation is empty".into(),
            );
        }
        templates.push((loc, &g.explain_template));
    }

    let mut seen: Vec<(&Condition, String)> = Vec::new();
    b.tree.for_each_decision(&mut |d, path| {
        if !in_open_unit(d.prior_true) {
            emit(
                Severity::Error,
                DiagnosticKind::PriorOutOfRange,
                vec![path.to_string()],
                format!("prior {} must lie strictly between 0 and 1", d.prior_true),
            );
        }
        if let Some((_, first)) = seen.iter().find(|(c, _)| **c == d.condition) {
            emit(
                Severity::Error,
                DiagnosticKind::DuplicateCondition,
                vec![first.clone(), path.to_string()],
                format!("condition `{}` appears more than once in the tree", d.condition),
            );
        } else {
            seen.push((&d.condition, path.to_string()));
        }
    });

    let mut reason_ids: Vec<(&str, String)> = Vec::new();
    let mut path_stack = Vec::new();
    collect_leaves(&b.tree, &mut path_stack, &mut |node, path| {
        if let TreeNode::Reason(r) = node {
            if let Some((_, first)) = reason_ids.iter().find(|(id, _)| *id == r.reason_id) {
                emit(
                    Severity::Error,
                    DiagnosticKind::DuplicateReasonId,
                    vec![first.clone(), path.clone()],
                    format!("reason `{}` is declared more than once", r.reason_id),
                );
            } else {
                reason_ids.push((&r.reason_id, path.clone()));
            }
            templates.push((path, &r.template));
        }
    });
    if reason_ids.is_empty() {
        emit(
            Severity::Error,
            DiagnosticKind::NoReasonLeaf,
            vec![],
            "tree has no reason leaf, so no explanation can ever be produced".into(),
        );
    }

    for (loc, t) in templates {
        for seg in t.segments() {
            let unknown = match seg {
                Segment::Var(v) if !known.vars.contains(v.as_str()) => format!("variable `{v}`"),
                Segment::ElapsedSince(k) if !known.kinds.contains(k.as_str()) => {
                    format!("event kind `{k}`")
                }
                _ => continue,
            };
            emit(
                Severity::Warning,
                DiagnosticKind::UnknownSlotVariable,
                vec![loc.clone()],
                format!("template refers to {unknown}, which no condition in the model uses"),
            );
        }
    }
}

fn collect_leaves<'a>(
    node: &'a TreeNode,
    path: &mut Vec<&'static str>,
    f: &mut impl FnMut(&'a TreeNode, String),
) {
    match node {
        TreeNode::Decision(d) => {
            path.push("T");
            collect_leaves(&d.if_true, path, f);
            path.pop();
            path.push("F");
            collect_leaves(&d.if_false, path, f);
            path.pop();
        }
        leaf => {
            let mut p = String::from("root");
            for step in path.iter() {
                p.push('.');
                p.push_str(step);
            }
            f(leaf, p)
        }
    }
}

fn in_open_unit(p: f64) -> bool {
    p > 0.0 && p < 1.0
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_model, DEMO_MODEL_SOURCE};

    fn diags(src: &str) -> Vec<Diagnostic> {
        validate_model(&parse_model(src).unwrap())
    }

    #[test]
    fn demo_fixture_is_clean() {
        assert_eq!(diags(DEMO_MODEL_SOURCE), vec![]);
    }

    #[test]
    fn duplicate_condition_cites_both_paths() {
        let d = diags(
            r#"behavior b { tree {
                if battery_pct < 20 { reason a "a" }
                else { if battery_pct < 20 { reason b "b" } else { reason c "c" } }
            } }"#,
        );
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::DuplicateCondition);
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[0].locations, vec!["root", "root.F"]);
    }

    #[test]
    fn prior_must_be_inside_open_interval() {
        let d = diags(r#"behavior b { tree { if x < 1 [prior 1.0] { reason a "a" } else { null } } }"#);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::PriorOutOfRange);
        assert_eq!(d[0].locations, vec!["root"]);

        let d = diags(r#"behavior b { guard x < 1 [prior 0] explain "e" tree { reason a "a" } }"#);
        assert_eq!(d[0].locations, vec!["guard[0]"]);
    }

    #[test]
    fn tree_needs_a_reason() {
        let d = diags("behavior b { tree { null } }");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::NoReasonLeaf);
    }

    #[test]
    fn unknown_slot_is_a_warning() {
        let d = diags(r#"behavior b { tree { reason a "at {speed} knots, {elapsed_since(ping)} ago" } }"#);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|d| d.severity == Severity::Warning));
        assert!(!has_errors(&d));
        assert_eq!(d[0].locations, vec!["root"]);
    }

    #[test]
    fn duplicate_reason_and_empty_alias() {
        let d = diags(
            r#"behavior b { alias "?!" guard x < 1 explain "" tree { if x < 2 { reason a "a" } else { reason a "b" } } }"#,
        );
        let kinds: Vec<_> = d.iter().map(|d| d.kind).collect();
        assert_eq!(
            kinds,
            vec![DiagnosticKind::EmptyAlias, DiagnosticKind::EmptyExplanation, DiagnosticKind::DuplicateReasonId]
        );
    }
}
