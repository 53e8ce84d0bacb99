//! Why and why-not inference over a behavior's guarded decision tree.
//!
//! A *why* query walks the tree carrying probability mass. Known conditions
//! route all mass down one branch; an Unknown condition splits it by the
//! node's prior. Mass landing on null leaves is dropped and the reasons are
//! renormalized, since the operator has observed the behavior happening.

mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AutonomyModel, BehaviorSpec, Condition, TreeNode};
use crate::state::{EvalDiagnostic, MissionState, TruthValue};

pub use oracle::{enumerate_explain, MAX_ENUMERATED_UNKNOWNS};

/// Null mass at or above `1 - NULL_MASS_EPS` means nothing explains the behavior.
pub const NULL_MASS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown behavior `{0}`")]
    UnknownBehavior(String),
    #[error("the model cannot explain `{behavior}`: every path leads to a null leaf (null mass {null_mass})")]
    CannotExplain { behavior: String, null_mass: f64 },
    #[error("{unknowns} unknown conditions exceed the enumeration limit of {limit}")]
    TooManyUnknowns { unknowns: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredReason {
    pub reason_id: String,
    pub probability: f64,
    /// Conditions on the path to this leaf with their current truth values.
    #[serde(serialize_with = "serialize_path")]
    pub path_conditions: Vec<(Condition, TruthValue)>,
}

fn serialize_path<S: serde::Serializer>(
    path: &[(Condition, TruthValue)],
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(path.len()))?;
    for (c, t) in path {
        seq.serialize_element(&(c.to_string(), t))?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhyResult {
    pub behavior: String,
    /// Sorted by descending probability, ties in declaration order.
    pub reasons: Vec<ScoredReason>,
    pub dropped_null_mass: f64,
    pub diagnostics: Vec<EvalDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredBlocker {
    pub guard_index: usize,
    pub block_credence: f64,
    pub truth: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhyNotResult {
    pub behavior: String,
    /// Sorted by descending credence, ties in guard order.
    pub blockers: Vec<ScoredBlocker>,
    pub diagnostics: Vec<EvalDiagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// Report every reason.
    #[default]
    Complete,
    /// Report only reasons at or above the threshold.
    Sound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerPolicy {
    #[serde(default)]
    pub mode: PolicyMode,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.8
}

impl Default for AnswerPolicy {
    fn default() -> Self {
        AnswerPolicy::complete()
    }
}

impl AnswerPolicy {
    pub fn complete() -> Self {
        AnswerPolicy { mode: PolicyMode::Complete, threshold: default_threshold() }
    }

    pub fn sound(threshold: f64) -> Self {
        AnswerPolicy { mode: PolicyMode::Sound, threshold }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.threshold)
    }
}

/// Mass reaching each leaf of a tree, in declaration order, before null mass
/// is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafMass<'m> {
    pub leaves: Vec<LeafShare<'m>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafShare<'m> {
    pub leaf: &'m TreeNode,
    pub mass: f64,
    pub path: Vec<(&'m Condition, TruthValue)>,
}

impl LeafMass<'_> {
    pub fn null_mass(&self) -> f64 {
        self.leaves.iter().filter(|l| matches!(l.leaf, TreeNode::Null)).map(|l| l.mass).sum()
    }

    pub fn reason_mass(&self, reason_id: &str) -> f64 {
        self.leaves
            .iter()
            .filter(|l| matches!(l.leaf, TreeNode::Reason(r) if r.reason_id == reason_id))
            .map(|l| l.mass)
            .sum()
    }
}

/// Propagates probability mass from the root to every leaf of `tree`.
pub fn propagate<'m>(
    tree: &'m TreeNode,
    state: &MissionState,
    diags: &mut Vec<EvalDiagnostic>,
) -> LeafMass<'m> {
    fn walk<'m>(
        node: &'m TreeNode,
        mass: f64,
        state: &MissionState,
        path: &mut Vec<(&'m Condition, TruthValue)>,
        out: &mut Vec<LeafShare<'m>>,
        diags: &mut Vec<EvalDiagnostic>,
    ) {
        let TreeNode::Decision(d) = node else {
            out.push(LeafShare { leaf: node, mass, path: path.clone() });
            return;
        };
        let truth = state.eval_with(&d.condition, diags);
        let (to_true, to_false) = match truth {
            TruthValue::True => (mass, 0.0),
            TruthValue::False => (0.0, mass),
            TruthValue::Unknown => (mass * d.prior_true, mass * (1.0 - d.prior_true)),
        };
        path.push((&d.condition, truth));
        walk(&d.if_true, to_true, state, path, out, diags);
        walk(&d.if_false, to_false, state, path, out, diags);
        path.pop();
    }

    let mut leaves = Vec::new();
    walk(tree, 1.0, state, &mut Vec::new(), &mut leaves, diags);
    LeafMass { leaves }
}

/// (leaf order, reason id, mass, path) for one reason leaf.
pub(crate) type Share = (usize, String, f64, Vec<(Condition, TruthValue)>);

/// Drops null mass, renormalizes and orders the reasons. Shared by the
/// propagation engine and the enumeration oracle.
pub(crate) fn finish(
    behavior: &str,
    shares: Vec<Share>,
    null_mass: f64,
    diagnostics: Vec<EvalDiagnostic>,
) -> Result<WhyResult, EngineError> {
    if null_mass >= 1.0 - NULL_MASS_EPS {
        return Err(EngineError::CannotExplain { behavior: behavior.to_string(), null_mass });
    }
    let total: f64 = shares.iter().map(|s| s.2).sum();
    if total <= 0.0 {
        return Err(EngineError::CannotExplain { behavior: behavior.to_string(), null_mass });
    }
    let mut ranked: Vec<_> = shares.into_iter().filter(|s| s.2 > 0.0).collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    let reasons = ranked
        .into_iter()
        .map(|(_, reason_id, mass, path_conditions)| ScoredReason {
            reason_id,
            probability: mass / total,
            path_conditions,
        })
        .collect();
    Ok(WhyResult { behavior: behavior.to_string(), reasons, dropped_null_mass: null_mass, diagnostics })
}

fn lookup<'m>(model: &'m AutonomyModel, behavior: &str) -> Result<&'m BehaviorSpec, EngineError> {
    model.behavior(behavior).ok_or_else(|| EngineError::UnknownBehavior(behavior.to_string()))
}

/// Scores the reasons a behavior could be happening for, given the state.
pub fn explain_why(
    model: &AutonomyModel,
    state: &MissionState,
    behavior: &str,
) -> Result<WhyResult, EngineError> {
    let spec = lookup(model, behavior)?;
    let mut diags = Vec::new();
    let dist = propagate(&spec.tree, state, &mut diags);
    let null_mass = dist.null_mass();
    let shares = dist
        .leaves
        .into_iter()
        .enumerate()
        .filter_map(|(order, share)| match share.leaf {
            TreeNode::Reason(r) => Some((
                order,
                r.reason_id.clone(),
                share.mass,
                share.path.into_iter().map(|(c, t)| (c.clone(), t)).collect(),
            )),
            _ => None,
        })
        .collect();
    finish(behavior, shares, null_mass, diags)
}

/// Lists the guards that are not known to hold. False guards block with
/// credence 1, Unknown guards with `1 - prior_true`.
pub fn explain_why_not(
    model: &AutonomyModel,
    state: &MissionState,
    behavior: &str,
) -> Result<WhyNotResult, EngineError> {
    let spec = lookup(model, behavior)?;
    let mut diagnostics = Vec::new();
    let mut blockers: Vec<ScoredBlocker> = spec
        .guards
        .iter()
        .enumerate()
        .filter_map(|(guard_index, g)| {
            let truth = state.eval_with(&g.condition, &mut diagnostics);
            let block_credence = match truth {
                TruthValue::True => return None,
                TruthValue::False => 1.0,
                TruthValue::Unknown => 1.0 - g.prior_true,
            };
            Some(ScoredBlocker { guard_index, block_credence, truth })
        })
        .collect();
    blockers.sort_by(|a, b| {
        b.block_credence.total_cmp(&a.block_credence).then(a.guard_index.cmp(&b.guard_index))
    });
    Ok(WhyNotResult { behavior: behavior.to_string(), blockers, diagnostics })
}

/// Complete keeps everything. Sound keeps reasons at or above the threshold,
/// without renormalizing what is left.
pub fn apply_answer_policy(result: &WhyResult, policy: &AnswerPolicy) -> WhyResult {
    let mut out = result.clone();
    if policy.mode == PolicyMode::Sound {
        out.reasons.retain(|r| r.probability >= policy.threshold);
    }
    out
}
