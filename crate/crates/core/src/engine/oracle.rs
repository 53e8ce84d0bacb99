//! Brute-force reference for [`explain_why`](super::explain_why): enumerate
//! every truth assignment to the Unknown conditions, weight it by the priors,
//! and follow the tree deterministically.

use crate::model::{AutonomyModel, Condition, TreeNode};
use crate::state::{MissionState, TruthValue};

use super::{finish, EngineError, WhyResult};

pub const MAX_ENUMERATED_UNKNOWNS: usize = 20;

pub fn enumerate_explain(
    model: &AutonomyModel,
    state: &MissionState,
    behavior: &str,
) -> Result<WhyResult, EngineError> {
    let spec = model
        .behavior(behavior)
        .ok_or_else(|| EngineError::UnknownBehavior(behavior.to_string()))?;

    let mut diagnostics = Vec::new();
    // Distinct Unknown conditions, keyed structurally; the first node's prior wins.
    let mut unknowns: Vec<(&Condition, f64)> = Vec::new();
    let mut truths: Vec<(&Condition, TruthValue)> = Vec::new();
    spec.tree.for_each_decision(&mut |d, _| {
        let t = state.eval_with(&d.condition, &mut diagnostics);
        truths.push((&d.condition, t));
        if t == TruthValue::Unknown && !unknowns.iter().any(|(c, _)| **c == d.condition) {
            unknowns.push((&d.condition, d.prior_true));
        }
    });
    if unknowns.len() > MAX_ENUMERATED_UNKNOWNS {
        return Err(EngineError::TooManyUnknowns {
            unknowns: unknowns.len(),
            limit: MAX_ENUMERATED_UNKNOWNS,
        });
    }

    let mut leaves: Vec<&TreeNode> = Vec::new();
    spec.tree.for_each_leaf(&mut |l| leaves.push(l));
    let mut mass = vec![0.0; leaves.len()];

    for assignment in 0u32..(1u32 << unknowns.len()) {
        let weight: f64 = unknowns
            .iter()
            .enumerate()
            .map(|(i, (_, p))| if assignment >> i & 1 == 1 { *p } else { 1.0 - p })
            .product();
        let resolve = |c: &Condition| -> bool {
            let known = truths.iter().find(|(tc, _)| std::ptr::eq(*tc, c)).map(|(_, t)| *t);
            match known {
                Some(TruthValue::True) => true,
                Some(TruthValue::False) => false,
                _ => {
                    let i = unknowns.iter().position(|(uc, _)| *uc == c).unwrap_or(0);
                    assignment >> i & 1 == 1
                }
            }
        };
        let mut node = &spec.tree;
        while let TreeNode::Decision(d) = node {
            node = if resolve(&d.condition) { &d.if_true } else { &d.if_false };
        }
        let idx = leaves.iter().position(|l| std::ptr::eq(*l, node)).unwrap_or(0);
        mass[idx] += weight;
    }

    let null_mass: f64 = leaves
        .iter()
        .zip(&mass)
        .filter(|(l, _)| matches!(l, TreeNode::Null))
        .map(|(_, m)| m)
        .sum();
    let shares = leaves
        .iter()
        .zip(mass)
        .enumerate()
        .filter_map(|(order, (leaf, m))| match leaf {
            TreeNode::Reason(r) => {
                Some((order, r.reason_id.clone(), m, path_to(&spec.tree, leaf, &truths)))
            }
            _ => None,
        })
        .collect();
    finish(behavior, shares, null_mass, diagnostics)
}

fn path_to(
    tree: &TreeNode,
    target: &TreeNode,
    truths: &[(&Condition, TruthValue)],
) -> Vec<(Condition, TruthValue)> {
    fn search(
        node: &TreeNode,
        target: &TreeNode,
        truths: &[(&Condition, TruthValue)],
        path: &mut Vec<(Condition, TruthValue)>,
    ) -> bool {
        if std::ptr::eq(node, target) {
            return true;
        }
        let TreeNode::Decision(d) = node else { return false };
        let t = truths
            .iter()
            .find(|(c, _)| std::ptr::eq(*c, &d.condition))
            .map_or(TruthValue::Unknown, |(_, t)| *t);
        path.push((d.condition.clone(), t));
        if search(&d.if_true, target, truths, path) || search(&d.if_false, target, truths, path) {
            return true;
        }
        path.pop();
        false
    }
    let mut path = Vec::new();
    search(tree, target, truths, &mut path);
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::explain_why;
    use crate::model::{parse_model, DEMO_MODEL_SOURCE};
    use crate::state::MissionEvent;

    #[test]
    fn demo_scenario_a_by_enumeration() {
        let m = parse_model(DEMO_MODEL_SOURCE).unwrap();
        let mut s = MissionState::new(0.0);
        s.ingest(MissionEvent::new(50.0, "gps_fix")).unwrap();
        s.advance_clock(500.0).unwrap();
        let r = enumerate_explain(&m, &s, "surface").unwrap();
        let got: Vec<_> = r.reasons.iter().map(|r| (r.reason_id.as_str(), r.probability)).collect();
        assert_eq!(got, vec![("mission_complete", 0.7), ("low_battery", 0.3)]);
        assert_eq!(r, explain_why(&m, &s, "surface").unwrap());
    }

    #[test]
    fn no_unknowns_matches_propagation() {
        let m = parse_model(DEMO_MODEL_SOURCE).unwrap();
        let s = MissionState::new(0.0)
            .ingested(MissionEvent::new(10.0, "telemetry").with("battery_pct", 10.0))
            .unwrap();
        assert_eq!(enumerate_explain(&m, &s, "surface").unwrap(), explain_why(&m, &s, "surface").unwrap());
    }

    #[test]
    fn refuses_more_than_twenty_unknowns() {
        let mut tree = String::from("reason r \"x\"");
        for i in 0..21 {
            tree = format!("if v{i} < 1 {{ {tree} }} else {{ null }}");
        }
        let m = parse_model(&format!("behavior b {{ tree {{ {tree} }} }}")).unwrap();
        assert_eq!(
            enumerate_explain(&m, &MissionState::new(0.0), "b"),
            Err(EngineError::TooManyUnknowns { unknowns: 21, limit: 20 })
        );
    }
}
