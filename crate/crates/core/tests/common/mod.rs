//! Seeded generators for randomized models, trees and mission states.
#![allow(dead_code)]

use axv_explain::model::{
    AutonomyModel, BehaviorSpec, CmpOp, Condition, Duration, DurationUnit, GuardConstraint,
    Operand, TemplateText, TreeNode,
};
use axv_explain::state::{MissionEvent, MissionState};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NUM_VARS: &[&str] = &["depth", "battery_pct", "speed", "heading", "v4", "v5"];
const TEXT_VARS: &[&str] = &["mode"];
const BOOL_VARS: &[&str] = &["leak"];
const ZONES: &[&str] = &["no_surface", "harbour", "exclusion"];
const PHASES: &[&str] = &["transit", "survey", "recovery"];
// `telemetry` is deliberately absent: tests add telemetry events to resolve
// variables and must not shift any elapsed_since condition.
const KINDS: &[&str] = &["gps_fix", "surfaced", "fault"];
const OPS: &[CmpOp] = &[CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

fn atom(rng: &mut TestRng) -> Condition {
    match rng.gen_range(0..10) {
        0..=4 => Condition::compare(
            Operand::Var(NUM_VARS.choose(rng).unwrap().to_string()),
            *OPS.choose(rng).unwrap(),
            Operand::Num(rng.gen_range(0..10) as f64),
        ),
        5 => Condition::InZone(ZONES.choose(rng).unwrap().to_string()),
        6 => Condition::Phase(PHASES.choose(rng).unwrap().to_string()),
        7 => Condition::compare(
            Operand::ElapsedSince(KINDS.choose(rng).unwrap().to_string()),
            *[CmpOp::Gt, CmpOp::Lt].choose(rng).unwrap(),
            Operand::Duration(Duration {
                value: rng.gen_range(1..30) as f64,
                unit: *[DurationUnit::Seconds, DurationUnit::Minutes].choose(rng).unwrap(),
            }),
        ),
        8 => Condition::compare(
            Operand::Var(TEXT_VARS[0].into()),
            *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt].choose(rng).unwrap(),
            Operand::Text(["safe", "survey"].choose(rng).unwrap().to_string()),
        ),
        _ => Condition::compare(
            Operand::Var(BOOL_VARS[0].into()),
            CmpOp::Eq,
            Operand::Bool(rng.gen()),
        ),
    }
}

pub fn condition(rng: &mut TestRng, depth: u32) -> Condition {
    if depth == 0 || rng.gen_bool(0.6) {
        return atom(rng);
    }
    match rng.gen_range(0..3) {
        0 => Condition::not(condition(rng, depth - 1)),
        1 => Condition::and(condition(rng, depth - 1), condition(rng, depth - 1)),
        _ => Condition::or(condition(rng, depth - 1), condition(rng, depth - 1)),
    }
}

/// `n` structurally distinct conditions.
pub fn distinct_conditions(rng: &mut TestRng, n: usize) -> Vec<Condition> {
    let mut out: Vec<Condition> = Vec::with_capacity(n);
    while out.len() < n {
        let c = condition(rng, 2);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn prior(rng: &mut TestRng) -> f64 {
    if rng.gen_bool(0.25) {
        0.5
    } else {
        rng.gen_range(0.01..0.99)
    }
}

pub struct TreeGen<'a> {
    pub conditions: &'a [Condition],
    pub next_condition: usize,
    pub next_reason: usize,
    pub null_ratio: f64,
    pub template: &'a mut dyn FnMut(&mut TestRng) -> TemplateText,
}

impl TreeGen<'_> {
    pub fn tree(&mut self, rng: &mut TestRng, depth_left: u32) -> TreeNode {
        let stop = depth_left == 0
            || self.next_condition >= self.conditions.len()
            || rng.gen_bool(0.25);
        if stop {
            if rng.gen_bool(self.null_ratio) {
                return TreeNode::Null;
            }
            self.next_reason += 1;
            let t = (self.template)(rng);
            return TreeNode::reason(format!("r{}", self.next_reason), t);
        }
        let c = self.conditions[self.next_condition].clone();
        self.next_condition += 1;
        let p = prior(rng);
        let t = self.tree(rng, depth_left - 1);
        let f = self.tree(rng, depth_left - 1);
        TreeNode::decision(c, p, t, f)
    }
}

pub fn has_reason(t: &TreeNode) -> bool {
    let mut found = false;
    t.for_each_leaf(&mut |l| found |= matches!(l, TreeNode::Reason(_)));
    found
}

pub fn count_decisions(t: &TreeNode) -> usize {
    let mut n = 0;
    t.for_each_decision(&mut |_, _| n += 1);
    n
}

/// A single-behavior model whose tree has depth <= 6 and <= 12 distinct conditions.
pub fn random_tree_model(rng: &mut TestRng) -> AutonomyModel {
    loop {
        let conds = distinct_conditions(rng, 12);
        let mut plain = |_: &mut TestRng| TemplateText::parse("because").unwrap();
        let mut gen = TreeGen {
            conditions: &conds,
            next_condition: 0,
            next_reason: 0,
            null_ratio: 0.2,
            template: &mut plain,
        };
        let tree = gen.tree(rng, 6);
        if has_reason(&tree) {
            return AutonomyModel {
                behaviors: vec![BehaviorSpec {
                    id: "b".into(),
                    aliases: vec!["b".into()],
                    guards: vec![],
                    tree,
                }],
                ..AutonomyModel::default()
            };
        }
    }
}

/// A mission state with a random subset of variables, zones and events known.
pub fn random_state(rng: &mut TestRng) -> MissionState {
    let mut s = MissionState::new(0.0);
    let mut t = 0.0;
    let mut step = |rng: &mut TestRng| {
        t += rng.gen_range(0.0..200.0_f64).floor();
        t
    };
    if rng.gen_bool(0.5) {
        let e = MissionEvent::new(step(rng), "phase_change").with("phase", *PHASES.choose(rng).unwrap());
        s.ingest(e).unwrap();
    }
    for _ in 0..rng.gen_range(0..4) {
        let e = MissionEvent::new(step(rng), *KINDS.choose(rng).unwrap());
        s.ingest(e).unwrap();
    }
    let mut tele = MissionEvent::new(step(rng), "telemetry");
    for v in NUM_VARS {
        if rng.gen_bool(0.5) {
            tele = tele.with(*v, rng.gen_range(0..10) as f64);
        }
    }
    if rng.gen_bool(0.4) {
        // occasionally the wrong type, to exercise mismatch handling
        tele = if rng.gen_bool(0.8) { tele.with("mode", "safe") } else { tele.with("mode", 3.0) };
    }
    if rng.gen_bool(0.4) {
        tele = tele.with("leak", rng.gen::<bool>());
    }
    s.ingest(tele).unwrap();
    for z in ZONES {
        if rng.gen_bool(0.3) {
            s.ingest(MissionEvent::new(step(rng), "zone_entered").with("zone", *z)).unwrap();
        }
    }
    let end = step(rng) + rng.gen_range(0.0..2000.0_f64).floor();
    s.advance_clock(end).unwrap();
    s
}

const WORDS: &[&str] = &["surface", "dive", "hold", "loiter", "ascend", "turn", "gps", "fix", "return", "abort"];
const FRAGMENTS: &[&str] = &[
    "the vehicle is ",
    "battery \"low\" ",
    "a {{brace}} ",
    "back\\slash ",
    "tab\there ",
    "new\nline ",
    "ünïcode ",
];

fn random_text(rng: &mut TestRng) -> String {
    (0..rng.gen_range(1..4)).map(|_| *FRAGMENTS.choose(rng).unwrap()).collect()
}

fn random_literal_number(rng: &mut TestRng) -> f64 {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(0..100) as f64,
        1 => rng.gen_range(-100.0..100.0),
        _ => rng.gen_range(0.0..1.0) * 1e-3,
    }
}

/// Like [`condition`] but with arbitrary-precision literals, for round-trips.
fn literal_condition(rng: &mut TestRng, depth: u32) -> Condition {
    let mut c = condition(rng, depth);
    fn rewrite(c: &mut Condition, rng: &mut TestRng) {
        match c {
            Condition::Compare { rhs: Operand::Num(n), .. } => *n = random_literal_number(rng),
            Condition::Not(inner) => rewrite(inner, rng),
            Condition::And(a, b) | Condition::Or(a, b) => {
                rewrite(a, rng);
                rewrite(b, rng);
            }
            _ => {}
        }
    }
    rewrite(&mut c, rng);
    c
}

fn vars_in(c: &Condition, out: &mut Vec<String>) {
    c.for_each_operand(&mut |o| {
        if let Operand::Var(v) = o {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    });
}

fn fill_templates(node: &mut TreeNode, f: &mut impl FnMut() -> TemplateText) {
    match node {
        TreeNode::Decision(d) => {
            fill_templates(&mut d.if_true, f);
            fill_templates(&mut d.if_false, f);
        }
        TreeNode::Reason(r) => r.template = f(),
        TreeNode::Null => {}
    }
}

/// A random model that should pass validation with no diagnostics at all.
pub fn random_valid_model(rng: &mut TestRng) -> AutonomyModel {
    let n_behaviors = rng.gen_range(1..5);
    let mut behaviors = Vec::new();
    for i in 0..n_behaviors {
        let mut conds: Vec<Condition> = Vec::new();
        while conds.len() < 8 {
            let c = literal_condition(rng, 2);
            if !conds.contains(&c) {
                conds.push(c);
            }
        }
        let mut placeholder = |_: &mut TestRng| TemplateText::default();
        let tree = loop {
            let mut gen = TreeGen {
                conditions: &conds,
                next_condition: 0,
                next_reason: 0,
                null_ratio: 0.15,
                template: &mut placeholder,
            };
            let tree = gen.tree(rng, 5);
            if has_reason(&tree) {
                break tree;
            }
        };
        let aliases = (0..rng.gen_range(0..3))
            .map(|j| format!("{} {} {i}x{j}", WORDS.choose(rng).unwrap(), WORDS.choose(rng).unwrap()))
            .collect();
        let guards = (0..rng.gen_range(0..3))
            .map(|_| GuardConstraint {
                condition: literal_condition(rng, 1),
                prior_true: prior(rng),
                explain_template: TemplateText::default(),
            })
            .collect();
        behaviors.push(BehaviorSpec { id: format!("behavior_{i}"), aliases, guards, tree });
    }

    // Slots may only name variables some condition in the model actually uses.
    let mut vars = Vec::new();
    for b in &behaviors {
        b.guards.iter().for_each(|g| vars_in(&g.condition, &mut vars));
        b.tree.for_each_decision(&mut |d, _| vars_in(&d.condition, &mut vars));
    }
    let template = |rng: &mut TestRng| {
        let mut src = random_text(rng);
        if !vars.is_empty() && rng.gen_bool(0.5) {
            src.push_str(&format!("{{{}}}", vars.choose(rng).unwrap()));
        }
        if rng.gen_bool(0.3) {
            src.push_str(&format!(" {{elapsed_since({})}}", KINDS.choose(rng).unwrap()));
        }
        TemplateText::parse(&src).unwrap()
    };
    for b in &mut behaviors {
        for g in &mut b.guards {
            g.explain_template = template(rng);
        }
        fill_templates(&mut b.tree, &mut || template(rng));
    }
    AutonomyModel { behaviors, ..AutonomyModel::default() }
}
