use std::fmt::Write;

use super::{AutonomyModel, BehaviorSpec, Condition, Operand, TreeNode, DEFAULT_PRIOR};

/// Canonical DSL text for `model`. Default priors are omitted.
pub fn serialize_model(model: &AutonomyModel) -> String {
    let mut out = String::new();
    for (i, b) in model.behaviors.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_behavior(&mut out, b);
    }
    out
}

pub fn serialize_condition(c: &Condition) -> String {
    let mut out = String::new();
    write_condition(&mut out, c, 0);
    out
}

fn write_behavior(out: &mut String, b: &BehaviorSpec) {
    let _ = writeln!(out, "behavior {} {{", b.id);
    if !b.aliases.is_empty() {
        let aliases: Vec<String> = b.aliases.iter().map(|a| quote(a)).collect();
        let _ = writeln!(out, "  alias {}", aliases.join(", "));
    }
    for g in &b.guards {
        let _ = writeln!(
            out,
            "  guard {}{} explain {}",
            serialize_condition(&g.condition),
            prior_annotation(g.prior_true),
            quote(&g.explain_template.to_string())
        );
    }
    out.push_str("  tree {\n");
    write_node(out, &b.tree, 2);
    out.push_str("  }\n}\n");
}

fn write_node(out: &mut String, node: &TreeNode, indent: usize) {
    let pad = "  ".repeat(indent);
    match node {
        TreeNode::Decision(d) => {
            let _ = writeln!(
                out,
                "{pad}if {}{} {{",
                serialize_condition(&d.condition),
                prior_annotation(d.prior_true)
            );
            write_node(out, &d.if_true, indent + 1);
            let _ = writeln!(out, "{pad}}} else {{");
            write_node(out, &d.if_false, indent + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        TreeNode::Reason(r) => {
            let _ = writeln!(out, "{pad}reason {} {}", r.reason_id, quote(&r.template.to_string()));
        }
        TreeNode::Null => {
            let _ = writeln!(out, "{pad}null");
        }
    }
}

fn prior_annotation(p: f64) -> String {
    if p == DEFAULT_PRIOR {
        String::new()
    } else {
        format!(" [prior {p}]")
    }
}

// Binding strength: or = 1, and = 2, unary/atoms = 3. The parser is
// left-associative, so a right operand of equal strength needs parentheses.
fn write_condition(out: &mut String, c: &Condition, min: u8) {
    let strength = match c {
        Condition::Or(..) => 1,
        Condition::And(..) => 2,
        _ => 3,
    };
    let paren = strength < min;
    if paren {
        out.push('(');
    }
    match c {
        Condition::Or(a, b) => {
            write_condition(out, a, 1);
            out.push_str(" or ");
            write_condition(out, b, 2);
        }
        Condition::And(a, b) => {
            write_condition(out, a, 2);
            out.push_str(" and ");
            write_condition(out, b, 3);
        }
        Condition::Not(inner) => {
            out.push_str("not ");
            write_condition(out, inner, 3);
        }
        Condition::InZone(z) => {
            let _ = write!(out, "in_zone({})", quote(z));
        }
        Condition::Phase(p) => {
            let _ = write!(out, "phase == {}", quote(p));
        }
        Condition::Compare { lhs, op, rhs } => {
            write_operand(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs);
        }
    }
    if paren {
        out.push(')');
    }
}

fn write_operand(out: &mut String, o: &Operand) {
    let _ = match o {
        Operand::Var(v) => write!(out, "{v}"),
        Operand::Num(n) => write!(out, "{n}"),
        Operand::Duration(d) => write!(out, "{}{}", d.value, d.unit.suffix()),
        Operand::Text(s) => write!(out, "{}", quote(s)),
        Operand::Bool(b) => write!(out, "{b}"),
        Operand::ElapsedSince(k) => write!(out, "elapsed_since({k})"),
    };
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_condition, parse_model, DEMO_MODEL_SOURCE};

    #[test]
    fn minimal_model_canonical_text() {
        let m = parse_model(r#"behavior b { alias "b" tree { reason r "r happened" } }"#).unwrap();
        assert_eq!(
            serialize_model(&m),
            "behavior b {\n  alias \"b\"\n  tree {\n    reason r \"r happened\"\n  }\n}\n"
        );
    }

    #[test]
    fn default_prior_is_omitted() {
        let m = parse_model(
            r#"behavior b { guard x < 1 [prior 0.5] explain "e" tree { if y < 2 [prior 0.5] { null } else { reason r "t" } } }"#,
        )
        .unwrap();
        let text = serialize_model(&m);
        assert!(!text.contains("prior"), "{text}");
        let m = parse_model(r#"behavior b { tree { if y < 2 [prior 0.25] { null } else { reason r "t" } } }"#)
            .unwrap();
        assert!(serialize_model(&m).contains("if y < 2 [prior 0.25] {"));
    }

    #[test]
    fn demo_round_trip() {
        let m = parse_model(DEMO_MODEL_SOURCE).unwrap();
        let text = serialize_model(&m);
        assert_eq!(parse_model(&text).unwrap(), m);
        assert_eq!(serialize_model(&parse_model(&text).unwrap()), text);
    }

    #[test]
    fn parentheses_preserve_structure() {
        for src in [
            "a < 1 and (b < 2 or c < 3)",
            "a < 1 or (b < 2 or c < 3)",
            "a < 1 and (b < 2 and c < 3)",
            "not (a < 1 and b < 2)",
            "not not in_zone(\"z\")",
            "(a < 1 or b < 2) and c == \"x \\\"q\\\"\"",
            "elapsed_since(k) >= 1.5h or phase == \"p\"",
        ] {
            let c = parse_condition(src).unwrap();
            let text = serialize_condition(&c);
            assert_eq!(parse_condition(&text).unwrap(), c, "{src} -> {text}");
        }
        assert_eq!(
            serialize_condition(&parse_condition("((a < 1) and (b < 2)) or (c<3)").unwrap()),
            "a < 1 and b < 2 or c < 3"
        );
    }
}
