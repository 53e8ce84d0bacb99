use std::fmt;

use thiserror::Error;

use super::lexer::{tokenize, Pos, Spanned, Token};
use super::{
    AutonomyModel, BehaviorSpec, CmpOp, Condition, Duration, GuardConstraint, Operand,
    TemplateText, TreeNode, DEFAULT_PRIOR,
};
use crate::query::normalize;

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("{line}:{column}: duplicate behavior id `{id}`")]
    DuplicateBehavior { id: String, line: usize, column: usize },
    #[error("alias \"{alias}\" is used by both `{first}` and `{second}`")]
    DuplicateAlias { alias: String, first: String, second: String },
}

impl ModelError {
    /// Source position of the error, when it has one.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            ModelError::Syntax(e) => Some((e.line, e.column)),
            ModelError::DuplicateBehavior { line, column, .. } => Some((*line, *column)),
            ModelError::DuplicateAlias { .. } => None,
        }
    }
}

/// Parses model DSL source. `model_name` and `version` are left empty.
pub fn parse_model(source: &str) -> Result<AutonomyModel, ModelError> {
    let mut p = Parser::new(source)?;
    let mut model = AutonomyModel::default();
    let mut alias_owner: Vec<(Vec<String>, String, String)> = Vec::new();
    while !p.at(&Token::Eof) {
        let pos = p.pos();
        let behavior = p.behavior()?;
        if model.behavior(&behavior.id).is_some() {
            return Err(ModelError::DuplicateBehavior {
                id: behavior.id,
                line: pos.line,
                column: pos.column,
            });
        }
        for alias in &behavior.aliases {
            let key = normalize(alias);
            if let Some((_, owner, _)) =
                alias_owner.iter().find(|(k, owner, _)| *k == key && *owner != behavior.id)
            {
                return Err(ModelError::DuplicateAlias {
                    alias: alias.clone(),
                    first: owner.clone(),
                    second: behavior.id.clone(),
                });
            }
            alias_owner.push((key, behavior.id.clone(), alias.clone()));
        }
        model.behaviors.push(behavior);
    }
    Ok(model)
}

/// Parses a standalone condition expression.
pub fn parse_condition(source: &str) -> Result<Condition, ParseError> {
    let mut p = Parser::new(source)?;
    let cond = p.condition()?;
    p.expect(&Token::Eof, "end of condition")?;
    Ok(cond)
}

// Bounds recursion on adversarial input (deeply nested parentheses or trees).
const MAX_NESTING: usize = 256;

struct Parser {
    tokens: Vec<Spanned>,
    idx: usize,
    nesting: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(source: &str) -> PResult<Self> {
        let tokens = tokenize(source).map_err(|e| ParseError {
            line: e.pos.line,
            column: e.pos.column,
            message: e.message,
        })?;
        Ok(Parser { tokens, idx: 0, nesting: 0 })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.idx].token
    }

    fn pos(&self) -> Pos {
        self.tokens[self.idx].pos
    }

    fn at(&self, t: &Token) -> bool {
        self.peek() == t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Token::Keyword(k) if *k == kw)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.idx].token.clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn error_at<T>(&self, pos: Pos, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { line: pos.line, column: pos.column, message: message.into() })
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        self.error_at(self.pos(), format!("expected {expected}, found {}", self.peek()))
    }

    fn expect(&mut self, t: &Token, expected: &str) -> PResult<()> {
        if self.at(t) {
            self.advance();
            Ok(())
        } else {
            self.unexpected(expected)
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Token::Ident(_) => match self.advance() {
                Token::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => self.unexpected(what),
        }
    }

    fn string(&mut self, what: &str) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek() {
            Token::Str(_) => match self.advance() {
                Token::Str(s) => Ok((s, pos)),
                _ => unreachable!(),
            },
            _ => self.unexpected(what),
        }
    }

    fn template(&mut self, what: &str) -> PResult<TemplateText> {
        let (text, pos) = self.string(what)?;
        TemplateText::parse(&text).or_else(|e| self.error_at(pos, format!("bad template: {e}")))
    }

    fn enter(&mut self) -> PResult<()> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return self.error_at(self.pos(), "nesting too deep");
        }
        Ok(())
    }

    fn behavior(&mut self) -> PResult<BehaviorSpec> {
        self.keyword("behavior")?;
        let id = self.ident("behavior name")?;
        self.expect(&Token::LBrace, "`{`")?;
        let mut aliases = Vec::new();
        let mut guards = Vec::new();
        loop {
            if self.at_keyword("alias") {
                self.advance();
                aliases.push(self.string("alias string")?.0);
                while self.at(&Token::Comma) {
                    self.advance();
                    aliases.push(self.string("alias string")?.0);
                }
            } else if self.at_keyword("guard") {
                self.advance();
                let condition = self.condition()?;
                let prior_true = self.prior()?;
                self.keyword("explain")?;
                let explain_template = self.template("explanation string")?;
                guards.push(GuardConstraint { condition, prior_true, explain_template });
            } else if self.at_keyword("tree") {
                break;
            } else {
                return self.unexpected("`alias`, `guard` or `tree`");
            }
        }
        self.keyword("tree")?;
        self.expect(&Token::LBrace, "`{`")?;
        let tree = self.node()?;
        self.expect(&Token::RBrace, "`}` closing tree")?;
        self.expect(&Token::RBrace, "`}` closing behavior")?;
        Ok(BehaviorSpec { id, aliases, guards, tree })
    }

    fn prior(&mut self) -> PResult<f64> {
        if !self.at(&Token::LBracket) {
            return Ok(DEFAULT_PRIOR);
        }
        self.advance();
        self.keyword("prior")?;
        let p = match self.peek() {
            Token::Number(n) => *n,
            _ => return self.unexpected("prior probability"),
        };
        self.advance();
        self.expect(&Token::RBracket, "`]`")?;
        Ok(p)
    }

    fn node(&mut self) -> PResult<TreeNode> {
        self.enter()?;
        let node = if self.at_keyword("if") {
            self.advance();
            let condition = self.condition()?;
            let prior_true = self.prior()?;
            self.expect(&Token::LBrace, "`{`")?;
            let if_true = self.node()?;
            self.expect(&Token::RBrace, "`}`")?;
            self.keyword("else")?;
            self.expect(&Token::LBrace, "`{`")?;
            let if_false = self.node()?;
            self.expect(&Token::RBrace, "`}`")?;
            TreeNode::decision(condition, prior_true, if_true, if_false)
        } else if self.at_keyword("reason") {
            self.advance();
            let id = self.ident("reason name")?;
            let template = self.template("reason text")?;
            TreeNode::reason(id, template)
        } else if self.at_keyword("null") {
            self.advance();
            TreeNode::Null
        } else {
            return self.unexpected("`if`, `reason` or `null`");
        };
        self.nesting -= 1;
        Ok(node)
    }

    fn condition(&mut self) -> PResult<Condition> {
        let mut lhs = self.and()?;
        let depth = self.nesting;
        while self.at_keyword("or") {
            self.advance();
            self.enter()?;
            let rhs = self.and()?;
            lhs = Condition::or(lhs, rhs);
        }
        self.nesting = depth;
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Condition> {
        let mut lhs = self.unary()?;
        let depth = self.nesting;
        while self.at_keyword("and") {
            self.advance();
            self.enter()?;
            let rhs = self.unary()?;
            lhs = Condition::and(lhs, rhs);
        }
        self.nesting = depth;
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Condition> {
        self.enter()?;
        let cond = match self.peek() {
            Token::Keyword("not") => {
                self.advance();
                Condition::not(self.unary()?)
            }
            Token::LParen => {
                self.advance();
                let c = self.condition()?;
                self.expect(&Token::RParen, "`)`")?;
                c
            }
            Token::Keyword("in_zone") => {
                self.advance();
                self.expect(&Token::LParen, "`(`")?;
                let (zone, _) = self.string("zone name string")?;
                self.expect(&Token::RParen, "`)`")?;
                Condition::InZone(zone)
            }
            Token::Keyword("phase") => {
                self.advance();
                self.expect(&Token::Cmp("=="), "`==` after `phase`")?;
                let (phase, _) = self.string("phase name string")?;
                Condition::Phase(phase)
            }
            _ => {
                let lhs = self.operand()?;
                let op = match self.peek() {
                    Token::Cmp(op) => cmp_op(op),
                    _ => return self.unexpected("comparison operator"),
                };
                self.advance();
                let rhs = self.operand()?;
                Condition::compare(lhs, op, rhs)
            }
        };
        self.nesting -= 1;
        Ok(cond)
    }

    fn operand(&mut self) -> PResult<Operand> {
        let op = match self.peek().clone() {
            Token::Ident(name) => Operand::Var(name),
            Token::Number(n) => Operand::Num(n),
            Token::Duration(value, unit) => Operand::Duration(Duration { value, unit }),
            Token::Str(s) => Operand::Text(s),
            Token::Keyword("true") => Operand::Bool(true),
            Token::Keyword("false") => Operand::Bool(false),
            Token::Keyword("elapsed_since") => {
                self.advance();
                self.expect(&Token::LParen, "`(`")?;
                let kind = self.ident("event kind")?;
                self.expect(&Token::RParen, "`)`")?;
                return Ok(Operand::ElapsedSince(kind));
            }
            _ => return self.unexpected("condition"),
        };
        self.advance();
        Ok(op)
    }
}

fn cmp_op(s: &str) -> CmpOp {
    match s {
        "<" => CmpOp::Lt,
        "<=" => CmpOp::Le,
        ">" => CmpOp::Gt,
        ">=" => CmpOp::Ge,
        "==" => CmpOp::Eq,
        _ => CmpOp::Ne,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DurationUnit, DEMO_MODEL_SOURCE};

    fn var(s: &str) -> Operand {
        Operand::Var(s.into())
    }

    #[test]
    fn minimal_model() {
        let m = parse_model(r#"behavior b { alias "b" tree { reason r "r happened" } }"#).unwrap();
        assert_eq!(m.behaviors.len(), 1);
        let b = &m.behaviors[0];
        assert_eq!(b.aliases, vec!["b"]);
        assert!(b.guards.is_empty());
        assert_eq!(b.tree, TreeNode::reason("r", TemplateText::parse("r happened").unwrap()));
    }

    #[test]
    fn demo_fixture_shape() {
        let m = parse_model(DEMO_MODEL_SOURCE).unwrap();
        assert_eq!(m.behavior_ids().collect::<Vec<_>>(), vec!["surface", "gps_fix"]);
        let surface = m.behavior("surface").unwrap();
        assert_eq!(surface.tree.depth(), 2);
        let reasons: Vec<_> = surface.reasons().iter().map(|r| r.reason_id.as_str()).collect();
        assert_eq!(reasons, vec!["low_battery", "gps_fix_needed", "mission_complete"]);
        assert_eq!(surface.guards.len(), 1);
        assert_eq!(surface.guards[0].prior_true, DEFAULT_PRIOR);
        let TreeNode::Decision(root) = &surface.tree else { panic!("root should be a decision") };
        assert_eq!(root.prior_true, 0.3);
        let gps = m.behavior("gps_fix").unwrap();
        assert_eq!(gps.guards.len(), 2);
        assert_eq!(gps.aliases.len(), 3);
    }

    #[test]
    fn duplicate_alias_names_both_behaviors() {
        let src = r#"
            behavior a { alias "surfacing" tree { reason r "x" } }
            behavior b { alias "Surfacing!" tree { reason r "x" } }
        "#;
        match parse_model(src).unwrap_err() {
            ModelError::DuplicateAlias { first, second, .. } => {
                assert_eq!((first.as_str(), second.as_str()), ("a", "b"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_behavior_id() {
        let src = "behavior a { tree { null } }\nbehavior a { tree { null } }";
        assert_eq!(
            parse_model(src).unwrap_err(),
            ModelError::DuplicateBehavior { id: "a".into(), line: 2, column: 1 }
        );
    }

    #[test]
    fn syntax_error_has_position_and_expectation() {
        let err = parse_model("behavior b {\n  tree { reason r }\n}").unwrap_err();
        let ModelError::Syntax(e) = err else { panic!() };
        assert_eq!((e.line, e.column), (2, 19));
        assert!(e.message.contains("expected reason text"), "{}", e.message);

        let ModelError::Syntax(e) = parse_model("behavior b { tree { if x < 1 { null } } }").unwrap_err()
        else {
            panic!()
        };
        assert!(e.message.contains("`else`"), "{}", e.message);
    }

    #[test]
    fn bad_template_is_a_syntax_error() {
        let err = parse_model(r#"behavior b { tree { reason r "at {depth" } }"#).unwrap_err();
        let ModelError::Syntax(e) = err else { panic!() };
        assert_eq!((e.line, e.column), (1, 30));
    }

    #[test]
    fn single_comparison() {
        assert_eq!(
            parse_condition("battery_pct < 20").unwrap(),
            Condition::compare(var("battery_pct"), CmpOp::Lt, Operand::Num(20.0))
        );
    }

    #[test]
    fn not_binds_tighter_than_and() {
        assert_eq!(
            parse_condition(r#"not in_zone("no_surface") and depth < 2"#).unwrap(),
            Condition::and(
                Condition::not(Condition::InZone("no_surface".into())),
                Condition::compare(var("depth"), CmpOp::Lt, Operand::Num(2.0)),
            )
        );
    }

    #[test]
    fn and_binds_tighter_than_or() {
        assert_eq!(
            parse_condition("a == 1 or b == 2 and c == 3").unwrap(),
            Condition::or(
                Condition::compare(var("a"), CmpOp::Eq, Operand::Num(1.0)),
                Condition::and(
                    Condition::compare(var("b"), CmpOp::Eq, Operand::Num(2.0)),
                    Condition::compare(var("c"), CmpOp::Eq, Operand::Num(3.0)),
                ),
            )
        );
    }

    #[test]
    fn elapsed_since_duration() {
        assert_eq!(
            parse_condition("elapsed_since(gps_fix) > 1200s").unwrap(),
            Condition::compare(
                Operand::ElapsedSince("gps_fix".into()),
                CmpOp::Gt,
                Operand::Duration(Duration { value: 1200.0, unit: DurationUnit::Seconds }),
            )
        );
    }

    #[test]
    fn phase_and_literals() {
        assert_eq!(parse_condition(r#"phase == "transit""#).unwrap(), Condition::Phase("transit".into()));
        assert_eq!(
            parse_condition(r#"(leak != true) or mode == "safe""#).unwrap(),
            Condition::or(
                Condition::compare(var("leak"), CmpOp::Ne, Operand::Bool(true)),
                Condition::compare(var("mode"), CmpOp::Eq, Operand::Text("safe".into())),
            )
        );
    }

    #[test]
    fn condition_errors_carry_position() {
        let e = parse_condition("depth <").unwrap_err();
        assert_eq!((e.line, e.column), (1, 8));
        let e = parse_condition("depth < 2 2").unwrap_err();
        assert_eq!(e.column, 11);
        assert!(parse_condition("phase = \"x\"").is_err());
        assert!(parse_condition("").is_err());
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("{}x < 1{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(parse_condition(&src).unwrap_err().message.contains("nesting"));
        let chain = vec!["x < 1"; 10_000].join(" and ");
        assert!(parse_condition(&chain).unwrap_err().message.contains("nesting"));
        let ok = vec!["x < 1"; 100].join(" or ");
        assert!(parse_condition(&ok).is_ok());
    }
}
