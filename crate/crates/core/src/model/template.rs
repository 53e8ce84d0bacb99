use std::fmt;

use thiserror::Error;

use super::is_identifier;

/// Explanation text with `{var}` and `{elapsed_since(kind)}` slots.
/// `{{` and `}}` stand for literal braces.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TemplateText {
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Var(String),
    ElapsedSince(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unclosed slot starting at offset {0}")]
    Unclosed(usize),
    #[error("malformed slot `{{{slot}}}` at offset {offset}")]
    Malformed { slot: String, offset: usize },
    #[error("unmatched `}}` at offset {0}")]
    StrayClose(usize),
}

impl TemplateText {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut chars = text.char_indices().peekable();
        while let Some((offset, c)) = chars.next() {
            match c {
                '{' if matches!(chars.peek(), Some((_, '{'))) => {
                    chars.next();
                    literal.push('{');
                }
                '}' if matches!(chars.peek(), Some((_, '}'))) => {
                    chars.next();
                    literal.push('}');
                }
                '}' => return Err(TemplateError::StrayClose(offset)),
                '{' => {
                    let mut slot = String::new();
                    let mut closed = false;
                    for (_, c) in chars.by_ref() {
                        if c == '}' {
                            closed = true;
                            break;
                        }
                        slot.push(c);
                    }
                    if !closed {
                        return Err(TemplateError::Unclosed(offset));
                    }
                    let segment = parse_slot(&slot)
                        .ok_or(TemplateError::Malformed { slot, offset })?;
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(segment);
                }
                c => literal.push(c),
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(TemplateText { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Fills every slot using `lookup` and returns the resulting text.
    pub fn fill(&self, mut lookup: impl FnMut(&Segment) -> String) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                slot => out.push_str(&lookup(slot)),
            }
        }
        out
    }
}

fn parse_slot(slot: &str) -> Option<Segment> {
    let slot = slot.trim();
    if let Some(rest) = slot.strip_prefix("elapsed_since") {
        let inner = rest.trim_start().strip_prefix('(')?.strip_suffix(')')?.trim();
        return is_identifier(inner).then(|| Segment::ElapsedSince(inner.to_string()));
    }
    is_identifier(slot).then(|| Segment::Var(slot.to_string()))
}

/// Source form, with literal braces escaped.
impl fmt::Display for TemplateText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => f.write_str(&s.replace('{', "{{").replace('}', "}}"))?,
                Segment::Var(v) => write!(f, "{{{v}}}")?,
                Segment::ElapsedSince(k) => write!(f, "{{elapsed_since({k})}}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_slots() {
        let t = TemplateText::parse("the last fix was {elapsed_since(gps_fix)} ago, at {depth} m").unwrap();
        assert_eq!(
            t.segments(),
            &[
                Segment::Literal("the last fix was ".into()),
                Segment::ElapsedSince("gps_fix".into()),
                Segment::Literal(" ago, at ".into()),
                Segment::Var("depth".into()),
                Segment::Literal(" m".into()),
            ]
        );
        assert_eq!(t.to_string(), "the last fix was {elapsed_since(gps_fix)} ago, at {depth} m");
    }

    #[test]
    fn escaped_braces_round_trip() {
        let t = TemplateText::parse("a {{literal}} b").unwrap();
        assert_eq!(t.segments(), &[Segment::Literal("a {literal} b".into())]);
        assert_eq!(TemplateText::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn rejects_malformed_slots() {
        assert_eq!(TemplateText::parse("x {depth"), Err(TemplateError::Unclosed(2)));
        assert!(matches!(TemplateText::parse("{1abc}"), Err(TemplateError::Malformed { .. })));
        assert!(matches!(TemplateText::parse("{elapsed_since(gps}"), Err(TemplateError::Malformed { .. })));
        assert!(matches!(TemplateText::parse("{}"), Err(TemplateError::Malformed { .. })));
        assert_eq!(TemplateText::parse("a } b"), Err(TemplateError::StrayClose(2)));
    }
}
