use std::fmt;

use super::DurationUnit;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    Ident(String),
    Keyword(&'static str),
    Number(f64),
    Duration(f64, DurationUnit),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Cmp(&'static str),
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "identifier `{s}`"),
            Token::Keyword(k) => write!(f, "`{k}`"),
            Token::Number(n) => write!(f, "number `{n}`"),
            Token::Duration(n, u) => write!(f, "duration `{n}{}`", u.suffix()),
            Token::Str(_) => f.write_str("string"),
            Token::LBrace => f.write_str("`{`"),
            Token::RBrace => f.write_str("`}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::LBracket => f.write_str("`[`"),
            Token::RBracket => f.write_str("`]`"),
            Token::Comma => f.write_str("`,`"),
            Token::Cmp(op) => write!(f, "`{op}`"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Spanned {
    pub token: Token,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LexError {
    pub pos: Pos,
    pub message: String,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, LexError> {
    Lexer { chars: src.chars().collect(), idx: 0, line: 1, column: 1 }.run()
}

struct Lexer {
    chars: Vec<char>,
    idx: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.idx + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.column }
    }

    fn error<T>(&self, pos: Pos, message: impl Into<String>) -> Result<T, LexError> {
        Err(LexError { pos, message: message.into() })
    }

    fn run(mut self) -> Result<Vec<Spanned>, LexError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let pos = self.pos();
            let Some(c) = self.peek() else {
                out.push(Spanned { token: Token::Eof, pos });
                return Ok(out);
            };
            let token = match c {
                '{' => self.single(Token::LBrace),
                '}' => self.single(Token::RBrace),
                '(' => self.single(Token::LParen),
                ')' => self.single(Token::RParen),
                '[' => self.single(Token::LBracket),
                ']' => self.single(Token::RBracket),
                ',' => self.single(Token::Comma),
                '<' | '>' | '=' | '!' => self.comparison(pos)?,
                '"' => self.string(pos)?,
                c if c.is_ascii_digit() => self.number(pos)?,
                '-' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.number(pos)?,
                c if c.is_ascii_alphabetic() || c == '_' => self.word(),
                other => return self.error(pos, format!("unexpected character `{other}`")),
            };
            out.push(Spanned { token, pos });
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn single(&mut self, token: Token) -> Token {
        self.bump();
        token
    }

    fn comparison(&mut self, pos: Pos) -> Result<Token, LexError> {
        let first = self.bump().unwrap_or_default();
        let eq = self.peek() == Some('=');
        let op = match (first, eq) {
            ('<', true) => "<=",
            ('<', false) => "<",
            ('>', true) => ">=",
            ('>', false) => ">",
            ('=', true) => "==",
            ('!', true) => "!=",
            _ => return self.error(pos, format!("expected comparison operator after `{first}`")),
        };
        if eq {
            self.bump();
        }
        Ok(Token::Cmp(op))
    }

    fn string(&mut self, pos: Pos) -> Result<Token, LexError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return self.error(pos, "unterminated string"),
                Some('"') => return Ok(Token::Str(s)),
                Some('\\') => {
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(other) => {
                            return self.error(esc_pos, format!("unknown escape `\\{other}`"))
                        }
                        None => return self.error(pos, "unterminated string"),
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Token, LexError> {
        let mut text = String::new();
        if self.peek() == Some('-') {
            text.push('-');
            self.bump();
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            text.push(self.bump().unwrap_or_default());
        }
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            text.push('.');
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                text.push(self.bump().unwrap_or_default());
            }
        }
        let value: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => return self.error(pos, format!("invalid number `{text}`")),
        };
        if !value.is_finite() {
            return self.error(pos, format!("number `{text}` is out of range"));
        }
        let unit = match self.peek() {
            Some('s') => Some(DurationUnit::Seconds),
            Some('m') => Some(DurationUnit::Minutes),
            Some('h') => Some(DurationUnit::Hours),
            _ => None,
        };
        let suffix_ends = !self.peek_at(1).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
        match unit {
            Some(unit) if suffix_ends => {
                self.bump();
                Ok(Token::Duration(value, unit))
            }
            _ if self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') => {
                self.error(self.pos(), "invalid suffix on number (expected s, m or h)")
            }
            _ => Ok(Token::Number(value)),
        }
    }

    fn word(&mut self) -> Token {
        let mut w = String::new();
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            w.push(self.bump().unwrap_or_default());
        }
        match super::KEYWORDS.iter().find(|k| **k == w) {
            Some(k) => Token::Keyword(k),
            None => Token::Ident(w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Token> {
        tokenize(src).unwrap().into_iter().map(|s| s.token).collect()
    }

    #[test]
    fn durations_and_numbers() {
        assert_eq!(
            kinds("1200s 20m 1.5h 3 -2.25 x<=-1"),
            vec![
                Token::Duration(1200.0, DurationUnit::Seconds),
                Token::Duration(20.0, DurationUnit::Minutes),
                Token::Duration(1.5, DurationUnit::Hours),
                Token::Number(3.0),
                Token::Number(-2.25),
                Token::Ident("x".into()),
                Token::Cmp("<="),
                Token::Number(-1.0),
                Token::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("# header\n  tree {").unwrap();
        assert_eq!(toks[0].token, Token::Keyword("tree"));
        assert_eq!(toks[0].pos, Pos { line: 2, column: 3 });
        assert_eq!(toks[1].pos, Pos { line: 2, column: 8 });
    }

    #[test]
    fn string_escapes() {
        assert_eq!(kinds(r#""a \"b\" \\ c""#)[0], Token::Str("a \"b\" \\ c".into()));
        let err = tokenize("\"open").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 1 });
    }

    #[test]
    fn bad_number_suffix() {
        let err = tokenize("5min").unwrap_err();
        assert_eq!(err.pos.column, 2);
        assert!(tokenize("x = 1").is_err());
    }
}
