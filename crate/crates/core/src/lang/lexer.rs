use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    LParen,
    RParen,
    Symbol(String),
    Variable(String),
    Integer(i64),
    Float(f64),
    Str(String),
    /// `=>`
    Arrow,
    /// `<-`
    AddrArrow,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Symbol(s) => write!(f, "symbol `{s}`"),
            TokenKind::Variable(v) => write!(f, "variable `?{v}`"),
            TokenKind::Integer(i) => write!(f, "integer `{i}`"),
            TokenKind::Float(x) => write!(f, "float `{x:?}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Arrow => f.write_str("`=>`"),
            TokenKind::AddrArrow => f.write_str("`<-`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message} near `{snippet}`")]
pub struct LexError {
    pub line: u32,
    pub column: u32,
    pub message: String,
    pub snippet: String,
}

fn is_illegal(c: char) -> bool {
    (c.is_control() && !c.is_whitespace()) || matches!(c, '{' | '}' | '[' | ']' | '\\' | '`')
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '\'' | ';' | '\u{2018}' | '\u{201C}')
}

fn is_var_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_'
}

fn closing_quote(open: char) -> Option<char> {
    match open {
        '"' => Some('"'),
        '\'' => Some('\''),
        '\u{2018}' => Some('\u{2019}'),
        '\u{201C}' => Some('\u{201D}'),
        _ => None,
    }
}

struct Cursor<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn snippet_of(text: &str, line: u32, column: u32) -> String {
    text.lines()
        .nth(line.saturating_sub(1) as usize)
        .map(|l| {
            l.chars()
                .skip(column.saturating_sub(1) as usize)
                .take(16)
                .collect()
        })
        .unwrap_or_default()
}

/// Splits knowledge-base text into tokens. `;` comments run to end of line.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    let err = |line, column, message: &str| LexError {
        line,
        column,
        message: message.into(),
        snippet: snippet_of(text, line, column),
    };

    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let kind = if c.is_whitespace() {
            cur.bump();
            continue;
        } else if c == ';' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        } else if c == '(' {
            cur.bump();
            TokenKind::LParen
        } else if c == ')' {
            cur.bump();
            TokenKind::RParen
        } else if let Some(close) = closing_quote(c) {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(err(line, column, "unterminated string")),
                    Some('\\') => match cur.bump() {
                        Some(e) => s.push(e),
                        None => return Err(err(line, column, "unterminated string")),
                    },
                    Some(ch) if ch == close => break,
                    Some(ch) => s.push(ch),
                }
            }
            TokenKind::Str(s)
        } else if is_illegal(c) || c == '\u{2019}' || c == '\u{201D}' {
            return Err(err(line, column, "illegal character"));
        } else if c == '?' {
            cur.bump();
            let mut name = String::new();
            while let Some(ch) = cur.peek() {
                if !is_var_char(ch) {
                    break;
                }
                name.push(ch);
                cur.bump();
            }
            if name.is_empty() {
                return Err(err(line, column, "expected a variable name after `?`"));
            }
            TokenKind::Variable(name)
        } else {
            let mut word = String::new();
            while let Some(ch) = cur.peek() {
                if is_delimiter(ch) {
                    break;
                }
                if is_illegal(ch) || ch == '\u{2019}' || ch == '\u{201D}' {
                    return Err(err(cur.line, cur.column, "illegal character"));
                }
                word.push(ch);
                cur.bump();
            }
            classify(word).map_err(|m| err(line, column, m))?
        };
        out.push(Token { kind, line, column });
    }
    Ok(out)
}

fn classify(word: String) -> Result<TokenKind, &'static str> {
    match word.as_str() {
        "=>" => return Ok(TokenKind::Arrow),
        "<-" => return Ok(TokenKind::AddrArrow),
        _ => {}
    }
    let body = word.strip_prefix(['+', '-']).unwrap_or(&word);
    if !body.is_empty() && body.bytes().all(|b| b.is_ascii_digit()) {
        return word
            .parse::<i64>()
            .map(TokenKind::Integer)
            .map_err(|_| "integer literal out of range");
    }
    let numeric_start = body
        .strip_prefix('.')
        .unwrap_or(body)
        .starts_with(|c: char| c.is_ascii_digit());
    if numeric_start
        && body
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
    {
        if let Ok(x) = word.parse::<f64>() {
            if x.is_finite() {
                return Ok(TokenKind::Float(x));
            }
            return Err("float literal out of range");
        }
    }
    Ok(TokenKind::Symbol(word))
}
