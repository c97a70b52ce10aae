use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::*;
use super::lexer::{tokenize, LexError, Token, TokenKind};
use crate::value::SlotValue;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub expected: String,
    pub found: String,
}

/// Any failure to turn text into constructs. Always carries a position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            SyntaxError::Lex(e) => (e.line, e.column),
            SyntaxError::Parse(e) => (e.line, e.column),
        }
    }
}

/// Parses a knowledge-base file into constructs in source order.
///
/// Names are not resolved here; unknown templates surface when the program
/// is validated or loaded.
pub fn parse_program(text: &str) -> Result<Vec<Construct>, SyntaxError> {
    let tokens = tokenize(text)?;
    let (end_line, end_col) = end_position(text);
    let mut p = Parser {
        tokens,
        pos: 0,
        end_line,
        end_col,
    };
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.construct()?);
    }
    Ok(out)
}

fn end_position(text: &str) -> (u32, u32) {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end_line: u32,
    end_col: u32,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn error(&self, expected: &str) -> ParseError {
        match self.tokens.get(self.pos) {
            Some(t) => ParseError {
                line: t.line,
                column: t.column,
                expected: expected.to_string(),
                found: t.kind.to_string(),
            },
            None => ParseError {
                line: self.end_line,
                column: self.end_col,
                expected: expected.to_string(),
                found: "end of input".to_string(),
            },
        }
    }

    fn expect_lparen(&mut self) -> PResult<()> {
        match self.peek() {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error("`(`")),
        }
    }

    fn expect_rparen(&mut self) -> PResult<()> {
        match self.peek() {
            Some(TokenKind::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error("`)`")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(TokenKind::Symbol(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("`{kw}`"))),
        }
    }

    fn symbol(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Symbol(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn variable(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Variable(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error("a variable")),
        }
    }

    fn is_rparen(&self) -> bool {
        matches!(self.peek(), Some(TokenKind::RParen))
    }

    fn construct(&mut self) -> PResult<Construct> {
        self.expect_lparen()?;
        let kw = match self.peek() {
            Some(TokenKind::Symbol(s)) => s.clone(),
            _ => return Err(self.error("`deftemplate`, `defrule`, `defquery` or `assert`")),
        };
        match kw.as_str() {
            "deftemplate" => {
                self.pos += 1;
                self.template_def().map(Construct::Template)
            }
            "defrule" => {
                self.pos += 1;
                self.rule_def().map(Construct::Rule)
            }
            "defquery" => {
                self.pos += 1;
                self.query_def().map(Construct::Query)
            }
            "assert" => {
                self.pos += 1;
                let pats = self.assert_patterns()?;
                self.expect_rparen()?;
                Ok(Construct::Assert(pats))
            }
            _ => Err(self.error("`deftemplate`, `defrule`, `defquery` or `assert`")),
        }
    }

    fn template_def(&mut self) -> PResult<TemplateDef> {
        let name = self.symbol("a template name")?;
        let mut slots = Vec::new();
        while !self.is_rparen() {
            self.expect_lparen()?;
            self.expect_keyword("slot")?;
            slots.push(self.symbol("a slot name")?);
            self.expect_rparen()?;
        }
        self.expect_rparen()?;
        Ok(TemplateDef { name, slots })
    }

    fn rule_def(&mut self) -> PResult<RuleDef> {
        let name = self.symbol("a rule name")?;
        let mut salience = 0;
        if matches!(self.peek(), Some(TokenKind::LParen))
            && matches!(self.peek_at(1), Some(TokenKind::Symbol(s)) if s == "declare")
        {
            self.pos += 2;
            self.expect_lparen()?;
            self.expect_keyword("salience")?;
            salience = match self.peek() {
                Some(TokenKind::Integer(i)) => *i,
                _ => return Err(self.error("an integer salience")),
            };
            self.pos += 1;
            self.expect_rparen()?;
            self.expect_rparen()?;
        }
        let mut lhs = Vec::new();
        loop {
            match self.peek() {
                Some(TokenKind::Arrow) => {
                    self.pos += 1;
                    break;
                }
                Some(TokenKind::LParen) | Some(TokenKind::Variable(_)) => {
                    lhs.push(self.condition()?)
                }
                _ => return Err(self.error("a pattern, a test or `=>`")),
            }
        }
        let mut rhs = Vec::new();
        while !self.is_rparen() {
            rhs.push(self.action()?);
        }
        self.expect_rparen()?;
        Ok(RuleDef {
            name,
            salience,
            lhs,
            rhs,
        })
    }

    fn query_def(&mut self) -> PResult<QueryDef> {
        let name = self.symbol("a query name")?;
        self.expect_lparen()?;
        self.expect_keyword("declare")?;
        self.expect_lparen()?;
        self.expect_keyword("variables")?;
        let mut params = Vec::new();
        while let Some(TokenKind::Variable(_)) = self.peek() {
            params.push(self.variable()?);
        }
        if params.is_empty() {
            return Err(self.error("a variable"));
        }
        self.expect_rparen()?;
        self.expect_rparen()?;
        let mut lhs = Vec::new();
        while !self.is_rparen() {
            lhs.push(self.condition()?);
        }
        self.expect_rparen()?;
        Ok(QueryDef { name, params, lhs })
    }

    fn condition(&mut self) -> PResult<Condition> {
        if let Some(TokenKind::Variable(_)) = self.peek() {
            let address = self.variable()?;
            match self.peek() {
                Some(TokenKind::AddrArrow) => self.pos += 1,
                _ => return Err(self.error("`<-`")),
            }
            let mut p = self.pattern()?;
            p.address = Some(address);
            return Ok(Condition::Pattern(p));
        }
        if matches!(self.peek(), Some(TokenKind::LParen))
            && matches!(self.peek_at(1), Some(TokenKind::Symbol(s)) if s == "test")
        {
            self.pos += 2;
            let e = self.funcall()?;
            self.expect_rparen()?;
            return Ok(Condition::Test(e));
        }
        self.pattern().map(Condition::Pattern)
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        self.expect_lparen()?;
        let template = self.symbol("a template name")?;
        if matches!(
            template.as_str(),
            "not" | "exists" | "or" | "and" | "forall"
        ) {
            self.pos -= 1;
            return Err(self.error("a pattern (conditional elements are not supported)"));
        }
        let mut constraints = Vec::new();
        while !self.is_rparen() {
            self.expect_lparen()?;
            let slot = self.symbol("a slot name")?;
            let c = self.constraint()?;
            if !self.is_rparen() {
                return Err(self.error("`)` (connective constraints are not supported)"));
            }
            self.pos += 1;
            constraints.push((slot, c));
        }
        self.expect_rparen()?;
        Ok(Pattern {
            address: None,
            template,
            constraints,
        })
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        match self.peek() {
            Some(TokenKind::Variable(_)) => self.variable().map(Constraint::Variable),
            Some(TokenKind::Symbol(s)) if s.starts_with(['&', '|', '~']) => {
                Err(self
                    .error("a literal or a variable (connective constraints are not supported)"))
            }
            _ => match self.literal() {
                Some(v) => Ok(Constraint::Literal(v)),
                None => Err(self.error("a literal or a variable")),
            },
        }
    }

    fn literal(&mut self) -> Option<SlotValue> {
        let v = match self.peek()? {
            TokenKind::Symbol(s) => SlotValue::symbol(s),
            TokenKind::Str(s) => SlotValue::text(s),
            TokenKind::Integer(i) => SlotValue::Integer(*i),
            TokenKind::Float(x) => SlotValue::Float(*x),
            _ => return None,
        };
        self.pos += 1;
        Some(v)
    }

    fn expr(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(TokenKind::Variable(_)) => self.variable().map(Expr::Variable),
            Some(TokenKind::LParen) => self.funcall(),
            _ => match self.literal() {
                Some(v) => Ok(Expr::Literal(v)),
                None => Err(self.error("an expression")),
            },
        }
    }

    fn funcall(&mut self) -> PResult<Expr> {
        self.expect_lparen()?;
        let op = match self.peek() {
            Some(TokenKind::Symbol(s)) => Op::from_symbol(s),
            _ => None,
        };
        let Some(op) = op else {
            return Err(self.error("one of `+ - * / < > <= >= eq neq`"));
        };
        self.pos += 1;
        let mut args = Vec::new();
        while !self.is_rparen() {
            if self.at_end() {
                break;
            }
            args.push(self.expr()?);
        }
        if args.len() < op.min_args() {
            return Err(self.error(&format!(
                "at least {} argument(s) to `{}`",
                op.min_args(),
                op.symbol()
            )));
        }
        self.expect_rparen()?;
        Ok(Expr::Call { op, args })
    }

    fn fact_pattern(&mut self) -> PResult<FactPattern> {
        self.expect_lparen()?;
        let template = self.symbol("a template name")?;
        let mut slots = Vec::new();
        while !self.is_rparen() {
            self.expect_lparen()?;
            let slot = self.symbol("a slot name")?;
            let e = self.expr()?;
            self.expect_rparen()?;
            slots.push((slot, e));
        }
        self.expect_rparen()?;
        Ok(FactPattern { template, slots })
    }

    fn assert_patterns(&mut self) -> PResult<Vec<FactPattern>> {
        let mut pats = Vec::new();
        while matches!(self.peek(), Some(TokenKind::LParen)) {
            pats.push(self.fact_pattern()?);
        }
        if pats.is_empty() {
            return Err(self.error("a fact to assert"));
        }
        Ok(pats)
    }

    fn action(&mut self) -> PResult<Action> {
        self.expect_lparen()?;
        let kw = match self.peek() {
            Some(TokenKind::Symbol(s)) => s.clone(),
            _ => return Err(self.error("`assert`, `retract`, `modify` or `bind`")),
        };
        let action = match kw.as_str() {
            "assert" => {
                self.pos += 1;
                Action::Assert(self.assert_patterns()?)
            }
            "retract" => {
                self.pos += 1;
                let mut vars = Vec::new();
                while let Some(TokenKind::Variable(_)) = self.peek() {
                    vars.push(self.variable()?);
                }
                if vars.is_empty() {
                    return Err(self.error("a fact-address variable"));
                }
                Action::Retract(vars)
            }
            "modify" => {
                self.pos += 1;
                let target = self.variable()?;
                let mut updates = Vec::new();
                while !self.is_rparen() {
                    self.expect_lparen()?;
                    let slot = self.symbol("a slot name")?;
                    let e = self.expr()?;
                    self.expect_rparen()?;
                    updates.push((slot, e));
                }
                if updates.is_empty() {
                    return Err(self.error("a slot update"));
                }
                Action::Modify { target, updates }
            }
            "bind" => {
                self.pos += 1;
                let var = self.variable()?;
                let expr = self.expr()?;
                Action::Bind { var, expr }
            }
            _ => return Err(self.error("`assert`, `retract`, `modify` or `bind`")),
        };
        self.expect_rparen()?;
        Ok(action)
    }
}
