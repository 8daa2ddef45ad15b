//! Recursive-descent parser. Precedence, loosest first:
//! comparisons, `&`, `+ -`, `* /`, `^`, unary minus, postfix `%`.

use crate::address::CellAddress;

use super::ast::{BinaryOp, Expr, RangeRef, UnaryOp};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Functions whose value depends on when they are evaluated.
pub const VOLATILE: [&str; 6] = ["TODAY", "NOW", "RAND", "RANDBETWEEN", "OFFSET", "INDIRECT"];

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
    sheet: &'a str,
}

pub fn parse_formula(text: &str, containing_sheet: &str) -> Result<Expr, ParseError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim_start().strip_prefix('=').ok_or(ParseError {
        position: 0,
        message: "formula must start with `=`".into(),
    })?;
    let toks = tokenize(body, lead + 1)?;
    if toks.is_empty() {
        return Err(ParseError {
            position: text.len(),
            message: "empty formula".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        sheet: containing_sheet,
    };
    let expr = p.comparison()?;
    if let Some(t) = p.toks.get(p.pos) {
        return Err(ParseError {
            position: t.pos,
            message: format!("unexpected {}", describe(&t.tok)),
        });
    }
    Ok(expr)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(_) => "string".into(),
        Tok::Ref { .. } => "reference".into(),
        Tok::Ident(s) => format!("name `{s}`"),
        Tok::Op(o) => format!("operator `{o}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Colon => "`:`".into(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.pos)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.here(),
            message: message.into(),
        })
    }

    fn eat_op(&mut self, ops: &[&'static str]) -> Option<&'static str> {
        match self.peek() {
            Some(Tok::Op(o)) if ops.contains(o) => {
                let o = *o;
                self.pos += 1;
                Some(o)
            }
            _ => None,
        }
    }

    fn binary_level(
        &mut self,
        ops: &[&'static str],
        next: fn(&mut Self) -> Result<Expr, ParseError>,
    ) -> Result<Expr, ParseError> {
        let mut lhs = next(self)?;
        while let Some(op) = self.eat_op(ops) {
            let rhs = next(self)?;
            lhs = Expr::Binary(binary_op(op), Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["=", "<>", "<", "<=", ">", ">="], Self::concat)
    }

    fn concat(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["&"], Self::additive)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["+", "-"], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["*", "/"], Self::power)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&["^"], Self::unary)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.eat_op(&["-", "+"]) {
            Some("-") => Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while self.eat_op(&["%"]).is_some() {
            e = Expr::Unary(UnaryOp::Percent, Box::new(e));
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("unexpected end of formula");
        };
        match tok {
            Tok::Number(n) => {
                self.pos += 1;
                Ok(Expr::Number(n))
            }
            Tok::Str(s) => {
                self.pos += 1;
                Ok(Expr::Text(s))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.comparison()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.error("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Ref { sheet, col, row } => {
                self.pos += 1;
                let sheet = sheet.unwrap_or_else(|| self.sheet.to_string());
                let start = CellAddress::new(sheet, col, row);
                if self.peek() != Some(&Tok::Colon) {
                    return Ok(Expr::Ref(start));
                }
                self.pos += 1;
                match self.peek().cloned() {
                    Some(Tok::Ref { sheet: s2, col, row }) => {
                        if let Some(s2) = s2 {
                            if !s2.eq_ignore_ascii_case(&start.sheet) {
                                return self.error("range endpoints must be on the same sheet");
                            }
                        }
                        self.pos += 1;
                        let end = CellAddress::new(start.sheet.clone(), col, row);
                        Ok(Expr::Range(RangeRef::new(start, end)))
                    }
                    _ => self.error("expected a cell reference after `:`"),
                }
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    if VOLATILE.contains(&name.as_str()) {
                        self.pos -= 1;
                        return self.error(format!(
                            "volatile function {name} is not supported; validation runs must be reproducible"
                        ));
                    }
                    self.pos += 1;
                    let args = self.args()?;
                    return Ok(Expr::Call { name, args });
                }
                match name.as_str() {
                    "TRUE" => Ok(Expr::Bool(true)),
                    "FALSE" => Ok(Expr::Bool(false)),
                    _ => {
                        self.pos -= 1;
                        self.error(format!("unknown name `{name}`"))
                    }
                }
            }
            other => self.error(format!("unexpected {}", describe(&other))),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.comparison()?);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(args);
                }
                _ => return self.error("expected `,` or `)` in argument list"),
            }
        }
    }
}

fn binary_op(op: &str) -> BinaryOp {
    match op {
        "^" => BinaryOp::Pow,
        "*" => BinaryOp::Mul,
        "/" => BinaryOp::Div,
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "&" => BinaryOp::Concat,
        "=" => BinaryOp::Eq,
        "<>" => BinaryOp::Ne,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        _ => unreachable!("operator table"),
    }
}
