use super::{BinaryOp, Expr, UnaryOp};

/// Parse failure with the byte offset where it occurred and the tokens
/// that would have been accepted there.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parse error at byte {offset}: expected one of {}", expected.join(", "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
}

pub(super) fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error(&["expression"]));
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(&["'+'", "'-'", "'*'", "end of input"]));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

const FACTOR_START: &[&str] = &["number", "'x'", "'pi'", "function", "'dist'", "'min'", "'max'", "'('", "'-'"];

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError { offset: self.pos, expected: expected.iter().map(|s| s.to_string()).collect() }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            let tok = format!("'{}'", c as char);
            Err(self.error(&[tok.as_str()]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Binary(BinaryOp::Add, Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Binary(BinaryOp::Sub, Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.eat(b'*') {
            lhs = Expr::Binary(BinaryOp::Mul, Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn ident(&mut self) -> Option<&str> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.src[start..self.pos]).ok()
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error(FACTOR_START)),
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number().map(Expr::Num),
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident().unwrap_or_default().to_string();
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "pi" => Ok(Expr::Pi),
                    "cos" | "sin" | "exp" | "abs" => {
                        let op = match name.as_str() {
                            "cos" => UnaryOp::Cos,
                            "sin" => UnaryOp::Sin,
                            "exp" => UnaryOp::Exp,
                            _ => UnaryOp::Abs,
                        };
                        self.expect(b'(')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Unary(op, Box::new(arg)))
                    }
                    "min" | "max" => {
                        let op = if name == "min" { BinaryOp::Min } else { BinaryOp::Max };
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        self.expect(b',')?;
                        let b = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Binary(op, Box::new(a), Box::new(b)))
                    }
                    "dist" => self.dist_tail(),
                    _ => {
                        self.pos = start;
                        Err(self.error(FACTOR_START))
                    }
                }
            }
            Some(_) => Err(self.error(FACTOR_START)),
        }
    }

    fn dist_tail(&mut self) -> Result<Expr, ParseError> {
        self.expect(b'(')?;
        self.skip_ws();
        let at = self.pos;
        if self.ident() != Some("x") {
            self.pos = at;
            return Err(self.error(&["'x'"]));
        }
        self.expect(b',')?;
        self.expect(b'[')?;
        let mut pts = vec![self.number_ws()?];
        while self.eat(b',') {
            pts.push(self.number_ws()?);
        }
        self.expect(b']')?;
        self.expect(b')')?;
        Ok(Expr::Dist(pts))
    }

    fn number_ws(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        self.number()
    }

    /// `digits [. digits] [(e|E) [+-] digits]`, or `. digits ...`.
    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error(&["number"]));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.error(&["finite number"]))
            }
        }
    }
}
