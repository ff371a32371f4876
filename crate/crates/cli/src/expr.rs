//! A small arithmetic-expression grammar for user-supplied immersions:
//! identifiers `u`, `v`, literals, `+ - * / ^`, and the function set of the
//! jet kernels (`sin`, `cos`, `exp`, `log`, `sqrt`, `pow`).

use sasakigeo::jet::Jet;
use sasakigeo::{GeoError, GeoResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize), // 0 = u, 1 = v
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Pow,
}

#[derive(Debug)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "parse error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right associative
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => self.err(format!("unexpected character `{}`", c as char)),
            None => self.err("unexpected end of expression"),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit()
                || self.src[self.pos] == b'.'
                || self.src[self.pos] == b'e'
                || self.src[self.pos] == b'E'
                || ((self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                    && self.pos > start
                    && (self.src[self.pos - 1] == b'e' || self.src[self.pos - 1] == b'E')))
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(v)),
            Err(_) => {
                self.pos = start;
                self.err(format!("invalid number `{text}`"))
            }
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "u" => Ok(Expr::Var(0)),
            "v" => Ok(Expr::Var(1)),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "sin" | "cos" | "exp" | "log" | "sqrt" | "pow" => {
                let func = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    _ => Func::Pow,
                };
                if !self.eat(b'(') {
                    return self.err(format!("`{name}` needs parentheses"));
                }
                let mut args = vec![self.expr()?];
                while self.eat(b',') {
                    args.push(self.expr()?);
                }
                if !self.eat(b')') {
                    return self.err("expected `)`");
                }
                let arity = if func == Func::Pow { 2 } else { 1 };
                if args.len() != arity {
                    self.pos = start;
                    return self.err(format!("`{name}` takes {arity} argument(s)"));
                }
                Ok(Expr::Call(func, args))
            }
            "" => self.err("expected identifier"),
            other => {
                self.pos = start;
                self.err(format!("unknown identifier `{other}` (use u, v)"))
            }
        }
    }
}

pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src);
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parse a semicolon- or comma-separated list of component expressions.
pub fn parse_immersion(src: &str) -> Result<Vec<Expr>, ParseError> {
    let sep = if src.contains(';') { ';' } else { ',' };
    let mut out = Vec::new();
    let mut offset = 0usize;
    for part in src.split(sep) {
        let e = parse_expression(part).map_err(|mut e| {
            e.position += offset;
            e
        })?;
        out.push(e);
        offset += part.len() + 1;
    }
    Ok(out)
}

impl Expr {
    pub fn eval(&self, u: &Jet, v: &Jet) -> GeoResult<Jet> {
        Ok(match self {
            Expr::Num(x) => Jet::constant(*x, u.dim(), u.order()),
            Expr::Var(0) => u.clone(),
            Expr::Var(_) => v.clone(),
            Expr::Neg(a) => a.eval(u, v)?.neg(),
            Expr::Add(a, b) => a.eval(u, v)?.add(&b.eval(u, v)?),
            Expr::Sub(a, b) => a.eval(u, v)?.sub(&b.eval(u, v)?),
            Expr::Mul(a, b) => a.eval(u, v)?.mul(&b.eval(u, v)?),
            Expr::Div(a, b) => a.eval(u, v)?.div(&b.eval(u, v)?)?,
            Expr::Pow(a, b) => {
                let base = a.eval(u, v)?;
                let exp = b.eval(u, v)?;
                if exp.first.iter().any(|&x| x != 0.0) {
                    return Err(GeoError::Unsupported(
                        "exponent must be constant".into(),
                    ));
                }
                base.powf(exp.value)?
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(u, v)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln()?,
                    Func::Sqrt => a.sqrt()?,
                    Func::Pow => {
                        let b = args[1].eval(u, v)?;
                        a.powf(b.value)?
                    }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let e = parse_expression("sin(u)*cos(v) + u^2/2 - 0.5").unwrap();
        let u = Jet::independent(0.3, 0, 2, 2);
        let v = Jet::independent(0.7, 1, 2, 2);
        let j = e.eval(&u, &v).unwrap();
        let expect = 0.3f64.sin() * 0.7f64.cos() + 0.045 - 0.5;
        assert!((j.value - expect).abs() < 1e-14);
        // ∂/∂u = cos(u)cos(v) + u
        let expect_du = 0.3f64.cos() * 0.7f64.cos() + 0.3;
        assert!((j.first[0] - expect_du).abs() < 1e-14);
    }

    #[test]
    fn reports_error_locations() {
        let err = parse_expression("u + $").unwrap_err();
        assert_eq!(err.position, 4);
        let err = parse_expression("sin(u").unwrap_err();
        assert!(err.message.contains(")"));
        let err = parse_immersion("u; v; q").unwrap_err();
        assert!(err.message.contains("unknown identifier"));
    }
}
