//! Arithmetic expressions for problem data.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 'x' | 'y' | 't' | 'pi'
//!          | ('sin' | 'exp') '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
    Y,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Exp(Box<Node>),
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

impl Expr {
    /// Parses `source`, accepting only the variables in `allowed`.
    pub fn parse(source: &str, allowed: &[Var]) -> Result<Self, ParseError> {
        let chars: Vec<char> = source.chars().collect();
        let mut p = Parser {
            chars: &chars,
            pos: 0,
            allowed,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < chars.len() {
            return Err(p.error(format!("unexpected `{}`", chars[p.pos])));
        }
        Ok(Self {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        eval(&self.root, t, x, y)
    }

    /// The value when the expression has no variables.
    pub fn constant(&self) -> Option<f64> {
        fn has_var(n: &Node) -> bool {
            match n {
                Node::Num(_) => false,
                Node::Var(_) => true,
                Node::Neg(a) | Node::Sin(a) | Node::Exp(a) => has_var(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => has_var(a) || has_var(b),
            }
        }
        (!has_var(&self.root)).then(|| self.eval(0.0, 0.0, 0.0))
    }
}

fn eval(n: &Node, t: f64, x: f64, y: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(Var::T) => t,
        Node::Var(Var::X) => x,
        Node::Var(Var::Y) => y,
        Node::Neg(a) => -eval(a, t, x, y),
        Node::Add(a, b) => eval(a, t, x, y) + eval(b, t, x, y),
        Node::Sub(a, b) => eval(a, t, x, y) - eval(b, t, x, y),
        Node::Mul(a, b) => eval(a, t, x, y) * eval(b, t, x, y),
        Node::Div(a, b) => eval(a, t, x, y) / eval(b, t, x, y),
        Node::Sin(a) => eval(a, t, x, y).sin(),
        Node::Exp(a) => eval(a, t, x, y).exp(),
    }
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
    allowed: &'a [Var],
}

impl Parser<'_> {
    fn error(&self, message: String) -> ParseError {
        ParseError {
            column: self.pos + 1,
            message,
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(match self.chars.get(self.pos) {
                Some(found) => format!("expected `{c}`, found `{found}`"),
                None => format!("expected `{c}`, found end of input"),
            }))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                let var = match word.as_str() {
                    "t" => Some(Var::T),
                    "x" => Some(Var::X),
                    "y" => Some(Var::Y),
                    _ => None,
                };
                if let Some(v) = var {
                    if !self.allowed.contains(&v) {
                        self.pos = start;
                        return Err(self.error(format!("variable `{v}` is not allowed here")));
                    }
                    return Ok(Node::Var(v));
                }
                match word.as_str() {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "sin" | "exp" => {
                        self.expect('(')?;
                        let arg = Box::new(self.expr()?);
                        self.expect(')')?;
                        Ok(if word == "sin" { Node::Sin(arg) } else { Node::Exp(arg) })
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(format!("unknown name `{word}`")))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.chars.get(p.pos).is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map(Node::Num).map_err(|_| {
            self.pos = start;
            self.error(format!("malformed number `{text}`"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: &[Var] = &[Var::T, Var::X, Var::Y];

    fn ev(s: &str, t: f64, x: f64, y: f64) -> f64 {
        Expr::parse(s, ALL).unwrap().eval(t, x, y)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0, 0.0), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0, 0.0, 0.0), 9.0);
        assert_eq!(ev("8 - 4 - 2", 0.0, 0.0, 0.0), 2.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(ev("-2 * -3", 0.0, 0.0, 0.0), 6.0);
        assert_eq!(ev("--1", 0.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(ev("16*x - 8", 0.0, 0.25, 0.0), -4.0);
        assert_eq!(ev("t + x*y", 2.0, 3.0, 4.0), 14.0);
        assert!((ev("sin(pi*x)", 0.0, 0.5, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(ev("exp(0)", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(ev("1.5e2 + .25 + 25E-2", 0.0, 0.0, 0.0), 150.5);
    }

    #[test]
    fn matches_direct_arithmetic_bitwise() {
        for x in [0.0, 0.005, 0.5, 1.0, 0.37] {
            assert_eq!(ev("16*x - 8", 0.0, x, 0.0), 16.0 * x - 8.0);
        }
    }

    #[test]
    fn constants_are_detected() {
        assert_eq!(Expr::parse("2 * 3", ALL).unwrap().constant(), Some(6.0));
        assert_eq!(Expr::parse("2 * x", ALL).unwrap().constant(), None);
    }

    #[test]
    fn errors_point_at_the_problem() {
        let e = Expr::parse("1 + ^", ALL).unwrap_err();
        assert_eq!(e.column, 5);
        let e = Expr::parse("cos(x)", ALL).unwrap_err();
        assert!(e.message.contains("cos"));
        let e = Expr::parse("sin(x", ALL).unwrap_err();
        assert!(e.message.contains("end of input"));
        let e = Expr::parse("x + t", &[Var::X]).unwrap_err();
        assert_eq!(e.column, 5);
        assert!(e.message.contains("`t`"));
        assert!(Expr::parse("", ALL).is_err());
        assert!(Expr::parse("1 2", ALL).is_err());
        assert!(Expr::parse("x(1)", ALL).is_err());
    }
}
