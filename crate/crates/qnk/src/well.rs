//! Potential wells written as formulas in `x`.
//!
//! The grammar is small: numbers, `x`, `pi`, `+ - * /`, integer powers
//! `^n`, parentheses, juxtaposition products and `sin^2(k*pi*x)` with
//! integer `k`. Everything else is rejected. `sin²` and `π` are accepted
//! as spellings.

use std::fmt;

use qnk_core::bgk::PotentialWell;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("well formula, column {pos}: {message}")]
pub struct WellError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    SinSq(Box<Node>),
}

/// Value and derivative.
#[derive(Debug, Clone, Copy)]
struct Dual(f64, f64);

impl Node {
    fn eval(&self, x: f64) -> Dual {
        match self {
            Node::Num(c) => Dual(*c, 0.0),
            Node::X => Dual(x, 1.0),
            Node::Neg(a) => {
                let a = a.eval(x);
                Dual(-a.0, -a.1)
            }
            Node::Add(a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                Dual(a.0 + b.0, a.1 + b.1)
            }
            Node::Sub(a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                Dual(a.0 - b.0, a.1 - b.1)
            }
            Node::Mul(a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                Dual(a.0 * b.0, a.1 * b.0 + a.0 * b.1)
            }
            Node::Div(a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                Dual(a.0 / b.0, (a.1 * b.0 - a.0 * b.1) / (b.0 * b.0))
            }
            Node::Pow(a, n) => {
                let a = a.eval(x);
                if *n == 0 {
                    return Dual(1.0, 0.0);
                }
                let p = a.0.powi(*n as i32 - 1);
                Dual(p * a.0, *n as f64 * p * a.1)
            }
            Node::SinSq(a) => {
                let a = a.eval(x);
                let (s, c) = a.0.sin_cos();
                Dual(s * s, 2.0 * s * c * a.1)
            }
        }
    }

    fn depends_on_x(&self) -> bool {
        match self {
            Node::Num(_) => false,
            Node::X => true,
            Node::Neg(a) | Node::Pow(a, _) | Node::SinSq(a) => a.depends_on_x(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }
}

/// A parsed well formula.
#[derive(Debug, Clone, PartialEq)]
pub struct WellFormula {
    source: String,
    root: Node,
}

impl fmt::Display for WellFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl WellFormula {
    pub fn parse(src: &str) -> Result<Self, WellError> {
        let chars: Vec<char> = src.chars().collect();
        let mut p = Parser { s: &chars, i: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.i < chars.len() {
            return Err(p.err(format!("unexpected `{}`", chars[p.i])));
        }
        Ok(Self {
            source: src.to_string(),
            root,
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.root.eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.root.eval(x).1
    }

    /// Samples the formula at `intervals + 1` nodes of `[0, 1]`.
    pub fn to_well(&self, intervals: usize) -> qnk_core::Result<PotentialWell> {
        PotentialWell::from_fn(|x| self.value(x), |x| self.derivative(x), intervals)
    }
}

struct Parser<'a> {
    s: &'a [char],
    i: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> WellError {
        WellError {
            pos: self.i + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        let n = w.chars().count();
        if self.i + n <= self.s.len() && self.s[self.i..self.i + n].iter().copied().eq(w.chars()) {
            self.i += n;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, WellError> {
        let mut lhs = if self.eat('-') {
            Node::Neg(Box::new(self.term()?))
        } else {
            self.eat('+');
            self.term()?
        };
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, WellError> {
        let mut lhs = self.power()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.power()?));
            } else if self.eat('/') {
                let at = self.i;
                let rhs = self.power()?;
                if rhs.depends_on_x() {
                    self.i = at;
                    return Err(self.err("division by an expression in x is not a polynomial"));
                }
                lhs = Node::Div(Box::new(lhs), Box::new(rhs));
            } else if self.implicit_product() {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    /// Juxtaposition as in `2πx` or `3(1-x)`; never before a number.
    fn implicit_product(&mut self) -> bool {
        matches!(self.peek(), Some('x' | 'π' | '(' | 'p' | 's'))
    }

    fn power(&mut self) -> Result<Node, WellError> {
        let base = self.atom()?;
        if self.eat('^') {
            let n = self.uint()?;
            return Ok(Node::Pow(Box::new(base), n));
        }
        if self.eat('²') {
            return Ok(Node::Pow(Box::new(base), 2));
        }
        Ok(base)
    }

    fn uint(&mut self) -> Result<u32, WellError> {
        self.skip_ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        let txt: String = self.s[start..self.i].iter().collect();
        txt.parse().map_err(|_| {
            self.i = start;
            self.err("expected a non-negative integer exponent")
        })
    }

    fn atom(&mut self) -> Result<Node, WellError> {
        match self.peek() {
            None => Err(self.err("unexpected end of formula")),
            Some('(') => {
                self.i += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('x') => {
                self.i += 1;
                Ok(Node::X)
            }
            Some('π') => {
                self.i += 1;
                Ok(Node::Num(std::f64::consts::PI))
            }
            _ if self.eat_word("pi") => Ok(Node::Num(std::f64::consts::PI)),
            _ if self.eat_word("sin^2") || self.eat_word("sin²") => self.sin_sq(),
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
        }
    }

    fn sin_sq(&mut self) -> Result<Node, WellError> {
        let at = self.i;
        if !self.eat('(') {
            return Err(self.err("expected `(` after sin^2"));
        }
        let arg = self.expr()?;
        if !self.eat(')') {
            return Err(self.err("expected `)`"));
        }
        // the argument must be k*pi*x with integer k
        let a0 = arg.eval(0.0);
        let a1 = arg.eval(1.0);
        let k = a1.0 / std::f64::consts::PI;
        let linear = a0.0.abs() < 1e-12 && (a0.1 - a1.1).abs() < 1e-12 && (a1.0 - a0.1).abs() < 1e-12;
        if !linear || (k - k.round()).abs() > 1e-12 || k.round() == 0.0 {
            self.i = at;
            return Err(self.err("sin^2 argument must be k*pi*x with a nonzero integer k"));
        }
        Ok(Node::SinSq(Box::new(arg)))
    }

    fn number(&mut self) -> Result<Node, WellError> {
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == '.') {
            self.i += 1;
        }
        if self.i < self.s.len() && (self.s[self.i] == 'e' || self.s[self.i] == 'E') {
            let save = self.i;
            self.i += 1;
            if self.i < self.s.len() && (self.s[self.i] == '-' || self.s[self.i] == '+') {
                self.i += 1;
            }
            let digits = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            if digits == self.i {
                self.i = save;
            }
        }
        let txt: String = self.s[start..self.i].iter().collect();
        txt.parse().map(Node::Num).map_err(|_| {
            self.i = start;
            self.err(format!("bad number `{txt}`"))
        })
    }
}
