//! Expression trees for user-supplied formulas.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr  := term (('+'|'-') term)*
//! term  := unary (('*'|'/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' intlit)?
//! atom  := number | ident | '(' expr ')' | func '(' expr ')'
//! func  := sin | cos | exp | log | sqrt | atan
//! ```
//!
//! Exponents are integer literals; `log` is the natural logarithm.
//! Variables are declared per context (`{x,y,p}`, `{t,x}`, `{u,v}`, ...)
//! and anything undeclared is a parse error.

use std::fmt;

use crate::num::Real;

/// Ordered set of variable names an expression may reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        assert!(
            !names.is_empty() && names.len() <= 3,
            "variable sets have 1..=3 entries"
        );
        VarSet { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Atan,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
        }
    }
}

/// Expression tree node. Variables are indices into the owning
/// [`Expression`]'s variable set.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, i32),
    Apply(Func, Box<Node>),
}

/// A parsed formula together with its declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    vars: VarSet,
    root: Node,
    source: String,
}

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at offset {}: {}",
            self.offset, self.message
        )
    }
}

impl std::error::Error for ParseError {}

impl Expression {
    /// Parses `src` over the declared variable set.
    pub fn parse(src: &str, vars: &VarSet) -> Result<Expression, ParseError> {
        if src.trim().is_empty() {
            return Err(ParseError {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let mut parser = Parser {
            src: src.as_bytes(),
            pos: 0,
            vars,
        };
        let root = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(Expression {
            vars: vars.clone(),
            root,
            source: src.to_string(),
        })
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Builds an expression directly from a tree (used when deriving
    /// fields such as the characteristic lift from a parsed formula).
    pub fn from_node(root: Node, vars: VarSet) -> Expression {
        let source = render(&root, &vars);
        Expression { vars, root, source }
    }

    /// Plain floating-point evaluation. Domain violations follow IEEE
    /// semantics (`log(-1)` is NaN and so on); callers that need checked
    /// evaluation go through the jet path.
    pub fn eval<F: Real>(&self, point: &[F]) -> F {
        assert_eq!(point.len(), self.vars.len(), "point dimension mismatch");
        eval_node(&self.root, point)
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expression {
        assert!(var < self.vars.len());
        let root = diff_node(&self.root, var);
        Expression::from_node(root, self.vars.clone())
    }
}

fn eval_node<F: Real>(node: &Node, point: &[F]) -> F {
    match node {
        Node::Num(c) => F::of(*c),
        Node::Var(i) => point[*i],
        Node::Add(a, b) => eval_node(a, point) + eval_node(b, point),
        Node::Sub(a, b) => eval_node(a, point) - eval_node(b, point),
        Node::Mul(a, b) => eval_node(a, point) * eval_node(b, point),
        Node::Div(a, b) => eval_node(a, point) / eval_node(b, point),
        Node::Neg(a) => -eval_node(a, point),
        Node::Pow(a, k) => eval_node(a, point).powi(*k),
        Node::Apply(f, a) => {
            let x = eval_node(a, point);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sqrt => x.sqrt(),
                Func::Atan => x.atan(),
            }
        }
    }
}

fn diff_node(node: &Node, var: usize) -> Node {
    use Node::*;
    match node {
        Num(_) => Num(0.0),
        Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
        Add(a, b) => Add(Box::new(diff_node(a, var)), Box::new(diff_node(b, var))),
        Sub(a, b) => Sub(Box::new(diff_node(a, var)), Box::new(diff_node(b, var))),
        Mul(a, b) => Add(
            Box::new(Mul(Box::new(diff_node(a, var)), b.clone())),
            Box::new(Mul(a.clone(), Box::new(diff_node(b, var)))),
        ),
        Div(a, b) => {
            // (a/b)' = a'/b - a b'/b^2
            let da = diff_node(a, var);
            let db = diff_node(b, var);
            Sub(
                Box::new(Div(Box::new(da), b.clone())),
                Box::new(Div(
                    Box::new(Mul(a.clone(), Box::new(db))),
                    Box::new(Pow(b.clone(), 2)),
                )),
            )
        }
        Neg(a) => Neg(Box::new(diff_node(a, var))),
        Pow(a, k) => {
            if *k == 0 {
                return Num(0.0);
            }
            // (a^k)' = k a^(k-1) a'
            Mul(
                Box::new(Mul(
                    Box::new(Num(*k as f64)),
                    Box::new(Pow(a.clone(), k - 1)),
                )),
                Box::new(diff_node(a, var)),
            )
        }
        Apply(f, a) => {
            let da = diff_node(a, var);
            let outer = match f {
                Func::Sin => Apply(Func::Cos, a.clone()),
                Func::Cos => Neg(Box::new(Apply(Func::Sin, a.clone()))),
                Func::Exp => Apply(Func::Exp, a.clone()),
                Func::Log => Div(Box::new(Num(1.0)), a.clone()),
                Func::Sqrt => Div(Box::new(Num(0.5)), Box::new(Apply(Func::Sqrt, a.clone()))),
                Func::Atan => Div(
                    Box::new(Num(1.0)),
                    Box::new(Add(Box::new(Num(1.0)), Box::new(Pow(a.clone(), 2)))),
                ),
            };
            Mul(Box::new(outer), Box::new(da))
        }
    }
}

fn render(node: &Node, vars: &VarSet) -> String {
    // Fully parenthesized; only used for diagnostics and derived fields.
    match node {
        Node::Num(c) => format!("{}", c),
        Node::Var(i) => vars.name(*i).to_string(),
        Node::Add(a, b) => format!("({} + {})", render(a, vars), render(b, vars)),
        Node::Sub(a, b) => format!("({} - {})", render(a, vars), render(b, vars)),
        Node::Mul(a, b) => format!("({} * {})", render(a, vars), render(b, vars)),
        Node::Div(a, b) => format!("({} / {})", render(a, vars), render(b, vars)),
        Node::Neg(a) => format!("(-{})", render(a, vars)),
        Node::Pow(a, k) => format!("({}^{})", render(a, vars), k),
        Node::Apply(f, a) => format!("{}({})", f.name(), render(a, vars)),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a VarSet,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError {
            offset: self.pos,
            message: msg.into(),
        }
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

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.int_literal()?;
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn int_literal(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let negative = if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.error("expected integer exponent"));
        }
        // A fractional exponent is rejected rather than truncated.
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos = start;
            return Err(self.error("exponent must be an integer (use sqrt for fractional powers)"));
        }
        let text = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
        let mag: i32 = text
            .parse()
            .ok()
            .filter(|m| *m <= 60)
            .ok_or_else(|| ParseError {
                offset: start,
                message: "integer exponent out of range (|exponent| <= 60)".into(),
            })?;
        Ok(if negative { -mag } else { mag })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.error("expected a number, variable, function or '('")),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // optional exponent part: e/E [+-] digits
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let d0 = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == d0 {
                // not an exponent after all; back off (e.g. "2*exp(x)")
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| {
            let mut e = self.error("malformed number");
            e.offset = start;
            e
        })?;
        Ok(Node::Num(value))
    }

    fn ident(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        if self.peek() == Some(b'(') {
            let func = Func::from_name(&name).ok_or_else(|| ParseError {
                offset: start,
                message: format!("unknown function '{}'", name),
            })?;
            self.pos += 1; // consume '('
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.error("expected ')'"));
            }
            self.pos += 1;
            return Ok(Node::Apply(func, Box::new(arg)));
        }
        match self.vars.index_of(&name) {
            Some(i) => Ok(Node::Var(i)),
            None => Err(ParseError {
                offset: start,
                message: format!("undeclared variable '{}'", name),
            }),
        }
    }
}
