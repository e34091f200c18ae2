//! Expression DAGs over named variables.
//!
//! Nodes are reference counted and freely shared. Constructors fold
//! constants and apply the `0`/`1` identities; nothing else is simplified,
//! so correctness of derived expressions is always checked by evaluation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A named variable.
///
/// Matrix entries and real coordinates are indexed as in the mathematical
/// notation: entries from 1, coordinate axes from whatever the flat space
/// uses (`x_0` for Minkowski time, `x_1` otherwise).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Entry { row: usize, col: usize },
    Coord(usize),
    PlanarZ,
    PlanarZbar,
}

impl Var {
    pub fn entry(row: usize, col: usize) -> Var {
        Var::Entry { row, col }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Var::Entry { .. } => "matrix-entry",
            Var::Coord(_) => "real-coordinate",
            Var::PlanarZ => "planar-z",
            Var::PlanarZbar => "planar-zbar",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Entry { row, col } => write!(f, "(var z {row} {col})"),
            Var::Coord(i) => write!(f, "(var x {i})"),
            Var::PlanarZ => write!(f, "(var z)"),
            Var::PlanarZbar => write!(f, "(var zbar)"),
        }
    }
}

#[derive(Debug)]
pub enum Node {
    Const(Complex64),
    Var(Var),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, u32),
}

/// Immutable, shareable expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

fn zero_c() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn constant(c: Complex64) -> Expr {
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn real(x: f64) -> Expr {
        Expr::constant(Complex64::new(x, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    pub fn i() -> Expr {
        Expr::constant(Complex64::new(0.0, 1.0))
    }

    pub fn var(v: Var) -> Expr {
        Expr(Arc::new(Node::Var(v)))
    }

    pub fn entry(row: usize, col: usize) -> Expr {
        Expr::var(Var::entry(row, col))
    }

    pub fn coord(i: usize) -> Expr {
        Expr::var(Var::Coord(i))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(zero_c())
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(Complex64::new(1.0, 0.0))
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            _ if a.is_zero() => b.clone(),
            _ if b.is_zero() => a.clone(),
            _ => Expr(Arc::new(Node::Add(a.clone(), b.clone()))),
        }
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            _ if b.is_zero() => a.clone(),
            _ if a.is_zero() => Expr::neg(b),
            _ => Expr(Arc::new(Node::Sub(a.clone(), b.clone()))),
        }
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            _ if a.is_zero() || b.is_zero() => Expr::zero(),
            _ if a.is_one() => b.clone(),
            _ if b.is_one() => a.clone(),
            (Some(x), _) if x == Complex64::new(-1.0, 0.0) => Expr::neg(b),
            (_, Some(y)) if y == Complex64::new(-1.0, 0.0) => Expr::neg(a),
            (_, Some(_)) => Expr::mul(b, a),
            (Some(x), None) => match b.node() {
                Node::Mul(c, rest) if c.as_const().is_some() => {
                    Expr::mul(&Expr::constant(x * c.as_const().unwrap_or_default()), rest)
                }
                Node::Neg(rest) => Expr::mul(&Expr::constant(-x), rest),
                _ => Expr(Arc::new(Node::Mul(a.clone(), b.clone()))),
            },
            _ => Expr(Arc::new(Node::Mul(a.clone(), b.clone()))),
        }
    }

    pub fn div(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != zero_c() => Expr::constant(x / y),
            _ if a.is_zero() && !b.is_zero() => Expr::zero(),
            _ if b.is_one() => a.clone(),
            _ => Expr(Arc::new(Node::Div(a.clone(), b.clone()))),
        }
    }

    pub fn neg(a: &Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Neg(a.clone()))),
        }
    }

    pub fn pow(base: &Expr, k: u32) -> Expr {
        match (k, base.as_const()) {
            (0, _) => Expr::one(),
            (1, _) => base.clone(),
            (_, Some(c)) => Expr::constant(c.powu(k)),
            _ => match base.node() {
                Node::Pow(inner, j) => Expr::pow(inner, j * k),
                Node::Div(a, b) => Expr::div(&Expr::pow(a, k), &Expr::pow(b, k)),
                _ => Expr(Arc::new(Node::Pow(base.clone(), k))),
            },
        }
    }

    pub fn scale(&self, c: Complex64) -> Expr {
        Expr::mul(&Expr::constant(c), self)
    }

    /// Sum of an iterator of expressions (zero when empty).
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| Expr::add(&acc, &t))
    }

    /// Product of an iterator of expressions (one when empty).
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        factors.into_iter().fold(Expr::one(), |acc, t| Expr::mul(&acc, &t))
    }

    /// Nodes reachable from `self`, children before parents, each once.
    fn postorder(&self) -> Vec<Expr> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut stack: Vec<(Expr, bool)> = vec![(self.clone(), false)];
        while let Some((e, expanded)) = stack.pop() {
            if expanded {
                out.push(e);
                continue;
            }
            if !seen.insert(e.id()) {
                continue;
            }
            stack.push((e.clone(), true));
            for child in e.children().into_iter().rev() {
                if !seen.contains(&child.id()) {
                    stack.push((child.clone(), false));
                }
            }
        }
        out
    }

    fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Const(_) | Node::Var(_) => vec![],
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => vec![a, b],
            Node::Neg(a) | Node::Pow(a, _) => vec![a],
        }
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        self.postorder().len()
    }

    /// All variables occurring in the expression, sorted.
    pub fn variables(&self) -> BTreeSet<Var> {
        self.postorder()
            .iter()
            .filter_map(|e| match e.node() {
                Node::Var(v) => Some(*v),
                _ => None,
            })
            .collect()
    }

    /// Distinct denominators of every `div` node.
    pub fn denominators(&self) -> Vec<Expr> {
        let mut out: Vec<Expr> = Vec::new();
        for e in self.postorder() {
            if let Node::Div(_, d) = e.node() {
                if !out.iter().any(|o| o.ptr_eq(d)) {
                    out.push(d.clone());
                }
            }
        }
        out
    }

    /// Replaces variables according to `map`; unmapped variables stay.
    pub fn substitute(&self, map: &dyn Fn(&Var) -> Option<Expr>) -> Expr {
        let mut memo: HashMap<usize, Expr> = HashMap::new();
        for e in self.postorder() {
            let get = |x: &Expr, memo: &HashMap<usize, Expr>| memo[&x.id()].clone();
            let new = match e.node() {
                Node::Const(_) => e.clone(),
                Node::Var(v) => map(v).unwrap_or_else(|| e.clone()),
                Node::Add(a, b) => Expr::add(&get(a, &memo), &get(b, &memo)),
                Node::Sub(a, b) => Expr::sub(&get(a, &memo), &get(b, &memo)),
                Node::Mul(a, b) => Expr::mul(&get(a, &memo), &get(b, &memo)),
                Node::Div(a, b) => Expr::div(&get(a, &memo), &get(b, &memo)),
                Node::Neg(a) => Expr::neg(&get(a, &memo)),
                Node::Pow(a, k) => Expr::pow(&get(a, &memo), *k),
            };
            memo.insert(e.id(), new);
        }
        memo[&self.id()].clone()
    }

    /// Merges structurally identical subexpressions into shared nodes.
    pub fn hash_cons(&self) -> Expr {
        #[derive(PartialEq, Eq, Hash)]
        enum Key {
            Const(u64, u64),
            Var(Var),
            Bin(u8, usize, usize),
            Neg(usize),
            Pow(usize, u32),
        }
        let mut canon: HashMap<Key, Expr> = HashMap::new();
        let mut memo: HashMap<usize, Expr> = HashMap::new();
        for e in self.postorder() {
            let m = |x: &Expr| memo[&x.id()].clone();
            let (key, rebuilt) = match e.node() {
                Node::Const(c) => (Key::Const(c.re.to_bits(), c.im.to_bits()), e.clone()),
                Node::Var(v) => (Key::Var(*v), e.clone()),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    let (a, b) = (m(a), m(b));
                    let tag = match e.node() {
                        Node::Add(..) => 0,
                        Node::Sub(..) => 1,
                        Node::Mul(..) => 2,
                        _ => 3,
                    };
                    let node = match tag {
                        0 => Node::Add(a.clone(), b.clone()),
                        1 => Node::Sub(a.clone(), b.clone()),
                        2 => Node::Mul(a.clone(), b.clone()),
                        _ => Node::Div(a.clone(), b.clone()),
                    };
                    (Key::Bin(tag, a.id(), b.id()), Expr(Arc::new(node)))
                }
                Node::Neg(a) => {
                    let a = m(a);
                    (Key::Neg(a.id()), Expr(Arc::new(Node::Neg(a))))
                }
                Node::Pow(a, k) => {
                    let a = m(a);
                    (Key::Pow(a.id(), *k), Expr(Arc::new(Node::Pow(a, *k))))
                }
            };
            let shared = canon.entry(key).or_insert(rebuilt).clone();
            memo.insert(e.id(), shared);
        }
        memo[&self.id()].clone()
    }

    /// Compiles the DAG into a straight-line program.
    pub fn compile(&self) -> Tape {
        let order = self.postorder();
        let mut slot: HashMap<usize, usize> = HashMap::with_capacity(order.len());
        let mut vars: Vec<Var> = Vec::new();
        let mut ops = Vec::with_capacity(order.len());
        let mut denominators = HashMap::new();
        for e in &order {
            let s = |x: &Expr| slot[&x.id()];
            let op = match e.node() {
                Node::Const(c) => Op::Const(*c),
                Node::Var(v) => {
                    let idx = match vars.iter().position(|u| u == v) {
                        Some(i) => i,
                        None => {
                            vars.push(*v);
                            vars.len() - 1
                        }
                    };
                    Op::Input(idx)
                }
                Node::Add(a, b) => Op::Add(s(a), s(b)),
                Node::Sub(a, b) => Op::Sub(s(a), s(b)),
                Node::Mul(a, b) => Op::Mul(s(a), s(b)),
                Node::Div(a, b) => {
                    denominators.insert(ops.len(), b.clone());
                    Op::Div(s(a), s(b))
                }
                Node::Neg(a) => Op::Neg(s(a)),
                Node::Pow(a, k) => Op::Pow(s(a), *k),
            };
            slot.insert(e.id(), ops.len());
            ops.push(op);
        }
        Tape {
            ops,
            vars,
            denominators,
        }
    }

    /// Evaluates with an environment lookup.
    pub fn evaluate<S: Scalar>(&self, env: &dyn Fn(&Var) -> Option<S>) -> Result<S> {
        let tape = self.compile();
        let inputs = tape
            .vars
            .iter()
            .map(|v| env(v).ok_or_else(|| Error::UnboundVariable(v.to_string())))
            .collect::<Result<Vec<S>>>()?;
        tape.run(&inputs)
    }

    /// Evaluates with a slice of `(variable, value)` bindings.
    pub fn evaluate_with<S: Scalar>(&self, bindings: &[(Var, S)]) -> Result<S> {
        self.evaluate(&|v: &Var| bindings.iter().find(|(u, _)| u == v).map(|(_, s)| s.clone()))
    }

    /// Renders the prefix form with every shared node expanded.
    pub fn to_prefix(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Expr> {
        Parser { src: text.as_bytes(), pos: 0 }.parse_top()
    }
}

/// Symbolic partial derivative of `e` with respect to `v`.
///
/// Distinct variables are independent, so `z` and `zbar` have zero
/// cross-derivatives.
pub fn partial(e: &Expr, v: &Var) -> Expr {
    let mut memo: HashMap<usize, Expr> = HashMap::new();
    for node in e.postorder() {
        let d = |x: &Expr, memo: &HashMap<usize, Expr>| memo[&x.id()].clone();
        let out = match node.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(u) => {
                if u == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => Expr::add(&d(a, &memo), &d(b, &memo)),
            Node::Sub(a, b) => Expr::sub(&d(a, &memo), &d(b, &memo)),
            Node::Neg(a) => Expr::neg(&d(a, &memo)),
            Node::Mul(a, b) => {
                let (da, db) = (d(a, &memo), d(b, &memo));
                Expr::add(&Expr::mul(&da, b), &Expr::mul(a, &db))
            }
            Node::Div(a, b) => {
                let (da, db) = (d(a, &memo), d(b, &memo));
                if db.is_zero() {
                    Expr::div(&da, b)
                } else if let Node::Pow(c, k) = b.node() {
                    // Keeps denominator exponents growing linearly under repeated
                    // differentiation instead of doubling.
                    let dc = d(c, &memo);
                    let k_a_dc = Expr::mul(&Expr::real(*k as f64), &Expr::mul(a, &dc));
                    let num = Expr::sub(&Expr::mul(&da, c), &k_a_dc);
                    Expr::div(&num, &Expr::pow(c, k + 1))
                } else {
                    let num = Expr::sub(&Expr::mul(&da, b), &Expr::mul(a, &db));
                    Expr::div(&num, &Expr::pow(b, 2))
                }
            }
            Node::Pow(a, k) => {
                let da = d(a, &memo);
                let lowered = Expr::pow(a, k - 1);
                Expr::mul(&Expr::mul(&Expr::real(*k as f64), &lowered), &da)
            }
        };
        memo.insert(node.id(), out);
    }
    memo[&e.id()].clone()
}

/// Rewrites `z = x_1 + i x_2`, `zbar = x_1 - i x_2`.
pub fn planar_to_real(e: &Expr) -> Result<Expr> {
    if let Some(bad) = e
        .variables()
        .into_iter()
        .find(|v| !matches!(v, Var::PlanarZ | Var::PlanarZbar))
    {
        return Err(Error::MixedVariableKinds(format!(
            "expected planar variables only, found {} {bad}",
            bad.kind_name()
        )));
    }
    let x1 = Expr::coord(1);
    let ix2 = Expr::mul(&Expr::i(), &Expr::coord(2));
    let z = Expr::add(&x1, &ix2);
    let zbar = Expr::sub(&x1, &ix2);
    Ok(e.substitute(&|v| match v {
        Var::PlanarZ => Some(z.clone()),
        Var::PlanarZbar => Some(zbar.clone()),
        _ => None,
    }))
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) if c.im == 0.0 => write!(f, "(const {})", fmt_f64(c.re)),
            Node::Const(c) => write!(f, "(const {} {})", fmt_f64(c.re), fmt_f64(c.im)),
            Node::Var(v) => write!(f, "{v}"),
            Node::Add(a, b) => write!(f, "(add {a} {b})"),
            Node::Sub(a, b) => write!(f, "(sub {a} {b})"),
            Node::Mul(a, b) => write!(f, "(mul {a} {b})"),
            Node::Div(a, b) => write!(f, "(div {a} {b})"),
            Node::Neg(a) => write!(f, "(neg {a})"),
            Node::Pow(a, k) => write!(f, "(pow {a} {k})"),
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a Expr> for &'a Expr {
            type Output = Expr;
            fn $method(self, rhs: &'a Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
    };
}

impl_binop!(Add, add, Expr::add);
impl_binop!(Sub, sub, Expr::sub);
impl_binop!(Mul, mul, Expr::mul);
impl_binop!(Div, div, Expr::div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Straight-line evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Op {
    Const(Complex64),
    Input(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Pow(usize, u32),
}

/// A compiled expression: one instruction per distinct DAG node.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    vars: Vec<Var>,
    denominators: HashMap<usize, Expr>,
}

impl Tape {
    /// Variables in input order.
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Runs the program; `inputs[i]` is the value of `vars()[i]`.
    pub fn run<S: Scalar>(&self, inputs: &[S]) -> Result<S> {
        if inputs.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                found: inputs.len(),
            });
        }
        let mut vals: Vec<S> = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(c) => S::from_complex(c),
                Op::Input(k) => inputs[k].clone(),
                Op::Add(a, b) => vals[a].clone() + vals[b].clone(),
                Op::Sub(a, b) => vals[a].clone() - vals[b].clone(),
                Op::Mul(a, b) => vals[a].clone() * vals[b].clone(),
                Op::Neg(a) => -vals[a].clone(),
                Op::Pow(a, k) => vals[a].powu(k),
                Op::Div(a, b) => vals[a].try_div(&vals[b]).map_err(|e| match e {
                    Error::DivisionBySingularJet { .. } | Error::DivisionByZero => {
                        Error::DivisionBySingularJet {
                            denominator: self.denominators.get(&i).map(|d| d.to_string()),
                        }
                    }
                    other => other,
                })?,
            };
            vals.push(v);
        }
        vals.pop().ok_or(Error::DimensionMismatch { expected: 1, found: 0 })
    }
}

// ---------------------------------------------------------------------------
// Prefix parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn atom(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() || c == b'(' || c == b')' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an atom");
        }
        std::str::from_utf8(&self.src[start..self.pos]).or_else(|_| self.err("invalid utf-8"))
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T> {
        let a = self.atom()?.to_string();
        a.parse::<T>().or_else(|_| self.err(format!("invalid number '{a}'")))
    }

    fn parse_top(mut self) -> Result<Expr> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.err("trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        self.expect(b'(')?;
        let head = self.atom()?.to_string();
        let e = match head.as_str() {
            "const" => {
                let re: f64 = self.number()?;
                let im: f64 = if self.peek() == Some(b')') { 0.0 } else { self.number()? };
                Expr::constant(Complex64::new(re, im))
            }
            "var" => {
                let name = self.atom()?.to_string();
                let mut idx = Vec::new();
                while self.peek() != Some(b')') {
                    idx.push(self.number::<usize>()?);
                }
                let v = match (name.as_str(), idx.as_slice()) {
                    ("z", [r, c]) | ("x", [r, c]) | ("w", [r, c]) => Var::entry(*r, *c),
                    ("x", [i]) => Var::Coord(*i),
                    ("z", []) => Var::PlanarZ,
                    ("zbar", []) => Var::PlanarZbar,
                    _ => return self.err(format!("unknown variable '{name}' with {} indices", idx.len())),
                };
                Expr::var(v)
            }
            "add" | "sub" | "mul" | "div" => {
                let a = self.expr()?;
                let b = self.expr()?;
                // Raw nodes so that printing and re-parsing reproduces the text.
                let node = match head.as_str() {
                    "add" => Node::Add(a, b),
                    "sub" => Node::Sub(a, b),
                    "mul" => Node::Mul(a, b),
                    _ => Node::Div(a, b),
                };
                Expr(Arc::new(node))
            }
            "neg" => Expr(Arc::new(Node::Neg(self.expr()?))),
            "pow" => {
                let a = self.expr()?;
                let k: u32 = self.number()?;
                Expr(Arc::new(Node::Pow(a, k)))
            }
            other => return self.err(format!("unknown operator '{other}'")),
        };
        self.expect(b')')?;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ExactComplex, Jet2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z(r: usize, k: usize) -> Expr {
        Expr::entry(r, k)
    }

    fn eval_c(e: &Expr, b: &[(Var, Complex64)]) -> Complex64 {
        e.evaluate_with(b).unwrap()
    }

    #[test]
    fn partial_of_2x2_determinant() {
        let d = &(&z(1, 1) * &z(2, 2)) - &(&z(1, 2) * &z(2, 1));
        let got = partial(&d, &Var::entry(1, 1));
        assert_eq!(got.to_string(), "(var z 2 2)");
    }

    #[test]
    fn partial_of_planar_quotient_in_zbar() {
        let f = Expr::var(Var::PlanarZ) / Expr::var(Var::PlanarZbar);
        let d = partial(&f, &Var::PlanarZbar);
        for zv in [c(1.0, 1.0), c(-0.5, 2.0), c(3.0, -0.25)] {
            let b = [(Var::PlanarZ, zv), (Var::PlanarZbar, zv.conj())];
            let expected = -zv / (zv.conj() * zv.conj());
            assert!((eval_c(&d, &b) - expected).norm() < 1e-14);
        }
        // z and zbar are independent: d/dz (zbar) = 0
        assert!(partial(&Expr::var(Var::PlanarZbar), &Var::PlanarZ).is_zero());
    }

    #[test]
    fn partial_of_sum_of_squares() {
        let e = Expr::pow(&Expr::coord(1), 2) + Expr::pow(&Expr::coord(2), 2);
        let d = partial(&e, &Var::Coord(1));
        assert_eq!(d.to_string(), "(mul (const 2.0) (var x 1))");
    }

    #[test]
    fn evaluate_examples() {
        let f1 = Expr::var(Var::PlanarZ) / Expr::var(Var::PlanarZbar);
        let b = [(Var::PlanarZ, c(1.0, 1.0)), (Var::PlanarZbar, c(1.0, -1.0))];
        assert!((eval_c(&f1, &b) - c(0.0, 1.0)).norm() < 1e-15);

        let ident = |v: &Var| match v {
            Var::Entry { row, col } => Some(if row == col { c(1.0, 0.0) } else { c(0.0, 0.0) }),
            _ => None,
        };
        let d2 = &(&z(1, 1) * &z(2, 2)) - &(&z(1, 2) * &z(2, 1));
        assert_eq!(d2.evaluate(&ident).unwrap(), c(1.0, 0.0));
        let q = z(1, 1) / z(2, 2);
        assert_eq!(q.evaluate(&ident).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn unbound_variable_is_reported() {
        let e = z(1, 1) + z(3, 3);
        let err = e
            .evaluate_with::<Complex64>(&[(Var::entry(1, 1), c(1.0, 0.0))])
            .unwrap_err();
        assert_eq!(err, Error::UnboundVariable("(var z 3 3)".into()));
    }

    #[test]
    fn singular_denominator_is_named() {
        let e = z(1, 1) / z(2, 2);
        let err = e
            .evaluate_with::<Complex64>(&[(Var::entry(1, 1), c(1.0, 0.0)), (Var::entry(2, 2), c(0.0, 0.0))])
            .unwrap_err();
        assert_eq!(
            err,
            Error::DivisionBySingularJet {
                denominator: Some("(var z 2 2)".into())
            }
        );
    }

    #[test]
    fn planar_to_real_examples() {
        let zr = planar_to_real(&Expr::var(Var::PlanarZ)).unwrap();
        assert_eq!(zr.to_string(), "(add (var x 1) (mul (const 0.0 1.0) (var x 2)))");

        let zz = planar_to_real(&(Expr::var(Var::PlanarZ) * Expr::var(Var::PlanarZbar))).unwrap();
        for (x1, x2) in [(1.0, 2.0), (-0.5, 0.25)] {
            let b = [(Var::Coord(1), c(x1, 0.0)), (Var::Coord(2), c(x2, 0.0))];
            assert!((eval_c(&zz, &b) - c(x1 * x1 + x2 * x2, 0.0)).norm() < 1e-14);
        }

        let f1 = planar_to_real(&(Expr::var(Var::PlanarZ) / Expr::var(Var::PlanarZbar))).unwrap();
        let exact = f1
            .evaluate_with(&[
                (Var::Coord(1), ExactComplex::from_integers(1, 0)),
                (Var::Coord(2), ExactComplex::from_integers(1, 0)),
            ])
            .unwrap();
        assert_eq!(exact, ExactComplex::i());
    }

    #[test]
    fn planar_to_real_rejects_mixed() {
        let e = Expr::var(Var::PlanarZ) + z(1, 1);
        assert!(matches!(planar_to_real(&e), Err(Error::MixedVariableKinds(_))));
    }

    #[test]
    fn folding_rules() {
        let x = z(1, 1);
        assert!((&x * &Expr::zero()).is_zero());
        assert!((&x * &Expr::one()).ptr_eq(&x));
        assert!((&x + &Expr::zero()).ptr_eq(&x));
        assert!(Expr::neg(&Expr::neg(&x)).ptr_eq(&x));
        assert!(Expr::pow(&x, 1).ptr_eq(&x));
        assert!(Expr::pow(&x, 0).is_one());
        assert_eq!((Expr::real(2.0) * Expr::real(3.0)).as_const(), Some(c(6.0, 0.0)));
    }

    #[test]
    fn prefix_round_trip() {
        let text = "(div (var z 1 1) (var z 2 2))";
        let e = Expr::parse(text).unwrap();
        assert_eq!(e.to_string(), text);

        let e = Expr::parse("(sub (pow (var x 1) 3) (mul (const 0.5 -1.0) (var zbar)))").unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        assert_eq!(again.to_string(), e.to_string());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Expr::parse("(div (var z 1 1)"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(frob (var z 1 1))"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(var q 1 2 3)"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(const 1.0) x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn jet_evaluation_carries_directional_derivative() {
        // f = z11^2 z22 / (1 + z12); seed z11 with direction 1.
        let f = Expr::pow(&z(1, 1), 2) * z(2, 2) / (Expr::one() + z(1, 2));
        let p = [c(0.3, 0.1), c(-0.7, 0.4), c(1.1, -0.2)];
        let vars = [Var::entry(1, 1), Var::entry(2, 2), Var::entry(1, 2)];
        let jet_env: Vec<(Var, Jet2)> = vars
            .iter()
            .zip(p)
            .map(|(v, x)| {
                let a1 = if *v == Var::entry(1, 1) { c(1.0, 0.0) } else { c(0.0, 0.0) };
                (*v, Jet2::new(x, a1, c(0.0, 0.0)))
            })
            .collect();
        let jet = f.evaluate_with(&jet_env).unwrap();
        let env: Vec<(Var, Complex64)> = vars.iter().copied().zip(p).collect();
        let d = eval_c(&partial(&f, &Var::entry(1, 1)), &env);
        assert!((jet.a1 - d).norm() <= 1e-12 * d.norm().max(1.0));
    }

    #[test]
    fn denominators_are_collected_once() {
        let q = z(2, 2);
        let e = (&z(1, 1) / &q) + (&z(1, 2) / &q);
        assert_eq!(e.denominators().len(), 1);
        assert_eq!(e.variables().len(), 3);
    }
}
