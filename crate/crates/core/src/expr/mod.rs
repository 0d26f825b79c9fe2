//! Scalar expressions in named variables, with exact first and second
//! partial derivatives by forward-mode automatic differentiation.

mod dual;
mod parse;

use std::fmt;
use std::sync::Arc;

pub use dual::{Dual, Scalar};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "neg" => UnaryOp::Neg,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "atan" => UnaryOp::Atan,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Atan => "atan",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

/// An immutable expression tree over an ordered list of variable names.
///
/// Cloning is cheap; the tree and variable list are shared.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Arc<Node>,
    vars: Arc<[String]>,
}

/// Value, gradient and Hessian of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
}

impl Expression {
    pub fn parse(text: &str, vars: &[impl AsRef<str>]) -> Result<Self> {
        Self::parse_with_constants(text, vars, &[])
    }

    /// Parses with extra named constants that are folded in at parse time.
    pub fn parse_with_constants(
        text: &str,
        vars: &[impl AsRef<str>],
        constants: &[(String, f64)],
    ) -> Result<Self> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let root = parse::Parser::parse(text, &vars, constants)?;
        Ok(Expression {
            root: Arc::new(root),
            vars: vars.into(),
        })
    }

    pub fn constant(value: f64, vars: &[impl AsRef<str>]) -> Self {
        Expression {
            root: Arc::new(Node::Const(value)),
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    fn with_root(&self, root: Node) -> Self {
        Expression {
            root: Arc::new(root),
            vars: Arc::clone(&self.vars),
        }
    }

    fn check_same_vars(&self, other: &Expression) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::Invalid(format!(
                "variable lists differ: {:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        Ok(())
    }

    /// `f(self)` for a unary function.
    pub fn apply(&self, op: UnaryOp) -> Self {
        self.with_root(Node::Unary(op, Box::new((*self.root).clone())))
    }

    pub fn combine(&self, op: BinaryOp, other: &Expression) -> Result<Self> {
        self.check_same_vars(other)?;
        Ok(self.with_root(Node::Binary(
            op,
            Box::new((*self.root).clone()),
            Box::new((*other.root).clone()),
        )))
    }

    /// `Σ w_m · e_m`, all terms over the same variable list.
    pub fn linear_combination(terms: &[(f64, &Expression)]) -> Result<Self> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::Invalid("empty linear combination".into()))?;
        let scaled = |w: f64, e: &Expression| {
            Node::Binary(
                BinaryOp::Mul,
                Box::new(Node::Const(w)),
                Box::new((*e.root).clone()),
            )
        };
        let mut node = scaled(first.0, first.1);
        for (w, e) in rest {
            first.1.check_same_vars(e)?;
            node = Node::Binary(BinaryOp::Add, Box::new(node), Box::new(scaled(*w, e)));
        }
        Ok(first.1.with_root(node))
    }

    /// `self + c`.
    pub fn shifted(&self, c: f64) -> Self {
        self.with_root(Node::Binary(
            BinaryOp::Add,
            Box::new((*self.root).clone()),
            Box::new(Node::Const(c)),
        ))
    }

    fn check_point<T: Scalar>(&self, p: &[T]) -> Result<()> {
        if p.len() != self.vars.len() {
            return Err(Error::Dimension {
                expected: self.vars.len(),
                got: p.len(),
            });
        }
        if let Some(i) = p.iter().position(|x| !x.all_finite()) {
            return Err(Error::domain(
                "input",
                format!("coordinate {} is not finite", self.vars[i]),
            ));
        }
        Ok(())
    }

    /// Evaluates over any [`Scalar`] type; domain violations abort.
    pub fn eval_generic<T: Scalar>(&self, p: &[T]) -> Result<T> {
        self.check_point(p)?;
        eval_node(&self.root, p)
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.eval_generic(p)
    }

    /// Exact ∂e/∂x_i at `p`.
    pub fn partial(&self, i: usize, p: &[f64]) -> Result<f64> {
        self.index_check(i)?;
        let seeded: Vec<Dual<f64>> = p
            .iter()
            .enumerate()
            .map(|(m, &x)| if m == i { Dual::variable(x) } else { Dual::constant(x) })
            .collect();
        Ok(self.eval_generic(&seeded)?.eps)
    }

    pub fn gradient(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_point(p)?;
        let mut grad = Vec::with_capacity(p.len());
        let mut value = 0.0;
        for i in 0..p.len() {
            let seeded: Vec<Dual<f64>> = p
                .iter()
                .enumerate()
                .map(|(m, &x)| if m == i { Dual::variable(x) } else { Dual::constant(x) })
                .collect();
            let d = eval_node(&self.root, &seeded)?;
            value = d.re;
            grad.push(d.eps);
        }
        if p.is_empty() {
            value = self.eval(p)?;
        }
        Ok((value, grad))
    }

    /// Exact ∂²e/∂x_i∂x_k at `p`; symmetric in `(i, k)` by construction.
    pub fn mixed_partial(&self, i: usize, k: usize, p: &[f64]) -> Result<f64> {
        self.index_check(i)?;
        self.index_check(k)?;
        let (lo, hi) = if i <= k { (i, k) } else { (k, i) };
        Ok(self.nested(lo, hi, p)?.eps.eps)
    }

    fn nested(&self, inner: usize, outer: usize, p: &[f64]) -> Result<Dual<Dual<f64>>> {
        let seeded: Vec<Dual<Dual<f64>>> = p
            .iter()
            .enumerate()
            .map(|(m, &x)| {
                let a = if m == inner { 1.0 } else { 0.0 };
                let b = if m == outer { 1.0 } else { 0.0 };
                Dual::new(Dual::new(x, a), Dual::new(b, 0.0))
            })
            .collect();
        self.eval_generic(&seeded)
    }

    /// Value, gradient and Hessian in `n(n+1)/2` nested-dual passes.
    pub fn jet(&self, p: &[f64]) -> Result<Jet> {
        self.check_point(p)?;
        let n = p.len();
        let mut gradient = vec![0.0; n];
        let mut hessian = vec![vec![0.0; n]; n];
        let mut value = if n == 0 { self.eval(p)? } else { 0.0 };
        for k in 0..n {
            for i in 0..=k {
                let d = self.nested(i, k, p)?;
                value = d.re.re;
                if i == k {
                    gradient[i] = d.re.eps;
                }
                hessian[i][k] = d.eps.eps;
                hessian[k][i] = d.eps.eps;
            }
        }
        Ok(Jet {
            value,
            gradient,
            hessian,
        })
    }

    fn index_check(&self, i: usize) -> Result<()> {
        if i >= self.vars.len() {
            return Err(Error::Invalid(format!(
                "variable index {i} out of range for {} variables",
                self.vars.len()
            )));
        }
        Ok(())
    }
}

fn finite<T: Scalar>(op: &'static str, v: T) -> Result<T> {
    if v.all_finite() {
        Ok(v)
    } else {
        Err(Error::domain(op, "non-finite result"))
    }
}

fn eval_node<T: Scalar>(node: &Node, p: &[T]) -> Result<T> {
    match node {
        Node::Const(c) => Ok(T::from_f64(*c)),
        Node::Var(i) => Ok(p[*i]),
        Node::Unary(op, arg) => {
            let x = eval_node(arg, p)?;
            let v = x.value();
            let out = match op {
                UnaryOp::Neg => -x,
                UnaryOp::Sin => x.sin(),
                UnaryOp::Cos => x.cos(),
                UnaryOp::Tan => x.tan(),
                UnaryOp::Atan => x.atan(),
                UnaryOp::Exp => x.exp(),
                UnaryOp::Log => {
                    if v <= 0.0 {
                        return Err(Error::domain("log", format!("argument {v} is not positive")));
                    }
                    x.ln()
                }
                UnaryOp::Sqrt => {
                    if v < 0.0 {
                        return Err(Error::domain("sqrt", format!("argument {v} is negative")));
                    }
                    x.sqrt()
                }
            };
            finite(op.name(), out)
        }
        Node::Binary(op, l, r) => {
            let a = eval_node(l, p)?;
            let b = eval_node(r, p)?;
            let out = match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b.value() == 0.0 {
                        return Err(Error::domain("division", "division by zero"));
                    }
                    a / b
                }
            };
            finite("arithmetic", out)
        }
        Node::Pow(base, n) => {
            let x = eval_node(base, p)?;
            if *n < 0 && x.value() == 0.0 {
                return Err(Error::domain("pow", "zero raised to a negative power"));
            }
            finite("pow", x.powi(*n))
        }
    }
}

fn write_node(node: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(c) => {
            if c.is_sign_negative() {
                write!(f, "neg({:?})", -c)
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Var(i) => f.write_str(&vars[*i]),
        Node::Unary(op, arg) => {
            write!(f, "{}(", op.name())?;
            write_node(arg, vars, f)?;
            f.write_str(")")
        }
        Node::Binary(op, l, r) => {
            f.write_str("(")?;
            write_node(l, vars, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(r, vars, f)?;
            f.write_str(")")
        }
        Node::Pow(base, n) => {
            f.write_str("((")?;
            write_node(base, vars, f)?;
            write!(f, ")^{n})")
        }
    }
}

/// Fully parenthesised form that reparses to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.vars, f)
    }
}
