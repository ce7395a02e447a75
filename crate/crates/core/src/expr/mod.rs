//! Scalar expressions over a named coordinate chart.
//!
//! Expressions are parsed from a small arithmetic grammar (`+ - * / ^`,
//! unary minus, `sin cos tan exp log sqrt atan2`) and evaluated in forward
//! mode: plain values, first-order duals, or second-order jets carrying
//! value, gradient, and Hessian. There is no symbolic differentiation;
//! every derivative used elsewhere in the crate comes out of these jets.

mod jet;
mod parse;

pub use jet::Jet2;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Built-in scalar functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Atan2,
}

impl Func {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan2 => "atan2",
        }
    }

    pub(crate) fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }
}

/// Expression tree. Exponents are constant-folded at parse time, so `Pow`
/// carries a plain number rather than a subtree.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Ast {
    Lit(f64),
    Coord(usize),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, f64),
    Call(Func, Vec<Ast>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("`{name}` takes {expected} argument(s), got {got} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        offset: usize,
    },
    #[error("exponent at byte {offset} must fold to a finite constant")]
    NonConstantExponent { offset: usize },
    #[error("malformed number at byte {offset}")]
    Number { offset: usize },
}

impl ParseError {
    /// Byte offset into the source where the error was detected.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::NonConstantExponent { offset }
            | ParseError::Number { offset } => *offset,
        }
    }
}

/// Domain failures during evaluation. Each carries the offending
/// subexpression rendered back to source form.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("point has {got} coordinates, expression expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("log of non-positive value in `{subexpr}`")]
    LogDomain { subexpr: String },
    #[error("sqrt domain violation in `{subexpr}` (argument must be positive for differentiation)")]
    SqrtDomain { subexpr: String },
    #[error("power domain violation in `{subexpr}` (non-integer exponent needs a positive base)")]
    PowDomain { subexpr: String },
    #[error("atan2 undefined at the origin in `{subexpr}`")]
    Atan2Origin { subexpr: String },
    #[error("non-finite value produced by `{subexpr}`")]
    NonFinite { subexpr: String },
}

/// True when `name` collides with a builtin function.
pub fn reserved_function(name: &str) -> bool {
    Func::from_name(name).is_some()
}

/// A parsed scalar expression bound to an ordered coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub(crate) ast: Ast,
    pub(crate) coords: Arc<[String]>,
}

impl Expression {
    /// Parse `source` over the given coordinate names.
    ///
    /// Grammar: `+ -` < `* /` < unary `-` < `^` (right-associative), with
    /// parentheses and function calls. `^` requires a constant exponent.
    pub fn parse<S: AsRef<str>>(source: &str, coords: &[S]) -> Result<Expression, ParseError> {
        let coords: Arc<[String]> = coords.iter().map(|c| c.as_ref().to_owned()).collect();
        let ast = parse::parse(source, &coords)?;
        Ok(Expression { ast, coords })
    }

    /// The expression `coords[index]`.
    pub fn coordinate<S: AsRef<str>>(coords: &[S], index: usize) -> Expression {
        assert!(index < coords.len(), "coordinate index out of range");
        Expression {
            ast: Ast::Coord(index),
            coords: coords.iter().map(|c| c.as_ref().to_owned()).collect(),
        }
    }

    /// A constant expression. `value` must be finite.
    pub fn constant<S: AsRef<str>>(coords: &[S], value: f64) -> Expression {
        assert!(value.is_finite(), "constant must be finite");
        let ast = if value < 0.0 {
            Ast::Neg(Box::new(Ast::Lit(-value)))
        } else {
            Ast::Lit(value)
        };
        Expression {
            ast,
            coords: coords.iter().map(|c| c.as_ref().to_owned()).collect(),
        }
    }

    /// `-self`.
    pub fn negated(&self) -> Expression {
        Expression {
            ast: Ast::Neg(Box::new(self.ast.clone())),
            coords: Arc::clone(&self.coords),
        }
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Longest root-to-leaf node count. Constant exponents are not nodes.
    pub fn depth(&self) -> usize {
        fn d(a: &Ast) -> usize {
            match a {
                Ast::Lit(_) | Ast::Coord(_) => 1,
                Ast::Neg(x) | Ast::Pow(x, _) => 1 + d(x),
                Ast::Add(l, r) | Ast::Sub(l, r) | Ast::Mul(l, r) | Ast::Div(l, r) => {
                    1 + d(l).max(d(r))
                }
                Ast::Call(_, args) => 1 + args.iter().map(d).max().unwrap_or(0),
            }
        }
        d(&self.ast)
    }

    /// Value at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.check_dim(point)?;
        jet::eval_value(&self.ast, &self.coords, point)
    }

    /// Value together with the directional derivative along `seed`.
    pub fn eval_dual(&self, point: &[f64], seed: &[f64]) -> Result<(f64, f64), EvalError> {
        self.check_dim(point)?;
        self.check_dim(seed)?;
        jet::eval_dual(&self.ast, &self.coords, point, seed)
    }

    /// Second-order jet (value, gradient, Hessian) at `point`.
    pub fn jet(&self, point: &[f64]) -> Result<Jet2, EvalError> {
        self.check_dim(point)?;
        jet::eval_jet(&self.ast, &self.coords, point)
    }

    /// Gradient at `point`, one dual pass per coordinate.
    pub fn gradient(&self, point: &[f64]) -> Result<nalgebra::DVector<f64>, EvalError> {
        self.check_dim(point)?;
        let d = self.dim();
        let mut g = nalgebra::DVector::zeros(d);
        let mut seed = vec![0.0; d];
        for i in 0..d {
            seed[i] = 1.0;
            g[i] = jet::eval_dual(&self.ast, &self.coords, point, &seed)?.1;
            seed[i] = 0.0;
        }
        Ok(g)
    }

    fn check_dim(&self, point: &[f64]) -> Result<(), EvalError> {
        if point.len() != self.coords.len() {
            return Err(EvalError::Dimension {
                expected: self.coords.len(),
                got: point.len(),
            });
        }
        Ok(())
    }
}

// Canonical printer. Binds parenthesization to the parser's precedence so
// that printing and re-parsing reproduces the tree exactly.
pub(crate) fn render(ast: &Ast, coords: &[String]) -> String {
    let mut out = String::new();
    print_prec(ast, coords, 1, &mut out);
    out
}

fn level(ast: &Ast) -> u8 {
    match ast {
        Ast::Add(..) | Ast::Sub(..) => 1,
        Ast::Mul(..) | Ast::Div(..) => 2,
        Ast::Neg(_) => 3,
        Ast::Pow(..) => 4,
        Ast::Lit(_) | Ast::Coord(_) | Ast::Call(..) => 5,
    }
}

fn print_prec(ast: &Ast, coords: &[String], min: u8, out: &mut String) {
    let wrap = level(ast) < min;
    if wrap {
        out.push('(');
    }
    match ast {
        Ast::Lit(v) => out.push_str(&format!("{v}")),
        Ast::Coord(i) => out.push_str(&coords[*i]),
        Ast::Neg(x) => {
            out.push('-');
            print_prec(x, coords, 3, out);
        }
        Ast::Add(l, r) => {
            print_prec(l, coords, 1, out);
            out.push_str(" + ");
            print_prec(r, coords, 2, out);
        }
        Ast::Sub(l, r) => {
            print_prec(l, coords, 1, out);
            out.push_str(" - ");
            print_prec(r, coords, 2, out);
        }
        Ast::Mul(l, r) => {
            print_prec(l, coords, 2, out);
            out.push('*');
            print_prec(r, coords, 3, out);
        }
        Ast::Div(l, r) => {
            print_prec(l, coords, 2, out);
            out.push('/');
            print_prec(r, coords, 3, out);
        }
        Ast::Pow(base, e) => {
            print_prec(base, coords, 5, out);
            out.push('^');
            out.push_str(&format!("{e}"));
        }
        Ast::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_prec(a, coords, 1, out);
            }
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.ast, &self.coords))
    }
}
