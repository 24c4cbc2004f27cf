//! Expression trees over named parameters and their guarded evaluation.

use std::fmt;

use thiserror::Error;

use crate::jet::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
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
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Index into the parameter list.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {0}")]
pub struct DomainError(pub String);

impl Expr {
    /// Evaluate at `vars`. Overflow to a non-finite value or derivative is a
    /// domain error.
    pub fn eval<T: Real>(&self, vars: &[T]) -> Result<T, DomainError> {
        let v = self.eval_node(vars)?;
        if v.is_finite() { Ok(v) } else { Err(DomainError("value or derivative is not finite".into())) }
    }

    fn eval_node<T: Real>(&self, vars: &[T]) -> Result<T, DomainError> {
        Ok(match self {
            Expr::Const(c) => T::from_f64(*c),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Neg(e) => -e.eval(vars)?,
            Expr::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Expr::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Expr::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Expr::Div(a, b) => {
                let d = b.eval(vars)?;
                if d.value_f64() == 0.0 {
                    return Err(DomainError("division by zero".into()));
                }
                a.eval(vars)? / d
            }
            Expr::Pow(e, k) => {
                let x = e.eval(vars)?;
                if *k < 0 && x.value_f64() == 0.0 {
                    return Err(DomainError("negative power of zero".into()));
                }
                x.powi(*k)
            }
            Expr::Call(f, e) => {
                let x = e.eval(vars)?;
                let v = x.value_f64();
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log if v <= 0.0 => return Err(DomainError(format!("log of nonpositive value {v}"))),
                    Func::Log => x.ln(),
                    Func::Sqrt if v < 0.0 => return Err(DomainError(format!("sqrt of negative value {v}"))),
                    // the derivative of sqrt is unbounded at zero
                    Func::Sqrt if v == 0.0 && !is_plain::<T>() => {
                        return Err(DomainError("sqrt is not differentiable at zero".into()))
                    }
                    Func::Sqrt => x.sqrt(),
                }
            }
        })
    }

    /// Whether any variable with index `i` occurs.
    pub fn uses_var(&self, i: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(j) => *j == i,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.uses_var(i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.uses_var(i) || b.uses_var(i),
        }
    }

    /// Text form with explicit parentheses, using `names` for variables.
    pub fn render(&self, names: &[String]) -> String {
        struct R<'a>(&'a Expr, &'a [String]);
        impl fmt::Display for R<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let names = self.1;
                match self.0 {
                    Expr::Const(c) => write!(f, "{c:?}"),
                    Expr::Var(i) => write!(f, "{}", names[*i]),
                    Expr::Neg(e) => write!(f, "(-{})", R(e, names)),
                    Expr::Add(a, b) => write!(f, "({} + {})", R(a, names), R(b, names)),
                    Expr::Sub(a, b) => write!(f, "({} - {})", R(a, names), R(b, names)),
                    Expr::Mul(a, b) => write!(f, "({} * {})", R(a, names), R(b, names)),
                    Expr::Div(a, b) => write!(f, "({} / {})", R(a, names), R(b, names)),
                    Expr::Pow(e, k) => write!(f, "({}^{k})", R(e, names)),
                    Expr::Call(func, e) => write!(f, "{}({})", func.name(), R(e, names)),
                }
            }
        }
        R(self, names).to_string()
    }
}

fn is_plain<T: 'static>() -> bool {
    std::any::TypeId::of::<T>() == std::any::TypeId::of::<f64>()
}
