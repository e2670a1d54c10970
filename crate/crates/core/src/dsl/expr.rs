//! Expression trees for Lagrangians and equations of motion.
//!
//! The tree mirrors the surface syntax one-to-one: parentheses are
//! transparent, operator chains at the same precedence level are flattened,
//! and subtraction is represented as an added [`Expr::Neg`] term. This keeps
//! `parse(print(tree)) == tree` for every tree the parser produces.

use std::fmt;

use num_complex::Complex64;

use super::DslError;

/// Independent variable a derivative is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    T,
    X,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "t",
            Axis::X => "x",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Non-negative literal. Negative values are written as `Neg(Num)`.
    Num(f64),
    Sym(String),
    /// `d(of, wrt)` or `d2(of, wrt)`.
    Deriv { of: String, wrt: Axis, order: u8 },
    /// Opaque function application such as `V(x)`.
    Call { func: String, arg: String },
    Neg(Box<Expr>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

/// Name of the dynamical position variable of particle Lagrangians, also used
/// as the spatial coordinate of field Lagrangians.
pub const POSITION: &str = "x";
/// Name of the dynamical field variable.
pub const FIELD: &str = "psi";
/// Imaginary unit.
pub const IMAG: &str = "i";
pub const PI: &str = "pi";

impl Expr {
    pub fn num(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Sym(name.to_string())
    }

    pub fn deriv(of: &str, wrt: Axis, order: u8) -> Expr {
        Expr::Deriv {
            of: of.to_string(),
            wrt,
            order,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Visit every leaf of the tree.
    pub fn for_each_leaf<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Expr::Num(_) | Expr::Sym(_) | Expr::Deriv { .. } | Expr::Call { .. } => f(self),
            Expr::Neg(e) | Expr::Pow(e, _) => e.for_each_leaf(f),
            Expr::Add(v) | Expr::Mul(v) => v.iter().for_each(|e| e.for_each_leaf(f)),
            Expr::Div(a, b) => {
                a.for_each_leaf(f);
                b.for_each_leaf(f);
            }
        }
    }

    /// Numeric evaluation directly on the tree. `leaf` supplies values for
    /// symbols, derivatives and calls; `i` and `pi` are built in.
    pub fn eval(
        &self,
        leaf: &dyn Fn(&Expr) -> Option<Complex64>,
    ) -> Result<Complex64, DslError> {
        Ok(match self {
            Expr::Num(v) => Complex64::new(*v, 0.0),
            Expr::Sym(s) if s == IMAG => Complex64::new(0.0, 1.0),
            Expr::Sym(s) if s == PI => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::Sym(_) | Expr::Deriv { .. } | Expr::Call { .. } => {
                leaf(self).ok_or_else(|| DslError::Unbound(self.to_string()))?
            }
            Expr::Neg(e) => -e.eval(leaf)?,
            Expr::Add(v) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in v {
                    acc += e.eval(leaf)?;
                }
                acc
            }
            Expr::Mul(v) => {
                let mut acc = Complex64::new(1.0, 0.0);
                for e in v {
                    acc *= e.eval(leaf)?;
                }
                acc
            }
            Expr::Div(a, b) => a.eval(leaf)? / b.eval(leaf)?,
            Expr::Pow(b, n) => b.eval(leaf)?.powi(*n),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(_) => 1,
            Expr::Mul(_) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v < 0.0 {
        write!(f, "(-{})", -v)
    } else {
        write!(f, "{v}")
    }
}

fn write_paren(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write_num(f, *v),
            Expr::Sym(s) => f.write_str(s),
            Expr::Deriv { of, wrt, order } => {
                let op = if *order == 2 { "d2" } else { "d" };
                write!(f, "{op}({of},{})", wrt.name())
            }
            Expr::Call { func, arg } => write!(f, "{func}({arg})"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_paren(f, e, e.precedence() < 3)
            }
            Expr::Add(terms) => {
                for (n, t) in terms.iter().enumerate() {
                    match t {
                        Expr::Neg(inner) if n > 0 => {
                            f.write_str(" - ")?;
                            write_paren(f, inner, inner.precedence() < 2)?;
                        }
                        _ => {
                            if n > 0 {
                                f.write_str(" + ")?;
                            }
                            write_paren(f, t, t.precedence() < 2)?;
                        }
                    }
                }
                Ok(())
            }
            Expr::Mul(factors) => {
                for (n, t) in factors.iter().enumerate() {
                    if n > 0 {
                        f.write_str("*")?;
                    }
                    let paren = matches!(t, Expr::Mul(_) | Expr::Div(..)) || t.precedence() < 2;
                    write_paren(f, t, paren)?;
                }
                Ok(())
            }
            Expr::Div(a, b) => {
                write_paren(f, a, a.precedence() < 2)?;
                f.write_str("/")?;
                write_paren(f, b, b.precedence() <= 2)
            }
            Expr::Pow(b, n) => {
                write_paren(f, b, b.precedence() < 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_uses_minimal_parentheses() {
        let e = Expr::Add(vec![
            Expr::Mul(vec![
                Expr::Div(Box::new(Expr::Num(1.0)), Box::new(Expr::Num(2.0))),
                Expr::sym("m"),
                Expr::Pow(Box::new(Expr::deriv("x", Axis::T, 1)), 2),
            ]),
            Expr::Neg(Box::new(Expr::Call {
                func: "V".into(),
                arg: "x".into(),
            })),
        ]);
        assert_eq!(e.to_string(), "(1/2)*m*d(x,t)^2 - V(x)");
    }

    #[test]
    fn eval_handles_builtins() {
        let e = Expr::Mul(vec![Expr::sym(IMAG), Expr::sym(IMAG)]);
        let v = e.eval(&|_| None).unwrap();
        assert_eq!(v, Complex64::new(-1.0, 0.0));
        assert!(Expr::sym("m").eval(&|_| None).is_err());
    }
}
