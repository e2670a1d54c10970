//! Sum-of-products normal form.
//!
//! A [`Poly`] is a map from monomials (sorted atom → integer exponent maps)
//! to non-zero real coefficients. The imaginary unit is an atom whose
//! exponent is reduced to 0 or 1. Two expressions are considered
//! symbolically equal when their normal forms are equal.

use std::collections::BTreeMap;
use std::fmt;

use super::expr::{Axis, Expr, IMAG};
use super::DslError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Sym(String),
    Deriv { of: String, wrt: Axis, order: u8 },
    Call { func: String, arg: String },
    Imag,
}

impl Atom {
    pub fn sym(name: &str) -> Atom {
        Atom::Sym(name.to_string())
    }

    pub fn deriv(of: &str, wrt: Axis, order: u8) -> Atom {
        Atom::Deriv {
            of: of.to_string(),
            wrt,
            order,
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Atom::Sym(s) => Expr::Sym(s.clone()),
            Atom::Deriv { of, wrt, order } => Expr::Deriv {
                of: of.clone(),
                wrt: *wrt,
                order: *order,
            },
            Atom::Call { func, arg } => Expr::Call {
                func: func.clone(),
                arg: arg.clone(),
            },
            Atom::Imag => Expr::Sym(IMAG.to_string()),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(BTreeMap<Atom, i32>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn atom(a: Atom) -> Monomial {
        Monomial([(a, 1)].into_iter().collect())
    }

    pub fn exponent(&self, a: &Atom) -> i32 {
        self.0.get(a).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (&Atom, i32)> {
        self.0.iter().map(|(a, e)| (a, *e))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Monomial with `a` removed.
    pub fn without(&self, a: &Atom) -> Monomial {
        let mut m = self.clone();
        m.0.remove(a);
        m
    }

    /// Multiplies two monomials; returns the sign picked up from `i*i`.
    fn mul(&self, other: &Monomial) -> (Monomial, f64) {
        let mut out = self.0.clone();
        for (a, e) in &other.0 {
            *out.entry(a.clone()).or_insert(0) += e;
        }
        out.retain(|_, e| *e != 0);
        let mut sign = 1.0;
        if let Some(e) = out.get(&Atom::Imag).copied() {
            let r = e.rem_euclid(4);
            // i^r with r in 0..4 -> {1, i, -1, -i}
            sign = if r >= 2 { -1.0 } else { 1.0 };
            if r % 2 == 1 {
                out.insert(Atom::Imag, 1);
            } else {
                out.remove(&Atom::Imag);
            }
        }
        (Monomial(out), sign)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: f64) -> Poly {
        Poly::term(Monomial::one(), c)
    }

    pub fn atom(a: Atom) -> Poly {
        Poly::term(Monomial::atom(a), 1.0)
    }

    pub fn term(m: Monomial, c: f64) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let (m, sign) = m1.mul(m2);
                out.add_term(m, c1 * c2 * sign);
            }
        }
        out
    }

    /// Multiplicative inverse; defined only for a single monomial.
    pub fn recip(&self) -> Result<Poly, DslError> {
        if self.terms.len() != 1 {
            return Err(DslError::Unsupported(format!(
                "division by `{self}`, which is not a single product"
            )));
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let inv = Monomial(m.0.iter().map(|(a, e)| (a.clone(), -e)).collect());
        // i^-1 = -i; the reduction in `mul` handles the sign.
        let (inv, sign) = inv.mul(&Monomial::one());
        Ok(Poly::term(inv, sign / c))
    }

    pub fn pow(&self, n: i32) -> Result<Poly, DslError> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut out = Poly::constant(1.0);
        for _ in 0..n.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    pub fn from_expr(e: &Expr) -> Result<Poly, DslError> {
        Ok(match e {
            Expr::Num(v) => Poly::constant(*v),
            Expr::Sym(s) if s == IMAG => Poly::atom(Atom::Imag),
            Expr::Sym(s) => Poly::atom(Atom::Sym(s.clone())),
            Expr::Deriv { of, wrt, order } => Poly::atom(Atom::Deriv {
                of: of.clone(),
                wrt: *wrt,
                order: *order,
            }),
            Expr::Call { func, arg } => Poly::atom(Atom::Call {
                func: func.clone(),
                arg: arg.clone(),
            }),
            Expr::Neg(e) => Poly::from_expr(e)?.scale(-1.0),
            Expr::Add(v) => {
                let mut acc = Poly::zero();
                for e in v {
                    acc = acc.add(&Poly::from_expr(e)?);
                }
                acc
            }
            Expr::Mul(v) => {
                let mut acc = Poly::constant(1.0);
                for e in v {
                    acc = acc.mul(&Poly::from_expr(e)?);
                }
                acc
            }
            Expr::Div(a, b) => {
                let den = Poly::from_expr(b)?;
                if den.is_zero() {
                    return Err(DslError::Unsupported(format!("division by zero in `{e}`")));
                }
                Poly::from_expr(a)?.mul(&den.recip()?)
            }
            Expr::Pow(b, n) => Poly::from_expr(b)?.pow(*n)?,
        })
    }

    /// Every atom that occurs with a non-zero exponent.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = self
            .terms
            .keys()
            .flat_map(|m| m.0.keys().cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.terms.keys().any(|m| m.0.contains_key(a))
    }

    /// Splits the poly by the exponent of `a`: returns exponent → coefficient poly.
    pub fn collect(&self, a: &Atom) -> BTreeMap<i32, Poly> {
        let mut out: BTreeMap<i32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exponent(a);
            out.entry(e).or_default().add_term(m.without(a), *c);
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Converts back to a tree laid out for reading: parameters are grouped
    /// into a leading `(num/den)` factor ahead of the dynamical factors.
    pub fn to_expr(&self, is_parameter: &dyn Fn(&Atom) -> bool) -> Expr {
        if self.terms.is_empty() {
            return Expr::Num(0.0);
        }
        let mut out = Vec::new();
        for (n, (m, c)) in self.terms.iter().enumerate() {
            let negative = *c < 0.0;
            let body = monomial_expr(m, c.abs(), is_parameter, negative && n == 0);
            if negative && n > 0 {
                out.push(Expr::Neg(Box::new(body)));
            } else {
                out.push(body);
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::Add(out)
        }
    }
}

fn small_rational(c: f64) -> Option<(f64, f64)> {
    (1..=64).map(f64::from).find_map(|d| {
        let n = c * d;
        (n.fract() == 0.0 && n.abs() < 9.0e15).then_some((n, d))
    })
}

fn power_of(a: &Atom, e: i32) -> Expr {
    if e == 1 {
        a.to_expr()
    } else {
        Expr::Pow(Box::new(a.to_expr()), e)
    }
}

fn product(mut v: Vec<Expr>) -> Expr {
    match v.len() {
        0 => Expr::Num(1.0),
        1 => v.pop().unwrap(),
        _ => Expr::Mul(v),
    }
}

fn monomial_expr(m: &Monomial, c: f64, is_parameter: &dyn Fn(&Atom) -> bool, lead_neg: bool) -> Expr {
    let (num_c, den_c) = small_rational(c).unwrap_or((c, 1.0));
    let mut num = Vec::new();
    let mut den = Vec::new();
    let mut dynamic = Vec::new();
    for (a, e) in m.factors() {
        if is_parameter(a) || *a == Atom::Imag {
            if e > 0 {
                num.push(power_of(a, e));
            } else {
                den.push(power_of(a, -e));
            }
        } else {
            dynamic.push(power_of(a, e));
        }
    }
    if den_c != 1.0 {
        den.insert(0, Expr::Num(den_c));
    }
    let coeff_part: Option<Expr> = if den.is_empty() {
        if num_c != 1.0 || (num.is_empty() && dynamic.is_empty()) {
            num.insert(0, Expr::Num(num_c));
        }
        (!num.is_empty()).then(|| product(num))
    } else {
        if num_c != 1.0 || num.is_empty() {
            num.insert(0, Expr::Num(num_c));
        }
        Some(Expr::Div(Box::new(product(num)), Box::new(product(den))))
    };
    let mut factors = Vec::new();
    match coeff_part {
        Some(Expr::Mul(v)) => factors.extend(v),
        Some(e) => factors.push(e),
        None => {}
    }
    if lead_neg {
        if factors.is_empty() {
            return Expr::Neg(Box::new(product(dynamic)));
        }
        let first = factors.remove(0);
        factors.insert(0, Expr::Neg(Box::new(first)));
    }
    factors.extend(dynamic);
    product(factors)
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr(&|_| true))
    }
}
