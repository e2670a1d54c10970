//! Partial differentiation and the Euler-Lagrange equation.

use std::fmt;

use super::canonical::{Atom, Poly};
use super::expr::{Axis, Expr, FIELD, POSITION};
use super::parse::Vocabulary;
use super::DslError;

/// Whether an equation describes a point particle or a field lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Particle,
    Field,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub unit: String,
}

/// An equation of motion solved for its highest time derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationOfMotion {
    pub kind: SystemKind,
    pub time_order: u8,
    /// The derivative the equation is solved for, e.g. `d2(x,t)`.
    pub solved_for: Atom,
    pub rhs: Poly,
    pub parameters: Vec<Parameter>,
}

impl EquationOfMotion {
    /// Atoms that are supplied by the simulation state rather than constants.
    pub fn is_parameter(a: &Atom) -> bool {
        match a {
            Atom::Sym(s) => s != POSITION && s != FIELD && s != "V",
            Atom::Imag => true,
            _ => false,
        }
    }

    pub fn rhs_expr(&self) -> Expr {
        self.rhs.to_expr(&EquationOfMotion::is_parameter)
    }
}

impl fmt::Display for EquationOfMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.solved_for, self.rhs_expr())
    }
}

fn x_dot() -> Atom {
    Atom::deriv(POSITION, Axis::T, 1)
}

/// Derivative of a single atom with respect to `wrt`, treating every other
/// atom as independent, except that the opaque `V(x)` depends on `x`.
fn atom_partial(a: &Atom, wrt: &Atom) -> Result<Poly, DslError> {
    if a == wrt {
        return Ok(Poly::constant(1.0));
    }
    if *wrt != Atom::sym(POSITION) {
        return Ok(Poly::zero());
    }
    match a {
        Atom::Call { func, arg } if arg == POSITION => Ok(Poly::atom(Atom::deriv(func, Axis::X, 1))),
        Atom::Deriv { of, wrt: Axis::X, order: 1 } if of != FIELD => Ok(Poly::atom(Atom::deriv(of, Axis::X, 2))),
        Atom::Deriv { of, wrt: Axis::X, order: 2 } if of != FIELD => Err(DslError::Unsupported(format!(
            "third derivative of `{of}` would be required"
        ))),
        _ => Ok(Poly::zero()),
    }
}

/// Applies a derivation `atom_rule` to a polynomial with the product and
/// power rules.
fn derive_with(p: &Poly, atom_rule: &dyn Fn(&Atom) -> Result<Poly, DslError>) -> Result<Poly, DslError> {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        for (a, e) in m.factors() {
            let da = atom_rule(a)?;
            if da.is_zero() {
                continue;
            }
            let mut term = Poly::constant(c * f64::from(e));
            for (b, f) in m.factors() {
                let exp = if b == a { f - 1 } else { f };
                if exp != 0 {
                    term = term.mul(&Poly::atom(b.clone()).pow(exp)?);
                }
            }
            out = out.add(&term.mul(&da));
        }
    }
    Ok(out)
}

/// Partial derivative of `e` with respect to `wrt`. `d(x,t)` is treated as a
/// variable independent of `x`.
pub fn differentiate(e: &Expr, wrt: &Atom) -> Result<Expr, DslError> {
    let p = differentiate_poly(&Poly::from_expr(e)?, wrt)?;
    Ok(p.to_expr(&|a| EquationOfMotion::is_parameter(a)))
}

pub fn differentiate_poly(p: &Poly, wrt: &Atom) -> Result<Poly, DslError> {
    derive_with(p, &|a| atom_partial(a, wrt))
}

/// Total time derivative along a particle trajectory.
fn total_dt_particle(p: &Poly) -> Result<Poly, DslError> {
    derive_with(p, &|a| match a {
        Atom::Sym(s) if s == POSITION => Ok(Poly::atom(x_dot())),
        Atom::Deriv { of, wrt: Axis::T, order: 1 } if of == POSITION => {
            Ok(Poly::atom(Atom::deriv(POSITION, Axis::T, 2)))
        }
        Atom::Call { .. } | Atom::Deriv { wrt: Axis::X, .. } => {
            Ok(atom_partial(a, &Atom::sym(POSITION))?.mul(&Poly::atom(x_dot())))
        }
        Atom::Deriv { .. } => Err(DslError::Unsupported(format!("time derivative of `{a}`"))),
        _ => Ok(Poly::zero()),
    })
}

/// Total derivative of a field expression with respect to `axis`.
fn total_d_field(p: &Poly, axis: Axis) -> Result<Poly, DslError> {
    derive_with(p, &|a| match a {
        Atom::Sym(s) if s == FIELD => Ok(Poly::atom(Atom::deriv(FIELD, axis, 1))),
        Atom::Sym(s) if s == POSITION && axis == Axis::X => Ok(Poly::constant(1.0)),
        Atom::Deriv { of, wrt, order: 1 } if of == FIELD && *wrt == axis => {
            Ok(Poly::atom(Atom::deriv(FIELD, axis, 2)))
        }
        Atom::Deriv { of, .. } if of == FIELD => Err(DslError::Unsupported(format!(
            "mixed or third-order derivative arising from `{a}`"
        ))),
        Atom::Call { .. } | Atom::Deriv { .. } => {
            Err(DslError::Unsupported(format!("`{a}` in a field Lagrangian")))
        }
        _ => Ok(Poly::zero()),
    })
}

fn family_of(l: &Poly) -> Result<SystemKind, DslError> {
    let atoms = l.atoms();
    let is_field_atom = |a: &Atom| match a {
        Atom::Sym(s) => s == FIELD,
        Atom::Deriv { of, .. } => of == FIELD,
        _ => false,
    };
    let is_particle_atom = |a: &Atom| match a {
        Atom::Deriv { of, wrt, .. } => of == POSITION || (of != FIELD && *wrt == Axis::X),
        _ => false,
    };
    let field = atoms.iter().find(|a| is_field_atom(a));
    let particle = atoms.iter().find(|a| is_particle_atom(a));
    match (field, particle) {
        (Some(f), Some(p)) => Err(DslError::Unsupported(format!(
            "`{p}` mixes particle variables into a field Lagrangian containing `{f}`"
        ))),
        (Some(_), None) => Ok(SystemKind::Field),
        _ => Ok(SystemKind::Particle),
    }
}

fn check_family(l: &Poly, kind: SystemKind) -> Result<(), DslError> {
    for a in l.atoms() {
        let ok = match (&a, kind) {
            (Atom::Deriv { of, wrt: Axis::T, order: 1 }, SystemKind::Particle) => of == POSITION,
            (Atom::Deriv { order: 2, .. }, _) => false,
            (Atom::Deriv { of, wrt: Axis::X, .. }, SystemKind::Particle) => of != FIELD,
            (Atom::Deriv { of, order: 1, .. }, SystemKind::Field) => of == FIELD,
            (Atom::Call { arg, .. }, SystemKind::Field) => arg == POSITION,
            _ => true,
        };
        if !ok {
            return Err(DslError::Unsupported(format!(
                "subterm `{a}` is outside the supported Lagrangian family"
            )));
        }
    }
    Ok(())
}

/// Solves `lhs_minus_rhs = 0` for the highest time derivative of the
/// dynamical variable.
fn solve(e: &Poly, kind: SystemKind) -> Result<EquationOfMotion, DslError> {
    let candidates: Vec<(Atom, u8)> = match kind {
        SystemKind::Particle => vec![(Atom::deriv(POSITION, Axis::T, 2), 2)],
        SystemKind::Field => vec![
            (Atom::deriv(FIELD, Axis::T, 2), 2),
            (Atom::deriv(FIELD, Axis::T, 1), 1),
        ],
    };
    let (target, order) = candidates
        .into_iter()
        .find(|(a, _)| e.contains(a))
        .ok_or_else(|| {
            DslError::Degenerate("the equation contains no time derivative to solve for".to_string())
        })?;
    let parts = e.collect(&target);
    if let Some((exp, _)) = parts.iter().find(|(exp, _)| **exp != 0 && **exp != 1) {
        return Err(DslError::Unsupported(format!(
            "`{target}` appears with exponent {exp}; only linear equations can be solved"
        )));
    }
    let coefficient = parts.get(&1).cloned().unwrap_or_default();
    if coefficient.is_zero() {
        return Err(DslError::Degenerate(format!("coefficient of `{target}` is zero")));
    }
    if let Some(a) = coefficient.atoms().into_iter().find(|a| !EquationOfMotion::is_parameter(a)) {
        return Err(DslError::Unsupported(format!(
            "coefficient `{coefficient}` of `{target}` depends on `{a}`"
        )));
    }
    let rest = parts.get(&0).cloned().unwrap_or_default();
    let inv = coefficient.recip().map_err(|_| {
        DslError::Unsupported(format!("coefficient `{coefficient}` of `{target}` is not a single product"))
    })?;
    let rhs = rest.mul(&inv).scale(-1.0);
    for a in rhs.atoms() {
        let ok = match (&a, kind) {
            (Atom::Deriv { of, wrt: Axis::T, order: o }, SystemKind::Particle) => of == POSITION && *o < order,
            (Atom::Deriv { of, wrt: Axis::X, .. }, SystemKind::Particle) => of != FIELD,
            (Atom::Deriv { of, wrt: Axis::X, .. }, SystemKind::Field) => of == FIELD,
            (Atom::Deriv { .. }, _) => false,
            (Atom::Call { arg, .. }, SystemKind::Field) => arg == POSITION,
            (Atom::Sym(s), SystemKind::Particle) => s != FIELD,
            _ => true,
        };
        if !ok {
            return Err(DslError::Unsupported(format!(
                "right-hand side term `{a}` is not allowed in a {} equation of order {order}",
                match kind {
                    SystemKind::Particle => "particle",
                    SystemKind::Field => "field",
                }
            )));
        }
    }
    Ok(EquationOfMotion {
        kind,
        time_order: order,
        solved_for: target,
        parameters: Vec::new(),
        rhs,
    })
}

fn with_parameters(mut eom: EquationOfMotion, vocab: &Vocabulary) -> EquationOfMotion {
    eom.parameters = eom
        .rhs
        .atoms()
        .into_iter()
        .filter_map(|a| match a {
            Atom::Sym(s) if s == "V" || EquationOfMotion::is_parameter(&Atom::Sym(s.clone())) => {
                let unit = match s.as_str() {
                    "pi" => "1".to_string(),
                    _ => vocab
                        .constant(&s)
                        .map(|c| c.unit.clone())
                        .unwrap_or_else(|| "user-defined".to_string()),
                };
                Some(Parameter { name: s, unit })
            }
            _ => None,
        })
        .collect();
    eom
}

/// Applies `d/dt ∂L/∂q̇ − ∂L/∂q = 0` (with the spatial term for fields) and
/// solves for the highest time derivative.
pub fn euler_lagrange(l: &Expr, vocab: &Vocabulary) -> Result<EquationOfMotion, DslError> {
    let lp = Poly::from_expr(l)?;
    let kind = family_of(&lp)?;
    check_family(&lp, kind)?;
    let e = match kind {
        SystemKind::Particle => {
            let x = Atom::sym(POSITION);
            let momentum = differentiate_poly(&lp, &x_dot())?;
            total_dt_particle(&momentum)?.sub(&differentiate_poly(&lp, &x)?)
        }
        SystemKind::Field => {
            let psi = Atom::sym(FIELD);
            let dt = differentiate_poly(&lp, &Atom::deriv(FIELD, Axis::T, 1))?;
            let dx = differentiate_poly(&lp, &Atom::deriv(FIELD, Axis::X, 1))?;
            total_d_field(&dt, Axis::T)?
                .add(&total_d_field(&dx, Axis::X)?)
                .sub(&differentiate_poly(&lp, &psi)?)
        }
    };
    if e.is_zero() && kind == SystemKind::Particle && !lp.contains(&x_dot()) && !lp.is_zero() {
        return Err(DslError::Degenerate("the Lagrangian has no kinetic term".to_string()));
    }
    if e.is_zero() && lp.is_zero() {
        return Err(DslError::Degenerate("the Lagrangian is identically zero".to_string()));
    }
    solve(&e, kind).map(|eom| with_parameters(eom, vocab))
}

/// Builds an equation of motion from a directly supplied `lhs = rhs`.
pub fn equation_of_motion(lhs: &Expr, rhs: &Expr, vocab: &Vocabulary) -> Result<EquationOfMotion, DslError> {
    let e = Poly::from_expr(lhs)?.sub(&Poly::from_expr(rhs)?);
    let kind = family_of(&e)?;
    solve(&e, kind).map(|eom| with_parameters(eom, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse::{parse_equation, parse_lagrangian};

    fn vocab() -> Vocabulary {
        Vocabulary::default()
    }

    fn expr(s: &str) -> Expr {
        parse_lagrangian(s, &vocab()).unwrap()
    }

    fn poly(s: &str) -> Poly {
        Poly::from_expr(&expr(s)).unwrap()
    }

    #[test]
    fn kinetic_term_derivative() {
        let d = differentiate(&expr("1/2*m*d(x,t)^2"), &x_dot()).unwrap();
        assert_eq!(Poly::from_expr(&d).unwrap(), poly("m*d(x,t)"));
    }

    #[test]
    fn spring_term_derivative() {
        let d = differentiate(&expr("1/2*k*x^2"), &Atom::sym("x")).unwrap();
        assert_eq!(Poly::from_expr(&d).unwrap(), poly("k*x"));
    }

    #[test]
    fn constants_differentiate_to_zero() {
        let d = differentiate(&expr("m*k"), &Atom::sym("x")).unwrap();
        assert_eq!(d, Expr::Num(0.0));
    }

    #[test]
    fn opaque_potential_yields_formal_gradient() {
        let d = differentiate(&expr("V(x)^2"), &Atom::sym("x")).unwrap();
        assert_eq!(Poly::from_expr(&d).unwrap(), poly("2*V(x)*d(V,x)"));
        let d = differentiate(&expr("V(x)"), &x_dot()).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn oscillator_equation() {
        let eom = euler_lagrange(&expr("1/2*m*d(x,t)^2 - 1/2*k*x^2"), &vocab()).unwrap();
        assert_eq!(eom.kind, SystemKind::Particle);
        assert_eq!(eom.time_order, 2);
        assert_eq!(eom.rhs, poly("-(k/m)*x"));
        assert_eq!(eom.to_string(), "d2(x,t) = -(k/m)*x");
        let names: Vec<_> = eom.parameters.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["k", "m"]);
    }

    #[test]
    fn mechanics_sign_follows_force_convention() {
        let eom = euler_lagrange(&expr("1/2*m*d(x,t)^2 - V(x)"), &vocab()).unwrap();
        assert_eq!(eom.rhs, poly("-(1/m)*d(V,x)"));
        assert_eq!(eom.to_string(), "d2(x,t) = -(1/m)*d(V,x)");
    }

    #[test]
    fn free_particle() {
        let eom = euler_lagrange(&expr("1/2*m*d(x,t)^2"), &vocab()).unwrap();
        assert!(eom.rhs.is_zero());
        assert_eq!(eom.to_string(), "d2(x,t) = 0");
    }

    #[test]
    fn wave_and_class_one_equations() {
        let eom = euler_lagrange(&expr("1/2*d(psi,t)^2 - 1/2*v^2*d(psi,x)^2"), &vocab()).unwrap();
        assert_eq!(eom.kind, SystemKind::Field);
        assert_eq!(eom.time_order, 2);
        assert_eq!(eom.rhs, poly("v^2*d2(psi,x)"));

        let l = "1/2*d(psi,t)^2 - 1/2*c_w^2*d(psi,x)^2 - 1/2*(2*pi*nu)^2*(psi - psi0)^2";
        let eom = euler_lagrange(&expr(l), &vocab()).unwrap();
        assert_eq!(eom.rhs, poly("c_w^2*d2(psi,x) - (2*pi*nu)^2*(psi - psi0)"));
    }

    #[test]
    fn degenerate_and_unsupported_lagrangians() {
        assert!(matches!(euler_lagrange(&expr("0"), &vocab()), Err(DslError::Degenerate(_))));
        assert!(matches!(euler_lagrange(&expr("k*x^2"), &vocab()), Err(DslError::Degenerate(_))));
        assert!(matches!(
            euler_lagrange(&expr("d(x,t)^4"), &vocab()),
            Err(DslError::Unsupported(_))
        ));
        match euler_lagrange(&expr("d(psi,t)^2 - d2(psi,x)*psi"), &vocab()) {
            Err(DslError::Unsupported(msg)) => assert!(msg.contains("d2(psi,x)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(euler_lagrange(&expr("d(x,t)^2 + psi"), &vocab()).is_err());
    }

    #[test]
    fn direct_schrodinger_equation() {
        let (l, r) = parse_equation(
            "d(psi,t) = V*psi/(i*hbar) - hbar/(2*m*i)*d2(psi,x)",
            &vocab(),
        )
        .unwrap();
        let eom = equation_of_motion(&l, &r, &vocab()).unwrap();
        assert_eq!(eom.kind, SystemKind::Field);
        assert_eq!(eom.time_order, 1);
        assert_eq!(eom.rhs, poly("-i*V*psi/hbar + i*hbar/(2*m)*d2(psi,x)"));

        // The same law written in the time-dependent form.
        let (l, r) = parse_equation(
            "-hbar^2/(2*m)*d2(psi,x) + V*psi = i*hbar*d(psi,t)",
            &vocab(),
        )
        .unwrap();
        assert_eq!(equation_of_motion(&l, &r, &vocab()).unwrap().rhs, eom.rhs);
    }
}
