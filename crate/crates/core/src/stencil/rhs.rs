//! Compiled right-hand sides of equations of motion.

use std::collections::BTreeMap;
use std::f64::consts::PI as PI_F64;

use num_complex::Complex64;

use super::StencilError;
use crate::dsl::expr::{Axis, FIELD, PI, POSITION};
use crate::dsl::{Atom, EquationOfMotion, SystemKind};

/// Runtime quantity an rhs term reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Pos = 0,
    Vel,
    PotentialValue,
    PotentialGradient,
    Psi,
    PsiX,
    PsiXX,
    Potential,
    Coord,
}

pub const SLOT_COUNT: usize = 9;

pub type SlotValues = [Complex64; SLOT_COUNT];

pub fn slot_values() -> SlotValues {
    [Complex64::new(0.0, 0.0); SLOT_COUNT]
}

#[derive(Clone, Debug, PartialEq)]
struct Term {
    coeff: Complex64,
    factors: Vec<(Slot, i32)>,
}

/// A sum of `coefficient * slot^e ...` terms with all parameters folded
/// into the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsEvaluator {
    terms: Vec<Term>,
}

fn slot_of(kind: SystemKind, atom: &Atom) -> Option<Slot> {
    use SystemKind::*;
    Some(match (kind, atom) {
        (Particle, Atom::Sym(s)) if s == POSITION => Slot::Pos,
        (Particle, Atom::Deriv { of, wrt: Axis::T, order: 1 }) if of == POSITION => Slot::Vel,
        (Particle, Atom::Call { .. }) => Slot::PotentialValue,
        (Particle, Atom::Deriv { wrt: Axis::X, order: 1, .. }) => Slot::PotentialGradient,
        (Field, Atom::Sym(s)) if s == FIELD => Slot::Psi,
        (Field, Atom::Sym(s)) if s == POSITION => Slot::Coord,
        (Field, Atom::Deriv { of, wrt: Axis::X, order: 1 }) if of == FIELD => Slot::PsiX,
        (Field, Atom::Deriv { of, wrt: Axis::X, order: 2 }) if of == FIELD => Slot::PsiXX,
        (Field, Atom::Call { .. }) => Slot::Potential,
        _ => return None,
    })
}

impl RhsEvaluator {
    /// Binds every parameter of `eom.rhs` from `constants`.
    pub fn compile(eom: &EquationOfMotion, constants: &BTreeMap<String, f64>) -> Result<RhsEvaluator, StencilError> {
        let mut terms = Vec::new();
        for (mono, c) in eom.rhs.terms() {
            let mut coeff = Complex64::new(c, 0.0);
            let mut factors = Vec::new();
            for (atom, e) in mono.factors() {
                match atom {
                    Atom::Imag => coeff *= Complex64::i().powi(e),
                    Atom::Sym(s) if EquationOfMotion::is_parameter(atom) => {
                        let v = match constants.get(s) {
                            Some(v) => *v,
                            None if s == PI => PI_F64,
                            None => return Err(StencilError::Unbound(s.clone())),
                        };
                        coeff *= v.powi(e);
                    }
                    _ => match slot_of(eom.kind, atom) {
                        Some(slot) => factors.push((slot, e)),
                        None => {
                            return Err(StencilError::Unsupported(format!(
                                "`{atom}` cannot be evaluated by a {} stencil",
                                match eom.kind {
                                    SystemKind::Particle => "particle",
                                    SystemKind::Field => "field",
                                }
                            )))
                        }
                    },
                }
            }
            factors.sort();
            terms.push(Term { coeff, factors });
        }
        Ok(RhsEvaluator { terms })
    }

    pub fn eval(&self, v: &SlotValues) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut p = t.coeff;
            for &(slot, e) in &t.factors {
                p *= if e == 1 { v[slot as usize] } else { v[slot as usize].powi(e) };
            }
            acc += p;
        }
        acc
    }

    pub fn uses(&self, slot: Slot) -> bool {
        self.terms.iter().any(|t| t.factors.iter().any(|(s, _)| *s == slot))
    }

    /// Coefficient of the term that is exactly linear in `slot`.
    pub fn linear_coefficient(&self, slot: Slot) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.factors == [(slot, 1)])
            .map(|t| t.coeff)
            .sum()
    }

    /// True when the rhs is linear in the slots listed.
    pub fn is_linear_in(&self, slots: &[Slot]) -> bool {
        self.terms.iter().all(|t| {
            let degree: i32 = t.factors.iter().filter(|(s, _)| slots.contains(s)).map(|(_, e)| *e).sum();
            degree <= 1
        })
    }
}
