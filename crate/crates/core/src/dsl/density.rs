//! Structural checks on field Lagrangian densities.

use std::fmt;

use super::canonical::{Atom, Poly};
use super::expr::{Expr, FIELD, POSITION};
use super::parse::Vocabulary;
use super::DslError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotChecked,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotChecked => "not checked",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityCheck {
    pub requirement: u8,
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityCheckReport {
    pub checks: Vec<DensityCheck>,
}

impl DensityCheckReport {
    pub fn status(&self, requirement: u8) -> CheckStatus {
        self.checks
            .iter()
            .find(|c| c.requirement == requirement)
            .map(|c| c.status)
            .unwrap_or(CheckStatus::NotChecked)
    }

    pub fn all_checked_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

fn check(requirement: u8, name: &'static str, offender: Option<String>) -> DensityCheck {
    DensityCheck {
        requirement,
        name,
        status: if offender.is_some() {
            CheckStatus::Fail
        } else {
            CheckStatus::Pass
        },
        detail: offender,
    }
}

/// Reports which of the Lagrangian-density requirements `l` satisfies.
/// Never rejects: failures are reported per requirement.
pub fn check_density_requirements(l: &Expr, vocab: &Vocabulary) -> Result<DensityCheckReport, DslError> {
    let atoms = Poly::from_expr(l)?.atoms();
    let find = |pred: &dyn Fn(&Atom) -> bool| atoms.iter().find(|a| pred(a)).map(|a| format!("`{a}`"));

    let dynamical_only = find(&|a| match a {
        Atom::Sym(s) => !(s == FIELD || s == POSITION || vocab.is_constant(s)),
        Atom::Deriv { of, .. } => of != FIELD,
        Atom::Call { .. } => true,
        Atom::Imag => false,
    });
    let no_coordinates = find(&|a| match a {
        Atom::Sym(s) => s == POSITION,
        Atom::Call { arg, .. } => arg == POSITION,
        _ => false,
    });
    let local_first_order = find(&|a| matches!(a, Atom::Deriv { order, .. } if *order > 1));
    let real_valued = find(&|a| match a {
        Atom::Imag => true,
        Atom::Sym(s) => vocab.constant(s).is_some_and(|c| c.complex),
        _ => false,
    });

    Ok(DensityCheckReport {
        checks: vec![
            check(1, "function of the dynamical variables only", dynamical_only),
            check(2, "no explicit coordinate dependence", no_coordinates),
            check(3, "local, derivatives of at most first order", local_first_order),
            check(4, "real-valued", real_valued),
            DensityCheck {
                requirement: 5,
                name: "symmetry (Poincare invariance)",
                status: CheckStatus::NotChecked,
                detail: None,
            },
        ],
    })
}
