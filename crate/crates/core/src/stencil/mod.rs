//! Discrete update schedules compiled from equations of motion.
//!
//! Intermediate lattices use the Δ names: `Δψdt`, `Δψdx`, `Δ²ψdx`, `Δ²ψdt`.

pub mod lattice;
pub mod rhs;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::{EquationOfMotion, SystemKind};
use crate::grid::Grid;
use crate::state::{FieldHistory, FieldState};
pub use lattice::{first_difference, second_difference, spatial_derivatives};
pub use rhs::{RhsEvaluator, Slot, SlotValues};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum StencilError {
    #[error("no update template for {0}")]
    NoTemplate(String),
    #[error("parameter `{0}` is not bound")]
    Unbound(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("field `{0}` lacks the history slice its stencil needs")]
    MissingHistory(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Particle2nd,
    Field2ndT,
    Field1stT,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Particle2nd => "particle-2nd-order",
            Family::Field2ndT => "field-2nd-order-t",
            Family::Field1stT => "field-1st-order-t",
        }
    }

    pub fn step_count(self) -> usize {
        match self {
            Family::Particle2nd => 3,
            Family::Field2ndT => 5,
            Family::Field1stT => 6,
        }
    }

    pub fn is_field(self) -> bool {
        self != Family::Particle2nd
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How step 5 of the first-order field schedule is interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SchrodingerMode {
    /// Δψdt from step 4 feeds step 6 directly (forward Euler).
    #[default]
    Corrected,
    /// Step 5 applied as written, with Δ²ψdt the backward time difference
    /// of successive step-4 values.
    Literal,
}

impl SchrodingerMode {
    pub fn name(self) -> &'static str {
        match self {
            SchrodingerMode::Corrected => "corrected",
            SchrodingerMode::Literal => "literal",
        }
    }

    pub fn parse(s: &str) -> Option<SchrodingerMode> {
        match s {
            "corrected" => Some(SchrodingerMode::Corrected),
            "literal" => Some(SchrodingerMode::Literal),
            _ => None,
        }
    }
}

/// Order in which cells are visited inside one step. Results never depend
/// on it; it exists so that independence can be checked.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum CellOrder {
    #[default]
    Natural,
    Custom(Vec<usize>),
}

impl CellOrder {
    fn map(&self, n: usize, f: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
        match self {
            CellOrder::Natural => (0..n).map(f).collect(),
            CellOrder::Custom(order) => {
                assert_eq!(order.len(), n, "cell order must be a permutation of the lattice");
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for &i in order {
                    out[i] = f(i);
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StencilProgram {
    pub family: Family,
    pub steps: Vec<String>,
    /// Time slices held per object (history included).
    pub lookback: usize,
    pub parameters: Vec<String>,
    pub rhs: RhsEvaluator,
    pub equation: String,
}

fn delta_names(rhs: &str) -> String {
    rhs.replace("d2(psi,x)", "Δ²ψdx")
        .replace("d(psi,x)", "Δψdx")
        .replace("d(x,t)", "ẋ")
        .replace("d(V,x)", "ΔVdx")
        .replace("psi0", "ψ₀")
        .replace("psi", "ψ")
}

/// The schedule template an equation of motion maps to.
pub fn select_family(eom: &EquationOfMotion) -> Result<Family, StencilError> {
    match (eom.kind, eom.time_order) {
        (SystemKind::Particle, 2) => Ok(Family::Particle2nd),
        (SystemKind::Field, 2) => Ok(Family::Field2ndT),
        (SystemKind::Field, 1) => Ok(Family::Field1stT),
        (kind, order) => Err(StencilError::NoTemplate(format!(
            "{} equations of order {order} in time",
            match kind {
                SystemKind::Particle => "particle",
                SystemKind::Field => "field",
            }
        ))),
    }
}

/// Selects the schedule template for `eom` and binds its rhs.
pub fn compile_stencil(eom: &EquationOfMotion, constants: &BTreeMap<String, f64>) -> Result<StencilProgram, StencilError> {
    let family = select_family(eom)?;
    let rhs = RhsEvaluator::compile(eom, constants)?;
    let law = delta_names(&eom.rhs_expr().to_string());
    let diffs = [
        "t(j+1) = t(j) + Δt".to_string(),
        "Δψdx = (ψ(i+1) - ψ(i-1))/(2Δx)".to_string(),
        "Δ²ψdx = (ψ(i+1) - 2ψ(i) + ψ(i-1))/(Δx·Δx)".to_string(),
    ];
    let (steps, lookback) = match family {
        Family::Particle2nd => (
            vec![
                "τ = τ + Δτ".to_string(),
                format!("ẍ = {law}"),
                "ẋ = ẋ + ẍ·Δτ; x = x + ẋ·Δτ".to_string(),
            ],
            1,
        ),
        Family::Field2ndT => {
            let mut s = diffs.to_vec();
            s.push(format!("Δ²ψdt = {law}"));
            s.push("ψ(j+1) = Δ²ψdt·Δt·Δt + 2ψ(j) - ψ(j-1)".to_string());
            (s, 2)
        }
        Family::Field1stT => {
            let mut s = diffs.to_vec();
            s.push(format!("Δψdt = {law}"));
            s.push("Δψdt = Δψdt + Δ²ψdt·Δt".to_string());
            s.push("ψ(j+1) = ψ(j) + Δψdt·Δt".to_string());
            (s, 1)
        }
    };
    debug_assert_eq!(steps.len(), family.step_count());
    Ok(StencilProgram {
        family,
        steps,
        lookback,
        parameters: eom.parameters.iter().map(|p| p.name.clone()).collect(),
        rhs,
        equation: eom.to_string(),
    })
}

impl StencilProgram {
    /// Effective propagation speed of a second-order field stencil, or the
    /// diffusion-like coefficient |ħ/2m| of a first-order one.
    pub fn laplacian_coefficient(&self) -> f64 {
        self.rhs.linear_coefficient(Slot::PsiXX).norm()
    }

    /// Courant number for the wave family, `ħΔt/(2mΔx²)` for the
    /// first-order family.
    pub fn stability_number(&self, dt: f64, dx: f64) -> f64 {
        let c = self.laplacian_coefficient();
        match self.family {
            Family::Field2ndT => c.sqrt() * dt / dx,
            Family::Field1stT => c * dt / (dx * dx),
            Family::Particle2nd => 0.0,
        }
    }
}

/// Potential seen by particles.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum ParticlePotential {
    #[default]
    None,
    /// Constant force F, i.e. V = -F x.
    Force(f64),
    /// V sampled on the grid and interpolated linearly.
    Sampled { grid: Grid, values: Vec<f64> },
}

impl ParticlePotential {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            ParticlePotential::None => 0.0,
            ParticlePotential::Force(f) => -f * x,
            ParticlePotential::Sampled { grid, values } => {
                let n = grid.extents[0];
                let s = (x - grid.origin) / grid.dx;
                let i0 = s.floor();
                let w = s - i0;
                let at = |i: i64| match grid.boundary {
                    crate::grid::Boundary::Periodic => values[i.rem_euclid(n as i64) as usize],
                    crate::grid::Boundary::Fixed => values[i.clamp(0, n as i64 - 1) as usize],
                };
                let i0 = i0 as i64;
                (1.0 - w) * at(i0) + w * at(i0 + 1)
            }
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match self {
            ParticlePotential::None => 0.0,
            ParticlePotential::Force(f) => -f,
            ParticlePotential::Sampled { grid, .. } => {
                let h = grid.dx;
                (self.value(x + h) - self.value(x - h)) / (2.0 * h)
            }
        }
    }
}

/// Semi-implicit Euler: velocity first, then position with the new
/// velocity. Returns the updated `(x, ẋ)`.
pub fn particle_step(
    x: f64,
    v: f64,
    rhs: &RhsEvaluator,
    potential: &ParticlePotential,
    dtau: f64,
) -> Result<(f64, f64), StencilError> {
    let mut s = rhs::slot_values();
    s[Slot::Pos as usize] = Complex64::new(x, 0.0);
    s[Slot::Vel as usize] = Complex64::new(v, 0.0);
    if rhs.uses(Slot::PotentialValue) {
        s[Slot::PotentialValue as usize] = Complex64::new(potential.value(x), 0.0);
    }
    if rhs.uses(Slot::PotentialGradient) {
        s[Slot::PotentialGradient as usize] = Complex64::new(potential.gradient(x), 0.0);
    }
    let a = rhs.eval(&s).re;
    let v1 = v + a * dtau;
    let x1 = x + v1 * dtau;
    if !(a.is_finite() && x1.is_finite() && v1.is_finite()) {
        return Err(StencilError::NonFinite(format!(
            "particle update with x={x}, v={v}, a={a}, dtau={dtau}"
        )));
    }
    Ok((x1, v1))
}

struct FieldInputs<'a> {
    grid: &'a Grid,
    rhs: &'a RhsEvaluator,
    needs_dx: bool,
    needs_dxx: bool,
    needs_coord: bool,
}

impl<'a> FieldInputs<'a> {
    fn new(grid: &'a Grid, rhs: &'a RhsEvaluator) -> Self {
        FieldInputs {
            grid,
            rhs,
            needs_dx: rhs.uses(Slot::PsiX),
            needs_dxx: rhs.uses(Slot::PsiXX),
            needs_coord: rhs.uses(Slot::Coord),
        }
    }

    fn eval(&self, psi: &[Complex64], potential: &[f64], cell: usize) -> Complex64 {
        let mut s = rhs::slot_values();
        s[Slot::Psi as usize] = psi[cell];
        if self.needs_dx {
            s[Slot::PsiX as usize] = first_difference(psi, self.grid, cell);
        }
        if self.needs_dxx {
            s[Slot::PsiXX as usize] = second_difference(psi, self.grid, cell);
        }
        s[Slot::Potential as usize] = Complex64::new(potential[cell], 0.0);
        if self.needs_coord {
            s[Slot::Coord as usize] = Complex64::new(self.grid.x(cell), 0.0);
        }
        self.rhs.eval(&s)
    }
}

/// The rhs of a field equation evaluated at every cell of `psi`.
pub fn field_rhs(psi: &[Complex64], potential: &[f64], grid: &Grid, rhs: &RhsEvaluator) -> Vec<Complex64> {
    let inputs = FieldInputs::new(grid, rhs);
    (0..psi.len()).map(|c| inputs.eval(psi, potential, c)).collect()
}

/// Leapfrog update for fields second order in time.
pub fn wave_step(
    f: &FieldState,
    grid: &Grid,
    rhs: &RhsEvaluator,
    dt: f64,
    order: &CellOrder,
) -> Result<FieldState, StencilError> {
    let FieldHistory::Previous(prev) = &f.history else {
        return Err(StencilError::MissingHistory(f.id.to_string()));
    };
    let inputs = FieldInputs::new(grid, rhs);
    let next = order.map(f.values.len(), |c| {
        let d2t = inputs.eval(&f.values, &f.potential, c);
        d2t * dt * dt + 2.0 * f.values[c] - prev[c]
    });
    Ok(FieldState {
        id: f.id.clone(),
        kind: f.kind,
        history: FieldHistory::Previous(f.values.clone()),
        values: next,
        potential: f.potential.clone(),
    })
}

/// Update for fields first order in time. The stored derivative lattice
/// holds the step-4 value of the previous step.
pub fn schrodinger_step(
    f: &FieldState,
    grid: &Grid,
    rhs: &RhsEvaluator,
    dt: f64,
    mode: SchrodingerMode,
    order: &CellOrder,
) -> Result<FieldState, StencilError> {
    let FieldHistory::Derivative(stored) = &f.history else {
        return Err(StencilError::MissingHistory(f.id.to_string()));
    };
    let inputs = FieldInputs::new(grid, rhs);
    let n = f.values.len();
    let d_psi_dt = order.map(n, |c| inputs.eval(&f.values, &f.potential, c));
    let next = order.map(n, |c| {
        let step5 = match mode {
            SchrodingerMode::Corrected => d_psi_dt[c],
            SchrodingerMode::Literal => {
                let d2_psi_dt = (d_psi_dt[c] - stored[c]) / dt;
                d_psi_dt[c] + d2_psi_dt * dt
            }
        };
        f.values[c] + step5 * dt
    });
    Ok(FieldState {
        id: f.id.clone(),
        kind: f.kind,
        values: next,
        history: FieldHistory::Derivative(d_psi_dt),
        potential: f.potential.clone(),
    })
}
