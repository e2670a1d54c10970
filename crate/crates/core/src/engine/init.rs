//! Initial states and engines built from scenarios.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use super::{rebuild_occupancy, Engine, StopCondition};
use crate::dsl::{equation_of_motion, euler_lagrange, parse_equation, parse_lagrangian, DslError, EquationOfMotion, Vocabulary};
use crate::grid::{Boundary, Grid};
use crate::interaction::rules::canonical_spin;
use crate::interaction::{InteractionConfig, MemberState, PathRow, PwCollection, RuleTable, SignTable};
use crate::scenario::{
    validate_scenario, Diagnostic, FieldSpec, HistoryPolicy, InitialVelocity, Model, PotentialSpec, Profile, Provenance,
    Scenario, Severity,
};
use crate::state::{FieldHistory, FieldState, ObjectId, ParticleWave, SystemState};
use crate::stencil::{compile_stencil, field_rhs, first_difference, Family, ParticlePotential, StencilError, StencilProgram};

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("{location}: {source}")]
    Dsl {
        location: String,
        #[source]
        source: DslError,
    },
    #[error("{location}: {source}")]
    Stencil {
        location: String,
        #[source]
        source: StencilError,
    },
    #[error("scenario is invalid:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

/// The default vocabulary plus every constant the scenario declares.
pub fn scenario_vocabulary(s: &Scenario) -> Vocabulary {
    let mut v = Vocabulary::default();
    for (name, c) in &s.constants {
        v.declare_constant(name, &c.unit, c.complex);
    }
    v
}

pub fn derive_model(s: &Scenario) -> Result<EquationOfMotion, DslError> {
    let vocab = scenario_vocabulary(s);
    match &s.model {
        Model::Lagrangian(src) => euler_lagrange(&parse_lagrangian(src, &vocab)?, &vocab),
        Model::Equation(src) => {
            let (l, r) = parse_equation(src, &vocab)?;
            equation_of_motion(&l, &r, &vocab)
        }
    }
}

fn profile_value(p: &Profile, grid: &Grid, cell: usize) -> Complex64 {
    let x = grid.x(cell);
    match *p {
        Profile::Gaussian {
            amplitude,
            center,
            center_y,
            width,
            wavenumber,
        } => {
            let mut r2 = (x - center).powi(2);
            if grid.dims() == 2 {
                r2 += (grid.y(cell) - center_y).powi(2);
            }
            amplitude * (-r2 / (2.0 * width * width)).exp() * Complex64::from_polar(1.0, wavenumber * x)
        }
        Profile::Sine {
            amplitude,
            wavenumber,
            phase,
        } => Complex64::new(amplitude * (wavenumber * x + phase).sin(), 0.0),
        Profile::Constant { value } => Complex64::new(value, 0.0),
        Profile::Impulse { amplitude, center } => {
            if grid.cell_of(center) == cell {
                Complex64::new(amplitude, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        Profile::WellMode { amplitude, mode } => {
            let wall = match grid.boundary {
                Boundary::Fixed => grid.origin - grid.dx,
                Boundary::Periodic => grid.origin,
            };
            let k = f64::from(mode) * PI / grid.length();
            Complex64::new(amplitude * (k * (x - wall)).sin(), 0.0)
        }
    }
}

pub fn field_profile(f: &FieldSpec, grid: &Grid) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..grid.len()).map(|c| profile_value(&f.profile, grid, c)).collect();
    if f.normalize {
        let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx.powi(grid.dims() as i32);
        if n2 > 0.0 {
            let s = 1.0 / n2.sqrt();
            v.iter_mut().for_each(|z| *z *= s);
        }
    }
    v
}

fn potential_at(p: &PotentialSpec, x: f64) -> f64 {
    match *p {
        PotentialSpec::None => 0.0,
        PotentialSpec::Force(f) => -f * x,
        PotentialSpec::Harmonic { k, center } => 0.5 * k * (x - center).powi(2),
        PotentialSpec::Constant(v) => v,
        PotentialSpec::Barrier { height, left, right } => {
            if x >= left && x <= right {
                height
            } else {
                0.0
            }
        }
    }
}

pub fn potential_lattice(p: &PotentialSpec, grid: &Grid) -> Vec<f64> {
    (0..grid.len()).map(|c| potential_at(p, grid.x(c))).collect()
}

pub fn particle_potential(p: &PotentialSpec, grid: &Grid) -> ParticlePotential {
    match p {
        PotentialSpec::None => ParticlePotential::None,
        PotentialSpec::Force(f) => ParticlePotential::Force(*f),
        _ => ParticlePotential::Sampled {
            grid: grid.clone(),
            values: potential_lattice(p, grid),
        },
    }
}

/// The state at t₀. Second-order fields get ψ(t₋₁) from the history policy,
/// first-order fields store the rhs at t₀ as their derivative lattice.
pub fn init_state(s: &Scenario, program: &StencilProgram, dt: f64) -> SystemState {
    let grid = s.effective_grid();
    let mut state = SystemState::empty(grid.clone(), s.run.seed);
    let vlat = potential_lattice(&s.potential, &grid);
    let speed = program.laplacian_coefficient().sqrt();

    for f in &s.fields {
        let psi = field_profile(f, &grid);
        let history = match program.family {
            Family::Particle2nd => FieldHistory::Static,
            Family::Field1stT => FieldHistory::Derivative(field_rhs(&psi, &vlat, &grid, &program.rhs)),
            Family::Field2ndT => {
                let sign = match f.velocity {
                    InitialVelocity::Zero => 0.0,
                    InitialVelocity::Right => -speed,
                    InitialVelocity::Left => speed,
                };
                let accel = match s.run.history {
                    HistoryPolicy::BackwardEuler => None,
                    HistoryPolicy::Taylor2 => Some(field_rhs(&psi, &vlat, &grid, &program.rhs)),
                };
                let prev = (0..psi.len())
                    .map(|c| {
                        let vel = if sign == 0.0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            sign * first_difference(&psi, &grid, c)
                        };
                        let mut p = psi[c] - dt * vel;
                        if let Some(a) = &accel {
                            p += 0.5 * dt * dt * a[c];
                        }
                        p
                    })
                    .collect();
                FieldHistory::Previous(prev)
            }
        };
        let id = ObjectId::new(&f.name);
        state.fields.insert(
            id.clone(),
            FieldState {
                id,
                kind: f.kind,
                values: psi,
                history,
                potential: vlat.clone(),
            },
        );
    }

    for p in &s.particles {
        let mass = s.particle_mass(p);
        let momentum = p.momentum.unwrap_or(mass * p.velocity.unwrap_or(0.0));
        let spin = p.spin.unwrap_or_else(|| canonical_spin(p.kind));
        let n = p.paths.max(1);
        let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        let rows = (0..n)
            .map(|j| PathRow {
                members: vec![MemberState {
                    t: 0.0,
                    x: p.x + (j as f64 - (n as f64 - 1.0) / 2.0) * p.spread,
                    p: momentum,
                    spin,
                    kind: p.kind,
                }],
                amplitude: amp,
            })
            .collect();
        let collection = state.add_collection(PwCollection { rows });
        let id = ObjectId::new(&p.name);
        state.particles.insert(
            id.clone(),
            ParticleWave {
                id,
                kind: p.kind,
                mass,
                relativistic: p.relativistic,
                tau: 0.0,
                collection,
                member: 0,
                dynamics: p.dynamics,
            },
        );
    }

    if let Some(i) = &s.interaction {
        state.occupancy_threshold = i.occupancy_threshold;
    }
    rebuild_occupancy(&mut state);
    state
}

pub fn interaction_config(s: &Scenario) -> Option<InteractionConfig> {
    let i = s.interaction.as_ref()?;
    let mut signs = SignTable::default();
    for (a, b, v) in &i.signs {
        signs.set(*a, *b, *v);
    }
    Some(InteractionConfig {
        pairs: i.pairs.iter().map(|(a, b)| (ObjectId::new(a), ObjectId::new(b))).collect(),
        rules: RuleTable::by_name(&i.rules, i.coupling)?,
        granularity: i.granularity,
        window: i.window,
        equivalence: i.equivalence,
        signs,
        prune_threshold: i.prune_threshold,
        hbar: s.constant_values()["hbar"],
        lepton_mass: i.lepton_mass,
        relativistic: i.relativistic,
        ..InteractionConfig::default()
    })
}

/// A scenario turned into everything needed to run it.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub eom: EquationOfMotion,
    pub engine: Engine,
    pub state: SystemState,
    pub stop: StopCondition,
    pub cadence: u64,
    /// Validation warnings.
    pub warnings: Vec<Diagnostic>,
}

/// Derive, compile, validate and initialise.
pub fn build_simulation(s: &Scenario, prov: &Provenance) -> Result<Simulation, SetupError> {
    let model_key = s.model.key();
    let eom = derive_model(s).map_err(|source| SetupError::Dsl {
        location: prov.locate(model_key),
        source,
    })?;
    let program = compile_stencil(&eom, &s.constant_values());
    let diags = validate_scenario(s, prov, &eom, program.as_ref().ok());
    let (errors, warnings): (Vec<_>, Vec<_>) = diags.into_iter().partition(|d| d.severity == Severity::Error);
    if !errors.is_empty() {
        return Err(SetupError::Invalid(errors));
    }
    let program = program.map_err(|source| SetupError::Stencil {
        location: prov.locate(model_key),
        source,
    })?;

    let dt = s.effective_dt(&program);
    let state = init_state(s, &program, dt);
    let mut engine = Engine::new(program, dt);
    engine.mode = s.run.mode;
    engine.potential = particle_potential(&s.potential, &state.grid);
    engine.interaction = interaction_config(s);
    engine.norm_guard = (s.run.norm_guard > 0.0).then_some(s.run.norm_guard);
    engine.c = s.constant_values()["c"];
    Ok(Simulation {
        eom,
        engine,
        state,
        stop: s.stop_condition(),
        cadence: s.run.snapshot_every.max(1),
        warnings,
    })
}
