//! Scenario files: a TOML document with `[model]`, `[constants]`, `[grid]`,
//! `[run]`, `[field.NAME]`, `[particle.NAME]`, `[potential]` and
//! `[interaction]` tables.

mod load;
mod validate;
mod write;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::engine::StopCondition;
use crate::grid::{Boundary, Grid};
use crate::interaction::Template;
use crate::state::{Dynamics, ParticleType};
use crate::stencil::{Family, SchrodingerMode, StencilProgram};
pub use load::{load_scenario, parse_scenario};
pub use validate::{validate_scenario, Diagnostic, Severity};
pub use write::write_scenario;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{file}:{line}:{col}: {message}")]
    Parse {
        file: String,
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Lagrangian(String),
    /// An equation of motion given directly, `lhs = rhs`.
    Equation(String),
}

impl Model {
    pub fn source(&self) -> &str {
        match self {
            Model::Lagrangian(s) | Model::Equation(s) => s,
        }
    }

    /// Provenance key of the model text.
    pub fn key(&self) -> &'static str {
        match self {
            Model::Lagrangian(_) => "model.lagrangian",
            Model::Equation(_) => "model.equation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantSpec {
    pub value: f64,
    pub unit: String,
    pub complex: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub extents: Vec<usize>,
    pub dx: f64,
    /// Defaults to centring the grid on 0.
    pub origin: Option<f64>,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn resolved_origin(&self) -> f64 {
        self.origin.unwrap_or(-(self.extents[0] as f64) * self.dx / 2.0)
    }
}

/// How ψ(t₋₁) is obtained for stencils second order in time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HistoryPolicy {
    /// ψ₋₁ = ψ₀ - Δt·Δψdt
    #[default]
    BackwardEuler,
    /// ψ₋₁ = ψ₀ - Δt·Δψdt + ½Δt²·Δ²ψdt, second-order accurate.
    Taylor2,
}

impl HistoryPolicy {
    pub fn name(self) -> &'static str {
        match self {
            HistoryPolicy::BackwardEuler => "backward_euler",
            HistoryPolicy::Taylor2 => "taylor2",
        }
    }

    pub fn parse(s: &str) -> Option<HistoryPolicy> {
        match s {
            "backward_euler" => Some(HistoryPolicy::BackwardEuler),
            "taylor2" => Some(HistoryPolicy::Taylor2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub dt: Option<f64>,
    pub ticks: Option<u64>,
    pub max_time: Option<f64>,
    /// Stop early once every field is below this magnitude.
    pub stop_below: Option<f64>,
    pub seed: u64,
    pub snapshot_every: u64,
    pub mode: SchrodingerMode,
    pub history: HistoryPolicy,
    pub norm_guard: f64,
    pub allow_unstable: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            dt: None,
            ticks: None,
            max_time: None,
            stop_below: None,
            seed: 0,
            snapshot_every: 1,
            mode: SchrodingerMode::Corrected,
            history: HistoryPolicy::BackwardEuler,
            norm_guard: 0.05,
            allow_unstable: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `amplitude·exp(-(r-center)²/(2 width²))·exp(i wavenumber x)`
    Gaussian {
        amplitude: f64,
        center: f64,
        center_y: f64,
        width: f64,
        wavenumber: f64,
    },
    /// `amplitude·sin(wavenumber·x + phase)`
    Sine { amplitude: f64, wavenumber: f64, phase: f64 },
    Constant { value: f64 },
    /// `amplitude` at the cell nearest `center`, zero elsewhere.
    Impulse { amplitude: f64, center: f64 },
    /// Standing mode `n` between the ghost walls of a fixed grid.
    WellMode { amplitude: f64, mode: u32 },
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Gaussian { .. } => "gaussian",
            Profile::Sine { .. } => "sine",
            Profile::Constant { .. } => "constant",
            Profile::Impulse { .. } => "impulse",
            Profile::WellMode { .. } => "well_mode",
        }
    }
}

/// Initial Δψdt of a second-order field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitialVelocity {
    #[default]
    Zero,
    /// Δψdt = -c ∂ψ/∂x: a pulse moving towards +x.
    Right,
    Left,
}

impl InitialVelocity {
    pub fn name(self) -> &'static str {
        match self {
            InitialVelocity::Zero => "zero",
            InitialVelocity::Right => "right",
            InitialVelocity::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<InitialVelocity> {
        match s {
            "zero" => Some(InitialVelocity::Zero),
            "right" => Some(InitialVelocity::Right),
            "left" => Some(InitialVelocity::Left),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub kind: ParticleType,
    pub profile: Profile,
    pub velocity: InitialVelocity,
    /// Scale ψ to unit Σ|ψ|²·Δx^d.
    pub normalize: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSpec {
    pub name: String,
    pub kind: ParticleType,
    pub x: f64,
    pub velocity: Option<f64>,
    pub momentum: Option<f64>,
    pub spin: Option<f64>,
    /// Defaults to the constant `m`.
    pub mass: Option<f64>,
    pub relativistic: bool,
    pub paths: usize,
    /// Distance between neighbouring paths.
    pub spread: f64,
    pub dynamics: Dynamics,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum PotentialSpec {
    #[default]
    None,
    /// Constant force F: ∂V/∂x = -F.
    Force(f64),
    Harmonic { k: f64, center: f64 },
    Constant(f64),
    Barrier { height: f64, left: f64, right: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionSpec {
    pub pairs: Vec<(String, String)>,
    pub rules: String,
    pub coupling: f64,
    pub granularity: usize,
    pub window: f64,
    pub equivalence: crate::interaction::Equivalence,
    pub signs: Vec<(Template, Template, f64)>,
    pub occupancy_threshold: f64,
    pub prune_threshold: f64,
    pub lepton_mass: f64,
    pub relativistic: bool,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec {
            pairs: Vec::new(),
            rules: "qed".to_string(),
            coupling: 1.0,
            granularity: 8,
            window: 1.0,
            equivalence: Default::default(),
            signs: Vec::new(),
            occupancy_threshold: 0.0,
            prune_threshold: 1e-12,
            lepton_mass: 1.0,
            relativistic: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub model: Model,
    pub constants: BTreeMap<String, ConstantSpec>,
    pub grid: Option<GridSpec>,
    pub run: RunSpec,
    pub fields: Vec<FieldSpec>,
    pub particles: Vec<ParticleSpec>,
    pub potential: PotentialSpec,
    pub interaction: Option<InteractionSpec>,
}

impl Scenario {
    /// Numeric values of the constants, with ħ = c = 1 unless declared.
    pub fn constant_values(&self) -> BTreeMap<String, f64> {
        let mut m: BTreeMap<String, f64> = [("hbar".to_string(), 1.0), ("c".to_string(), 1.0)].into();
        for (k, c) in &self.constants {
            m.insert(k.clone(), c.value);
        }
        m
    }

    /// The grid used by the run. Particle-only scenarios without `[grid]`
    /// get 256 cells of 0.1 centred on 0, used for occupancy.
    pub fn effective_grid(&self) -> Grid {
        match &self.grid {
            Some(g) => Grid {
                extents: g.extents.clone(),
                dx: g.dx,
                origin: g.resolved_origin(),
                boundary: g.boundary,
            },
            None => Grid::new_1d(256, 0.1, -12.8, Boundary::Periodic),
        }
    }

    /// Δt from `[run]`, else CFL 0.5 for waves, a stability number of 0.05
    /// for first-order fields and 1e-3 for particles.
    pub fn effective_dt(&self, program: &StencilProgram) -> f64 {
        if let Some(dt) = self.run.dt {
            return dt;
        }
        let dx = self.effective_grid().dx;
        let c = program.laplacian_coefficient();
        match program.family {
            Family::Field2ndT if c > 0.0 => 0.5 * dx / c.sqrt(),
            Family::Field1stT if c > 0.0 => 0.05 * dx * dx / c,
            _ => 1e-3,
        }
    }

    pub fn stop_condition(&self) -> StopCondition {
        let ticks = self.run.ticks.unwrap_or(DEFAULT_TICKS);
        match (self.run.stop_below, self.run.max_time) {
            (Some(threshold), _) => StopCondition::FieldsBelow {
                threshold,
                max_ticks: ticks,
            },
            (None, Some(t)) if self.run.ticks.is_none() => StopCondition::MaxTime(t),
            _ => StopCondition::MaxTicks(ticks),
        }
    }

    /// Declared mass, else 0 for photons, else the constant `m`, else 1.
    pub fn particle_mass(&self, p: &ParticleSpec) -> f64 {
        if let Some(m) = p.mass {
            return m;
        }
        if p.kind == ParticleType::Photon {
            return 0.0;
        }
        self.constants.get("m").map_or(1.0, |c| c.value)
    }
}

pub const DEFAULT_TICKS: u64 = 100;

/// Where a value came from: `file:line`, or `default`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance(pub BTreeMap<String, String>);

impl Provenance {
    pub fn of(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("default")
    }

    /// Location of `key` or of the closest enclosing table that has one.
    pub fn locate(&self, key: &str) -> String {
        let mut k = key;
        loop {
            if let Some(v) = self.0.get(k) {
                if v != "default" {
                    return v.clone();
                }
            }
            match k.rfind('.') {
                Some(i) => k = &k[..i],
                None => return self.0.get("").cloned().unwrap_or_else(|| "scenario".to_string()),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
    /// SHA-256 of the file contents, hex.
    pub digest: String,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}
