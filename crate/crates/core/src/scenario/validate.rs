use std::collections::BTreeSet;

use super::{Provenance, Scenario};
use crate::dsl::{EquationOfMotion, SystemKind};
use crate::interaction::RuleTable;
use crate::state::ParticleType;
use crate::stencil::{Family, StencilProgram};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// `file:line` of the offending value or its table.
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}: {}", self.location, self.severity, self.message)
    }
}

/// First-order stability numbers above this draw a warning.
pub const SCHRODINGER_WARN: f64 = 0.1;

struct Sink<'a> {
    prov: &'a Provenance,
    out: Vec<Diagnostic>,
}

impl Sink<'_> {
    fn push(&mut self, severity: Severity, key: &str, message: String) {
        self.out.push(Diagnostic {
            severity,
            location: self.prov.locate(key),
            message,
        });
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        self.push(Severity::Error, key, message.into());
    }

    fn warn(&mut self, key: &str, message: impl Into<String>) {
        self.push(Severity::Warning, key, message.into());
    }
}

/// Checks a scenario against its equation of motion. `program` is the
/// compiled stencil when compilation succeeded.
pub fn validate_scenario(
    s: &Scenario,
    prov: &Provenance,
    eom: &EquationOfMotion,
    program: Option<&StencilProgram>,
) -> Vec<Diagnostic> {
    let mut d = Sink { prov, out: Vec::new() };
    let constants = s.constant_values();

    for p in &eom.parameters {
        if !constants.contains_key(&p.name) && !(p.name == "m" && !s.particles.is_empty() && s.particles.iter().all(|q| q.mass.is_some())) {
            d.error("constants", format!("parameter `{}` of the equation of motion is not bound", p.name));
        }
    }

    match (&s.grid, eom.kind) {
        (None, SystemKind::Field) => d.error("model", "field scenarios need a [grid] table"),
        (Some(g), _) => {
            if !(g.dx > 0.0) {
                d.error("grid.dx", format!("dx must be positive, got {}", g.dx));
            }
            if g.extents.iter().any(|&n| n < 3) {
                d.error("grid.cells", "every axis needs at least 3 cells");
            }
        }
        _ => {}
    }
    if let Some(dt) = s.run.dt {
        if !(dt > 0.0) {
            d.error("run.dt", format!("dt must be positive, got {dt}"));
        }
    }
    if s.run.snapshot_every == 0 {
        d.error("run.snapshot_every", "snapshot_every must be at least 1");
    }

    let grid = s.effective_grid();
    if let Some(prog) = program {
        let dt = s.effective_dt(prog);
        let r = prog.stability_number(dt, grid.dx);
        match prog.family {
            Family::Field2ndT => {
                let limit = 1.0 / (grid.dims() as f64).sqrt();
                if r > limit {
                    let msg = format!("Courant number {r:.4} exceeds the stability limit {limit:.4}");
                    if s.run.allow_unstable {
                        d.warn("run.dt", msg);
                    } else {
                        d.error("run.dt", msg + " (set allow_unstable to run anyway)");
                    }
                }
            }
            Family::Field1stT => {
                if r > SCHRODINGER_WARN {
                    d.warn(
                        "run.dt",
                        format!("stability number {r:.4} is above {SCHRODINGER_WARN}; the norm will drift"),
                    );
                }
            }
            Family::Particle2nd => {}
        }
        if prog.family.is_field() && s.fields.is_empty() {
            d.error("model", "the equation of motion describes a field but no [field] is declared");
        }
        if !prog.family.is_field() && !s.fields.is_empty() {
            d.warn("field", "fields are not advanced by a particle equation of motion");
        }
    }

    let mut ids = BTreeSet::new();
    for f in &s.fields {
        let key = format!("field.{}", f.name);
        if !ids.insert(f.name.clone()) {
            d.error(&key, format!("duplicate object id `{}`", f.name));
        }
        if grid.dims() == 2 && matches!(f.profile, super::Profile::WellMode { .. }) {
            d.error(&format!("{key}.profile"), "well_mode is one-dimensional");
        }
    }
    for p in &s.particles {
        let key = format!("particle.{}", p.name);
        if !ids.insert(p.name.clone()) {
            d.error(&key, format!("duplicate object id `{}`", p.name));
        }
        if grid.dims() != 1 {
            d.error(&key, "particles need a one-dimensional grid");
        }
        if p.velocity.is_some() && p.momentum.is_some() {
            d.error(&format!("{key}.momentum"), "give either velocity or momentum, not both");
        }
        let m = s.particle_mass(p);
        if m < 0.0 {
            d.error(&format!("{key}.mass"), "mass must not be negative");
        }
        if p.relativistic && m == 0.0 {
            d.error(&format!("{key}.relativistic"), "a relativistic particle needs a positive mass");
        }
        if p.velocity.is_some() && m == 0.0 {
            d.error(&format!("{key}.velocity"), "massless particles take a momentum, not a velocity");
        }
        if p.paths == 0 {
            d.error(&format!("{key}.paths"), "a particle needs at least one path");
        }
        if p.kind == ParticleType::Photon && p.mass.is_some_and(|m| m != 0.0) {
            d.warn(&format!("{key}.mass"), "photon declared with a nonzero mass");
        }
    }

    if let Some(i) = &s.interaction {
        if RuleTable::by_name(&i.rules, i.coupling).is_none() {
            d.error("interaction.rules", format!("unknown rule table `{}`", i.rules));
        }
        if i.granularity == 0 {
            d.error("interaction.granularity", "granularity must be at least 1");
        }
        if !(i.window >= 0.0) {
            d.error("interaction.window", "window must not be negative");
        }
        for (a, b) in &i.pairs {
            for id in [a, b] {
                if !ids.contains(id) {
                    d.error("interaction.pairs", format!("pair names unknown object `{id}`"));
                }
            }
            if a == b {
                d.error("interaction.pairs", format!("object `{a}` cannot interact with itself"));
            }
        }
        if i.pairs.is_empty() {
            d.warn("interaction", "no interaction pairs declared");
        }
        if grid.dims() != 1 {
            d.error("interaction", "interactions need a one-dimensional grid");
        }
    }
    d.out
}
