//! The global update loop.

pub mod init;
pub mod occupancy;
pub mod rng;

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::interaction::{interaction_phase, InteractionConfig, InteractionError, InteractionEvent, PwCollection};
use crate::state::{Dynamics, FieldHistory, ObjectId, ParticleWave, SystemState};
use crate::stencil::{
    particle_step, schrodinger_step, wave_step, CellOrder, Family, ParticlePotential, SchrodingerMode, StencilError,
    StencilProgram,
};
pub use occupancy::{map_object_to_cells, objects_at_cell, occupancy_consistent, rebuild_occupancy};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("tick {tick}, object `{object}`: {source}")]
    Stencil {
        tick: u64,
        object: ObjectId,
        #[source]
        source: StencilError,
    },
    #[error("tick {tick}: non-finite value in `{object}` at cell {cell}")]
    NonFinite { tick: u64, object: ObjectId, cell: usize },
    #[error("tick {tick}: norm of `{object}` grew by a factor {ratio:.6}, beyond the guard")]
    NormDivergence { tick: u64, object: ObjectId, ratio: f64 },
    #[error("tick {tick}: interaction failed: {source}")]
    Interaction {
        tick: u64,
        #[source]
        source: InteractionError,
    },
    #[error("unknown object `{0}`")]
    UnknownObject(ObjectId),
    #[error("unknown cell {0}")]
    UnknownCell(usize),
    #[error("configuration: {0}")]
    Config(String),
}

/// Everything that drives a state forward but is not part of it.
#[derive(Clone, Debug)]
pub struct Engine {
    pub program: StencilProgram,
    pub dt: f64,
    pub mode: SchrodingerMode,
    pub potential: ParticlePotential,
    pub interaction: Option<InteractionConfig>,
    pub cell_order: CellOrder,
    /// Relative norm growth of first-order fields that aborts a run.
    pub norm_guard: Option<f64>,
    pub c: f64,
}

impl Engine {
    pub fn new(program: StencilProgram, dt: f64) -> Engine {
        Engine {
            program,
            dt,
            mode: SchrodingerMode::default(),
            potential: ParticlePotential::None,
            interaction: None,
            cell_order: CellOrder::Natural,
            norm_guard: Some(0.05),
            c: 1.0,
        }
    }
}

/// Δτ = Δt/γ with γ = √(1 + (p/(mc))²), p the probability-weighted mean
/// momentum of the particle's paths. Non-relativistic and massless
/// particles use Δt.
pub fn proper_timestep(p: &ParticleWave, paths: &PwCollection, dt: f64, c: f64) -> f64 {
    if !p.relativistic || p.mass == 0.0 {
        return dt;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for r in &paths.rows {
        let w = r.amplitude.norm_sqr();
        num += w * r.members[p.member].p;
        den += w;
    }
    let mean = if den > 0.0 { num / den } else { 0.0 };
    let u = mean / (p.mass * c);
    dt / (1.0 + u * u).sqrt()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TickReport {
    pub event: Option<InteractionEvent>,
}

fn check_finite(state: &SystemState, tick: u64) -> Result<(), EngineError> {
    for f in state.fields.values() {
        if let Some(cell) = f.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(EngineError::NonFinite {
                tick,
                object: f.id.clone(),
                cell,
            });
        }
    }
    Ok(())
}

/// One global update: fields, particles, clock, occupancy, then at most one
/// interaction.
pub fn tick(engine: &Engine, state: &mut SystemState) -> Result<TickReport, EngineError> {
    let next_tick = state.tick + 1;
    let dt = engine.dt;
    let prog = &engine.program;
    let stencil_err = |object: &ObjectId| {
        let object = object.clone();
        move |source| EngineError::Stencil {
            tick: next_tick,
            object,
            source,
        }
    };

    let mut fields = BTreeMap::new();
    for (id, f) in &state.fields {
        let next = match (&f.history, prog.family) {
            (FieldHistory::Static, _) | (_, Family::Particle2nd) => f.clone(),
            (_, Family::Field2ndT) => wave_step(f, &state.grid, &prog.rhs, dt, &engine.cell_order).map_err(stencil_err(id))?,
            (_, Family::Field1stT) => schrodinger_step(f, &state.grid, &prog.rhs, dt, engine.mode, &engine.cell_order)
                .map_err(stencil_err(id))?,
        };
        fields.insert(id.clone(), next);
    }
    state.fields = fields;
    check_finite(state, next_tick)?;

    let t_next = state.time + dt;
    let ids: Vec<ObjectId> = state.particles.keys().cloned().collect();
    for id in ids {
        let pw = state.particles[&id].clone();
        let Some(table) = state.collections.get_mut(&pw.collection) else {
            continue;
        };
        let dtau = proper_timestep(&pw, table, dt, engine.c);
        let driven = pw.dynamics == Dynamics::Law && prog.family == Family::Particle2nd && pw.mass > 0.0;
        for row in &mut table.rows {
            let m = &mut row.members[pw.member];
            if driven {
                let (x, v) = particle_step(m.x, m.p / pw.mass, &prog.rhs, &engine.potential, dtau)
                    .map_err(stencil_err(&id))?;
                m.x = x;
                m.p = pw.mass * v;
            } else if pw.mass > 0.0 {
                m.x += m.p / pw.mass * dtau;
            } else if m.p != 0.0 {
                m.x += engine.c * m.p.signum() * dt;
            }
            m.t = t_next;
        }
        if let Some(p) = state.particles.get_mut(&id) {
            p.tau += dtau;
        }
    }

    state.time = t_next;
    state.tick = next_tick;
    rebuild_occupancy(state);

    let mut report = TickReport::default();
    if let Some(cfg) = &engine.interaction {
        report.event = interaction_phase(state, cfg).map_err(|source| EngineError::Interaction {
            tick: next_tick,
            source,
        })?;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopCondition {
    MaxTicks(u64),
    MaxTime(f64),
    /// Stop once every field has max |ψ| below the threshold, or after
    /// `max_ticks`.
    FieldsBelow { threshold: f64, max_ticks: u64 },
}

impl StopCondition {
    fn done(&self, state: &SystemState) -> bool {
        match *self {
            StopCondition::MaxTicks(n) => state.tick >= n,
            StopCondition::MaxTime(t) => state.time >= t - 1e-12 * t.abs().max(1.0),
            StopCondition::FieldsBelow { threshold, max_ticks } => {
                state.tick >= max_ticks
                    || state
                        .fields
                        .values()
                        .all(|f| f.values.iter().all(|v| v.norm() < threshold))
            }
        }
    }
}

/// One value of one object at one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRow {
    pub object: ObjectId,
    pub cell: usize,
    pub x: f64,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub tick: u64,
    pub time: f64,
    pub rows: Vec<SnapshotRow>,
}

/// Field values per cell and particle paths (position, amplitude), in
/// object-id order.
pub fn snapshot(state: &SystemState) -> Snapshot {
    let mut rows = Vec::new();
    for id in state.object_ids() {
        if let Some(f) = state.fields.get(&id) {
            for (cell, v) in f.values.iter().enumerate() {
                rows.push(SnapshotRow {
                    object: id.clone(),
                    cell,
                    x: state.grid.x(cell),
                    value: *v,
                });
            }
        } else if let Some(paths) = state.particle_paths(&id) {
            for (x, a) in paths {
                rows.push(SnapshotRow {
                    object: id.clone(),
                    cell: state.grid.cell_of(x),
                    x,
                    value: a,
                });
            }
        }
    }
    Snapshot {
        tick: state.tick,
        time: state.time,
        rows,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<InteractionEvent>,
}

/// Ticks until `until` holds, snapshotting at tick 0 and every `cadence`
/// ticks. First-order fields are checked against the norm guard.
pub fn run(engine: &Engine, state: &mut SystemState, until: StopCondition, cadence: u64) -> Result<RunOutcome, EngineError> {
    let cadence = cadence.max(1);
    let cell_volume = state.grid.dx.powi(state.grid.dims() as i32);
    let reference: BTreeMap<ObjectId, f64> = state
        .fields
        .iter()
        .filter(|(_, f)| matches!(f.history, FieldHistory::Derivative(_)))
        .map(|(id, f)| (id.clone(), f.norm2(cell_volume)))
        .collect();
    let mut out = RunOutcome {
        snapshots: vec![snapshot(state)],
        events: Vec::new(),
    };
    while !until.done(state) {
        let report = tick(engine, state)?;
        if let Some(e) = report.event {
            out.events.push(e);
        }
        if let Some(guard) = engine.norm_guard {
            for (id, n0) in &reference {
                let Some(f) = state.fields.get(id) else { continue };
                if *n0 > 0.0 {
                    let ratio = f.norm2(cell_volume) / n0;
                    if (ratio - 1.0).abs() > guard {
                        return Err(EngineError::NormDivergence {
                            tick: state.tick,
                            object: id.clone(),
                            ratio,
                        });
                    }
                }
            }
        }
        if state.tick.is_multiple_of(cadence) {
            out.snapshots.push(snapshot(state));
        }
    }
    Ok(out)
}
