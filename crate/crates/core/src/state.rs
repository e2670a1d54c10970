//! System state: the cell grid plus the non-local objects living on it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;

use crate::engine::rng::Rng;
use crate::grid::Grid;
use crate::interaction::collection::PwCollection;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn new(s: &str) -> ObjectId {
        ObjectId(s.to_string())
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParticleType {
    Electron,
    Positron,
    Photon,
    Generic,
}

impl ParticleType {
    pub const ALL: [ParticleType; 4] = [
        ParticleType::Electron,
        ParticleType::Positron,
        ParticleType::Photon,
        ParticleType::Generic,
    ];

    pub fn parse(s: &str) -> Option<ParticleType> {
        Some(match s {
            "electron" | "e-" | "e" => ParticleType::Electron,
            "positron" | "e+" => ParticleType::Positron,
            "photon" | "gamma" | "γ" => ParticleType::Photon,
            "generic" => ParticleType::Generic,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ParticleType::Electron => "e-",
            ParticleType::Positron => "e+",
            ParticleType::Photon => "gamma",
            ParticleType::Generic => "generic",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            ParticleType::Electron => "electron",
            ParticleType::Positron => "positron",
            ParticleType::Photon => "photon",
            ParticleType::Generic => "generic",
        }
    }
}

impl fmt::Display for ParticleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// History a field keeps besides its current slice.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldHistory {
    /// ψ(t_{j-1}) for stencils second order in time.
    Previous(Vec<Complex64>),
    /// Δψdt for stencils first order in time.
    Derivative(Vec<Complex64>),
    /// Fields that are not advanced by any stencil.
    Static,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub id: ObjectId,
    pub kind: ParticleType,
    pub values: Vec<Complex64>,
    pub history: FieldHistory,
    /// Sampled V on the grid, zero when no potential is configured.
    pub potential: Vec<f64>,
}

impl FieldState {
    pub fn norm2(&self, cell_volume: f64) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell_volume
    }
}

/// How a particle's paths move between interactions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dynamics {
    /// Driven by the scenario's equation of motion.
    Law,
    /// Uniform motion at p/m, or at c for massless particles.
    Free,
}

pub type CollectionId = u64;

/// A particle/wave. Its paths are one member column of a shared
/// [`PwCollection`]; the two out particles of an interaction share a table.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleWave {
    pub id: ObjectId,
    pub kind: ParticleType,
    pub mass: f64,
    pub relativistic: bool,
    pub tau: f64,
    pub collection: CollectionId,
    pub member: usize,
    pub dynamics: Dynamics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub grid: Grid,
    pub fields: BTreeMap<ObjectId, FieldState>,
    pub particles: BTreeMap<ObjectId, ParticleWave>,
    pub collections: BTreeMap<CollectionId, PwCollection>,
    /// Cell → ids of the objects covering it.
    pub occupancy: Vec<BTreeSet<ObjectId>>,
    pub occupancy_threshold: f64,
    pub tick: u64,
    pub time: f64,
    pub rng: Rng,
    pub next_object: u64,
    pub next_collection: CollectionId,
}

impl SystemState {
    pub fn empty(grid: Grid, seed: u64) -> SystemState {
        let n = grid.len();
        SystemState {
            grid,
            fields: BTreeMap::new(),
            particles: BTreeMap::new(),
            collections: BTreeMap::new(),
            occupancy: vec![BTreeSet::new(); n],
            occupancy_threshold: 0.0,
            tick: 0,
            time: 0.0,
            rng: Rng::seeded(seed),
            next_object: 0,
            next_collection: 0,
        }
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.fields.contains_key(id) || self.particles.contains_key(id)
    }

    pub fn object_ids(&self) -> Vec<ObjectId> {
        let mut ids: Vec<ObjectId> = self.fields.keys().chain(self.particles.keys()).cloned().collect();
        ids.sort();
        ids
    }

    pub fn object_type(&self, id: &ObjectId) -> Option<ParticleType> {
        self.fields
            .get(id)
            .map(|f| f.kind)
            .or_else(|| self.particles.get(id).map(|p| p.kind))
    }

    pub fn add_collection(&mut self, c: PwCollection) -> CollectionId {
        let id = self.next_collection;
        self.next_collection += 1;
        self.collections.insert(id, c);
        id
    }

    pub fn fresh_object_id(&mut self, prefix: &str) -> ObjectId {
        loop {
            let id = ObjectId(format!("{prefix}{}", self.next_object));
            self.next_object += 1;
            if !self.contains(&id) {
                return id;
            }
        }
    }

    /// Position and amplitude of each path of a particle.
    pub fn particle_paths(&self, id: &ObjectId) -> Option<Vec<(f64, Complex64)>> {
        let p = self.particles.get(id)?;
        let c = self.collections.get(&p.collection)?;
        Some(c.rows.iter().map(|r| (r.members[p.member].x, r.amplitude)).collect())
    }
}
