//! The interaction process within one tick: occurrence, interaction object,
//! channel processing, merging and generation of out particles.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use log::{debug, info};
use num_complex::Complex64;

use super::channels::{enumerate_channels, Equivalence, InteractionChannel, Template};
use super::collection::{MemberState, Momentum, PathRow, PwCollection, RowKey, MOMENTUM_QUANTUM};
use super::rules::{canonical_spin, RuleTable, VertexRule};
use super::InteractionError;
use crate::engine::occupancy::rebuild_occupancy;
use crate::state::{Dynamics, ObjectId, ParticleType, ParticleWave, SystemState};
use crate::stencil::first_difference;

/// Per-path amplitude assigned by the vertices.
pub trait AmplitudeRule: fmt::Debug + Send + Sync {
    /// Amplitude of the `j`-th of `n` rows produced by a split.
    fn split(&self, rule: &VertexRule, parent: Complex64, n: usize, j: usize) -> Complex64;
    fn combine(&self, rule: &VertexRule, amplitude: Complex64) -> Complex64;
}

/// Coupling per vertex, spread evenly over the split grid.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformAmplitude;

impl AmplitudeRule for UniformAmplitude {
    fn split(&self, rule: &VertexRule, parent: Complex64, n: usize, _j: usize) -> Complex64 {
        parent * rule.coupling / (n as f64).sqrt()
    }

    fn combine(&self, rule: &VertexRule, amplitude: Complex64) -> Complex64 {
        amplitude * rule.coupling
    }
}

/// Relative sign of two channel templates when their amplitudes are summed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignTable(pub BTreeMap<(Template, Template), f64>);

impl SignTable {
    pub fn set(&mut self, a: Template, b: Template, sign: f64) {
        self.0.insert((a.min(b), a.max(b)), sign);
    }

    pub fn sign(&self, a: Template, b: Template) -> f64 {
        if a == b {
            return 1.0;
        }
        self.0.get(&(a.min(b), a.max(b))).copied().unwrap_or(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct InteractionConfig {
    /// Object pairs allowed to interact.
    pub pairs: Vec<(ObjectId, ObjectId)>,
    pub rules: RuleTable,
    pub granularity: usize,
    /// Added to |P| to set the half-width of the split grid.
    pub window: f64,
    pub equivalence: Equivalence,
    pub signs: SignTable,
    pub prune_threshold: f64,
    pub hbar: f64,
    /// Mass of electrons and positrons created as out particles.
    pub lepton_mass: f64,
    pub relativistic: bool,
    pub amplitude: Arc<dyn AmplitudeRule>,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        InteractionConfig {
            pairs: Vec::new(),
            rules: RuleTable::qed(1.0),
            granularity: 8,
            window: 1.0,
            equivalence: Equivalence::default(),
            signs: SignTable::default(),
            prune_threshold: 1e-12,
            hbar: 1.0,
            lepton_mass: 1.0,
            relativistic: true,
            amplitude: Arc::new(UniformAmplitude),
        }
    }
}

impl InteractionConfig {
    pub fn mass_of(&self, kind: ParticleType) -> f64 {
        match kind {
            ParticleType::Electron | ParticleType::Positron => self.lepton_mass,
            ParticleType::Photon => 0.0,
            ParticleType::Generic => self.lepton_mass,
        }
    }
}

/// A cell both objects of an eligible pair cover.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub cell: usize,
    pub pair: (ObjectId, ObjectId),
    pub weight: f64,
}

/// Amplitude an object contributes at `cell`: ψ for fields, the summed
/// amplitudes of the covering paths for particles.
fn cell_amplitude(state: &SystemState, id: &ObjectId, cell: usize) -> Complex64 {
    if let Some(f) = state.fields.get(id) {
        return f.values[cell];
    }
    let mut a = Complex64::new(0.0, 0.0);
    for (x, amp) in state.particle_paths(id).unwrap_or_default() {
        if state.grid.cell_of(x) == cell && amp.norm() > state.occupancy_threshold {
            a += amp;
        }
    }
    a
}

/// Cells covered by both members of an eligible pair, weighted by
/// |a₁(c)·a₂(c)|². Pairs naming absent objects are skipped.
pub fn detect_interaction(state: &SystemState, cfg: &InteractionConfig) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (a, b) in &cfg.pairs {
        if a == b || !state.contains(a) || !state.contains(b) {
            continue;
        }
        for (cell, ids) in state.occupancy.iter().enumerate() {
            if ids.contains(a) && ids.contains(b) {
                let w = (cell_amplitude(state, a, cell) * cell_amplitude(state, b, cell)).norm_sqr();
                if w > 0.0 {
                    out.push(Candidate {
                        cell,
                        pair: (a.clone(), b.clone()),
                        weight: w,
                    });
                }
            }
        }
    }
    out
}

/// Index of the chosen candidate; one draw from `rng`.
pub fn select_interaction_cell(candidates: &[Candidate], rng: &mut crate::engine::rng::Rng) -> Result<usize, InteractionError> {
    let w: Vec<f64> = candidates.iter().map(|c| c.weight).collect();
    rng.weighted_index(&w).ok_or(InteractionError::AllZeroWeights)
}

/// Merged information of the two in objects at the interaction cell.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionObject {
    pub cell: usize,
    pub created_tick: u64,
    pub lifetime: u64,
    pub in_ids: [ObjectId; 2],
    pub in_types: [ParticleType; 2],
    /// Rows of (in1, in2) attribute pairs restricted to the cell.
    pub table: PwCollection,
    /// For each in particle, the indices of its paths that covered the
    /// cell. Fields have none.
    pub covering_paths: [Vec<usize>; 2],
}

fn snap_even(p: f64) -> f64 {
    let q = (p / (2.0 * MOMENTUM_QUANTUM)).round() as i64;
    Momentum(2 * q).value()
}

/// Paths of one object at `cell`: (state, amplitude, source row).
fn reduced_paths(
    state: &SystemState,
    id: &ObjectId,
    cell: usize,
    hbar: f64,
) -> Result<Vec<(MemberState, Complex64, usize)>, InteractionError> {
    let x = state.grid.x(cell);
    if let Some(f) = state.fields.get(id) {
        let psi = f.values[cell];
        if psi.norm() <= state.occupancy_threshold {
            return Err(InteractionError::ContractViolation(format!("cell {cell} is outside the support of {id}")));
        }
        let d = first_difference(&f.values, &state.grid, cell);
        let p = hbar * (psi.conj() * d).im / psi.norm_sqr();
        let m = MemberState {
            t: state.time,
            x,
            p: snap_even(p),
            spin: canonical_spin(f.kind),
            kind: f.kind,
        };
        return Ok(vec![(m, Complex64::new(1.0, 0.0), 0)]);
    }
    let pw = state.particles.get(id).ok_or_else(|| InteractionError::UnknownObject(id.clone()))?;
    let table = &state.collections[&pw.collection];
    let mut out = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let m = row.members[pw.member];
        if state.grid.cell_of(m.x) == cell && row.amplitude.norm() > state.occupancy_threshold {
            let reduced = MemberState {
                t: state.time,
                x,
                p: snap_even(m.p),
                ..m
            };
            out.push((reduced, row.amplitude, i));
        }
    }
    if out.is_empty() {
        return Err(InteractionError::ContractViolation(format!("cell {cell} is outside the support of {id}")));
    }
    Ok(out)
}

/// Step 1. Keeps only the paths of both in objects that cover `cell`,
/// reduced to the cell's position, and renormalises.
pub fn form_interaction_object(
    state: &SystemState,
    id1: &ObjectId,
    id2: &ObjectId,
    cell: usize,
    hbar: f64,
) -> Result<InteractionObject, InteractionError> {
    let t1 = state.object_type(id1).ok_or_else(|| InteractionError::UnknownObject(id1.clone()))?;
    let t2 = state.object_type(id2).ok_or_else(|| InteractionError::UnknownObject(id2.clone()))?;
    let p1 = reduced_paths(state, id1, cell, hbar)?;
    let p2 = reduced_paths(state, id2, cell, hbar)?;
    let shared = matches!(
        (state.particles.get(id1), state.particles.get(id2)),
        (Some(a), Some(b)) if a.collection == b.collection
    );
    let mut rows = Vec::new();
    if shared {
        // Correlated members: only rows where both cover the cell survive.
        for (m1, amp, i) in &p1 {
            if let Some((m2, _, _)) = p2.iter().find(|(_, _, j)| j == i) {
                rows.push(PathRow {
                    members: vec![*m1, *m2],
                    amplitude: *amp,
                });
            }
        }
    } else {
        for (m1, a1, _) in &p1 {
            for (m2, a2, _) in &p2 {
                rows.push(PathRow {
                    members: vec![*m1, *m2],
                    amplitude: a1 * a2,
                });
            }
        }
    }
    let mut table = PwCollection { rows };
    if table.normalize().is_none() {
        return Err(InteractionError::ContractViolation(format!("no joint path of {id1} and {id2} at cell {cell}")));
    }
    let covering = |paths: &[(MemberState, Complex64, usize)], id: &ObjectId| {
        if state.particles.contains_key(id) {
            paths.iter().map(|p| p.2).collect()
        } else {
            Vec::new()
        }
    };
    Ok(InteractionObject {
        cell,
        created_tick: state.tick,
        lifetime: 0,
        in_ids: [id1.clone(), id2.clone()],
        in_types: [t1, t2],
        covering_paths: [covering(&p1, id1), covering(&p2, id2)],
        table,
    })
}

/// `n` momenta spaced symmetrically about `total/2`. The spacing is an even
/// number of quanta close to `2(|total| + window)/n`, so `total - g` is
/// again a grid point for every `g` when `total` is even.
pub fn momentum_grid(total: Momentum, n: usize, window: f64) -> Vec<Momentum> {
    let width = total.value().abs() + window;
    let d = 2 * ((width / (n as f64 * MOMENTUM_QUANTUM)).round() as i64).max(1);
    let start = total.0.div_euclid(2) - (n as i64 - 1) * d / 2;
    (0..n as i64).map(|j| Momentum(start + j * d)).collect()
}

/// Replaces member `slot` by the two children of `rule`, once per grid
/// point. Child `grid_child` takes the grid momentum, the other the rest of
/// the parent's momentum.
pub fn apply_split(
    row: &PathRow,
    slot: usize,
    rule: &VertexRule,
    grid: &[Momentum],
    grid_child: usize,
    amplitude: &dyn AmplitudeRule,
) -> Result<Vec<PathRow>, InteractionError> {
    if grid.is_empty() {
        return Err(InteractionError::Granularity);
    }
    let parent = row.members[slot];
    if !rule.splits(parent.kind) {
        return Err(InteractionError::RuleMismatch {
            rule: rule.to_string(),
            found: parent.kind.to_string(),
        });
    }
    let n = grid.len();
    let pp = parent.momentum();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let mut momenta = [pp - *g, pp - *g];
            momenta[grid_child] = *g;
            let children = [0, 1].map(|k| MemberState {
                p: momenta[k].value(),
                spin: canonical_spin(rule.outputs[k]),
                kind: rule.outputs[k],
                ..parent
            });
            let mut members = row.members.clone();
            members.splice(slot..=slot, children);
            PathRow {
                members,
                amplitude: amplitude.split(rule, row.amplitude, n, j),
            }
        })
        .collect())
}

/// Replaces members `a` and `b` by the product of `rule`, carrying the sum
/// of their momenta.
pub fn apply_combine(
    row: &PathRow,
    a: usize,
    b: usize,
    rule: &VertexRule,
    amplitude: &dyn AmplitudeRule,
) -> Result<PathRow, InteractionError> {
    let (ma, mb) = (row.members[a], row.members[b]);
    if a == b || !rule.combines(ma.kind, mb.kind) {
        return Err(InteractionError::RuleMismatch {
            rule: rule.to_string(),
            found: format!("({}, {})", ma.kind, mb.kind),
        });
    }
    let kind = rule.outputs[0];
    let product = MemberState {
        p: (ma.momentum() + mb.momentum()).value(),
        spin: canonical_spin(kind),
        kind,
        ..ma
    };
    let mut members: Vec<MemberState> = row
        .members
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != a && *i != b)
        .map(|(_, m)| *m)
        .collect();
    members.insert(a.min(b), product);
    Ok(PathRow {
        members,
        amplitude: amplitude.combine(rule, row.amplitude),
    })
}

fn member_order(a: &MemberState, b: &MemberState) -> std::cmp::Ordering {
    (a.kind, a.momentum()).cmp(&(b.kind, b.momentum()))
}

/// Sorts members by type and rows by key, summing rows with equal keys.
fn canonical(rows: Vec<PathRow>) -> PwCollection {
    let mut by_key: BTreeMap<RowKey, PathRow> = BTreeMap::new();
    for mut r in rows {
        r.members.sort_by(member_order);
        by_key
            .entry(r.key())
            .and_modify(|e| e.amplitude += r.amplitude)
            .or_insert(r);
    }
    PwCollection {
        rows: by_key.into_values().collect(),
    }
}

fn process_channel(
    obj: &InteractionObject,
    ch: &InteractionChannel,
    cfg: &InteractionConfig,
) -> Result<PwCollection, InteractionError> {
    let amp = cfg.amplitude.as_ref();
    let mut out = Vec::new();
    for row in &obj.table.rows {
        let grid = momentum_grid(row.total_momentum(), cfg.granularity, cfg.window);
        match ch.template {
            Template::T1 => {
                let a = apply_combine(row, 0, 1, &ch.combine, amp)?;
                out.extend(apply_split(&a, 0, &ch.split, &grid, 0, amp)?);
            }
            t => {
                let leg = t.split_leg().unwrap_or(0);
                let internal = t.internal_child().unwrap_or(0);
                // After the split the row is [pw1, a, b] or [a, b, pw2].
                let split = apply_split(row, leg, &ch.split, &grid, 1 - internal, amp)?;
                let (x, y) = if leg == 0 { (internal, 2) } else { (0, 1 + internal) };
                for r in &split {
                    out.push(apply_combine(r, x, y, &ch.combine, amp)?);
                }
            }
        }
    }
    Ok(canonical(out))
}

/// Step 2. Applies every channel to the object's rows.
pub fn process_channels(
    obj: &InteractionObject,
    channels: &[InteractionChannel],
    cfg: &InteractionConfig,
) -> Result<Vec<(InteractionChannel, PwCollection)>, InteractionError> {
    if channels.is_empty() {
        return Err(InteractionError::NoChannels(obj.in_types[0], obj.in_types[1]));
    }
    channels
        .iter()
        .map(|ch| process_channel(obj, ch, cfg).map(|c| (ch.clone(), c)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergedChannels {
    pub collection: PwCollection,
    /// Σ|amplitude|² after the signed sum, before renormalisation.
    pub weight: f64,
    pub templates: Vec<Template>,
}

/// Row-wise signed sum of channels sharing one out-type pair. The sign of
/// each channel is taken relative to the first.
pub fn merge_channels(
    parts: &[(Template, PwCollection)],
    signs: &SignTable,
    prune_threshold: f64,
) -> Result<MergedChannels, InteractionError> {
    let Some((reference, first)) = parts.first() else {
        return Err(InteractionError::NoInteractionResult);
    };
    let keys: Vec<RowKey> = first.rows.iter().map(|r| r.key()).collect();
    let mut rows = first.rows.clone();
    for r in &mut rows {
        r.amplitude = Complex64::new(0.0, 0.0);
    }
    for (t, c) in parts {
        let these: Vec<RowKey> = c.rows.iter().map(|r| r.key()).collect();
        if these != keys {
            return Err(InteractionError::ContractViolation(format!(
                "channel {t} does not share the row keys of channel {reference}"
            )));
        }
        let s = signs.sign(*reference, *t);
        for (acc, r) in rows.iter_mut().zip(&c.rows) {
            acc.amplitude += s * r.amplitude;
        }
    }
    rows.retain(|r| r.amplitude.norm() >= prune_threshold && r.amplitude.norm() > 0.0);
    let mut collection = PwCollection { rows };
    let weight = collection.normalize().ok_or(InteractionError::NoInteractionResult)?;
    Ok(MergedChannels {
        collection,
        weight,
        templates: parts.iter().map(|(t, _)| *t).collect(),
    })
}

/// Record of one processed interaction.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionEvent {
    pub tick: u64,
    pub cell: usize,
    pub in_ids: [ObjectId; 2],
    pub in_types: [ParticleType; 2],
    pub channels: Vec<Template>,
    pub out_types: [ParticleType; 2],
    pub out_ids: [ObjectId; 2],
    pub rows: usize,
    /// Largest |E_out - E_in| over the out rows, with E = √(p² + m²).
    pub max_energy_residual: f64,
}

fn energy(p: f64, m: f64) -> f64 {
    (p * p + m * m).sqrt()
}

/// Removes an in object and every path of it from the state.
fn collapse(state: &mut SystemState, id: &ObjectId, covering: &[usize]) {
    if state.fields.remove(id).is_some() {
        return;
    }
    let Some(pw) = state.particles.remove(id) else {
        return;
    };
    let partners: Vec<ObjectId> = state
        .particles
        .values()
        .filter(|p| p.collection == pw.collection)
        .map(|p| p.id.clone())
        .collect();
    if partners.is_empty() {
        state.collections.remove(&pw.collection);
        return;
    }
    // Partners keep the rows consistent with the interacting path.
    if let Some(c) = state.collections.get_mut(&pw.collection) {
        let rows = std::mem::take(&mut c.rows);
        c.rows = rows
            .into_iter()
            .enumerate()
            .filter(|(i, _)| covering.contains(i))
            .map(|(_, mut r)| {
                r.members.remove(pw.member);
                r
            })
            .collect();
        c.normalize();
    }
    for pid in partners {
        if let Some(p) = state.particles.get_mut(&pid) {
            if p.member > pw.member {
                p.member -= 1;
            }
        }
    }
}

/// Step 3. Picks one out-type pair (a weighted draw when several survive),
/// removes the in objects and installs the two out particles on one shared
/// path table.
pub fn generate_out_pw(
    state: &mut SystemState,
    obj: &InteractionObject,
    mut merged: Vec<([ParticleType; 2], MergedChannels)>,
    cfg: &InteractionConfig,
) -> Result<InteractionEvent, InteractionError> {
    if merged.is_empty() {
        return Err(InteractionError::NoInteractionResult);
    }
    let pick = if merged.len() == 1 {
        0
    } else {
        let w: Vec<f64> = merged.iter().map(|(_, m)| m.weight).collect();
        state.rng.weighted_index(&w).ok_or(InteractionError::AllZeroWeights)?
    };
    let (out_types, chosen) = merged.swap_remove(pick);

    let in_energy: f64 = obj
        .table
        .rows
        .iter()
        .map(|r| {
            let e: f64 = r.members.iter().map(|m| energy(m.p, cfg.mass_of(m.kind))).sum();
            e * r.amplitude.norm_sqr()
        })
        .sum();
    let max_energy_residual = chosen
        .collection
        .rows
        .iter()
        .map(|r| {
            let e: f64 = r.members.iter().map(|m| energy(m.p, cfg.mass_of(m.kind))).sum();
            (e - in_energy).abs()
        })
        .fold(0.0, f64::max);
    debug!("interaction at cell {}: max energy residual {max_energy_residual:e}", obj.cell);

    for (k, id) in obj.in_ids.iter().enumerate() {
        collapse(state, id, &obj.covering_paths[k]);
    }
    let rows = chosen.collection.rows.len();
    let kinds = chosen.collection.columns();
    let cid = state.add_collection(chosen.collection);
    let mut out_ids = Vec::new();
    for (member, kind) in kinds.into_iter().enumerate() {
        let id = state.fresh_object_id("out");
        state.particles.insert(
            id.clone(),
            ParticleWave {
                id: id.clone(),
                kind,
                mass: cfg.mass_of(kind),
                relativistic: cfg.relativistic,
                tau: 0.0,
                collection: cid,
                member,
                dynamics: Dynamics::Free,
            },
        );
        out_ids.push(id);
    }
    rebuild_occupancy(state);
    let [a, b]: [ObjectId; 2] = out_ids
        .try_into()
        .map_err(|_| InteractionError::ContractViolation("out table must have two members".into()))?;
    Ok(InteractionEvent {
        tick: state.tick,
        cell: obj.cell,
        in_ids: obj.in_ids.clone(),
        in_types: obj.in_types,
        channels: chosen.templates,
        out_types,
        out_ids: [a, b],
        rows,
        max_energy_residual,
    })
}

/// Steps 1 to 3 for a chosen pair and cell. `Ok(None)` leaves the state
/// untouched: no channels exist or all amplitudes cancelled.
pub fn perform_interaction(
    state: &mut SystemState,
    id1: &ObjectId,
    id2: &ObjectId,
    cell: usize,
    cfg: &InteractionConfig,
) -> Result<Option<InteractionEvent>, InteractionError> {
    let obj = form_interaction_object(state, id1, id2, cell, cfg.hbar).map_err(|e| e.at("interaction object"))?;
    let channels = enumerate_channels((obj.in_types[0], obj.in_types[1]), &cfg.rules, cfg.equivalence);
    if channels.is_empty() {
        info!(
            "no channels for ({}, {}) at cell {cell}; state unchanged",
            obj.in_types[0], obj.in_types[1]
        );
        return Ok(None);
    }
    let processed = process_channels(&obj, &channels, cfg).map_err(|e| e.at("channels"))?;
    let mut groups: BTreeMap<[ParticleType; 2], Vec<(Template, PwCollection)>> = BTreeMap::new();
    for (ch, c) in processed {
        groups.entry(ch.out_pair()).or_default().push((ch.template, c));
    }
    let mut merged = Vec::new();
    for (pair, parts) in groups {
        match merge_channels(&parts, &cfg.signs, cfg.prune_threshold) {
            Ok(m) => merged.push((pair, m)),
            Err(InteractionError::NoInteractionResult) => {
                debug!("out pair ({}, {}) cancelled", pair[0], pair[1]);
            }
            Err(e) => return Err(e.at("merge")),
        }
    }
    if merged.is_empty() {
        info!("interaction at cell {cell} voided: all channel amplitudes cancelled");
        return Ok(None);
    }
    generate_out_pw(state, &obj, merged, cfg).map(Some).map_err(|e| e.at("out generation"))
}

/// Detection, selection and processing of at most one interaction.
pub fn interaction_phase(state: &mut SystemState, cfg: &InteractionConfig) -> Result<Option<InteractionEvent>, InteractionError> {
    let candidates = detect_interaction(state, cfg);
    if candidates.is_empty() {
        return Ok(None);
    }
    let i = select_interaction_cell(&candidates, &mut state.rng)?;
    let c = &candidates[i];
    perform_interaction(state, &c.pair.0, &c.pair.1, c.cell, cfg)
}
