//! Cell ↔ object index.

use std::collections::BTreeSet;

use super::EngineError;
use crate::state::{ObjectId, SystemState};

/// Cells an object covers: |ψ| above the occupancy threshold for fields,
/// the cells of paths with amplitude above it for particles.
pub fn map_object_to_cells(id: &ObjectId, state: &SystemState) -> Result<BTreeSet<usize>, EngineError> {
    let thr = state.occupancy_threshold;
    if let Some(f) = state.fields.get(id) {
        return Ok(f
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > thr)
            .map(|(i, _)| i)
            .collect());
    }
    let paths = state.particle_paths(id).ok_or_else(|| EngineError::UnknownObject(id.clone()))?;
    Ok(paths
        .into_iter()
        .filter(|(_, a)| a.norm() > thr)
        .map(|(x, _)| state.grid.cell_of(x))
        .collect())
}

pub fn objects_at_cell(cell: usize, state: &SystemState) -> Result<&BTreeSet<ObjectId>, EngineError> {
    state.occupancy.get(cell).ok_or(EngineError::UnknownCell(cell))
}

pub fn rebuild_occupancy(state: &mut SystemState) {
    let mut occ = vec![BTreeSet::new(); state.grid.len()];
    for id in state.object_ids() {
        if let Ok(cells) = map_object_to_cells(&id, state) {
            for c in cells {
                occ[c].insert(id.clone());
            }
        }
    }
    state.occupancy = occ;
}

/// Exhaustive check that the index is the exact inverse of the
/// object → cells mapping and holds no unknown ids.
pub fn occupancy_consistent(state: &SystemState) -> bool {
    if state.occupancy.len() != state.grid.len() {
        return false;
    }
    for (cell, ids) in state.occupancy.iter().enumerate() {
        for id in ids {
            match map_object_to_cells(id, state) {
                Ok(cells) if cells.contains(&cell) => {}
                _ => return false,
            }
        }
    }
    state.object_ids().iter().all(|id| {
        map_object_to_cells(id, state)
            .map(|cells| cells.iter().all(|c| state.occupancy[*c].contains(id)))
            .unwrap_or(false)
    })
}
