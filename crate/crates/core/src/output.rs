//! Run records, snapshot files and plot data.
//!
//! Snapshot files are comma-separated with the header
//! `tick,t,object,cell,x,re,im,abs2`, one row per (object, cell) or, for
//! particles, per path. Reals are written as `{:.16e}`: 17 significant
//! digits, no locale dependence.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;
use toml_edit::{value, DocumentMut, Item, Table};

use crate::engine::init::Simulation;
use crate::engine::{snapshot, RunOutcome, Snapshot};
use crate::grid::Boundary;
use crate::interaction::InteractionEvent;
use crate::scenario::{HistoryPolicy, Scenario};
use crate::state::{ObjectId, SystemState};
use crate::stencil::{Family, SchrodingerMode};

pub const SNAPSHOT_HEADER: [&str; 8] = ["tick", "t", "object", "cell", "x", "re", "im", "abs2"];
pub const PLOT_HEADER: [&str; 6] = ["object", "kind", "tick", "t", "coord", "value"];
pub const EVENT_HEADER: [&str; 8] = ["tick", "cell", "in_ids", "in_types", "channels", "out_types", "out_ids", "rows"];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed snapshot row {row}: {message}")]
    Malformed { row: usize, message: String },
}

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectSummary {
    pub id: ObjectId,
    pub kind: String,
    /// Σ|ψ|²·Δx^d for fields, Σ|a|² for particles.
    pub norm2: f64,
    /// Probability-weighted mean position.
    pub mean_x: f64,
}

pub fn summarize(state: &SystemState) -> Vec<ObjectSummary> {
    let vol = state.grid.dx.powi(state.grid.dims() as i32);
    let mut out = Vec::new();
    for id in state.object_ids() {
        let (weights, kind): (Vec<(f64, f64)>, _) = if let Some(f) = state.fields.get(&id) {
            let w = f
                .values
                .iter()
                .enumerate()
                .map(|(c, v)| (state.grid.x(c), v.norm_sqr() * vol))
                .collect();
            (w, f.kind)
        } else {
            let w = state
                .particle_paths(&id)
                .unwrap_or_default()
                .into_iter()
                .map(|(x, a)| (x, a.norm_sqr()))
                .collect();
            (w, state.object_type(&id).unwrap_or(crate::state::ParticleType::Generic))
        };
        let norm2: f64 = weights.iter().map(|w| w.1).sum();
        let mean_x = if norm2 > 0.0 {
            weights.iter().map(|(x, w)| x * w).sum::<f64>() / norm2
        } else {
            0.0
        };
        out.push(ObjectSummary {
            id,
            kind: kind.name().to_string(),
            norm2,
            mean_x,
        });
    }
    out
}

/// Everything a run produced, with the settings needed to reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub digest: String,
    pub seed: u64,
    pub family: Family,
    pub mode: SchrodingerMode,
    pub boundary: Boundary,
    pub history: HistoryPolicy,
    pub dt: f64,
    pub snapshot_every: u64,
    /// Command-line overrides as (key, value).
    pub overrides: Vec<(String, String)>,
    pub fields: BTreeSet<ObjectId>,
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<InteractionEvent>,
    pub final_tick: u64,
    pub final_time: f64,
    pub summary: Vec<ObjectSummary>,
}

impl RunRecord {
    /// A record for `sim` before it runs. The seed is the one in the state.
    pub fn start(digest: &str, scenario: &Scenario, sim: &Simulation) -> RunRecord {
        RunRecord {
            digest: digest.to_string(),
            seed: scenario.run.seed,
            family: sim.engine.program.family,
            mode: sim.engine.mode,
            boundary: sim.state.grid.boundary,
            history: scenario.run.history,
            dt: sim.engine.dt,
            snapshot_every: sim.cadence,
            overrides: Vec::new(),
            fields: sim.state.fields.keys().cloned().collect(),
            snapshots: Vec::new(),
            events: Vec::new(),
            final_tick: 0,
            final_time: 0.0,
            summary: Vec::new(),
        }
    }

    pub fn finish(&mut self, outcome: RunOutcome, state: &SystemState) {
        self.snapshots = outcome.snapshots;
        self.events = outcome.events;
        self.final_tick = state.tick;
        self.final_time = state.time;
        self.summary = summarize(state);
    }
}

fn snapshot_rows<W: Write>(w: &mut csv::Writer<W>, s: &Snapshot) -> Result<(), csv::Error> {
    for r in &s.rows {
        w.write_record([
            s.tick.to_string(),
            real(s.time),
            r.object.to_string(),
            r.cell.to_string(),
            real(r.x),
            real(r.value.re),
            real(r.value.im),
            real(r.value.norm_sqr()),
        ])?;
    }
    Ok(())
}

/// Header plus one block per snapshot.
pub fn write_snapshots<W: Write>(snaps: &[Snapshot], sink: W) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SNAPSHOT_HEADER)?;
    for s in snaps {
        snapshot_rows(&mut w, s)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Header plus the block of the current state.
pub fn write_snapshot<W: Write>(state: &SystemState, sink: W) -> Result<(), OutputError> {
    write_snapshots(&[snapshot(state)], sink)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotLine {
    pub tick: u64,
    pub t: f64,
    pub object: String,
    pub cell: usize,
    pub x: f64,
    pub value: Complex64,
    pub abs2: f64,
}

pub fn read_snapshots<R: Read>(src: R) -> Result<Vec<SnapshotLine>, OutputError> {
    let mut rd = csv::Reader::from_reader(src);
    let header = rd.headers()?.clone();
    if header.iter().ne(SNAPSHOT_HEADER) {
        return Err(OutputError::Malformed {
            row: 0,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| OutputError::Malformed {
            row: n + 1,
            message: format!("bad {what}"),
        };
        let f = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(what));
        out.push(SnapshotLine {
            tick: rec[0].parse().map_err(|_| bad("tick"))?,
            t: f(1, "t")?,
            object: rec[2].to_string(),
            cell: rec[3].parse().map_err(|_| bad("cell"))?,
            x: f(4, "x")?,
            value: Complex64::new(f(5, "re")?, f(6, "im")?),
            abs2: f(7, "abs2")?,
        });
    }
    Ok(out)
}

/// Per-object series: one `particle` row per snapshot with the mean
/// position in `coord` and Σ|a|² in `value`; `field` rows give |ψ|² at
/// each cell position.
pub fn emit_plot_data<W: Write>(record: &RunRecord, sink: W) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(PLOT_HEADER)?;
    for s in &record.snapshots {
        let mut i = 0;
        while i < s.rows.len() {
            let id = &s.rows[i].object;
            let j = i + s.rows[i..].iter().take_while(|r| &r.object == id).count();
            let block = &s.rows[i..j];
            if record.fields.contains(id) {
                for r in block {
                    w.write_record([
                        id.to_string(),
                        "field".to_string(),
                        s.tick.to_string(),
                        real(s.time),
                        real(r.x),
                        real(r.value.norm_sqr()),
                    ])?;
                }
            } else {
                let n2: f64 = block.iter().map(|r| r.value.norm_sqr()).sum();
                let mean = if n2 > 0.0 {
                    block.iter().map(|r| r.x * r.value.norm_sqr()).sum::<f64>() / n2
                } else {
                    0.0
                };
                w.write_record([
                    id.to_string(),
                    "particle".to_string(),
                    s.tick.to_string(),
                    real(s.time),
                    real(mean),
                    real(n2),
                ])?;
            }
            i = j;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_events<W: Write>(events: &[InteractionEvent], sink: W) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(EVENT_HEADER)?;
    let join = |v: &[String]| v.join(";");
    for e in events {
        w.write_record([
            e.tick.to_string(),
            e.cell.to_string(),
            join(&e.in_ids.iter().map(|i| i.to_string()).collect::<Vec<_>>()),
            join(&e.in_types.iter().map(|t| t.to_string()).collect::<Vec<_>>()),
            join(&e.channels.iter().map(|t| t.to_string()).collect::<Vec<_>>()),
            join(&e.out_types.iter().map(|t| t.to_string()).collect::<Vec<_>>()),
            join(&e.out_ids.iter().map(|i| i.to_string()).collect::<Vec<_>>()),
            e.rows.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Run metadata and final-state summary as TOML.
pub fn record_metadata(record: &RunRecord) -> String {
    let mut doc = DocumentMut::new();
    let mut run = Table::new();
    run["digest"] = value(record.digest.as_str());
    run["seed"] = value(record.seed as i64);
    run["family"] = value(record.family.name());
    run["mode"] = value(record.mode.name());
    run["boundary"] = value(record.boundary.name());
    run["history"] = value(record.history.name());
    run["dt"] = value(real(record.dt));
    run["snapshot_every"] = value(record.snapshot_every as i64);
    run["snapshots"] = value(record.snapshots.len() as i64);
    run["events"] = value(record.events.len() as i64);
    run["final_tick"] = value(record.final_tick as i64);
    run["final_time"] = value(real(record.final_time));
    doc["run"] = Item::Table(run);
    let mut ov = Table::new();
    for (k, v) in &record.overrides {
        ov[k.as_str()] = value(v.as_str());
    }
    doc["overrides"] = Item::Table(ov);
    let mut fin = Table::new();
    fin.set_implicit(true);
    for s in &record.summary {
        let mut t = Table::new();
        t["kind"] = value(s.kind.as_str());
        t["norm2"] = value(real(s.norm2));
        t["mean_x"] = value(real(s.mean_x));
        fin[s.id.0.as_str()] = Item::Table(t);
    }
    doc["final"] = Item::Table(fin);
    doc.to_string()
}

pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const PLOT_FILE: &str = "plot.csv";
pub const EVENT_FILE: &str = "events.csv";
pub const RECORD_FILE: &str = "record.toml";

/// Writes the four output files into `dir`, creating it if needed.
pub fn write_run_files(record: &RunRecord, dir: &Path) -> Result<(), OutputError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| OutputError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let create = |name: &str| {
        let p = dir.join(name);
        fs::File::create(&p).map(std::io::BufWriter::new).map_err(io(&p))
    };
    write_snapshots(&record.snapshots, create(SNAPSHOT_FILE)?)?;
    emit_plot_data(record, create(PLOT_FILE)?)?;
    write_events(&record.events, create(EVENT_FILE)?)?;
    let p = dir.join(RECORD_FILE);
    fs::write(&p, record_metadata(record)).map_err(io(&p))?;
    Ok(())
}
