use toml_edit::{value, Array, DocumentMut, InlineTable, Item, Table, Value};

use super::*;

fn put_opt<T: Into<Value>>(t: &mut Table, key: &str, v: Option<T>) {
    if let Some(v) = v {
        t[key] = value(v);
    }
}

fn field_table(f: &FieldSpec) -> Table {
    let mut t = Table::new();
    t["type"] = value(f.kind.long_name());
    t["profile"] = value(f.profile.name());
    match &f.profile {
        Profile::Gaussian {
            amplitude,
            center,
            center_y,
            width,
            wavenumber,
        } => {
            t["amplitude"] = value(*amplitude);
            t["center"] = value(*center);
            t["center_y"] = value(*center_y);
            t["width"] = value(*width);
            t["wavenumber"] = value(*wavenumber);
        }
        Profile::Sine {
            amplitude,
            wavenumber,
            phase,
        } => {
            t["amplitude"] = value(*amplitude);
            t["wavenumber"] = value(*wavenumber);
            t["phase"] = value(*phase);
        }
        Profile::Constant { value: v } => t["value"] = value(*v),
        Profile::Impulse { amplitude, center } => {
            t["amplitude"] = value(*amplitude);
            t["center"] = value(*center);
        }
        Profile::WellMode { amplitude, mode } => {
            t["amplitude"] = value(*amplitude);
            t["mode"] = value(i64::from(*mode));
        }
    }
    t["velocity"] = value(f.velocity.name());
    t["normalize"] = value(f.normalize);
    t
}

fn particle_table(p: &ParticleSpec) -> Table {
    let mut t = Table::new();
    t["type"] = value(p.kind.long_name());
    t["x"] = value(p.x);
    put_opt(&mut t, "velocity", p.velocity);
    put_opt(&mut t, "momentum", p.momentum);
    put_opt(&mut t, "spin", p.spin);
    put_opt(&mut t, "mass", p.mass);
    t["relativistic"] = value(p.relativistic);
    t["paths"] = value(p.paths as i64);
    t["spread"] = value(p.spread);
    t["dynamics"] = value(match p.dynamics {
        Dynamics::Law => "law",
        Dynamics::Free => "free",
    });
    t
}

/// Serialises a scenario in the format read by [`parse_scenario`].
pub fn write_scenario(s: &Scenario) -> String {
    let mut doc = DocumentMut::new();

    let mut model = Table::new();
    match &s.model {
        Model::Lagrangian(l) => model["lagrangian"] = value(l.as_str()),
        Model::Equation(e) => model["equation"] = value(e.as_str()),
    }
    doc["model"] = Item::Table(model);

    if !s.constants.is_empty() {
        let mut t = Table::new();
        for (name, c) in &s.constants {
            if c.unit.is_empty() && !c.complex {
                t[name.as_str()] = value(c.value);
            } else {
                let mut it = InlineTable::new();
                it.insert("value", c.value.into());
                it.insert("unit", c.unit.as_str().into());
                it.insert("complex", c.complex.into());
                t[name.as_str()] = value(it);
            }
        }
        doc["constants"] = Item::Table(t);
    }

    if let Some(g) = &s.grid {
        let mut t = Table::new();
        t["cells"] = if g.extents.len() == 1 {
            value(g.extents[0] as i64)
        } else {
            value(g.extents.iter().map(|&n| n as i64).collect::<Array>())
        };
        t["dx"] = value(g.dx);
        put_opt(&mut t, "origin", g.origin);
        t["boundary"] = value(g.boundary.name());
        doc["grid"] = Item::Table(t);
    }

    let r = &s.run;
    let mut t = Table::new();
    put_opt(&mut t, "dt", r.dt);
    put_opt(&mut t, "ticks", r.ticks.map(|n| n as i64));
    put_opt(&mut t, "max_time", r.max_time);
    put_opt(&mut t, "stop_below", r.stop_below);
    t["seed"] = value(r.seed as i64);
    t["snapshot_every"] = value(r.snapshot_every as i64);
    t["mode"] = value(r.mode.name());
    t["history"] = value(r.history.name());
    t["norm_guard"] = value(r.norm_guard);
    t["allow_unstable"] = value(r.allow_unstable);
    doc["run"] = Item::Table(t);

    if !s.fields.is_empty() {
        let mut group = Table::new();
        group.set_implicit(true);
        for f in &s.fields {
            group[f.name.as_str()] = Item::Table(field_table(f));
        }
        doc["field"] = Item::Table(group);
    }
    if !s.particles.is_empty() {
        let mut group = Table::new();
        group.set_implicit(true);
        for p in &s.particles {
            group[p.name.as_str()] = Item::Table(particle_table(p));
        }
        doc["particle"] = Item::Table(group);
    }

    let mut t = Table::new();
    match &s.potential {
        PotentialSpec::None => {}
        PotentialSpec::Force(f) => {
            t["kind"] = value("force");
            t["force"] = value(*f);
        }
        PotentialSpec::Harmonic { k, center } => {
            t["kind"] = value("harmonic");
            t["k"] = value(*k);
            t["center"] = value(*center);
        }
        PotentialSpec::Constant(v) => {
            t["kind"] = value("constant");
            t["value"] = value(*v);
        }
        PotentialSpec::Barrier { height, left, right } => {
            t["kind"] = value("barrier");
            t["height"] = value(*height);
            t["left"] = value(*left);
            t["right"] = value(*right);
        }
    }
    if !t.is_empty() {
        doc["potential"] = Item::Table(t);
    }

    if let Some(i) = &s.interaction {
        let mut t = Table::new();
        let pairs: Array = i
            .pairs
            .iter()
            .map(|(a, b)| Value::Array([a.as_str(), b.as_str()].into_iter().collect()))
            .collect();
        t["pairs"] = value(pairs);
        t["rules"] = value(i.rules.as_str());
        t["coupling"] = value(i.coupling);
        t["granularity"] = value(i.granularity as i64);
        t["window"] = value(i.window);
        t["equivalence"] = value(i.equivalence.name());
        if !i.signs.is_empty() {
            let signs: Array = i
                .signs
                .iter()
                .map(|(a, b, s)| {
                    let mut e = Array::new();
                    e.push(a.to_string());
                    e.push(b.to_string());
                    e.push(*s);
                    Value::Array(e)
                })
                .collect();
            t["signs"] = value(signs);
        }
        t["occupancy_threshold"] = value(i.occupancy_threshold);
        t["prune_threshold"] = value(i.prune_threshold);
        t["lepton_mass"] = value(i.lepton_mass);
        t["relativistic"] = value(i.relativistic);
        doc["interaction"] = Item::Table(t);
    }

    doc.to_string()
}
