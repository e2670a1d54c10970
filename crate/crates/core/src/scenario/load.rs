use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};
use toml_edit::{Document, Item, TableLike};

use super::*;
use crate::interaction::Equivalence;

struct Reader<'a> {
    src: &'a str,
    file: String,
    prov: Provenance,
    warnings: Vec<String>,
}

type Res<T> = Result<T, ScenarioError>;

impl<'a> Reader<'a> {
    fn line_col(&self, offset: usize) -> (usize, usize) {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.chars().rev().take_while(|c| *c != '\n').count() + 1;
        (line, col)
    }

    fn loc(&self, span: Option<std::ops::Range<usize>>) -> String {
        match span {
            Some(s) => format!("{}:{}", self.file, self.line_col(s.start).0),
            None => self.file.clone(),
        }
    }

    fn invalid(&self, location: String, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid {
            location,
            message: message.into(),
        }
    }

    fn warn_unknown(&mut self, t: &dyn TableLike, path: &str, known: &[&str]) {
        for (k, _) in t.iter() {
            if !known.contains(&k) {
                let loc = self.loc(t.key(k).and_then(|k| k.span()));
                self.warnings.push(format!("{loc}: unknown key `{path}.{k}` ignored"));
            }
        }
    }

    /// Records provenance and returns the item under `key`.
    fn item<'t>(&mut self, t: &'t dyn TableLike, path: &str, key: &str) -> Option<(&'t Item, String)> {
        let full = format!("{path}.{key}");
        match t.get_key_value(key) {
            Some((k, item)) => {
                let loc = self.loc(k.span());
                self.prov.0.insert(full, loc.clone());
                Some((item, loc))
            }
            None => {
                self.prov.0.insert(full, "default".to_string());
                None
            }
        }
    }

    fn f64(&mut self, t: &dyn TableLike, path: &str, key: &str) -> Res<Option<f64>> {
        match self.item(t, path, key) {
            None => Ok(None),
            Some((item, loc)) => item
                .as_float()
                .or_else(|| item.as_integer().map(|i| i as f64))
                .map(Some)
                .ok_or_else(|| self.invalid(loc, format!("`{path}.{key}` must be a number"))),
        }
    }

    fn f64_or(&mut self, t: &dyn TableLike, path: &str, key: &str, default: f64) -> Res<f64> {
        Ok(self.f64(t, path, key)?.unwrap_or(default))
    }

    fn u64(&mut self, t: &dyn TableLike, path: &str, key: &str) -> Res<Option<u64>> {
        match self.item(t, path, key) {
            None => Ok(None),
            Some((item, loc)) => match item.as_integer() {
                Some(i) if i >= 0 => Ok(Some(i as u64)),
                _ => Err(self.invalid(loc, format!("`{path}.{key}` must be a non-negative integer"))),
            },
        }
    }

    fn bool_or(&mut self, t: &dyn TableLike, path: &str, key: &str, default: bool) -> Res<bool> {
        match self.item(t, path, key) {
            None => Ok(default),
            Some((item, loc)) => item
                .as_bool()
                .ok_or_else(|| self.invalid(loc, format!("`{path}.{key}` must be true or false"))),
        }
    }

    fn str(&mut self, t: &dyn TableLike, path: &str, key: &str) -> Res<Option<(String, String)>> {
        match self.item(t, path, key) {
            None => Ok(None),
            Some((item, loc)) => match item.as_str() {
                Some(s) => Ok(Some((s.to_string(), loc))),
                None => Err(self.invalid(loc, format!("`{path}.{key}` must be a string"))),
            },
        }
    }

    /// A string option mapped through `parse`.
    fn choice<T>(
        &mut self,
        t: &dyn TableLike,
        path: &str,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Res<T> {
        match self.str(t, path, key)? {
            None => Ok(default),
            Some((s, loc)) => parse(&s).ok_or_else(|| self.invalid(loc, format!("`{path}.{key}`: unknown value `{s}`"))),
        }
    }

    fn table<'t>(&mut self, root: &'t dyn TableLike, name: &str) -> Res<Option<&'t dyn TableLike>> {
        match root.get_key_value(name) {
            None => Ok(None),
            Some((k, item)) => {
                let loc = self.loc(k.span().or_else(|| item.span()));
                self.prov.0.insert(name.to_string(), loc.clone());
                item.as_table_like()
                    .map(Some)
                    .ok_or_else(|| self.invalid(loc, format!("`{name}` must be a table")))
            }
        }
    }

    /// `[prefix.NAME]` tables in name order.
    fn named_tables<'t>(&mut self, root: &'t dyn TableLike, prefix: &str) -> Res<Vec<(String, &'t dyn TableLike)>> {
        let Some(group) = self.table(root, prefix)? else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for (name, item) in group.iter() {
            let path = format!("{prefix}.{name}");
            let loc = self.loc(group.key(name).and_then(|k| k.span()).or_else(|| item.span()));
            self.prov.0.insert(path.clone(), loc.clone());
            let t = item
                .as_table_like()
                .ok_or_else(|| self.invalid(loc, format!("`{path}` must be a table")))?;
            out.push((name.to_string(), t));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    fn particle_type(&mut self, t: &dyn TableLike, path: &str) -> Res<ParticleType> {
        self.choice(t, path, "type", ParticleType::Generic, ParticleType::parse)
    }

    fn model(&mut self, root: &dyn TableLike) -> Res<Model> {
        let Some(t) = self.table(root, "model")? else {
            return Err(self.invalid(self.file.clone(), "missing [model] table"));
        };
        self.warn_unknown(t, "model", &["lagrangian", "equation"]);
        let l = self.str(t, "model", "lagrangian")?;
        let e = self.str(t, "model", "equation")?;
        match (l, e) {
            (Some((l, _)), None) => Ok(Model::Lagrangian(l)),
            (None, Some((e, _))) => Ok(Model::Equation(e)),
            (Some(_), Some((_, loc))) => Err(self.invalid(loc, "give either `lagrangian` or `equation`, not both")),
            (None, None) => Err(self.invalid(self.prov.locate("model"), "[model] needs `lagrangian` or `equation`")),
        }
    }

    fn constants(&mut self, root: &dyn TableLike) -> Res<BTreeMap<String, ConstantSpec>> {
        let mut out = BTreeMap::new();
        let Some(t) = self.table(root, "constants")? else {
            return Ok(out);
        };
        for (name, item) in t.iter() {
            let path = format!("constants.{name}");
            let loc = self.loc(t.key(name).and_then(|k| k.span()));
            self.prov.0.insert(path.clone(), loc.clone());
            let spec = if let Some(inner) = item.as_table_like() {
                self.warn_unknown(inner, &path, &["value", "unit", "complex"]);
                let value = self
                    .f64(inner, &path, "value")?
                    .ok_or_else(|| self.invalid(loc.clone(), format!("`{path}` needs a `value`")))?;
                ConstantSpec {
                    value,
                    unit: self.str(inner, &path, "unit")?.map(|s| s.0).unwrap_or_default(),
                    complex: self.bool_or(inner, &path, "complex", false)?,
                }
            } else {
                let value = item
                    .as_float()
                    .or_else(|| item.as_integer().map(|i| i as f64))
                    .ok_or_else(|| self.invalid(loc.clone(), format!("`{path}` must be a number")))?;
                ConstantSpec {
                    value,
                    unit: String::new(),
                    complex: false,
                }
            };
            out.insert(crate::dsl::parse::canonical_name(name), spec);
        }
        Ok(out)
    }

    fn grid(&mut self, root: &dyn TableLike) -> Res<Option<GridSpec>> {
        let Some(t) = self.table(root, "grid")? else {
            return Ok(None);
        };
        self.warn_unknown(t, "grid", &["cells", "dx", "origin", "boundary"]);
        let extents = match self.item(t, "grid", "cells") {
            None => return Err(self.invalid(self.prov.locate("grid"), "[grid] needs `cells`")),
            Some((item, loc)) => {
                let bad = || self.invalid(loc.clone(), "`grid.cells` must be a positive integer or a list of one or two");
                if let Some(n) = item.as_integer() {
                    vec![usize::try_from(n).map_err(|_| bad())?]
                } else if let Some(a) = item.as_array() {
                    let mut v = Vec::new();
                    for x in a.iter() {
                        v.push(x.as_integer().and_then(|n| usize::try_from(n).ok()).ok_or_else(bad)?);
                    }
                    if v.is_empty() || v.len() > 2 {
                        return Err(bad());
                    }
                    v
                } else {
                    return Err(bad());
                }
            }
        };
        let dx = self
            .f64(t, "grid", "dx")?
            .ok_or_else(|| self.invalid(self.prov.locate("grid"), "[grid] needs `dx`"))?;
        Ok(Some(GridSpec {
            extents,
            dx,
            origin: self.f64(t, "grid", "origin")?,
            boundary: self.choice(t, "grid", "boundary", Boundary::Periodic, Boundary::parse)?,
        }))
    }

    fn run(&mut self, root: &dyn TableLike) -> Res<RunSpec> {
        let d = RunSpec::default();
        let empty = toml_edit::Table::new();
        let t = match self.table(root, "run")? {
            Some(t) => t,
            None => &empty,
        };
        let p = "run";
        self.warn_unknown(
            t,
            p,
            &[
                "dt",
                "ticks",
                "max_time",
                "stop_below",
                "seed",
                "snapshot_every",
                "mode",
                "history",
                "norm_guard",
                "allow_unstable",
            ],
        );
        Ok(RunSpec {
            dt: self.f64(t, p, "dt")?,
            ticks: self.u64(t, p, "ticks")?,
            max_time: self.f64(t, p, "max_time")?,
            stop_below: self.f64(t, p, "stop_below")?,
            seed: self.u64(t, p, "seed")?.unwrap_or(d.seed),
            snapshot_every: self.u64(t, p, "snapshot_every")?.unwrap_or(d.snapshot_every),
            mode: self.choice(t, p, "mode", d.mode, SchrodingerMode::parse)?,
            history: self.choice(t, p, "history", d.history, HistoryPolicy::parse)?,
            norm_guard: self.f64_or(t, p, "norm_guard", d.norm_guard)?,
            allow_unstable: self.bool_or(t, p, "allow_unstable", d.allow_unstable)?,
        })
    }

    fn field(&mut self, name: String, t: &dyn TableLike) -> Res<FieldSpec> {
        let p = format!("field.{name}");
        let p = p.as_str();
        self.warn_unknown(
            t,
            p,
            &[
                "type",
                "profile",
                "amplitude",
                "center",
                "center_y",
                "width",
                "wavenumber",
                "phase",
                "value",
                "mode",
                "velocity",
                "normalize",
            ],
        );
        let kind = self.particle_type(t, p)?;
        let (profile_name, loc) = self
            .str(t, p, "profile")?
            .ok_or_else(|| self.invalid(self.prov.locate(p), format!("`{p}` needs a `profile`")))?;
        let profile = match profile_name.as_str() {
            "gaussian" => Profile::Gaussian {
                amplitude: self.f64_or(t, p, "amplitude", 1.0)?,
                center: self.f64_or(t, p, "center", 0.0)?,
                center_y: self.f64_or(t, p, "center_y", 0.0)?,
                width: self.f64_or(t, p, "width", 1.0)?,
                wavenumber: self.f64_or(t, p, "wavenumber", 0.0)?,
            },
            "sine" => Profile::Sine {
                amplitude: self.f64_or(t, p, "amplitude", 1.0)?,
                wavenumber: self.f64_or(t, p, "wavenumber", 1.0)?,
                phase: self.f64_or(t, p, "phase", 0.0)?,
            },
            "constant" => Profile::Constant {
                value: self.f64_or(t, p, "value", 1.0)?,
            },
            "impulse" => Profile::Impulse {
                amplitude: self.f64_or(t, p, "amplitude", 1.0)?,
                center: self.f64_or(t, p, "center", 0.0)?,
            },
            "well_mode" => Profile::WellMode {
                amplitude: self.f64_or(t, p, "amplitude", 1.0)?,
                mode: self.u64(t, p, "mode")?.unwrap_or(1) as u32,
            },
            other => return Err(self.invalid(loc, format!("`{p}.profile`: unknown profile `{other}`"))),
        };
        Ok(FieldSpec {
            name,
            kind,
            profile,
            velocity: self.choice(t, p, "velocity", InitialVelocity::Zero, InitialVelocity::parse)?,
            normalize: self.bool_or(t, p, "normalize", false)?,
        })
    }

    fn particle(&mut self, name: String, t: &dyn TableLike) -> Res<ParticleSpec> {
        let p = format!("particle.{name}");
        let p = p.as_str();
        self.warn_unknown(
            t,
            p,
            &[
                "type",
                "x",
                "velocity",
                "momentum",
                "spin",
                "mass",
                "relativistic",
                "paths",
                "spread",
                "dynamics",
            ],
        );
        let paths = self.u64(t, p, "paths")?.unwrap_or(1) as usize;
        Ok(ParticleSpec {
            name,
            kind: self.particle_type(t, p)?,
            x: self.f64_or(t, p, "x", 0.0)?,
            velocity: self.f64(t, p, "velocity")?,
            momentum: self.f64(t, p, "momentum")?,
            spin: self.f64(t, p, "spin")?,
            mass: self.f64(t, p, "mass")?,
            relativistic: self.bool_or(t, p, "relativistic", false)?,
            paths,
            spread: self.f64_or(t, p, "spread", 1.0)?,
            dynamics: self.choice(t, p, "dynamics", Dynamics::Law, |s| match s {
                "law" => Some(Dynamics::Law),
                "free" => Some(Dynamics::Free),
                _ => None,
            })?,
        })
    }

    fn potential(&mut self, root: &dyn TableLike) -> Res<PotentialSpec> {
        let Some(t) = self.table(root, "potential")? else {
            return Ok(PotentialSpec::None);
        };
        let p = "potential";
        self.warn_unknown(t, p, &["kind", "force", "k", "center", "value", "height", "left", "right"]);
        let (kind, loc) = self.str(t, p, "kind")?.unwrap_or(("none".to_string(), "default".to_string()));
        Ok(match kind.as_str() {
            "none" => PotentialSpec::None,
            "force" => PotentialSpec::Force(self.f64_or(t, p, "force", 0.0)?),
            "harmonic" => PotentialSpec::Harmonic {
                k: self.f64_or(t, p, "k", 1.0)?,
                center: self.f64_or(t, p, "center", 0.0)?,
            },
            "constant" => PotentialSpec::Constant(self.f64_or(t, p, "value", 0.0)?),
            "barrier" => PotentialSpec::Barrier {
                height: self.f64_or(t, p, "height", 1.0)?,
                left: self.f64_or(t, p, "left", 0.0)?,
                right: self.f64_or(t, p, "right", 1.0)?,
            },
            other => return Err(self.invalid(loc, format!("`potential.kind`: unknown kind `{other}`"))),
        })
    }

    fn interaction(&mut self, root: &dyn TableLike) -> Res<Option<InteractionSpec>> {
        let Some(t) = self.table(root, "interaction")? else {
            return Ok(None);
        };
        let p = "interaction";
        self.warn_unknown(
            t,
            p,
            &[
                "pairs",
                "rules",
                "coupling",
                "granularity",
                "window",
                "equivalence",
                "signs",
                "occupancy_threshold",
                "prune_threshold",
                "lepton_mass",
                "relativistic",
            ],
        );
        let d = InteractionSpec::default();
        let mut pairs = Vec::new();
        if let Some((item, loc)) = self.item(t, p, "pairs") {
            let bad = || self.invalid(loc.clone(), "`interaction.pairs` must be a list of [id, id] pairs");
            for entry in item.as_array().ok_or_else(bad)?.iter() {
                let pair = entry.as_array().ok_or_else(bad)?;
                let ids: Vec<&str> = pair.iter().filter_map(|v| v.as_str()).collect();
                if ids.len() != 2 || pair.len() != 2 {
                    return Err(bad());
                }
                pairs.push((ids[0].to_string(), ids[1].to_string()));
            }
        }
        let mut signs = Vec::new();
        if let Some((item, loc)) = self.item(t, p, "signs") {
            let bad = || self.invalid(loc.clone(), "`interaction.signs` entries look like [\"T1\", \"T2\", -1]");
            for entry in item.as_array().ok_or_else(bad)?.iter() {
                let e = entry.as_array().ok_or_else(bad)?;
                if e.len() != 3 {
                    return Err(bad());
                }
                let a = e.get(0).and_then(|v| v.as_str()).and_then(Template::parse).ok_or_else(bad)?;
                let b = e.get(1).and_then(|v| v.as_str()).and_then(Template::parse).ok_or_else(bad)?;
                let s = e
                    .get(2)
                    .and_then(|v| v.as_integer().map(|i| i as f64).or_else(|| v.as_float()))
                    .ok_or_else(bad)?;
                signs.push((a, b, s));
            }
        }
        Ok(Some(InteractionSpec {
            pairs,
            rules: self.str(t, p, "rules")?.map(|s| s.0).unwrap_or(d.rules),
            coupling: self.f64_or(t, p, "coupling", d.coupling)?,
            granularity: self.u64(t, p, "granularity")?.map_or(d.granularity, |n| n as usize),
            window: self.f64_or(t, p, "window", d.window)?,
            equivalence: self.choice(t, p, "equivalence", d.equivalence, Equivalence::parse)?,
            signs,
            occupancy_threshold: self.f64_or(t, p, "occupancy_threshold", d.occupancy_threshold)?,
            prune_threshold: self.f64_or(t, p, "prune_threshold", d.prune_threshold)?,
            lepton_mass: self.f64_or(t, p, "lepton_mass", d.lepton_mass)?,
            relativistic: self.bool_or(t, p, "relativistic", d.relativistic)?,
        }))
    }
}

/// Parses scenario text. `file` names the source in locations.
pub fn parse_scenario(src: &str, file: &str) -> Result<LoadedScenario, ScenarioError> {
    let doc = Document::parse(src).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| {
            let before = &src[..s.start.min(src.len())];
            (
                before.matches('\n').count() + 1,
                before.chars().rev().take_while(|c| *c != '\n').count() + 1,
            )
        });
        ScenarioError::Parse {
            file: file.to_string(),
            line,
            col,
            message: e.message().trim().to_string(),
        }
    })?;
    let mut r = Reader {
        src,
        file: file.to_string(),
        prov: Provenance::default(),
        warnings: Vec::new(),
    };
    r.prov.0.insert(String::new(), file.to_string());
    let root = doc.as_table();
    r.warn_unknown(
        root,
        "",
        &["model", "constants", "grid", "run", "field", "particle", "potential", "interaction"],
    );
    let model = r.model(root)?;
    let constants = r.constants(root)?;
    let grid = r.grid(root)?;
    let run = r.run(root)?;
    let mut fields = Vec::new();
    for (name, t) in r.named_tables(root, "field")? {
        fields.push(r.field(name, t)?);
    }
    let mut particles = Vec::new();
    for (name, t) in r.named_tables(root, "particle")? {
        particles.push(r.particle(name, t)?);
    }
    let potential = r.potential(root)?;
    let interaction = r.interaction(root)?;
    let digest = Sha256::digest(src.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(LoadedScenario {
        scenario: Scenario {
            model,
            constants,
            grid,
            run,
            fields,
            particles,
            potential,
            interaction,
        },
        provenance: r.prov,
        warnings: r.warnings,
        digest,
    })
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, ScenarioError> {
    let src = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&src, &path.display().to_string())
}
