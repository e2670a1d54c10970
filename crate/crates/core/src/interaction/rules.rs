//! Vertex rules for split and combine.

use std::fmt;

use crate::state::ParticleType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKind {
    Split,
    Combine,
}

/// Sign applied when channels built on this vertex are merged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignTag {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexRule {
    pub kind: VertexKind,
    pub inputs: Vec<ParticleType>,
    pub outputs: Vec<ParticleType>,
    pub coupling: f64,
    pub sign: SignTag,
    /// Entries kept for completeness that never take part in channels.
    pub enabled: bool,
}

impl VertexRule {
    pub fn split(parent: ParticleType, b: ParticleType, c: ParticleType, coupling: f64) -> VertexRule {
        VertexRule {
            kind: VertexKind::Split,
            inputs: vec![parent],
            outputs: vec![b, c],
            coupling,
            sign: SignTag::Plus,
            enabled: true,
        }
    }

    pub fn combine(a: ParticleType, b: ParticleType, c: ParticleType, coupling: f64) -> VertexRule {
        VertexRule {
            kind: VertexKind::Combine,
            inputs: vec![a, b],
            outputs: vec![c],
            coupling,
            sign: SignTag::Plus,
            enabled: true,
        }
    }

    /// Whether this split rule applies to `parent`.
    pub fn splits(&self, parent: ParticleType) -> bool {
        self.enabled && self.kind == VertexKind::Split && self.inputs == [parent] && self.outputs.len() == 2
    }

    /// Whether this combine rule takes `a` and `b`, in either order.
    pub fn combines(&self, a: ParticleType, b: ParticleType) -> bool {
        self.enabled
            && self.kind == VertexKind::Combine
            && self.outputs.len() == 1
            && (self.inputs == [a, b] || self.inputs == [b, a])
    }
}

fn list(f: &mut fmt::Formatter<'_>, types: &[ParticleType]) -> fmt::Result {
    for (i, t) in types.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for VertexRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.kind {
            VertexKind::Split => "split(",
            VertexKind::Combine => "combine(",
        })?;
        list(f, &self.inputs)?;
        f.write_str(") -> (")?;
        list(f, &self.outputs)?;
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleTable {
    pub name: String,
    pub rules: Vec<VertexRule>,
}

impl RuleTable {
    /// The eight QED vertex variants. The two that create or annihilate
    /// three particles at once are present but disabled.
    pub fn qed(coupling: f64) -> RuleTable {
        use ParticleType::*;
        let g = coupling;
        let mut rules = vec![
            VertexRule::combine(Electron, Photon, Electron, g),
            VertexRule::combine(Positron, Photon, Positron, g),
            VertexRule::split(Photon, Electron, Positron, g),
            VertexRule::split(Electron, Electron, Photon, g),
            VertexRule::split(Positron, Positron, Photon, g),
            VertexRule::combine(Electron, Positron, Photon, g),
        ];
        let three = vec![Electron, Positron, Photon];
        rules.insert(
            2,
            VertexRule {
                kind: VertexKind::Combine,
                inputs: three.clone(),
                outputs: vec![],
                coupling: g,
                sign: SignTag::Plus,
                enabled: false,
            },
        );
        rules.push(VertexRule {
            kind: VertexKind::Split,
            inputs: vec![],
            outputs: three,
            coupling: g,
            sign: SignTag::Plus,
            enabled: false,
        });
        RuleTable {
            name: "qed".to_string(),
            rules,
        }
    }

    pub fn by_name(name: &str, coupling: f64) -> Option<RuleTable> {
        match name {
            "qed" => Some(RuleTable::qed(coupling)),
            _ => None,
        }
    }

    pub fn enabled(&self) -> impl Iterator<Item = &VertexRule> {
        self.rules.iter().filter(|r| r.enabled)
    }
}

/// Spin assigned to a particle of the given type on every generated path.
pub fn canonical_spin(kind: ParticleType) -> f64 {
    match kind {
        ParticleType::Electron | ParticleType::Positron => 0.5,
        ParticleType::Photon => 1.0,
        ParticleType::Generic => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ParticleType::*;

    #[test]
    fn qed_table_has_eight_variants() {
        let t = RuleTable::qed(0.3);
        assert_eq!(t.rules.len(), 8);
        assert_eq!(t.enabled().count(), 6);
        assert_eq!(t.rules.iter().filter(|r| r.kind == VertexKind::Split).count(), 4);
        assert_eq!(t.rules.iter().filter(|r| r.kind == VertexKind::Combine).count(), 4);
        assert!(t.enabled().any(|r| r.splits(Photon) && r.outputs == [Electron, Positron]));
        assert!(t.enabled().any(|r| r.combines(Photon, Electron) && r.outputs == [Electron]));
    }

    #[test]
    fn display() {
        assert_eq!(
            VertexRule::split(Photon, Electron, Positron, 1.0).to_string(),
            "split(gamma) -> (e-, e+)"
        );
    }
}
