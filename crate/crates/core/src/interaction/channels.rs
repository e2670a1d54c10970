//! Interaction channels: one split and one combine connecting two in
//! particles to two out particles.

use std::collections::BTreeSet;
use std::fmt;

use super::rules::{RuleTable, VertexRule};
use crate::state::ParticleType;

/// The five ways to arrange one combine and one split on two in legs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    /// combine(pw1, pw2) -> a; split(a) -> (b, c)
    T1,
    /// split(pw1) -> (a, b); combine(a, pw2) -> c
    T2,
    /// split(pw1) -> (a, b); combine(b, pw2) -> c
    T3,
    /// split(pw2) -> (a, b); combine(pw1, a) -> c
    T4,
    /// split(pw2) -> (a, b); combine(pw1, b) -> c
    T5,
}

impl Template {
    pub const ALL: [Template; 5] = [Template::T1, Template::T2, Template::T3, Template::T4, Template::T5];

    pub fn parse(s: &str) -> Option<Template> {
        Template::ALL.into_iter().find(|t| t.to_string().eq_ignore_ascii_case(s))
    }

    /// In leg that is split, for the split-first templates.
    pub fn split_leg(self) -> Option<usize> {
        match self {
            Template::T1 => None,
            Template::T2 | Template::T3 => Some(0),
            Template::T4 | Template::T5 => Some(1),
        }
    }

    /// Which split child is carried into the combine.
    pub fn internal_child(self) -> Option<usize> {
        match self {
            Template::T1 => None,
            Template::T2 | Template::T4 => Some(0),
            Template::T3 | Template::T5 => Some(1),
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", *self as u8 + 1)
    }
}

/// When two channels count as the same.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Equivalence {
    /// Same out types and the same assignment of external legs (in legs by
    /// position, out legs by type) to the two vertices.
    #[default]
    VertexPartition,
    /// Same template bound to the same rules. Never merges distinct
    /// templates.
    RuleBinding,
}

impl Equivalence {
    pub fn parse(s: &str) -> Option<Equivalence> {
        match s {
            "vertex-partition" => Some(Equivalence::VertexPartition),
            "rule-binding" => Some(Equivalence::RuleBinding),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Equivalence::VertexPartition => "vertex-partition",
            Equivalence::RuleBinding => "rule-binding",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Leg {
    In(usize),
    Out(ParticleType),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionChannel {
    pub template: Template,
    pub in_types: [ParticleType; 2],
    pub split: VertexRule,
    pub combine: VertexRule,
    /// Out legs as `(split child leaving the vertex, combine product)`; for
    /// T1 both come from the split.
    pub out_types: [ParticleType; 2],
}

impl InteractionChannel {
    /// Types on both combine inputs, in template operand order.
    pub fn combine_operands(&self) -> [ParticleType; 2] {
        let [p1, p2] = self.in_types;
        match self.template {
            Template::T1 => [p1, p2],
            Template::T2 => [self.split.outputs[0], p2],
            Template::T3 => [self.split.outputs[1], p2],
            Template::T4 => [p1, self.split.outputs[0]],
            Template::T5 => [p1, self.split.outputs[1]],
        }
    }

    /// External legs grouped by vertex, `[split, combine]`.
    pub fn vertex_legs(&self) -> [Vec<Leg>; 2] {
        let [o1, o2] = self.out_types;
        let mut legs = match self.template.split_leg() {
            None => [vec![Leg::Out(o1), Leg::Out(o2)], vec![Leg::In(0), Leg::In(1)]],
            Some(s) => [vec![Leg::In(s), Leg::Out(o1)], vec![Leg::In(1 - s), Leg::Out(o2)]],
        };
        legs.iter_mut().for_each(|v| v.sort());
        legs
    }

    /// Out types in canonical (sorted) order.
    pub fn out_pair(&self) -> [ParticleType; 2] {
        let mut o = self.out_types;
        o.sort();
        o
    }

    fn class_key(&self, eq: Equivalence) -> String {
        match eq {
            Equivalence::VertexPartition => {
                let mut v = self.vertex_legs().to_vec();
                v.sort();
                format!("{:?}|{:?}", self.out_pair(), v)
            }
            Equivalence::RuleBinding => format!("{}|{}|{}", self.template, self.split, self.combine),
        }
    }

    /// Exactly one split and one combine taking two in legs to two out legs.
    pub fn is_well_formed(&self) -> bool {
        let split_ok = self.split.inputs.len() == 1 && self.split.outputs.len() == 2;
        let combine_ok = self.combine.inputs.len() == 2 && self.combine.outputs.len() == 1;
        let legs: Vec<Leg> = self.vertex_legs().into_iter().flatten().collect();
        let ins: BTreeSet<_> = legs.iter().filter(|l| matches!(l, Leg::In(_))).collect();
        let outs = legs.iter().filter(|l| matches!(l, Leg::Out(_))).count();
        split_ok && combine_ok && legs.len() == 4 && ins.len() == 2 && outs == 2
    }
}

impl fmt::Display for InteractionChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c1, c2] = self.combine_operands();
        let split_parent = self.split.inputs[0];
        let (s0, s1) = (self.split.outputs[0], self.split.outputs[1]);
        let combined = self.combine.outputs[0];
        let split = format!("split({split_parent}) -> ({s0}, {s1})");
        let combine = format!("combine({c1}, {c2}) -> ({combined})");
        let [o1, o2] = self.out_types;
        match self.template {
            Template::T1 => write!(f, "{}: {combine}; {split} => ({o1}, {o2})", self.template),
            _ => write!(f, "{}: {split}; {combine} => ({o1}, {o2})", self.template),
        }
    }
}

fn bind(template: Template, in_types: [ParticleType; 2], split: &VertexRule, combine: &VertexRule) -> Option<InteractionChannel> {
    let [p1, p2] = in_types;
    let out_types = match template {
        Template::T1 => {
            if !combine.combines(p1, p2) || !split.splits(combine.outputs[0]) {
                return None;
            }
            [split.outputs[0], split.outputs[1]]
        }
        _ => {
            let leg = template.split_leg()?;
            let internal = template.internal_child()?;
            if !split.splits(in_types[leg]) {
                return None;
            }
            let carried = split.outputs[internal];
            let other = in_types[1 - leg];
            if !combine.combines(carried, other) {
                return None;
            }
            [split.outputs[1 - internal], combine.outputs[0]]
        }
    };
    Some(InteractionChannel {
        template,
        in_types,
        split: split.clone(),
        combine: combine.clone(),
        out_types,
    })
}

/// All channels for the in pair under `rules`, one per equivalence class,
/// in template and rule-table order.
pub fn enumerate_channels(in_types: (ParticleType, ParticleType), rules: &RuleTable, eq: Equivalence) -> Vec<InteractionChannel> {
    let in_types = [in_types.0, in_types.1];
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for template in Template::ALL {
        for split in rules.enabled() {
            for combine in rules.enabled() {
                if let Some(ch) = bind(template, in_types, split, combine) {
                    if seen.insert(ch.class_key(eq)) {
                        out.push(ch);
                    }
                }
            }
        }
    }
    out
}
