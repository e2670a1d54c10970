//! Path tables.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;

use crate::state::ParticleType;

/// Momenta inside the interaction pipeline are integer multiples of this
/// quantum, so sums and differences are exact.
pub const MOMENTUM_QUANTUM: f64 = 1.0 / 1_048_576.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Momentum(pub i64);

impl Momentum {
    pub fn snap(p: f64) -> Momentum {
        Momentum((p / MOMENTUM_QUANTUM).round() as i64)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 * MOMENTUM_QUANTUM
    }
}

impl Add for Momentum {
    type Output = Momentum;
    fn add(self, o: Momentum) -> Momentum {
        Momentum(self.0 + o.0)
    }
}

impl Sub for Momentum {
    type Output = Momentum;
    fn sub(self, o: Momentum) -> Momentum {
        Momentum(self.0 - o.0)
    }
}

impl Neg for Momentum {
    type Output = Momentum;
    fn neg(self) -> Momentum {
        Momentum(-self.0)
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Attributes of one member particle on one path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MemberState {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub spin: f64,
    pub kind: ParticleType,
}

impl MemberState {
    pub fn momentum(&self) -> Momentum {
        Momentum::snap(self.p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathRow {
    pub members: Vec<MemberState>,
    pub amplitude: Complex64,
}

/// Identity of a row independent of its amplitude.
pub type RowKey = Vec<(ParticleType, Momentum, i8, u64)>;

impl PathRow {
    pub fn key(&self) -> RowKey {
        self.members
            .iter()
            .map(|m| (m.kind, m.momentum(), (2.0 * m.spin).round() as i8, m.x.to_bits()))
            .collect()
    }

    pub fn total_momentum(&self) -> Momentum {
        self.members.iter().map(|m| m.momentum()).fold(Momentum(0), |a, b| a + b)
    }
}

/// N alternative paths, each a tuple of member states with an amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct PwCollection {
    pub rows: Vec<PathRow>,
}

impl PwCollection {
    pub fn single(member: MemberState) -> PwCollection {
        PwCollection {
            rows: vec![PathRow {
                members: vec![member],
                amplitude: Complex64::new(1.0, 0.0),
            }],
        }
    }

    pub fn arity(&self) -> usize {
        self.rows.first().map_or(0, |r| r.members.len())
    }

    pub fn columns(&self) -> Vec<ParticleType> {
        self.rows
            .first()
            .map(|r| r.members.iter().map(|m| m.kind).collect())
            .unwrap_or_default()
    }

    /// Every row has the same arity and member types.
    pub fn is_homogeneous(&self) -> bool {
        let cols = self.columns();
        self.rows
            .iter()
            .all(|r| r.members.len() == cols.len() && r.members.iter().zip(&cols).all(|(m, k)| m.kind == *k))
    }

    pub fn norm2(&self) -> f64 {
        self.rows.iter().map(|r| r.amplitude.norm_sqr()).sum()
    }

    /// Rescales to unit total probability. Returns the norm before scaling,
    /// or `None` (leaving the table untouched) when it is zero.
    pub fn normalize(&mut self) -> Option<f64> {
        let n2 = self.norm2();
        if n2 == 0.0 || !n2.is_finite() {
            return None;
        }
        let s = 1.0 / n2.sqrt();
        for r in &mut self.rows {
            r.amplitude *= s;
        }
        Some(n2)
    }
}
