//! Functional model of field interactions: detection, interaction objects,
//! channel processing with split/combine, signed merging and collapse into
//! out particles.

pub mod channels;
pub mod collection;
pub mod pipeline;
pub mod rules;

use thiserror::Error;

pub use channels::{enumerate_channels, Equivalence, InteractionChannel, Template};
pub use collection::{MemberState, Momentum, PathRow, PwCollection};
pub use pipeline::{
    apply_combine, apply_split, detect_interaction, form_interaction_object, generate_out_pw, interaction_phase,
    merge_channels, momentum_grid, perform_interaction, process_channels, select_interaction_cell, AmplitudeRule,
    Candidate, InteractionConfig, InteractionEvent, InteractionObject, MergedChannels, SignTable, UniformAmplitude,
};
pub use rules::{RuleTable, VertexKind, VertexRule};

use crate::state::{ObjectId, ParticleType};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum InteractionError {
    #[error("unknown particle type `{0}`")]
    UnknownType(String),
    #[error("unknown object `{0}`")]
    UnknownObject(ObjectId),
    #[error("rule {rule} does not apply to {found}")]
    RuleMismatch { rule: String, found: String },
    #[error("path granularity must be at least 1")]
    Granularity,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("all candidate weights are zero")]
    AllZeroWeights,
    #[error("no channels for ({0}, {1})")]
    NoChannels(ParticleType, ParticleType),
    #[error("channel amplitudes cancel: no interaction result")]
    NoInteractionResult,
    #[error("{step}: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<InteractionError>,
    },
}

impl InteractionError {
    fn at(self, step: &'static str) -> InteractionError {
        InteractionError::Step {
            step,
            source: Box::new(self),
        }
    }
}

/// Parses a particle-type name as used on the command line and in
/// scenarios.
pub fn parse_type(name: &str) -> Result<ParticleType, InteractionError> {
    ParticleType::parse(name).ok_or_else(|| InteractionError::UnknownType(name.to_string()))
}
