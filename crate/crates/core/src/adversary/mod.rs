//! Byzantine behaviour: per-node send filters, the witness strawman and the
//! scripted executions of the lower-bound arguments.

mod scripts;
mod strategy;
mod witness;

use thiserror::Error;

use crate::simnet::SimError;

pub use scripts::{
    exec1_substitute, exec1_world, exec2_world, helper4_honest, helper4_world, script_exec1, script_exec2,
    script_helper4, split_world, witness_world, ExecPlan, Sets, PHASE, T_PRIME,
};
pub use strategy::{corrupt_element, corrupt_payload, AdversaryCtx, AdversaryStrategy};
pub use witness::{WitnessConfig, WitnessNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("{script} requires {expected}, got n={n}, f={f}")]
    ConfigMismatch { script: &'static str, expected: &'static str, n: usize, f: usize },
    #[error("deliver threshold {threshold} outside 1..={n}")]
    InvalidThreshold { threshold: usize, n: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}
