//! Inactivity-leak analysis for checkpoint-finality protocols under partition.
//!
//! * [`leak_math`]: closed-form stake decay and finalization times.
//! * [`bounce_stats`]: diffusion approximation of the bouncing-attack score walk.
//! * [`walk`]: Monte Carlo oracle for the same walk.
//! * [`ffg`]: per-epoch justification, finalization, leak and ejection.
//! * [`scenario`]: multi-branch partition scenarios and safety checks.

pub mod bounce_stats;
pub mod error;
pub mod ffg;
pub mod leak_math;
pub mod numeric;
pub mod scenario;
pub mod stats;
pub mod walk;

pub use error::{LeakError, Result};
