//! Unique information decomposition of finite joint distributions and the
//! secret-key-rate bounds built on it.
//!
//! All information quantities are in bits.

pub mod blackwell;
pub mod bounds;
pub mod dense;
pub mod error;
pub mod harness;
pub mod prob;
pub mod simplex;
pub mod ui;

pub use error::{Error, Result};
pub use prob::{layout, Channel, JointDist, Variable};
pub use ui::{compute_ui, compute_ui_oracle, DecompositionResult, Roles, SolverOptions};
