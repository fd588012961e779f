//! Adam parameter updates and density control (clone, split, prune).

mod adam;
mod density;

pub use adam::{adam_step, AdamConfig, AdamState, GroupLr};
pub use density::{density_control, DensifyOptions, DensifyReport, DensifyStats};
