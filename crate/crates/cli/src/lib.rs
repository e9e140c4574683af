//! Declarative experiment configuration and result emission around the
//! simulation core: config files, figure presets, lambda sweeps with
//! confidence intervals, and coupled dominance runs.

// Validations are written `!(x > 0.0)` so that NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod couple;
pub mod presets;
pub mod report;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, ConfigFile, Plan};
pub use couple::{run_couple, DominanceRow};
pub use presets::{preset_fig4, preset_fig5};
pub use sweep::{run_sweep, SweepRow, SweepTable};
