//! Configuration, experiment presets and output writing for the `cellforce`
//! binary.

pub mod checks;
pub mod config;
pub mod presets;
pub mod report;

pub use checks::{structural_checks, StructuralReport};
pub use config::ExperimentConfig;
pub use presets::{run, Approach, Preset};
pub use report::{Report, Table};
