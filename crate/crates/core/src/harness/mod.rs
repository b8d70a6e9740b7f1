//! Scenario configuration, sweeps, ring and robustness analyses, exports.

pub mod export;
pub mod rings;
pub mod robustness;
pub mod run;
pub mod scenario;

pub use rings::{rings_vs_continuum, RingComparison};
pub use robustness::{robustness_suite, RobustnessReport};
pub use run::{attractiveness_lorenz, run_scenario, RunReport};
pub use scenario::{Analysis, HeatmapFormat, Outputs, RingDiscretization, RingMode, Scenario, TaxMode};
