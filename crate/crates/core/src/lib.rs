//! Spatial-dynamic land value tax model: reaction-diffusion simulation of
//! land value and built capital, closed-form equilibria, fiscal and
//! distributive indicators, a stochastic extension and tax incidence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod harness;
pub mod incidence;
pub mod indicators;
pub mod model;
pub mod pde;
pub mod stochastic;

pub use error::{FieldName, LvtError, Result};
pub use model::{FieldPair, Grid, GridSpec, ModelParams, SpatialProfile, TaxSchedule};
pub use pde::{SimConfig, SimTrace, Simulation};
