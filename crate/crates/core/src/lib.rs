//! Numerical laboratory for Wasserstein-type gradient flows and the
//! large-deviation rate functionals of the particle systems behind them.
//!
//! Everything lives on a uniform 1-D grid (torus or interval) with
//! cellwise-constant densities.

// negated float comparisons are used on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod heatbath;
pub mod io;
pub mod jko;
pub mod measures;
pub mod numerics;
pub mod path;
pub mod pde;
pub mod rate;
pub mod scalar;
pub mod stochastic;
pub mod transport;

pub use error::{Error, Result};
pub use measures::{
    EnergySpec, Grid, GridDensity, GridMeasure, OccupationProfile, ParticleCloud, Topology,
};
pub use path::MeasurePath;
