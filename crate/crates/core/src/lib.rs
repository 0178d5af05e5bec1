//! Simulators, solvers and estimators for rare-mutant emergence in mean-field
//! Fisher-Wright systems and logistic branching random walks.
//!
//! Everything numeric is generic over [`Real`] (implemented for `f32` and
//! `f64`); the `*64` aliases below fix the scalar to `f64`.

pub mod cmj;
pub mod droplet;
pub mod duality;
pub mod error;
mod fenwick;
pub mod fw_meanfield;
pub mod fw_single;
pub mod mkv;
pub mod particles;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DiffusionParams64 = fw_single::DiffusionParams<f64>;
pub type SystemParams64 = fw_meanfield::SystemParams<f64>;
pub type FrequencyState64 = fw_meanfield::FrequencyState<f64>;
pub type ParticleParams64 = particles::ParticleParams<f64>;
pub type OccupancyState64 = particles::OccupancyState<f64>;
pub type SizeDistribution64 = particles::SizeDistribution<f64>;
pub type DropletModel64 = droplet::DropletModel<f64>;
pub type DropletState64 = droplet::DropletState<f64>;
pub type MkvParams64 = mkv::MkvParams<f64>;
pub type DensityGrid64 = mkv::DensityGrid<f64>;
pub type ColonizationState64 = mkv::ColonizationState<f64>;
