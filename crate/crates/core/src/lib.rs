//! Minimizing-movement solvers for 1D nonlinear Fokker–Planck equations with
//! time-periodic interaction potentials, viewed as Wasserstein gradient
//! flows.
//!
//! The numerical modules are generic over the scalar type ([`Real`]); the
//! aliases at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod energy;
pub mod error;
pub mod fv;
pub mod highfreq;
pub mod jko;
pub mod mms;
pub mod potentials;
pub mod profiles;
pub mod quadrature;
pub mod scalar;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = density::Grid<f64>;
pub type Density = density::Density<f64>;
pub type QuantileRep = density::QuantileRep<f64>;
pub type Moments = density::Moments<f64>;
pub type EnergySpec = energy::EnergySpec<f64>;
pub type JkoConfig = jko::JkoConfig<f64>;
pub type Trajectory = jko::Trajectory<f64>;
pub type SharedPotential = potentials::SharedPotential<f64>;
pub type PotentialFamily = potentials::PotentialFamily<f64>;
pub type EuclideanDemo = mms::EuclideanDemo<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Grid = crate::density::Grid<f32>;
    pub type Density = crate::density::Density<f32>;
    pub type QuantileRep = crate::density::QuantileRep<f32>;
    pub type EnergySpec = crate::energy::EnergySpec<f32>;
    pub type JkoConfig = crate::jko::JkoConfig<f32>;
}
