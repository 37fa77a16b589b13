//! Multi-modal energy system dispatch and time-dependent CO₂ intensities.
//!
//! The crate models energy systems as a graph of commodities and conversion
//! processes (including storage, imports and demands), solves the
//! cost-minimal dispatch as a linear program, and derives two complementary
//! CO₂ intensity signals per commodity and hour:
//!
//! * **as-is** intensities: every ton of imported CO₂ is traced through
//!   conversions and storage to the energy actually delivered, by solving
//!   one coupled linear system over all time steps;
//! * **what-if** intensities: the marginal change of total CO₂ per unit of
//!   additional demand, obtained from one sensitivity solve on the optimal
//!   LP basis and cross-checkable against finite-difference re-dispatch.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`];
//! concrete `f64`/`f32` aliases are exported below.

pub mod asis;
pub mod dispatch;
pub mod error;
pub mod factory;
pub mod lp;
pub mod lu;
pub mod model;
pub mod runner;
pub mod scalar;
pub mod scenario;
pub mod sparse;
pub mod stats;
pub mod table;
pub mod whatif;

pub use scalar::Real;

/// `f64` aliases — the default precision for analysis runs.
pub type EnergySystem64 = model::EnergySystem<f64>;
pub type DispatchResult64 = dispatch::DispatchResult<f64>;
pub type AsIsResult64 = asis::AsIsResult<f64>;
pub type WhatIfResult64 = whatif::WhatIfResult<f64>;
pub type StandardFormLp64 = lp::StandardFormLp<f64>;
pub type LpSolution64 = lp::LpSolution<f64>;

/// `f32` aliases, for callers that trade accuracy for footprint.
pub type EnergySystem32 = model::EnergySystem<f32>;
pub type DispatchResult32 = dispatch::DispatchResult<f32>;
pub type AsIsResult32 = asis::AsIsResult<f32>;
pub type WhatIfResult32 = whatif::WhatIfResult<f32>;
pub type StandardFormLp32 = lp::StandardFormLp<f32>;
pub type LpSolution32 = lp::LpSolution<f32>;
