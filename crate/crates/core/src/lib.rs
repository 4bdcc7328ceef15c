//! Majorana bound-state coupling through a trivial Kitaev segment.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the CLI uses.

pub mod analytic;
pub mod bdg;
pub mod chain;
pub mod dynamics;
pub mod floquet;
pub mod qubit;
pub mod scalar;
pub mod sweep;

pub use analytic::{AnalyticError, Method};
pub use bdg::{build_bdg, diagonalize, extract_coupling, numeric_coupling, BdgError, MajoranaLabel};
pub use chain::{validate, Boundary, ConfigError};
pub use dynamics::{DynamicsError, Observable, RABI_CALIBRATION};
pub use floquet::{bessel_j0, bessel_j0_zero, invert_j0, FloquetError};
pub use qubit::{QubitError, StageKind};
pub use scalar::Real;
pub use sweep::{SweepError, SweepMethod};

pub type SegmentParams = chain::SegmentParams<f64>;
pub type CenterParams = chain::CenterParams<f64>;
pub type JunctionParams = chain::JunctionParams<f64>;
pub type ChainConfig = chain::ChainConfig<f64>;
pub type ValidatedConfig = chain::ValidatedConfig<f64>;
pub type DriveParams = chain::DriveParams<f64>;
pub type BdgMatrix = bdg::BdgMatrix<f64>;
pub type SpectrumResult = bdg::SpectrumResult<f64>;
pub type MajoranaMode = bdg::MajoranaMode<f64>;
pub type CouplingEstimate = analytic::CouplingEstimate<f64>;
pub type QuarticRoots = analytic::QuarticRoots<f64>;
pub type StateVector = dynamics::StateVector<f64>;
pub type EvolutionTrace = dynamics::EvolutionTrace<f64>;
pub type RabiEstimate = dynamics::RabiEstimate<f64>;
pub type DriveOptions = dynamics::DriveOptions<f64>;
pub type EffectiveConfig = floquet::EffectiveConfig<f64>;
pub type QubitGate = qubit::QubitGate<f64>;
pub type Protocol = qubit::Protocol<f64>;
pub type Schedule = qubit::Schedule<f64>;
pub type SweepRow = sweep::SweepRow<f64>;
