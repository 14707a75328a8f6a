//! Local projection impulse responses with moving-average bootstrap
//! confidence intervals.
//!
//! The numerical core is generic over [`Real`] (implemented for `f32` and
//! `f64`); the aliases below fix the scalar for the common cases.
//!
//! ```
//! use lp_bootstrap::{dgp, mabootstrap, resample, RngStream};
//!
//! let root = RngStream::new(7);
//! let y = dgp::simulate_ar1(&dgp::Ar1Spec::new(0.5), 200, 200, &root.derive("series", 0)).unwrap();
//! let scheme = resample::ResampleScheme::block_wild(5, resample::WeightLaw::Rademacher);
//! let cfg = mabootstrap::BootPipelineConfig::new(mabootstrap::PathMethod::Method1, 49, 0.1, scheme);
//! let result = mabootstrap::run_lp_bootstrap(&y, 1, 5, &cfg, &root.derive("boot", 0)).unwrap();
//! assert_eq!(result.horizons.len(), 6);
//! ```

pub mod dgp;
pub mod error;
pub mod localproj;
pub mod mabootstrap;
pub mod metrics;
pub mod regress;
pub mod resample;
pub mod rng;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use mabootstrap::{BootPipelineConfig, BootstrapResult, Interval, PathMethod};
pub use resample::{ResampleScheme, SchemeKind, WeightLaw};
pub use rng::RngStream;
pub use scalar::Real;
pub use series::{ImpulseResponse, TimeSeries};

pub type Series = TimeSeries<f64>;
pub type Series32 = TimeSeries<f32>;
pub type Irf = ImpulseResponse<f64>;
pub type Irf32 = ImpulseResponse<f32>;
pub type LpEstimate = localproj::LpIrfEstimate<f64>;
pub type LpEstimate32 = localproj::LpIrfEstimate<f32>;
pub type Bootstrap = BootstrapResult<f64>;
pub type Bootstrap32 = BootstrapResult<f32>;
pub type Process = dgp::Dgp<f64>;
pub type Process32 = dgp::Dgp<f32>;
