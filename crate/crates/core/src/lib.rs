//! Dominant period detection for series with block-missing values, outliers
//! and abrupt trend changes.
//!
//! The pipeline is [`trendfilter::robust_detrend`], then a missing-data
//! autocorrelation built on a Huber periodogram ([`mspec::robust_acf_m`]),
//! then Fisher's g-test combined with ACF peak spacing
//! ([`detector::detect_period`]). Numeric code is generic over [`Real`]
//! (`f32` or `f64`); the aliases below fix it to one type.

pub mod banded;
pub mod baselines;
pub mod detector;
pub mod error;
pub mod mspec;
pub mod racf;
pub mod scalar;
pub mod series;
pub mod spectral;
pub mod synthbench;
pub mod trendfilter;

pub use detector::{detect_period, DetectConfig, DetectionResult};
pub use error::{Error, Result};
pub use scalar::Real;

pub type ObservedSeries64 = series::ObservedSeries<f64>;
pub type ObservedSeries32 = series::ObservedSeries<f32>;
pub type RobustAcf64 = racf::RobustAcf<f64>;
pub type RobustAcf32 = racf::RobustAcf<f32>;
pub type TrendFit64 = trendfilter::TrendFit<f64>;
pub type TrendFit32 = trendfilter::TrendFit<f32>;
pub type MPeriodogram64 = mspec::MPeriodogram<f64>;
pub type MPeriodogram32 = mspec::MPeriodogram<f32>;
