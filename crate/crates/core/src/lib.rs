//! Seasonal ARIMA / ARIMAX modelling by state-space maximum likelihood,
//! and counterfactual baselines for measuring how far a monthly freight
//! series departs from its pre-disruption trend.
//!
//! The crate is organised bottom-up:
//!
//! * [`series`] - calendar-indexed series, transforms, differencing, and
//!   weekly-to-monthly averaging.
//! * [`diagnostics`] - ACF/PACF, ADF, Ljung-Box, classical decomposition.
//! * [`sarimax`] - Kalman-filter likelihood, fitting, forecasting and
//!   simulation.
//! * [`selection`] - grid search with residual gating and backtests.
//! * [`scenario`] - the three counterfactual scenarios, impact series and
//!   recovery-pace classification.
//! * [`ingest`] - CSV loading, configuration, the pipeline and report
//!   writers.

pub mod diagnostics;
pub mod error;
pub mod ingest;
mod linalg;
pub mod sarimax;
pub mod scenario;
pub mod selection;
pub mod series;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
pub use series::{DifferenceSpec, Frequency, Period, TimeSeries, Transform};
