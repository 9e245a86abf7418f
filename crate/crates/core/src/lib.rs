//! Time-series toolkit for testing whether regional index series converge to
//! a national index and for comparing the out-of-sample forecasting power of
//! threshold, ARMA, and ARMAX models.
//!
//! The pipeline: load quarterly index levels ([`series`]), test the demeaned
//! regional/national log ratio for a unit root with an asymmetric threshold
//! regression ([`unitroot`]), fit growth-rate models ([`arma`]), produce
//! rolling-origin dynamic forecasts ([`forecast`]), and compare forecast
//! quality ([`eval`]). [`linreg`] supplies the shared least-squares engine
//! and [`dist`] the F-distribution it needs.

pub mod arma;
pub mod dist;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod linreg;
pub mod series;
pub mod unitroot;

pub use error::{Error, Result};
pub use series::{AlignedPair, DemeanedRatio, QuarterDate, QuarterlySeries, SeriesKind};
