//! Scenario generation, Monte-Carlo ensembles and figure data.
//!
//! Every realization draws from its own generator, keyed by the master seed
//! and the realization index, so results do not depend on thread count or
//! scheduling.

pub mod config;
pub mod curves;
pub mod ensemble;
pub mod scenario;
pub mod table;
pub mod validate;

use thiserror::Error;

pub use config::SimConfig;
pub use curves::{radius_extrema, run_response_curves, ResponseCurves};
pub use ensemble::{
    dlis_cdf_tables, run_clis_cdf, run_clis_sweep, run_dlis_cdf, sweep_table, Associator, EnsembleResult, SweepPoint,
};
pub use scenario::{generate_scenario, Layout, LayoutKind, Scenario};
pub use table::Table;
pub use validate::{validate, CheckStatus, ValidationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
    #[error(transparent)]
    Rate(#[from] crate::rate::RateError),
    #[error(transparent)]
    Assoc(#[from] crate::assoc::AssocError),
    #[error(transparent)]
    Specfun(#[from] crate::specfun::SpecfunError),
}
