//! Analysis toolkit for LEO-satellite NB-IoT sensor networks.
//!
//! The crate covers the full chain from raw air-quality sensor records to
//! network-level figures of merit:
//!
//! * [`timeseries`] ingests and preprocesses sensor CSV data and generates
//!   synthetic devices with the same schema.
//! * [`airquality`] computes CPCB sub-indices and the AQI.
//! * [`shewhart`] runs the send-on-delta transmission modes and the
//!   server-side reconstruction metrics.
//! * [`mlpredict`] fits PM2.5-from-PM10 regressors (OLS, CART, forest).
//! * [`orbit`], [`linkbudget`] cover pass geometry and uplink SNR.
//! * [`access`] holds the NPRACH collision model and its Monte-Carlo check.
//! * [`traffic`] characterizes inter-transmission times against Poisson.
//! * [`energy`] estimates battery lifetime from a power-state table.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod access;
pub mod airquality;
pub mod energy;
mod error;
pub mod linkbudget;
pub mod mlpredict;
pub mod orbit;
pub mod shewhart;
pub mod timeseries;
pub mod traffic;

pub use error::{Error, Result};

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
