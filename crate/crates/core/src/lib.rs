//! Distributed muting schedules for multi-cell guaranteed-rate and
//! best-effort traffic.

pub mod be_local;
pub mod error;
pub mod game_gamma;
pub mod game_omega;
pub mod gbr_local;
pub mod ids;
pub mod metrics;
pub mod network;
pub mod oracle;
pub mod radio;
pub mod schedule;
pub mod supervisor;

pub use error::{DmsError, Result};
pub use ids::{BsId, BsSet, UserId};
pub use network::Network;
