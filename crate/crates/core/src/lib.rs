//! Average Age of Information (AoI) and peak AoI for a multi-user mobile
//! edge computing system.
//!
//! A base station generates computation-intensive packets for `N` user
//! equipments (UEs). Each packet passes through up to three FCFS queues in
//! tandem: the shared edge-computation server, the shared downlink
//! transmission server, and the UE's own local computation server. The
//! offloading ratio `p` splits the computation between edge and local
//! servers.
//!
//! * [`model`]: parameterization, effective rates, stability.
//! * [`analytic`]: closed-form AoI / PAoI, bounds and the PAoI-optimal ratio.
//! * [`simulate`]: discrete-event simulation and sample-path estimators.
//! * [`optimize`]: offloading-ratio search and scheme comparison.
//! * [`par`]: data-parallel execution with a sequential fallback.

pub mod analytic;
pub mod error;
pub mod model;
pub mod optimize;
pub mod par;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{DerivedRates, Scheme, ServiceRate, StabilityReport, SystemConfig};
