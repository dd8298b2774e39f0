//! Monte-Carlo system-level simulator for cell-free and user-centric massive
//! MIMO serving a mix of ground users (GUEs) and UAVs.
//!
//! The pipeline for one drop is:
//!
//! 1. [`deployment::sample_drop`] places APs and users on a wrap-around square
//!    and assigns pilots.
//! 2. [`channel::build_links`] computes path loss, Ricean factors and
//!    steering vectors for every user–AP link.
//! 3. [`estimation::EstimatorSet::build`] forms the LMMSE filters and
//!    estimate powers γ.
//! 4. [`allocation`] picks serving sets and powers.
//! 5. [`bounds`] evaluates closed-form lower bounds and Monte-Carlo upper
//!    bounds on spectral efficiency.
//!
//! [`harness`] drives all of this over many drops and emits rate CDFs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod allocation;
pub mod bounds;
pub mod channel;
pub mod config;
pub mod deployment;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod network;
pub mod rng;
pub mod units;

pub use config::{AssociationMode, DlPolicy, SystemConfig};
pub use deployment::{Drop, Position, UserKind};
pub use error::{Error, Result};
pub use network::Network;
