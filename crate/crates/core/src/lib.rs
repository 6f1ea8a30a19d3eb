//! Cooperative cognitive relaying: a slotted simulator of one primary user
//! and `N` backlogged secondary users sharing a relay queue, and the
//! closed-form throughput, delay and success-probability expressions that
//! describe it.
//!
//! ```
//! use cogrelay_core::{LinkStats, PolicyConfig, SystemParams, avg_delay, max_stable_arrival};
//!
//! let params = SystemParams::default();
//! let stats = LinkStats::evaluate(&params, &PolicyConfig::EP_BSL).unwrap();
//! assert!(max_stable_arrival(&stats) > params.lambda_p);
//! let delay = avg_delay(params.lambda_p, &stats).unwrap();
//! assert!(delay.tau > 1.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod closed_form;
pub mod error;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod sim;
pub mod special;
pub mod validation;

pub use closed_form::{
    avg_delay, epsilon, f_p, f_ps, f_rstar, gamma, max_stable_arrival, mu_p, stability_bound,
    su_throughput, DelayBreakdown, LinkStats,
};
pub use error::{Error, Result};
pub use model::{
    derive_constants, ChannelSample, DerivedConstants, PacketRecord, QueueState, SystemParams,
};
pub use policy::{Assignment, PolicyConfig, PowerPolicy, Reselection, SelectionPolicy};
pub use sim::{run, stability_diagnostic, SimConfig, SimMetrics, Stability};
pub use special::{e1, e1_scaled};

/// Crate version recorded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
