//! Sum-rate optimisation for multi-user STAR-RIS downlinks.
//!
//! The optimiser lifts the sum-rate with fractional programming and runs block
//! coordinate ascent over auxiliaries, precoders and the RIS elements, each
//! block solved in closed form. Both the energy-splitting and time-splitting
//! protocols are covered, together with the usual comparison baselines,
//! brute-force oracles and an experiment harness that writes CSV.

pub mod baselines;
pub mod checks;
pub mod error;
pub mod fp;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod par;
pub mod passive;
pub mod scenario;
pub mod ts;

pub use error::{Error, Result};
pub use fp::{run_es, AuxiliaryState, EsOptions, EsRunReport};
pub use model::{PrecoderMatrix, StarRisConfiguration};
pub use scenario::{generate_channels, ChannelSet, Scenario, Side, SystemConfig, C64};
