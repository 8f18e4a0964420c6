//! Rate analysis and simulation for quantum repeaters built from single
//! trapped ions.
//!
//! Single ions in high-finesse cavities emit photons whose polarization is
//! entangled with the ion state; a two-photon detection at a station halfway
//! between two nodes heralds entanglement of the remote ions, and
//! deterministic two-ion gates swap entanglement outward across a nested
//! chain of links. This crate models that protocol end to end:
//!
//! - [`photonic`]: exact state-vector simulation of the heralding step:
//!   emission, loss channels, the polarizing beam splitter, photon-number
//!   detection, and the conditional ion states with their phase corrections.
//! - [`link`]: closed-form elementary-link quantities: fiber transmission,
//!   coincidence probability P0, link time, Purcell factor, collection
//!   efficiency, and source-efficiency budgets.
//! - [`repeater`]: nested-repeater timing: the (3/2)^n closed form with
//!   probabilistic-swap and multiplexing generalizations, swap overhead,
//!   memory feasibility, and the direct-transmission baseline.
//! - [`montecarlo`]: discrete-event waiting-time simulation with exact
//!   per-level factor measurement and reproducible parallel trials.
//! - [`multiplex`]: temporal multiplexing: attempts per communication
//!   window, cavity-length rate scaling, and ion-chain swap scheduling.

pub mod error;
pub mod link;
pub mod montecarlo;
pub mod multiplex;
pub mod photonic;
pub mod repeater;

pub use error::{Error, Result};
pub use link::{CavityParams, LinkParams, SourceBudget};
pub use montecarlo::{SimOptions, SimResult, WaitingTimeDistribution};
pub use multiplex::{ChainConfig, TimingParams};
pub use repeater::{DirectBaseline, RepeaterConfig, SwapBudget};
