//! Two-room visible-light downlink relayed by a hybrid mirror / liquid-crystal
//! wall panel: geometry, optics, channel gains, multiple access, power and
//! panel optimization.

pub mod access;
pub mod channel;
pub mod experiments;
pub mod geometry;
pub mod optimizer;
pub mod photonics;
pub mod power;

pub use access::{LinkBudget, NomaConfig, PrivateAllocation, RsmaConfig};
pub use channel::{ChannelModel, LinkTable, PanelState};
pub use geometry::{Layout, Scene};
pub use optimizer::{grid_oracle, sca_optimize, ScaParams, Scheme, SearchSpace};
pub use power::PowerModel;
