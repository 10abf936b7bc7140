//! Link-level simulation library for the cylinder directly-connected
//! antenna array (DCAA) XL-MIMO architecture.
//!
//! The crate builds the array geometry (semi-circular sub-arrays with
//! variable-length delay lines, stacked into a cylinder), generates
//! statistical multipath channels, optimizes uplink and downlink multi-user
//! beamforming through a binary port-selection network, and compares sum
//! rate and hardware cost against a three-sector ULA benchmark with
//! DFT-codebook hybrid beamforming.

pub mod bessel;
pub mod channel;
pub mod cost;
pub mod cylinder;
pub mod downlink;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod pattern;
pub mod ula;
pub mod uplink;

pub use channel::{ChannelParams, ClusterSet, PathSet, RngStream};
pub use cost::CostInputs;
pub use cylinder::{design_cylinder, CylinderArray};
pub use downlink::{DownlinkScenario, PowerAllocation};
pub use error::{Error, Result};
pub use geometry::{ArrayConfig, SubArray, SPEED_OF_LIGHT};
pub use pattern::{ElementPattern, PatternSample};
pub use ula::{DftCodebook, Sector};
pub use uplink::{LinkReport, SelectionMatrix, UplinkScenario};
