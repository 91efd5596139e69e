//! Simulation, analysis, fitting and design synthesis for a flux-tunable
//! four-port switch made of two lumped-element transmission lines coupled
//! through a chain of SQUIDs.
//!
//! The closed-form continuum model lives in [`continuum`]; [`network`]
//! solves the discrete ladder exactly and serves as the reference for it.
//! [`flux`] sweeps the solver over frequency and flux, [`fit`] recovers the
//! coupling inductance from transmission magnitudes and [`design`] runs the
//! forward relations backwards.

pub mod continuum;
pub mod design;
pub mod error;
pub mod fit;
pub mod flux;
pub mod junction;
pub mod model;
pub mod network;

pub use error::{Result, SwitchError};
pub use design::{synthesize, Design, DesignSpec};
pub use fit::{extract_chi, fit_lcoup, ChiExtraction, FitResult, FitSetup};
pub use flux::{run_sweep, ChannelMap, SweepGrid, SwitchState};
pub use junction::{JunctionSpec, SquidModel};
pub use model::{DeviceParams, EdgeStyle, FluxBias, FrequencyPoint};
pub use network::{CouplingSource, FixedCoupling, FourPortSMatrix, TransferMatrix4};
