//! Density-matrix simulation of photonic chains grown one photon at a time
//! through a delay loop, with the main experimental imperfections.
//!
//! The crate is layered: [`qstate`] holds the dense multi-qubit kernel,
//! [`optics`] the gates and beam-splitter transfer matrices, [`noise`] the
//! imperfection channels, [`growth`] the sequential growth engine,
//! [`metrics`] the figures of merit and [`experiment`] the observable-level
//! scans, sampling and sweeps.

pub mod error;
pub mod experiment;
pub mod growth;
pub mod metrics;
pub mod noise;
pub mod optics;
pub mod qstate;

pub use error::{Error, Result};
pub use growth::{
    full_report, grow_full, grow_full_with_cap, grow_reduced, ideal_chain, reduced_report,
    FullGrowth, GrowthMode, MeasurementBasis, MeritReport, ReducedGrowth,
};
pub use metrics::{
    concurrence, end_to_end_concurrence, entanglement_length, fidelity, visibility2, visibility3,
    EntanglementLengthResult, LengthOutcome, VisibilityReport,
};
pub use noise::{success_probability_bound, NoiseConfig, SourceModel, SourceQuality};
pub use optics::PbsAmplitudes;
pub use qstate::{CMatrix, DensityMatrix, Projector, PureState, C64};
