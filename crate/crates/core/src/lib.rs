//! Scalar-wave modelling of aspheric micro-lenses printed on micro-pillar
//! waveguides: lens geometry, field propagation, mode analysis, fibre
//! coupling and the design searches that tie them together.

pub mod analysis;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod optimize;
pub mod par;
pub mod wave;

pub use analysis::{mode_stats, AnalysisConfig, ModeStats};
pub use coupling::{eta_na, smf_coupling, CouplingReport, FiberSpec};
pub use error::{Error, Result};
pub use geometry::{height_map, lens_height, sag, scale_lens, thickness, AsphericLens, HeightMap};
pub use optimize::{evaluate_design, simulate_design, SimContext, Simulation, SweepRecord};
pub use wave::{far_field, gaussian_source, ComplexFieldGrid, FarFieldMap, GridSpec, LensModel, SourceSpec};
