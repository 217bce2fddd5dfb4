//! Design evaluation and the searches built on it.

pub mod family;
pub mod matching;
pub mod search;
pub mod sweep;
pub mod tolerance;

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisConfig, ModeStats};
use crate::coupling::{smf_coupling, CouplingReport, FiberSpec};
use crate::error::{Error, Result};
use crate::geometry::AsphericLens;
use crate::wave::{far_field, gaussian_source, propagate_asm, transmit, ComplexFieldGrid, FarFieldMap, GridSpec, LensModel, SourceSpec};

pub use family::{family_scan, FamilyOptions, FamilyPoint, FamilyScan, ScalingFit};
pub use matching::{match_fiber, MatchConfig, MatchResult};
pub use search::{golden_section_max, maximize_in_bracket, nelder_mead_max, BracketMax, SimplexResult, SimplexStep};
pub use sweep::{best_k4, sweep_k, sweep_k4, BestK4, ConicOptimum};
pub use tolerance::{plateau_half_width, tolerance_height, tolerance_offset, HeightEntry};

/// Everything about a simulation except the lens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimContext {
    /// Samples per side of the square near-field grid.
    pub n: usize,
    /// Near-field sample pitch (µm).
    pub pitch: f64,
    /// Zero-padding factor of the far-field transform.
    pub pad_factor: usize,
    pub source: SourceSpec,
    pub fiber: FiberSpec,
    pub model: LensModel,
    /// Distance of the coupling monitor plane above the lens apex (µm).
    pub monitor_gap: f64,
    pub analysis: AnalysisConfig,
}

impl Default for SimContext {
    fn default() -> Self {
        SimContext {
            n: 512,
            pitch: 0.1,
            pad_factor: 4,
            source: SourceSpec::default(),
            fiber: FiberSpec::smf28(),
            model: LensModel::default(),
            monitor_gap: 1.0,
            analysis: AnalysisConfig::default(),
        }
    }
}

impl SimContext {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.pitch, self.source.wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.source.validate()?;
        self.fiber.validate()?;
        self.model.validate()?;
        self.analysis.validate()?;
        if (self.fiber.wavelength - self.source.wavelength).abs() > 1e-12 {
            return Err(Error::invalid(
                "fiber.wavelength",
                format!("{} differs from source wavelength {}", self.fiber.wavelength, self.source.wavelength),
            ));
        }
        if !matches!(self.pad_factor, 1 | 2 | 4 | 8) {
            return Err(Error::invalid("pad_factor", format!("must be 1, 2, 4 or 8, got {}", self.pad_factor)));
        }
        if !(self.monitor_gap >= 0.0 && self.monitor_gap.is_finite()) {
            return Err(Error::invalid("monitor_gap", format!("must be >= 0, got {}", self.monitor_gap)));
        }
        Ok(())
    }
}

/// Metrics of one evaluated design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// `None` for the bare pillar.
    pub lens: Option<AsphericLens>,
    /// Fabrication height error the lens was derived from (µm).
    pub height_error: f64,
    pub lens_height: f64,
    pub stats: ModeStats,
    pub coupling: CouplingReport,
}

impl SweepRecord {
    /// Fraction of far-field power inside the fibre acceptance NA.
    pub fn eta014(&self) -> f64 {
        self.stats.power_in_na014
    }
}

/// A design with its fields kept for export.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub record: SweepRecord,
    pub far: FarFieldMap,
    /// Near field at the monitor plane.
    pub monitor: ComplexFieldGrid,
}

/// Run the full pipeline and keep the fields.
pub fn simulate_design(lens: Option<&AsphericLens>, ctx: &SimContext) -> Result<Simulation> {
    ctx.validate()?;
    let source = gaussian_source(&ctx.source, ctx.n, ctx.pitch)?;
    let out = transmit(&source, lens, ctx.model)?;
    let far = far_field(&out.field, ctx.pad_factor)?;
    let distance = out.lens_height + ctx.monitor_gap - out.plane;
    let monitor = propagate_asm(&out.field, distance)?;
    let coupling = smf_coupling(&far, &monitor, &ctx.fiber, &ctx.analysis)?;
    Ok(Simulation {
        record: SweepRecord {
            lens: lens.cloned(),
            height_error: 0.0,
            lens_height: out.lens_height,
            stats: coupling.stats,
            coupling,
        },
        far,
        monitor,
    })
}

/// Metrics of one design (source → lens → far field and monitor plane).
pub fn evaluate_design(lens: Option<&AsphericLens>, ctx: &SimContext) -> Result<SweepRecord> {
    simulate_design(lens, ctx).map(|s| s.record)
}
