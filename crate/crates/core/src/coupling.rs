//! Single-mode fibre coupling: the closed-form NA expression, the MFD↔NA
//! relation and the full mode-overlap integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{mode_stats, AnalysisConfig, ModeStats};
use crate::error::{Error, Result};
use crate::wave::{ComplexFieldGrid, FarFieldMap, GridSpec};

/// Largest relative MFD mismatch for which the NA-only formula is trusted.
pub const MFD_MATCH_TOLERANCE: f64 = 0.05;

/// Target fibre. MFD and NA are kept independent on purpose: the SMF-28
/// figures are not related by the small-NA Gaussian relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub name: String,
    /// Mode field diameter `w_f` (µm).
    pub mfd: f64,
    /// 1/e² numerical aperture `NA_f`.
    pub na: f64,
    pub wavelength: f64,
}

impl FiberSpec {
    /// Corning SMF-28 in the O band.
    pub fn smf28() -> Self {
        FiberSpec {
            name: "smf28".into(),
            mfd: 9.2,
            na: 0.14,
            wavelength: 1.3,
        }
    }

    /// Look up a named preset.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "smf28" => Some(Self::smf28()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mfd > 0.0 && self.mfd.is_finite()) {
            return Err(Error::invalid("fiber.mfd", format!("must be > 0, got {}", self.mfd)));
        }
        if !(self.na > 0.0 && self.na < 1.0) {
            return Err(Error::invalid("fiber.na", format!("must lie in (0, 1), got {}", self.na)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::invalid(
                "fiber.wavelength",
                format!("must be > 0, got {}", self.wavelength),
            ));
        }
        Ok(())
    }

    /// NA implied by the fibre MFD under the Gaussian relation. Reported,
    /// never substituted for `na`.
    pub fn consistency_check(&self) -> f64 {
        na_from_mfd(self.mfd, self.wavelength)
    }

    /// Flat-phase fibre mode `exp(−(x²+y²)/w²)`, `w = mfd/2`, centred on the
    /// pillar axis, sampled on a grid whose centre sits at `(ox, oy)`.
    pub fn mode_field(&self, grid: GridSpec, ox: f64, oy: f64) -> Result<ComplexFieldGrid> {
        let w = self.mfd / 2.0;
        let inv = 1.0 / (w * w);
        let f = ComplexFieldGrid::from_fn(grid, |x, y| {
            let (x, y) = (x + ox, y + oy);
            Complex64::new((-(x * x + y * y) * inv).exp(), 0.0)
        })?;
        Ok(f.with_origin(ox, oy))
    }
}

/// Mode-matching efficiency of two Gaussian beams from their 1/e² NAs:
/// `4·p²·f² / (p² + f²)²`.
pub fn eta_na(na_p: f64, na_f: f64) -> Result<f64> {
    if !(na_p > 0.0 && na_f > 0.0) || !(na_p.is_finite() && na_f.is_finite()) {
        return Err(Error::Domain(format!("NAs must be > 0, got {na_p} and {na_f}")));
    }
    let (p2, f2) = (na_p * na_p, na_f * na_f);
    let s = p2 + f2;
    Ok(4.0 * p2 * f2 / (s * s))
}

/// Far-field 1/e² NA of a Gaussian with mode field diameter `mfd`:
/// `2λ/(π·w)`.
pub fn na_from_mfd(mfd: f64, wavelength: f64) -> f64 {
    2.0 * wavelength / (PI * mfd)
}

/// Inverse of [`na_from_mfd`].
pub fn mfd_from_na(na: f64, wavelength: f64) -> f64 {
    2.0 * wavelength / (PI * na)
}

/// `|Σ a·b*|² / (Σ|a|² · Σ|b|²)` over two sample sets on a common grid.
pub fn overlap_samples(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    let mut cross = Complex64::new(0.0, 0.0);
    let (mut pa, mut pb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cross += x * y.conj();
        pa += x.norm_sqr();
        pb += y.norm_sqr();
    }
    if !(pa > 0.0 && pb > 0.0) {
        return Err(Error::Degenerate("overlap of a zero-power field".into()));
    }
    Ok((cross.norm_sqr() / (pa * pb)).min(1.0))
}

/// Normalised mode overlap of two fields on identical grids.
pub fn overlap_efficiency(a: &ComplexFieldGrid, b: &ComplexFieldGrid) -> Result<f64> {
    a.check_same_geometry(b)?;
    overlap_samples(a.samples(), b.samples())
}

/// Overlap of the amplitudes `√I` of two far-field maps on the same NA grid.
pub fn overlap_farfield(a: &FarFieldMap, b: &FarFieldMap) -> Result<f64> {
    if a.side() != b.side() || a.dna() != b.dna() {
        return Err(Error::GridMismatch("far-field maps differ in sampling".into()));
    }
    let amp = |m: &FarFieldMap| -> Vec<Complex64> { m.intensity().iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect() };
    overlap_samples(&amp(a), &amp(b))
}

/// Both coupling estimates for one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// NA-only estimate.
    pub eta_na: f64,
    /// Butt-coupling overlap with the fibre mode at the monitor plane.
    pub eta_overlap: f64,
    pub consistency_gap: f64,
    /// Gaussian far field and matched MFD: the NA-only estimate applies.
    pub shortcut_valid: bool,
    pub fiber: FiberSpec,
    pub stats: ModeStats,
}

/// Couple a device to `fiber` given its far field and its near field at the
/// monitor plane.
pub fn smf_coupling(
    device_farfield: &FarFieldMap,
    device_nearfield: &ComplexFieldGrid,
    fiber: &FiberSpec,
    analysis: &AnalysisConfig,
) -> Result<CouplingReport> {
    fiber.validate()?;
    let stats = mode_stats(device_nearfield, device_farfield, analysis)?;
    let (ox, oy) = device_nearfield.origin();
    let mode = fiber.mode_field(*device_nearfield.grid(), ox, oy)?;
    let eta_na_v = eta_na(stats.na, fiber.na)?;
    let eta_overlap = overlap_efficiency(device_nearfield, &mode)?;
    let mfd_ok = ((stats.mfd - fiber.mfd) / fiber.mfd).abs() <= MFD_MATCH_TOLERANCE;
    Ok(CouplingReport {
        eta_na: eta_na_v,
        eta_overlap,
        consistency_gap: (eta_na_v - eta_overlap).abs(),
        shortcut_valid: !stats.bimodal && stats.gaussianity >= analysis.gaussianity_threshold && mfd_ok,
        fiber: fiber.clone(),
        stats,
    })
}
