//! Mode statistics extracted from near- and far-field data.
//!
//! Widths are second-moment (D4σ) estimates about the intensity centroid,
//! which coincide with the 1/e² widths for Gaussian beams. Contour-traced
//! widths are provided as diagnostics only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::search::golden_section_max;
use crate::wave::{ComplexFieldGrid, FarFieldMap};

/// Gaussianity score below which a far field is called bimodal.
pub const DEFAULT_GAUSSIANITY_THRESHOLD: f64 = 0.95;

/// Acceptance NA of the target fibre used for the encircled-power criterion.
pub const DEFAULT_NA_CUT: f64 = 0.14;

/// Relative margin by which an off-axis radial bin must exceed the on-axis
/// bin to count as an off-axis maximum.
pub const OFF_AXIS_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub gaussianity_threshold: f64,
    pub na_cut: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            gaussianity_threshold: DEFAULT_GAUSSIANITY_THRESHOLD,
            na_cut: DEFAULT_NA_CUT,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gaussianity_threshold) {
            return Err(Error::invalid(
                "analysis.gaussianity_threshold",
                format!("must lie in [0, 1], got {}", self.gaussianity_threshold),
            ));
        }
        if !(self.na_cut > 0.0 && self.na_cut <= 1.0) {
            return Err(Error::invalid(
                "analysis.na_cut",
                format!("must lie in (0, 1], got {}", self.na_cut),
            ));
        }
        Ok(())
    }
}

/// Summary of one device mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeStats {
    /// Near-field mode field diameter `w_p` (µm).
    pub mfd: f64,
    /// Far-field 1/e² numerical aperture `NA_p`.
    pub na: f64,
    pub gaussianity: f64,
    pub bimodal: bool,
    /// Fraction of far-field power inside the fibre acceptance NA.
    pub power_in_na014: f64,
}

/// Intensity-weighted centroid and second central moment of radius.
fn radial_moment(weights: &[f64], n: usize, coord: impl Fn(usize) -> f64) -> Result<(f64, f64, f64)> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Degenerate(format!("total weight {total}")));
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (iy, row) in weights.chunks(n).enumerate() {
        let y = coord(iy);
        for (ix, &w) in row.iter().enumerate() {
            sx += w * coord(ix);
            sy += w * y;
        }
    }
    let (cx, cy) = (sx / total, sy / total);
    let mut s2 = 0.0;
    for (iy, row) in weights.chunks(n).enumerate() {
        let dy = coord(iy) - cy;
        for (ix, &w) in row.iter().enumerate() {
            let dx = coord(ix) - cx;
            s2 += w * (dx * dx + dy * dy);
        }
    }
    Ok((cx, cy, s2 / total))
}

/// D4σ mode field diameter `2·√(2⟨r²⟩)` of a near field (µm).
pub fn mfd_d4sigma(field: &ComplexFieldGrid) -> Result<f64> {
    let (_, _, r2) = radial_moment(&field.intensity(), field.n(), |i| field.grid().coord(i))?;
    Ok(2.0 * (2.0 * r2).sqrt())
}

/// Second-moment 1/e² NA, `√(2⟨ρ²⟩)` about the far-field centroid.
pub fn na_1e2(map: &FarFieldMap) -> Result<f64> {
    let (_, _, r2) = radial_moment(map.intensity(), map.side(), |i| map.na(i))?;
    Ok((2.0 * r2).sqrt())
}

fn far_centroid(map: &FarFieldMap) -> Result<(f64, f64, f64)> {
    radial_moment(map.intensity(), map.side(), |i| map.na(i))
}

/// Fraction of the square cell `[x ± d/2] × [y ± d/2]` inside the circle of
/// radius `r` about the origin.
fn cell_fraction_inside(x: f64, y: f64, d: f64, r: f64) -> f64 {
    let h = d / 2.0;
    let near_x = (x.abs() - h).max(0.0);
    let near_y = (y.abs() - h).max(0.0);
    let far = (x.abs() + h).hypot(y.abs() + h);
    if far <= r {
        return 1.0;
    }
    if near_x.hypot(near_y) >= r {
        return 0.0;
    }
    const SUB: usize = 16;
    let step = d / SUB as f64;
    let r2 = r * r;
    let mut inside = 0usize;
    for j in 0..SUB {
        let sy = y - h + (j as f64 + 0.5) * step;
        for i in 0..SUB {
            let sx = x - h + (i as f64 + 0.5) * step;
            if sx * sx + sy * sy <= r2 {
                inside += 1;
            }
        }
    }
    inside as f64 / (SUB * SUB) as f64
}

/// Fraction of far-field power within `na_cut` of the optical axis, with
/// boundary cells weighted by their covered area.
pub fn encircled_fraction(map: &FarFieldMap, na_cut: f64) -> Result<f64> {
    if !(na_cut > 0.0 && na_cut <= 1.0) {
        return Err(Error::Domain(format!("na_cut must lie in (0, 1], got {na_cut}")));
    }
    let s = map.side();
    let d = map.dna();
    let (mut num, mut den) = (0.0, 0.0);
    for iy in 0..s {
        let y = map.na(iy);
        for ix in 0..s {
            let v = map.get(ix, iy);
            if v == 0.0 {
                continue;
            }
            let x = map.na(ix);
            den += v * cell_fraction_inside(x, y, d, 1.0);
            num += v * cell_fraction_inside(x, y, d, na_cut);
        }
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("far-field map carries no power".into()));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Azimuthal mean of the far-field intensity about `(cx, cy)` in bins of
/// width `dna` (bin `b` covers `b·dna ≤ ρ < (b+1)·dna`). Empty bins are NaN.
pub fn radial_profile(map: &FarFieldMap, cx: f64, cy: f64) -> Vec<f64> {
    let s = map.side();
    let d = map.dna();
    let nbins = (2.0 / d).ceil() as usize + 2;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for iy in 0..s {
        let y = map.na(iy) - cy;
        for ix in 0..s {
            let x = map.na(ix) - cx;
            if map.na(ix).hypot(map.na(iy)) > 1.0 {
                continue;
            }
            let b = (x.hypot(y) / d) as usize;
            if b < nbins {
                sum[b] += map.get(ix, iy);
                count[b] += 1;
            }
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect()
}

/// Result of the Gaussianity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussianity {
    /// Normalised overlap of `√I` with the best centred Gaussian.
    pub score: f64,
    /// Fitted 1/e² NA of that Gaussian.
    pub fitted_na: f64,
    /// The radial profile peaks away from the centroid.
    pub off_axis_peak: bool,
    pub bimodal: bool,
}

fn gaussian_overlap(map: &FarFieldMap, cx: f64, cy: f64, width: f64) -> f64 {
    let s = map.side();
    let inv_w2 = 1.0 / (width * width);
    let (mut cross, mut pi, mut pg) = (0.0, 0.0, 0.0);
    for iy in 0..s {
        let ny = map.na(iy);
        let dy = ny - cy;
        for ix in 0..s {
            let nx = map.na(ix);
            if nx * nx + ny * ny > 1.0 {
                continue;
            }
            let dx = nx - cx;
            let g = (-(dx * dx + dy * dy) * inv_w2).exp();
            let v = map.get(ix, iy);
            cross += v.sqrt() * g;
            pi += v;
            pg += g * g;
        }
    }
    if pi > 0.0 && pg > 0.0 {
        (cross * cross / (pi * pg)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Overlap of the far-field amplitude with its best-fit centred Gaussian,
/// and the bimodality verdict (`score < threshold` or an off-axis radial
/// maximum).
pub fn gaussianity(map: &FarFieldMap, threshold: f64) -> Result<Gaussianity> {
    let (cx, cy, r2) = far_centroid(map)?;
    let moment_na = (2.0 * r2).sqrt().max(map.dna());
    // moment fit, then one golden-section pass over the width
    let (width, score) = golden_section_max(
        |w| gaussian_overlap(map, cx, cy, w),
        0.5 * moment_na,
        1.5 * moment_na,
        1e-4,
        60,
    );
    let profile = radial_profile(map, cx, cy);
    let on_axis = profile[0];
    let off_axis_peak = profile
        .iter()
        .skip(1)
        .filter(|v| v.is_finite())
        .any(|&v| v > on_axis * (1.0 + OFF_AXIS_MARGIN));
    Ok(Gaussianity {
        score,
        fitted_na: width,
        off_axis_peak,
        bimodal: score < threshold || off_axis_peak,
    })
}

/// First radius where the radial profile drops below `e⁻²` of its peak,
/// linearly interpolated between bin centres.
fn contour_radius(profile: &[f64], bin: f64) -> Option<f64> {
    let (pk_i, pk) = profile
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let level = pk * (-2.0f64).exp();
    let mut prev = (pk_i, pk);
    for (i, &v) in profile.iter().enumerate().skip(pk_i + 1) {
        if !v.is_finite() {
            continue;
        }
        if v < level {
            let r0 = (prev.0 as f64 + 0.5) * bin;
            let r1 = (i as f64 + 0.5) * bin;
            let t = (prev.1 - level) / (prev.1 - v);
            return Some(r0 + t * (r1 - r0));
        }
        prev = (i, v);
    }
    None
}

/// Diagnostic: 1/e² NA traced on the radial profile.
pub fn na_contour(map: &FarFieldMap) -> Result<f64> {
    let (cx, cy, _) = far_centroid(map)?;
    contour_radius(&radial_profile(map, cx, cy), map.dna())
        .ok_or_else(|| Error::Degenerate("profile never falls below 1/e^2".into()))
}

/// Diagnostic: 1/e² diameter traced on the near-field radial profile.
pub fn mfd_contour(field: &ComplexFieldGrid) -> Result<f64> {
    let n = field.n();
    let intensity = field.intensity();
    let g = field.grid();
    let (cx, cy, _) = radial_moment(&intensity, n, |i| g.coord(i))?;
    let nbins = n * 2;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for iy in 0..n {
        for ix in 0..n {
            let b = ((g.coord(ix) - cx).hypot(g.coord(iy) - cy) / g.pitch) as usize;
            if b < nbins {
                sum[b] += intensity[iy * n + ix];
                count[b] += 1;
            }
        }
    }
    let profile: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect();
    contour_radius(&profile, g.pitch)
        .map(|r| 2.0 * r)
        .ok_or_else(|| Error::Degenerate("profile never falls below 1/e^2".into()))
}

/// All statistics for one device: near field at the monitor plane and far
/// field from the exit plane.
pub fn mode_stats(near: &ComplexFieldGrid, far: &FarFieldMap, cfg: &AnalysisConfig) -> Result<ModeStats> {
    let g = gaussianity(far, cfg.gaussianity_threshold)?;
    Ok(ModeStats {
        mfd: mfd_d4sigma(near)?,
        na: na_1e2(far)?,
        gaussianity: g.score,
        bimodal: g.bimodal,
        power_in_na014: encircled_fraction(far, cfg.na_cut)?,
    })
}
