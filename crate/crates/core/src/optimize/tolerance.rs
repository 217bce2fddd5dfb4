//! Sensitivity of a design to lateral misplacement and height error.

use serde::{Deserialize, Serialize};

use super::{evaluate_design, SimContext, SweepRecord};
use crate::error::{Error, Result};
use crate::geometry::{k4_from_height_error, lens_height, AsphericLens};
use crate::par;

/// Evaluate `lens` displaced along x by each offset. The grid must contain 0.
pub fn tolerance_offset(lens: &AsphericLens, offsets: &[f64], ctx: &SimContext) -> Result<Vec<SweepRecord>> {
    if !offsets.contains(&0.0) {
        return Err(Error::invalid("offsets", "must include 0"));
    }
    lens.validate()?;
    ctx.validate()?;
    let lenses: Vec<AsphericLens> = offsets
        .iter()
        .map(|&dx| lens.with_offset(dx, lens.offset_y))
        .collect::<Result<_>>()?;
    par::map_ordered(&lenses, |l| evaluate_design(Some(l), ctx))
        .into_iter()
        .collect()
}

/// One entry of a height-error scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightEntry {
    pub dh: f64,
    /// `dh` as a percentage of the nominal lens height.
    pub percent: f64,
    /// The perturbed design's metrics, or why it has none.
    pub outcome: std::result::Result<SweepRecord, String>,
}

/// Evaluate the designs reached by height errors `dh` with the radius held
/// fixed. Unreachable heights are reported per entry.
pub fn tolerance_height(lens: &AsphericLens, dhs: &[f64], ctx: &SimContext) -> Result<Vec<HeightEntry>> {
    lens.validate()?;
    ctx.validate()?;
    if lens.conic != 0.0 {
        return Err(Error::invalid("conic", "height-error scans need a spherical base"));
    }
    let nominal = lens_height(lens)?;
    Ok(par::map_ordered(dhs, |&dh| {
        let outcome = k4_from_height_error(lens, dh)
            .and_then(|perturbed| evaluate_design(Some(&perturbed), ctx))
            .map(|mut rec| {
                rec.height_error = dh;
                rec
            })
            .map_err(|e| e.to_string());
        HeightEntry {
            dh,
            percent: 100.0 * dh / nominal,
            outcome,
        }
    }))
}

/// Half-widths of the contiguous region around `x = 0` where `y ≥ level`,
/// linearly interpolated at the crossings: `(left, right)`. A side that
/// never drops below `level` reports the scan extent on that side.
pub fn plateau_half_width(xs: &[f64], ys: &[f64], level: f64) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("scan", "abscissae must be ascending and paired"));
    }
    let i0 = xs
        .iter()
        .position(|&x| x == 0.0)
        .ok_or_else(|| Error::invalid("scan", "must include 0"))?;
    if ys[i0] < level {
        return Ok((0.0, 0.0));
    }
    let cross = |a: usize, b: usize| -> f64 {
        let t = (ys[a] - level) / (ys[a] - ys[b]);
        xs[a] + t * (xs[b] - xs[a])
    };
    let mut right = xs[xs.len() - 1];
    for i in i0..xs.len() - 1 {
        if ys[i + 1] < level {
            right = cross(i, i + 1);
            break;
        }
    }
    let mut left = xs[0];
    for i in (1..=i0).rev() {
        if ys[i - 1] < level {
            left = cross(i, i - 1);
            break;
        }
    }
    Ok((-left, right))
}
