use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{ComplexFieldGrid, GridSpec};
use crate::error::{Error, Result};

/// Gaussian stand-in for the bare-pillar fundamental mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// 1/e² intensity diameter at the pillar top (µm).
    pub mfd: f64,
    /// Vacuum wavelength (µm).
    pub wavelength: f64,
    /// Pillar diameter (µm); informational only.
    pub pillar_diameter: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            mfd: 1.5,
            wavelength: 1.3,
            pillar_diameter: 1.9,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mfd > 0.0 && self.mfd.is_finite()) {
            return Err(Error::invalid("source.mfd", format!("must be > 0, got {}", self.mfd)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::invalid(
                "source.wavelength",
                format!("must be > 0, got {}", self.wavelength),
            ));
        }
        Ok(())
    }
}

/// Flat-phase Gaussian `exp(−r²/w₀²)` with `w₀ = mfd/2`, unit peak, centred
/// on the grid.
pub fn gaussian_source(spec: &SourceSpec, n: usize, pitch: f64) -> Result<ComplexFieldGrid> {
    spec.validate()?;
    let grid = GridSpec::new(n, pitch, spec.wavelength)?;
    if grid.extent() < 4.0 * spec.mfd {
        return Err(Error::GridTooSmall(format!(
            "extent {} µm < 4 x MFD = {} µm",
            grid.extent(),
            4.0 * spec.mfd
        )));
    }
    let w0 = spec.mfd / 2.0;
    let inv_w2 = 1.0 / (w0 * w0);
    // separable: precompute the 1-D profile
    let profile: Vec<f64> = (0..n).map(|i| (-grid.coord(i).powi(2) * inv_w2).exp()).collect();
    let mut samples = Vec::with_capacity(n * n);
    for &py in &profile {
        samples.extend(profile.iter().map(|&px| Complex64::new(px * py, 0.0)));
    }
    ComplexFieldGrid::new(grid, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mfd_is_the_one_over_e2_diameter() {
        let spec = SourceSpec {
            mfd: 9.2,
            ..Default::default()
        };
        let f = gaussian_source(&spec, 512, 0.1).unwrap();
        let w0: f64 = 4.6;
        let at = |x: f64| (-(x * x) / (w0 * w0)).exp().powi(2);
        assert!((at(4.6) - (-2.0f64).exp()).abs() < 1e-15);
        // samples follow the closed form
        let (ix, iy) = (300, 256);
        let (x, y) = (f.x(ix), f.y(iy));
        let expect = (-(x * x + y * y) / (w0 * w0)).exp();
        assert!((f.get(ix, iy).re - expect).abs() < 1e-14);
    }

    #[test]
    fn power_matches_gaussian_integral() {
        let spec = SourceSpec::default();
        let f = gaussian_source(&spec, 512, 0.1).unwrap();
        let w0 = 0.75;
        let expect = PI / 2.0 * w0 * w0;
        assert!((f.power() / expect - 1.0).abs() < 1e-3);
    }

    #[test]
    fn grid_too_small() {
        let spec = SourceSpec {
            mfd: 9.2,
            ..Default::default()
        };
        assert!(matches!(gaussian_source(&spec, 64, 0.1), Err(Error::GridTooSmall(_))));
    }
}
