//! Aspheric lens profiles.
//!
//! The surface is described by its sag, the depth below the apex at radial
//! distance `x` from the lens axis:
//!
//! ```text
//! z(x) = (x²/R) / (1 + √(1 − (1+k)·x²/R²)) + k₄·x⁴
//! ```
//!
//! `R` is the base radius, `k` the conic coefficient and `k₄` the quartic
//! coefficient. Lengths are in µm and `k₄` in µm⁻³ throughout the crate.
//! The lens sits on the pillar top with its base at `x = R`, so the glass
//! thickness above the base plane is `h(x) = H − z(x)` with `H = z(R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Refractive index of the fused-silica lens material.
pub const SILICA_INDEX: f64 = 1.45;

/// One point in the lens design space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsphericLens {
    /// Base radius `R` (µm).
    pub radius: f64,
    /// Conic coefficient `k`; only `k ≤ 0` is supported.
    pub conic: f64,
    /// Quartic coefficient `k₄` (µm⁻³).
    pub k4: f64,
    pub n_lens: f64,
    /// Lateral offset of the lens axis from the pillar axis (µm).
    pub offset_x: f64,
    pub offset_y: f64,
}

impl AsphericLens {
    /// A centred silica lens. Fails if the parameters are out of range.
    pub fn new(radius: f64, conic: f64, k4: f64) -> Result<Self> {
        let lens = AsphericLens {
            radius,
            conic,
            k4,
            n_lens: SILICA_INDEX,
            offset_x: 0.0,
            offset_y: 0.0,
        };
        lens.validate()?;
        Ok(lens)
    }

    /// Hemisphere-based (`k = 0`) lens.
    pub fn spherical_base(radius: f64, k4: f64) -> Result<Self> {
        Self::new(radius, 0.0, k4)
    }

    pub fn with_index(mut self, n_lens: f64) -> Result<Self> {
        self.n_lens = n_lens;
        self.validate()?;
        Ok(self)
    }

    pub fn with_offset(mut self, offset_x: f64, offset_y: f64) -> Result<Self> {
        self.offset_x = offset_x;
        self.offset_y = offset_y;
        self.validate()?;
        Ok(self)
    }

    /// Check the invariants. A lateral offset as large as the radius only
    /// produces a warning.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.radius, self.conic, self.k4, self.n_lens, self.offset_x, self.offset_y]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("lens", "all parameters must be finite"));
        }
        if self.radius <= 0.0 {
            return Err(Error::invalid("R", format!("must be > 0, got {}", self.radius)));
        }
        if self.conic > 0.0 {
            return Err(Error::invalid(
                "k",
                format!("oblate conics (k > 0) are not supported, got {}", self.conic),
            ));
        }
        if self.k4 < 0.0 {
            return Err(Error::invalid("k4", format!("must be >= 0, got {}", self.k4)));
        }
        if self.n_lens <= 1.0 {
            return Err(Error::invalid("n_lens", format!("must be > 1, got {}", self.n_lens)));
        }
        if self.offset() >= self.radius {
            log::warn!(
                "lens offset {:.3} µm is not smaller than R = {:.3} µm; the pillar axis is off the lens",
                self.offset(),
                self.radius
            );
        }
        Ok(())
    }

    /// Magnitude of the lateral offset (µm).
    pub fn offset(&self) -> f64 {
        self.offset_x.hypot(self.offset_y)
    }
}

/// Sag depth below the apex at radial distance `x` (µm).
pub fn sag(lens: &AsphericLens, x: f64) -> Result<f64> {
    let r = lens.radius;
    if !(0.0..=r * (1.0 + 1e-12)).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, R = {r}]")));
    }
    let arg = 1.0 - (1.0 + lens.conic) * x * x / (r * r);
    if arg < 0.0 {
        return Err(Error::Domain(format!(
            "sag undefined at x = {x}: square-root argument {arg} < 0"
        )));
    }
    Ok(sag_unchecked(lens, x))
}

/// Sag without domain checks; callers guarantee `0 ≤ x ≤ R`.
#[inline]
pub(crate) fn sag_unchecked(lens: &AsphericLens, x: f64) -> f64 {
    let r = lens.radius;
    let x2 = x * x;
    let arg = (1.0 - (1.0 + lens.conic) * x2 / (r * r)).max(0.0);
    (x2 / r) / (1.0 + arg.sqrt()) + lens.k4 * x2 * x2
}

/// Total lens height `H = z(R)` (µm).
pub fn lens_height(lens: &AsphericLens) -> Result<f64> {
    sag(lens, lens.radius)
}

/// Glass thickness above the base plane at pillar-frame position `(x, y)`.
/// Zero outside the lens footprint.
pub fn thickness(lens: &AsphericLens, x: f64, y: f64) -> Result<f64> {
    let total = lens_height(lens)?;
    Ok(thickness_with_height(lens, total, x, y))
}

#[inline]
pub(crate) fn thickness_with_height(lens: &AsphericLens, total: f64, x: f64, y: f64) -> f64 {
    let r = (x - lens.offset_x).hypot(y - lens.offset_y);
    if r > lens.radius {
        0.0
    } else {
        (total - sag_unchecked(lens, r)).max(0.0)
    }
}

/// Thickness samples of a lens on a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    pub n: usize,
    pub pitch: f64,
    /// Lens height `H` (µm).
    pub total_height: f64,
    /// Row-major thickness values, `values[iy * n + ix]`.
    pub values: Vec<f64>,
}

impl HeightMap {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.n + ix]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Cell-centre coordinate of sample `i` on an `n`-point grid centred on 0.
#[inline]
pub fn cell_center(i: usize, n: usize, pitch: f64) -> f64 {
    (i as f64 - n as f64 / 2.0 + 0.5) * pitch
}

/// Sample the lens thickness at cell centres of an `n × n` grid.
pub fn height_map(lens: &AsphericLens, pitch: f64, n: usize) -> Result<HeightMap> {
    lens.validate()?;
    if pitch <= 0.0 || !pitch.is_finite() {
        return Err(Error::invalid("pitch", format!("must be > 0, got {pitch}")));
    }
    if n == 0 || n % 2 != 0 {
        return Err(Error::invalid("n_samples", format!("must be even, got {n}")));
    }
    let needed = 2.0 * lens.radius + 2.0 * lens.offset_x.abs().max(lens.offset_y.abs());
    let extent = n as f64 * pitch;
    if extent < needed {
        return Err(Error::GridTooSmall(format!(
            "grid extent {extent} µm < {needed} µm needed for the lens footprint"
        )));
    }
    let total = lens_height(lens)?;
    let mut values = vec![0.0; n * n];
    for (iy, row) in values.chunks_mut(n).enumerate() {
        let y = cell_center(iy, n, pitch);
        for (ix, v) in row.iter_mut().enumerate() {
            *v = thickness_with_height(lens, total, cell_center(ix, n, pitch), y);
        }
    }
    Ok(HeightMap {
        n,
        pitch,
        total_height: total,
        values,
    })
}

/// Magnify a lens by `scale`: `R' = S·R`, `k₄' = k₄/S³`, offsets scaled,
/// conic and index unchanged. The sag obeys `z'(S·x) = S·z(x)`.
pub fn scale_lens(lens: &AsphericLens, scale: f64) -> Result<AsphericLens> {
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::invalid("S", format!("scale factor must be > 0, got {scale}")));
    }
    Ok(AsphericLens {
        radius: lens.radius * scale,
        k4: lens.k4 / (scale * scale * scale),
        offset_x: lens.offset_x * scale,
        offset_y: lens.offset_y * scale,
        ..*lens
    })
}

/// Re-express a lens-height error `dH` (µm) as a change of `k₄` on a
/// `k = 0` lens: `k₄' = k₄ + dH/R⁴`.
pub fn k4_from_height_error(lens: &AsphericLens, dh: f64) -> Result<AsphericLens> {
    if lens.conic != 0.0 {
        return Err(Error::invalid(
            "k",
            format!("height-error parametrisation needs k = 0, got {}", lens.conic),
        ));
    }
    let r4 = lens.radius.powi(4);
    let delta = dh / r4;
    let mut k4 = lens.k4 + delta;
    if k4 < 0.0 {
        // Round-off when dH removes exactly the quartic contribution.
        if -k4 <= 1e-12 * lens.k4.max(delta.abs()) {
            k4 = 0.0;
        } else {
            return Err(Error::Domain(format!(
                "height error {dh} µm exceeds the quartic contribution {} µm",
                lens.k4 * r4
            )));
        }
    }
    Ok(AsphericLens { k4, ..*lens })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lens(r: f64, k: f64, k4: f64) -> AsphericLens {
        AsphericLens::new(r, k, k4).unwrap()
    }

    #[test]
    fn sag_examples() {
        assert_eq!(sag(&lens(1.2, 0.0, 0.0), 0.0).unwrap(), 0.0);
        assert_relative_eq!(sag(&lens(1.2, 0.0, 0.0), 1.2).unwrap(), 1.2, epsilon = 1e-12);
        // 1/1.2/(1 + sqrt(1 - 1/1.44)) + 0.75 = 0.5385 + 0.75
        assert_relative_eq!(sag(&lens(1.2, 0.0, 0.75), 1.0).unwrap(), 1.2867, epsilon = 5e-5);
    }

    #[test]
    fn sag_domain_errors() {
        let l = lens(1.2, 0.0, 0.0);
        assert!(matches!(sag(&l, 1.3), Err(Error::Domain(_))));
        assert!(matches!(sag(&l, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(AsphericLens::new(0.0, 0.0, 0.0).is_err());
        assert!(AsphericLens::new(1.0, 0.3, 0.0).is_err());
        assert!(AsphericLens::new(1.0, 0.0, -0.1).is_err());
        assert!(lens(1.0, 0.0, 0.0).with_index(1.0).is_err());
        // large offsets only warn
        assert!(lens(1.0, 0.0, 0.0).with_offset(2.0, 0.0).is_ok());
    }

    #[test]
    fn lens_height_examples() {
        assert_relative_eq!(lens_height(&lens(1.0, 0.0, 0.0)).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(lens_height(&lens(5.7, 0.0, 3.75e-3)).unwrap(), 9.6585, epsilon = 1e-4);
        assert_relative_eq!(lens_height(&lens(2.0, 0.0, 0.14)).unwrap(), 4.24, epsilon = 1e-12);
    }

    #[test]
    fn thickness_examples() {
        let hemi = lens(1.0, 0.0, 0.0);
        assert_relative_eq!(thickness(&hemi, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(thickness(&hemi, 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(thickness(&hemi, 1.01, 0.0).unwrap(), 0.0);
        let l = lens(1.2, 0.0, 0.75);
        assert_relative_eq!(thickness(&l, 0.0, 1.0).unwrap(), 1.4685, epsilon = 1e-4);
    }

    #[test]
    fn height_map_shape() {
        let l = lens(1.0, 0.0, 0.5).with_offset(0.3, 0.0).unwrap();
        let map = height_map(&l, 0.05, 64).unwrap();
        let h = lens_height(&l).unwrap();
        assert!(map.max() <= h);
        assert!(h - map.max() < 0.05 * 2.0 * (1.0 + 4.0 * 0.5));
        for iy in 0..64 {
            for ix in 0..64 {
                let x = cell_center(ix, 64, 0.05) - 0.3;
                let y = cell_center(iy, 64, 0.05);
                if x.hypot(y) > 1.0 {
                    assert_eq!(map.get(ix, iy), 0.0);
                }
            }
        }
    }

    #[test]
    fn height_map_errors() {
        let l = lens(1.0, 0.0, 0.0);
        assert!(matches!(height_map(&l, 0.01, 64), Err(Error::GridTooSmall(_))));
        assert!(height_map(&l, 0.1, 63).is_err());
        assert!(height_map(&l, 0.0, 64).is_err());
    }

    #[test]
    fn scale_examples() {
        let l = lens(2.0, 0.0, 0.14);
        assert_eq!(scale_lens(&l, 1.0).unwrap(), l);
        let s = scale_lens(&l, 2.85).unwrap();
        assert_relative_eq!(s.radius, 5.7, epsilon = 1e-12);
        assert_relative_eq!(s.k4, 6.047e-3, epsilon = 1e-6);
        let s = scale_lens(&lens(2.0, 0.0, 0.149), 0.6).unwrap();
        assert_relative_eq!(s.radius, 1.2, epsilon = 1e-12);
        assert_relative_eq!(s.k4, 0.690, epsilon = 1e-3);
        assert!(scale_lens(&l, 0.0).is_err());
    }

    #[test]
    fn height_error_examples() {
        let l = lens(5.7, 0.0, 3.75e-3);
        assert_eq!(k4_from_height_error(&l, 0.0).unwrap(), l);
        assert_relative_eq!(k4_from_height_error(&l, 1.0).unwrap().k4, 4.697e-3, epsilon = 1e-6);
        let flat = k4_from_height_error(&l, -3.9585).unwrap();
        assert!(flat.k4.abs() < 1e-9);
        assert!(k4_from_height_error(&l, -4.5).is_err());
        assert!(k4_from_height_error(&lens(5.7, -0.5, 3.75e-3), 0.1).is_err());
    }

    #[test]
    fn sag_is_strictly_increasing() {
        let l = lens(1.7, 0.0, 0.3);
        let mut prev = 0.0;
        for i in 1..=200 {
            let z = sag(&l, 1.7 * i as f64 / 200.0).unwrap();
            assert!(z > prev);
            prev = z;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scaling_round_trip(r in 0.5f64..10.0, k in -2.0f64..0.0, k4 in 0.0f64..1.0, s in 0.2f64..5.0) {
                let l = AsphericLens::new(r, k, k4).unwrap();
                let back = scale_lens(&scale_lens(&l, s).unwrap(), 1.0 / s).unwrap();
                prop_assert!((back.radius - l.radius).abs() <= 1e-12 * l.radius);
                prop_assert!((back.k4 - l.k4).abs() <= 1e-12 * l.k4.max(1e-300));
            }

            #[test]
            fn scaled_sag_is_magnified(r in 0.5f64..10.0, k in -2.0f64..0.0, k4 in 0.0f64..1.0,
                                       s in 0.2f64..5.0, u in 0.0f64..1.0) {
                let l = AsphericLens::new(r, k, k4).unwrap();
                let scaled = scale_lens(&l, s).unwrap();
                let x = u * r;
                let lhs = sag(&scaled, (s * x).min(scaled.radius)).unwrap();
                let rhs = s * sag(&l, x).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
            }

            #[test]
            fn height_error_shifts_height(r in 0.5f64..8.0, k4 in 0.0f64..0.5, dh in 0.0f64..2.0) {
                let l = AsphericLens::spherical_base(r, k4).unwrap();
                let shifted = k4_from_height_error(&l, dh).unwrap();
                let diff = lens_height(&shifted).unwrap() - lens_height(&l).unwrap();
                prop_assert!((diff - dh).abs() <= 1e-12 * lens_height(&shifted).unwrap().max(1.0));
            }
        }
    }
}
