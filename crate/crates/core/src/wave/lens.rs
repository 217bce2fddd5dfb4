//! Transmission of a pillar field through the lens.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::Fft2;
use super::grid::ComplexFieldGrid;
use super::propagate::transfer_function;
use crate::error::{Error, Result};
use crate::geometry::{lens_height, thickness_with_height, AsphericLens, HeightMap};

/// How the lens body is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LensModel {
    /// Single phase mask `exp(i·k₀·(n−1)·h)` at the pillar top.
    ThinElement,
    /// Wave-propagation method: the lens is cut into slabs of thickness
    /// `slice` µm; each step propagates with the glass and the air kernel
    /// and mixes the two per pixel by the glass filling of the slab.
    MultiSlice { slice: f64 },
}

impl Default for LensModel {
    fn default() -> Self {
        LensModel::MultiSlice { slice: 0.1 }
    }
}

impl LensModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LensModel::ThinElement => Ok(()),
            LensModel::MultiSlice { slice } if slice > 0.0 && slice.is_finite() => Ok(()),
            LensModel::MultiSlice { slice } => {
                Err(Error::invalid("model.slice", format!("must be > 0, got {slice}")))
            }
        }
    }
}

/// Field leaving the lens.
#[derive(Debug, Clone)]
pub struct Transmitted {
    pub field: ComplexFieldGrid,
    /// Height of the plane carrying `field` above the pillar top (µm).
    pub plane: f64,
    /// Lens height `H` (µm); zero for a bare pillar.
    pub lens_height: f64,
}

fn check_footprint(field: &ComplexFieldGrid, lens: &AsphericLens) -> Result<()> {
    let (ox, oy) = field.origin();
    let half = field.grid().extent() / 2.0;
    let reach_x = (lens.offset_x - ox).abs() + lens.radius;
    let reach_y = (lens.offset_y - oy).abs() + lens.radius;
    if reach_x > half || reach_y > half {
        return Err(Error::GridTooSmall(format!(
            "lens footprint reaches {:.3} µm but the grid half-width is {half:.3} µm",
            reach_x.max(reach_y)
        )));
    }
    Ok(())
}

/// Lens thickness at every sample of `field` (pillar frame).
fn thickness_samples(field: &ComplexFieldGrid, lens: &AsphericLens, total: f64) -> Vec<f64> {
    let n = field.n();
    let xs: Vec<f64> = (0..n).map(|i| field.x(i)).collect();
    let ys: Vec<f64> = (0..n).map(|i| field.y(i)).collect();
    let mut t = Vec::with_capacity(n * n);
    for &y in &ys {
        t.extend(xs.iter().map(|&x| thickness_with_height(lens, total, x, y)));
    }
    t
}

/// Multiply by the unit-modulus mask `exp(i·(2π/λ)·(n_lens − 1)·h)`.
pub fn apply_height_map(field: &ComplexFieldGrid, map: &HeightMap, n_lens: f64) -> Result<ComplexFieldGrid> {
    if map.n != field.n() || map.pitch != field.pitch() || field.origin() != (0.0, 0.0) {
        return Err(Error::GridMismatch(format!(
            "height map {}x{} @ {} µm vs field {}x{} @ {} µm",
            map.n,
            map.n,
            map.pitch,
            field.n(),
            field.n(),
            field.pitch()
        )));
    }
    Ok(mask(field, &map.values, n_lens))
}

fn mask(field: &ComplexFieldGrid, thickness: &[f64], n_lens: f64) -> ComplexFieldGrid {
    let k = 2.0 * PI / field.wavelength() * (n_lens - 1.0);
    let samples = field
        .samples()
        .iter()
        .zip(thickness)
        .map(|(e, &h)| if h == 0.0 { *e } else { e * Complex64::from_polar(1.0, k * h) })
        .collect();
    field.with_samples(samples)
}

/// Thin-element lens: phase mask from the lens thickness on the field grid.
pub fn apply_thin_lens(field: &ComplexFieldGrid, lens: &AsphericLens) -> Result<ComplexFieldGrid> {
    lens.validate()?;
    check_footprint(field, lens)?;
    let total = lens_height(lens)?;
    Ok(mask(field, &thickness_samples(field, lens, total), lens.n_lens))
}

/// Carry a pillar-top field through `lens` (or straight out for a bare
/// pillar).
pub fn transmit(source: &ComplexFieldGrid, lens: Option<&AsphericLens>, model: LensModel) -> Result<Transmitted> {
    model.validate()?;
    let Some(lens) = lens else {
        return Ok(Transmitted {
            field: source.clone(),
            plane: 0.0,
            lens_height: 0.0,
        });
    };
    lens.validate()?;
    check_footprint(source, lens)?;
    let total = lens_height(lens)?;
    match model {
        LensModel::ThinElement => Ok(Transmitted {
            field: apply_thin_lens(source, lens)?,
            plane: 0.0,
            lens_height: total,
        }),
        LensModel::MultiSlice { slice } => {
            let field = multi_slice(source, lens, total, slice);
            Ok(Transmitted {
                field,
                plane: total,
                lens_height: total,
            })
        }
    }
}

fn multi_slice(source: &ComplexFieldGrid, lens: &AsphericLens, total: f64, slice: f64) -> ComplexFieldGrid {
    let grid = *source.grid();
    let steps = ((total / slice).ceil() as usize).max(1);
    let dz = total / steps as f64;
    let glass = transfer_function(&grid, dz, lens.n_lens);
    let air = transfer_function(&grid, dz, 1.0);
    let t = thickness_samples(source, lens, total);
    let fft = Fft2::new(grid.n);

    let mut field = source.samples().to_vec();
    let mut in_air = vec![Complex64::new(0.0, 0.0); field.len()];
    for step in 0..steps {
        let z0 = step as f64 * dz;
        fft.forward(&mut field);
        in_air
            .iter_mut()
            .zip(field.iter())
            .zip(&air)
            .for_each(|((o, a), h)| *o = a * h);
        field.iter_mut().zip(&glass).for_each(|(a, h)| *a *= h);
        fft.inverse(&mut field);
        fft.inverse(&mut in_air);
        // glass fraction of the slab at each pixel
        for ((e, &a), &h) in field.iter_mut().zip(&in_air).zip(&t) {
            let fill = ((h - z0) / dz).clamp(0.0, 1.0);
            if fill < 1.0 {
                *e = *e * fill + a * (1.0 - fill);
            }
        }
    }
    source.with_samples(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::height_map;
    use crate::wave::{gaussian_source, GridSpec, SourceSpec};

    #[test]
    fn thin_lens_is_unit_modulus() {
        let f = gaussian_source(&SourceSpec::default(), 128, 0.1).unwrap();
        let lens = AsphericLens::spherical_base(2.0, 0.1).unwrap();
        let g = apply_thin_lens(&f, &lens).unwrap();
        for (a, b) in f.samples().iter().zip(g.samples()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        assert!((g.power() / f.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn height_map_and_lens_agree() {
        let f = gaussian_source(&SourceSpec::default(), 128, 0.1).unwrap();
        let lens = AsphericLens::spherical_base(2.0, 0.1).unwrap();
        let map = height_map(&lens, 0.1, 128).unwrap();
        let a = apply_height_map(&f, &map, lens.n_lens).unwrap();
        let b = apply_thin_lens(&f, &lens).unwrap();
        assert_eq!(a, b);
        let wrong = height_map(&lens, 0.05, 128).unwrap();
        assert!(matches!(apply_height_map(&f, &wrong, 1.45), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn footprint_must_fit() {
        let f = gaussian_source(&SourceSpec::default(), 64, 0.1).unwrap();
        let lens = AsphericLens::spherical_base(4.0, 0.0).unwrap();
        assert!(matches!(apply_thin_lens(&f, &lens), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn multi_slice_conserves_power_of_propagating_content() {
        let grid = GridSpec::new(128, 0.1, 1.3).unwrap();
        let f = ComplexFieldGrid::from_fn(grid, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0)).unwrap();
        let lens = AsphericLens::spherical_base(2.0, 0.05).unwrap();
        let out = transmit(&f, Some(&lens), LensModel::default()).unwrap();
        assert!(out.field.power() <= f.power() * (1.0 + 1e-12));
        assert!(out.field.power() > 0.9 * f.power(), "{}", out.field.power() / f.power());
        assert!((out.plane - lens_height(&lens).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bare_pillar_passes_through() {
        let f = gaussian_source(&SourceSpec::default(), 64, 0.1).unwrap();
        let out = transmit(&f, None, LensModel::default()).unwrap();
        assert_eq!(out.field, f);
        assert_eq!(out.plane, 0.0);
    }
}
