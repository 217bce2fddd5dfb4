use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::Fft2;
use super::grid::{ComplexFieldGrid, GridSpec};
use crate::error::{Error, Result};

/// Angular-spectrum transfer function for a step `dz` in a medium of index
/// `n_medium`, in FFT bin order. Evanescent bins are zero.
pub(crate) fn transfer_function(grid: &GridSpec, dz: f64, n_medium: f64) -> Vec<Complex64> {
    let n = grid.n;
    let k_lim = n_medium / grid.wavelength;
    let k_lim2 = k_lim * k_lim;
    let freqs: Vec<f64> = (0..n).map(|k| grid.freq(k)).collect();
    let mut h = Vec::with_capacity(n * n);
    for &fy in &freqs {
        for &fx in &freqs {
            let arg = k_lim2 - fx * fx - fy * fy;
            h.push(if arg >= 0.0 {
                Complex64::from_polar(1.0, 2.0 * PI * dz * arg.sqrt())
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
    }
    h
}

/// Propagate a distance `z ≥ 0` through a homogeneous medium of index
/// `n_medium`.
pub fn propagate_in_medium(field: &ComplexFieldGrid, z: f64, n_medium: f64) -> Result<ComplexFieldGrid> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::invalid("z", format!("propagation distance must be >= 0, got {z}")));
    }
    if !(n_medium >= 1.0 && n_medium.is_finite()) {
        return Err(Error::invalid("n_medium", format!("must be >= 1, got {n_medium}")));
    }
    let grid = *field.grid();
    let h = transfer_function(&grid, z, n_medium);
    let fft = Fft2::new(grid.n);
    let mut data = field.samples().to_vec();
    fft.forward(&mut data);
    data.iter_mut().zip(&h).for_each(|(a, t)| *a *= t);
    fft.inverse(&mut data);
    Ok(field.with_samples(data))
}

/// Free-space angular-spectrum propagation by `z ≥ 0` µm.
pub fn propagate_asm(field: &ComplexFieldGrid, z: f64) -> Result<ComplexFieldGrid> {
    propagate_in_medium(field, z, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{gaussian_source, SourceSpec};

    fn wide_gaussian() -> ComplexFieldGrid {
        let spec = SourceSpec {
            mfd: 6.0,
            ..Default::default()
        };
        gaussian_source(&spec, 512, 0.1).unwrap()
    }

    #[test]
    fn zero_distance_is_identity() {
        let f = wide_gaussian();
        let g = propagate_asm(&f, 0.0).unwrap();
        let err = f
            .samples()
            .iter()
            .zip(g.samples())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max deviation {err}");
    }

    #[test]
    fn power_is_conserved() {
        let f = wide_gaussian();
        for z in [0.3, 2.0, 11.0] {
            let g = propagate_asm(&f, z).unwrap();
            assert!((g.power() / f.power() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn steps_compose() {
        let spec = SourceSpec::default();
        let f = gaussian_source(&spec, 128, 0.1).unwrap();
        let once = propagate_asm(&f, 3.5).unwrap();
        let twice = propagate_asm(&propagate_asm(&f, 1.25).unwrap(), 2.25).unwrap();
        let norm = once.samples().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let diff = once
            .samples()
            .iter()
            .zip(twice.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff / norm < 1e-10);
    }

    #[test]
    fn negative_distance_rejected() {
        assert!(propagate_asm(&wide_gaussian(), -1.0).is_err());
    }
}
