use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cell_center;

/// Geometry shared by every field in a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Samples per side (even, ≥ 64).
    pub n: usize,
    /// Sample pitch (µm).
    pub pitch: f64,
    /// Vacuum wavelength (µm).
    pub wavelength: f64,
}

impl GridSpec {
    pub fn new(n: usize, pitch: f64, wavelength: f64) -> Result<Self> {
        let g = GridSpec { n, pitch, wavelength };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 64 || self.n % 2 != 0 {
            return Err(Error::invalid("grid.N", format!("must be even and >= 64, got {}", self.n)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::invalid("wavelength", format!("must be > 0, got {}", self.wavelength)));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(Error::invalid("grid.pitch", format!("must be > 0, got {}", self.pitch)));
        }
        if self.pitch > self.wavelength / 2.0 {
            return Err(Error::invalid(
                "grid.pitch",
                format!(
                    "pitch {} exceeds the Nyquist limit lambda/2 = {}",
                    self.pitch,
                    self.wavelength / 2.0
                ),
            ));
        }
        Ok(())
    }

    /// Side length of the grid (µm).
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.pitch
    }

    /// Coordinate of sample `i` relative to the grid centre.
    pub fn coord(&self, i: usize) -> f64 {
        cell_center(i, self.n, self.pitch)
    }

    /// Spatial frequency (cycles/µm) of FFT bin `k`.
    pub(crate) fn freq(&self, k: usize) -> f64 {
        let n = self.n as isize;
        let k = k as isize;
        let m = if k < n / 2 { k } else { k - n };
        m as f64 / (self.n as f64 * self.pitch)
    }
}

/// Complex scalar field on an `n × n` cell-centred grid.
///
/// Samples are row-major, `samples[iy * n + ix]`, at positions
/// `origin + (coord(ix), coord(iy))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFieldGrid {
    grid: GridSpec,
    origin: (f64, f64),
    samples: Vec<Complex64>,
}

impl ComplexFieldGrid {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.n * grid.n {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}x{} grid",
                samples.len(),
                grid.n,
                grid.n
            )));
        }
        Ok(ComplexFieldGrid {
            grid,
            origin: (0.0, 0.0),
            samples,
        })
    }

    /// Sample `f(x, y)` at every cell centre.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        grid.validate()?;
        let n = grid.n;
        let xs: Vec<f64> = (0..n).map(|i| grid.coord(i)).collect();
        let mut samples = Vec::with_capacity(n * n);
        for &y in &xs {
            samples.extend(xs.iter().map(|&x| f(x, y)));
        }
        Ok(ComplexFieldGrid {
            grid,
            origin: (0.0, 0.0),
            samples,
        })
    }

    pub fn with_origin(mut self, x: f64, y: f64) -> Self {
        self.origin = (x, y);
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn pitch(&self) -> f64 {
        self.grid.pitch
    }

    pub fn wavelength(&self) -> f64 {
        self.grid.wavelength
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.samples[iy * self.grid.n + ix]
    }

    /// Physical x coordinate of column `ix`.
    pub fn x(&self, ix: usize) -> f64 {
        self.origin.0 + self.grid.coord(ix)
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.origin.1 + self.grid.coord(iy)
    }

    /// Total power `Σ|E|²·pitch²`.
    pub fn power(&self) -> f64 {
        let p2 = self.grid.pitch * self.grid.pitch;
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * p2
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Multiply every sample by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| *s *= c);
        out
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        ComplexFieldGrid {
            grid: self.grid,
            origin: self.origin,
            samples,
        }
    }

    /// Error unless `other` has the same size, pitch, wavelength and origin.
    pub fn check_same_geometry(&self, other: &ComplexFieldGrid) -> Result<()> {
        if self.grid != other.grid || self.origin != other.origin {
            return Err(Error::GridMismatch(format!(
                "{:?} @ {:?} vs {:?} @ {:?}",
                self.grid, self.origin, other.grid, other.origin
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(512, 0.1, 1.3).is_ok());
        assert!(GridSpec::new(63, 0.1, 1.3).is_err());
        assert!(GridSpec::new(32, 0.1, 1.3).is_err());
        assert!(GridSpec::new(512, 0.7, 1.3).is_err());
        assert!(GridSpec::new(512, 0.65, 1.3).is_ok());
        assert!(GridSpec::new(512, 0.1, 0.0).is_err());
    }

    #[test]
    fn fft_frequencies() {
        let g = GridSpec::new(64, 0.5, 1.3).unwrap();
        assert_eq!(g.freq(0), 0.0);
        assert_eq!(g.freq(1), 1.0 / 32.0);
        assert_eq!(g.freq(32), -1.0);
        assert_eq!(g.freq(63), -1.0 / 32.0);
    }

    #[test]
    fn coordinates_are_symmetric() {
        let g = GridSpec::new(64, 0.1, 1.3).unwrap();
        for i in 0..64 {
            assert!((g.coord(i) + g.coord(63 - i)).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_count_mismatch() {
        let g = GridSpec::new(64, 0.1, 1.3).unwrap();
        assert!(ComplexFieldGrid::new(g, vec![Complex64::new(0.0, 0.0); 10]).is_err());
    }
}
