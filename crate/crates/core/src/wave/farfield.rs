use num_complex::Complex64;

use super::fft::plan;
use super::grid::ComplexFieldGrid;
use crate::error::{Error, Result};
use crate::par;

/// Far-field intensity over direction cosines `(NAx, NAy) = (λ·fx, λ·fy)`.
///
/// The map is `(2·half + 1)²` samples with `NA = (i − half)·dna`, so the
/// optical axis is sample `(half, half)`. Samples outside the unit disc are
/// zero. Intensities are scaled so that `Σ I·dna²` is the propagating power
/// of the field they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMap {
    half: usize,
    dna: f64,
    wavelength: f64,
    intensity: Vec<f64>,
    total_power: f64,
    source_power: f64,
}

impl FarFieldMap {
    /// Build a map from raw samples; anything outside the unit disc is
    /// zeroed and the source power is taken to be the propagating power.
    pub fn from_samples(half: usize, dna: f64, wavelength: f64, mut intensity: Vec<f64>) -> Result<Self> {
        let side = 2 * half + 1;
        if intensity.len() != side * side {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {side}x{side} far-field map",
                intensity.len()
            )));
        }
        if !(dna > 0.0 && dna.is_finite()) {
            return Err(Error::invalid("dNA", format!("must be > 0, got {dna}")));
        }
        if intensity.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("intensity", "must be finite and non-negative"));
        }
        for iy in 0..side {
            let ny = (iy as f64 - half as f64) * dna;
            for ix in 0..side {
                let nx = (ix as f64 - half as f64) * dna;
                if nx * nx + ny * ny > 1.0 {
                    intensity[iy * side + ix] = 0.0;
                }
            }
        }
        let total = intensity.iter().sum::<f64>() * dna * dna;
        Ok(FarFieldMap {
            half,
            dna,
            wavelength,
            intensity,
            total_power: total,
            source_power: total,
        })
    }

    /// Synthetic map sampled from `f(NAx, NAy)`.
    pub fn from_fn(half: usize, dna: f64, wavelength: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let side = 2 * half + 1;
        let mut v = Vec::with_capacity(side * side);
        for iy in 0..side {
            let ny = (iy as f64 - half as f64) * dna;
            for ix in 0..side {
                v.push(f((ix as f64 - half as f64) * dna, ny));
            }
        }
        Self::from_samples(half, dna, wavelength, v)
    }

    pub fn half(&self) -> usize {
        self.half
    }

    /// Samples per side.
    pub fn side(&self) -> usize {
        2 * self.half + 1
    }

    pub fn dna(&self) -> f64 {
        self.dna
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Direction cosine of sample index `i` along either axis.
    pub fn na(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.dna
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.intensity[iy * self.side() + ix]
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn peak(&self) -> f64 {
        self.intensity.iter().copied().fold(0.0, f64::max)
    }

    /// Power carried by propagating directions, `Σ I·dNA²`.
    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// Power of the field before the evanescent cut.
    pub fn source_power(&self) -> f64 {
        self.source_power
    }

    /// Power lost to evanescent directions (never renormalised away).
    pub fn evanescent_loss(&self) -> f64 {
        (self.source_power - self.total_power).max(0.0)
    }

    /// Copy of the map rotated by 90° about the optical axis.
    pub fn rotated_90(&self) -> Self {
        let s = self.side();
        let mut v = vec![0.0; s * s];
        for iy in 0..s {
            for ix in 0..s {
                v[ix * s + (s - 1 - iy)] = self.intensity[iy * s + ix];
            }
        }
        FarFieldMap {
            intensity: v,
            ..self.clone()
        }
    }
}

/// Far field of `field` by zero-padded FFT to `n·pad_factor` samples,
/// keeping only the propagating directions.
pub fn far_field(field: &ComplexFieldGrid, pad_factor: usize) -> Result<FarFieldMap> {
    if ![1, 2, 4, 8].contains(&pad_factor) {
        return Err(Error::invalid(
            "pad_factor",
            format!("must be one of 1, 2, 4, 8, got {pad_factor}"),
        ));
    }
    let n = field.n();
    let m = n * pad_factor;
    let pitch = field.pitch();
    let lambda = field.wavelength();
    let dna = lambda / (m as f64 * pitch);
    let half = ((1.0 / dna + 1e-9).floor() as usize).min(m / 2 - 1);
    let side = 2 * half + 1;
    let bin = |j: usize| -> usize { (j + m - half) % m };

    let fft = plan(m, true);
    let samples = field.samples();

    // rows: pad, transform, keep the propagating band
    let rows: Vec<usize> = (0..n).collect();
    let partial: Vec<Vec<Complex64>> = par::map_ordered(&rows, |&iy| {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[..n].copy_from_slice(&samples[iy * n..(iy + 1) * n]);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut buf, &mut scratch);
        (0..side).map(|j| buf[bin(j)]).collect()
    });

    // columns of the band
    let cols: Vec<usize> = (0..side).collect();
    let columns: Vec<Vec<Complex64>> = par::map_ordered(&cols, |&ix| {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (iy, row) in partial.iter().enumerate() {
            buf[iy] = row[ix];
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut buf, &mut scratch);
        (0..side).map(|j| buf[bin(j)]).collect()
    });

    let scale = pitch.powi(4) / (lambda * lambda);
    let mut intensity = vec![0.0; side * side];
    for (ix, col) in columns.iter().enumerate() {
        for (iy, c) in col.iter().enumerate() {
            intensity[iy * side + ix] = c.norm_sqr() * scale;
        }
    }
    let mut map = FarFieldMap::from_samples(half, dna, lambda, intensity)?;
    map.source_power = field.power();
    Ok(map)
}
