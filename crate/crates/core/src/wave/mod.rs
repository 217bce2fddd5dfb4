//! Sampled scalar fields and their free-space and through-lens transport.

mod farfield;
pub(crate) mod fft;
mod grid;
mod lens;
mod propagate;
mod source;

pub use farfield::{far_field, FarFieldMap};
pub use grid::{ComplexFieldGrid, GridSpec};
pub use lens::{apply_height_map, apply_thin_lens, transmit, LensModel, Transmitted};
pub use propagate::{propagate_asm, propagate_in_medium};
pub use source::{gaussian_source, SourceSpec};

pub use num_complex::Complex64;
