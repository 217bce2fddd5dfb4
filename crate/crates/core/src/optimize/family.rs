//! Optimal `k4` across lens radii and its power-law fit.

use serde::{Deserialize, Serialize};

use super::sweep::{best_k4, BestK4};
use super::SimContext;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptions {
    /// Anchor design used to predict the first bracket.
    pub reference_radius: f64,
    pub reference_k4: f64,
    /// Centre each bracket on the previous optimum scaled by `R⁻³`.
    pub warm_start: bool,
    /// Bracket multipliers around a warm prediction.
    pub warm_factors: (f64, f64),
    /// Bracket multipliers around the reference prediction.
    pub cold_factors: (f64, f64),
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions {
            reference_radius: 2.0,
            reference_k4: 0.14,
            warm_start: true,
            warm_factors: (0.5, 2.0),
            cold_factors: (0.25, 4.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub radius: f64,
    pub best: BestK4,
    /// Whether the warm bracket held the optimum.
    pub warm: bool,
}

/// Log–log fit `k4 = A·R^p` of the family optima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub reference_radius: f64,
    /// Free-exponent prediction at the reference radius.
    pub k4_at_reference: f64,
    /// Prediction at the reference radius with the exponent fixed to −3.
    pub k4_cubic_at_reference: f64,
    /// One standard error of `k4_cubic_at_reference`.
    pub k4_cubic_halfwidth: f64,
    /// `ln k4` residuals of the free fit, in radius order.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyScan {
    pub points: Vec<FamilyPoint>,
    pub fit: ScalingFit,
}

/// Ordinary least squares of `ln k4` on `ln R`.
pub fn fit_scaling(radii: &[f64], k4s: &[f64], reference_radius: f64) -> Result<ScalingFit> {
    let n = radii.len();
    if n < 4 || k4s.len() != n {
        return Err(Error::Fit(format!("need at least 4 paired points, got {n}")));
    }
    if radii.iter().chain(k4s).any(|&v| !(v > 0.0)) {
        return Err(Error::Fit("radii and k4 must be positive".into()));
    }
    let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = k4s.iter().map(|k| k.ln()).collect();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("radii must not all be equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();

    let lnx0 = reference_radius.ln();
    let c: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b + 3.0 * a).collect();
    let mc = c.iter().sum::<f64>() / nf;
    let sc = (c.iter().map(|v| (v - mc).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt() / nf.sqrt();
    let cubic = (mc - 3.0 * lnx0).exp();
    Ok(ScalingFit {
        exponent: slope,
        exponent_stderr: stderr,
        reference_radius,
        k4_at_reference: (intercept + slope * lnx0).exp(),
        k4_cubic_at_reference: cubic,
        k4_cubic_halfwidth: cubic * sc,
        residuals,
    })
}

/// Find the optimal `k4` at every radius (ascending) and fit the scaling.
pub fn family_scan(radii: &[f64], ctx: &SimContext, opts: &FamilyOptions) -> Result<FamilyScan> {
    if radii.len() < 4 {
        return Err(Error::invalid("radii", format!("need at least 4 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::invalid("radii", "must be positive and strictly ascending"));
    }
    let cubic = |k4: f64, from: f64, to: f64| k4 * (from / to).powi(3);
    let mut points: Vec<FamilyPoint> = Vec::with_capacity(radii.len());
    for &radius in radii {
        let cold = cubic(opts.reference_k4, opts.reference_radius, radius);
        let cold_bracket = (cold * opts.cold_factors.0, cold * opts.cold_factors.1);
        let warm_bracket = match points.last() {
            Some(prev) if opts.warm_start => {
                let p = cubic(prev.best.k4, prev.radius, radius);
                Some((p * opts.warm_factors.0, p * opts.warm_factors.1))
            }
            _ => None,
        };
        let point = match warm_bracket {
            Some(b) => match best_k4(radius, 0.0, b, ctx) {
                Ok(best) => FamilyPoint { radius, best, warm: true },
                Err(Error::NoInteriorMaximum { .. }) => {
                    log::warn!("warm bracket missed the optimum at R = {radius}; retrying cold");
                    FamilyPoint { radius, best: best_k4(radius, 0.0, cold_bracket, ctx)?, warm: false }
                }
                Err(e) => return Err(e),
            },
            None => FamilyPoint { radius, best: best_k4(radius, 0.0, cold_bracket, ctx)?, warm: false },
        };
        log::info!("R = {radius}: k4 = {:.6e}, eta014 = {:.4}", point.best.k4, point.best.record.eta014());
        points.push(point);
    }
    let k4s: Vec<f64> = points.iter().map(|p| p.best.k4).collect();
    let fit = fit_scaling(radii, &k4s, opts.reference_radius)?;
    Ok(FamilyScan { points, fit })
}
