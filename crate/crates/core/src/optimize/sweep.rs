//! One-parameter sweeps over `k4` and the conic constant.

use serde::{Deserialize, Serialize};

use super::search::maximize_in_bracket;
use super::{evaluate_design, SimContext, SweepRecord};
use crate::error::{Error, Result};
use crate::geometry::AsphericLens;
use crate::par;

/// Relative `k4` tolerance of the refined optimum.
pub const K4_REL_TOL: f64 = 1e-3;

fn check_ascending(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(name, "empty grid"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(name, "non-finite value"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(name, "must be strictly ascending"));
    }
    Ok(())
}

/// Evaluate a lens of radius `radius` and conic `conic` for every `k4`.
/// Records come back in grid order.
pub fn sweep_k4(radius: f64, conic: f64, k4_grid: &[f64], ctx: &SimContext) -> Result<Vec<SweepRecord>> {
    check_ascending("k4_grid", k4_grid)?;
    ctx.validate()?;
    let lenses: Vec<AsphericLens> = k4_grid
        .iter()
        .map(|&k4| AsphericLens::new(radius, conic, k4))
        .collect::<Result<_>>()?;
    par::map_ordered(&lenses, |l| evaluate_design(Some(l), ctx))
        .into_iter()
        .collect()
}

/// Refined `k4` maximising the power inside the fibre NA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestK4 {
    pub k4: f64,
    pub record: SweepRecord,
    pub bracket: (f64, f64),
    /// `(k4, eta014)` for every evaluation, pre-scan first.
    pub evaluations: Vec<(f64, f64)>,
}

/// Maximise `eta014` over `k4` in `bracket`.
pub fn best_k4(radius: f64, conic: f64, bracket: (f64, f64), ctx: &SimContext) -> Result<BestK4> {
    let (lo, hi) = bracket;
    if !(lo >= 0.0) {
        return Err(Error::invalid("k4_bracket", format!("lower end must be >= 0, got {lo}")));
    }
    ctx.validate()?;
    AsphericLens::new(radius, conic, hi)?;
    let objective = |k4: f64| -> Result<(f64, SweepRecord)> {
        let rec = evaluate_design(Some(&AsphericLens::new(radius, conic, k4)?), ctx)?;
        Ok((rec.eta014(), rec))
    };
    let found = maximize_in_bracket(objective, lo, hi, K4_REL_TOL)?;
    Ok(BestK4 {
        k4: found.x,
        record: found.payload,
        bracket,
        evaluations: found.evaluations,
    })
}

/// Best `k4` at one conic constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicOptimum {
    pub conic: f64,
    pub best: BestK4,
}

/// For each conic constant, the `k4` optimum inside `bracket`.
pub fn sweep_k(radius: f64, k_grid: &[f64], bracket: (f64, f64), ctx: &SimContext) -> Result<Vec<ConicOptimum>> {
    check_ascending("k_grid", k_grid)?;
    if !k_grid.contains(&0.0) {
        return Err(Error::invalid("k_grid", "must include the spherical base k = 0"));
    }
    if let Some(&k) = k_grid.iter().find(|&&k| k > 0.0) {
        return Err(Error::invalid("k_grid", format!("oblate conics are not supported, got {k}")));
    }
    k_grid
        .iter()
        .map(|&conic| best_k4(radius, conic, bracket, ctx).map(|best| ConicOptimum { conic, best }))
        .collect()
}
