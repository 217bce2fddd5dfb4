//! Two-stage design of a lens matched to a single-mode fibre.

use serde::{Deserialize, Serialize};

use super::family::{family_scan, FamilyOptions, FamilyScan};
use super::search::{nelder_mead_max, SimplexStep};
use super::{evaluate_design, SimContext, SweepRecord};
use crate::error::{Error, Result};
use crate::geometry::AsphericLens;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Radii of the stage-one family scan (µm, ascending).
    pub radii: Vec<f64>,
    pub family: FamilyOptions,
    pub max_iters: usize,
    /// Convergence threshold on the spread of overlap values in the simplex.
    pub tolerance: f64,
    /// Initial simplex step in radius (µm).
    pub radius_step: f64,
    /// Initial simplex step in `k4`, relative to the seed.
    pub k4_step: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            radii: vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
            family: FamilyOptions::default(),
            max_iters: 200,
            tolerance: 1e-4,
            radius_step: 0.5,
            k4_step: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub seed_scan: FamilyScan,
    /// Index into `seed_scan.points` of the stage-two start.
    pub seed_index: usize,
    pub lens: AsphericLens,
    pub record: SweepRecord,
    pub trace: Vec<SimplexStep>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Stage one scans the family and keeps the design with the best NA-based
/// coupling; stage two maximises the mode overlap over `(R, k4)` with
/// Nelder–Mead and returns the best design seen.
pub fn match_fiber(ctx: &SimContext, cfg: &MatchConfig) -> Result<MatchResult> {
    if cfg.max_iters == 0 {
        return Err(Error::invalid("max_iters", "must be positive"));
    }
    if !(cfg.radius_step > 0.0 && cfg.k4_step > 0.0) {
        return Err(Error::invalid("step", "simplex steps must be positive"));
    }
    let seed_scan = family_scan(&cfg.radii, ctx, &cfg.family)?;
    let mut seed_index = 0;
    for (i, p) in seed_scan.points.iter().enumerate() {
        if p.best.record.coupling.eta_na > seed_scan.points[seed_index].best.record.coupling.eta_na {
            seed_index = i;
        }
    }
    let seed = &seed_scan.points[seed_index];
    let (r0, k40) = (seed.radius, seed.best.k4);
    log::info!("seed R = {r0}, k4 = {k40:.6e}, eta_na = {:.4}", seed.best.record.coupling.eta_na);

    // k4 is searched in units of the seed value so both axes are O(1).
    let design = |v: &[f64]| AsphericLens::spherical_base(v[0], v[1] * k40);
    let objective = |v: &[f64]| -> f64 {
        let Ok(lens) = design(v) else {
            return -1.0;
        };
        match evaluate_design(Some(&lens), ctx) {
            Ok(rec) => rec.coupling.eta_overlap,
            Err(e) => {
                log::debug!("infeasible design {lens:?}: {e}");
                -1.0
            }
        }
    };
    let run = nelder_mead_max(
        objective,
        &[r0, 1.0],
        &[cfg.radius_step, cfg.k4_step],
        cfg.tolerance,
        cfg.max_iters,
    );
    if !run.converged {
        log::warn!("simplex did not converge in {} iterations", cfg.max_iters);
    }
    let lens = design(&run.x)?;
    let record = evaluate_design(Some(&lens), ctx)?;
    let trace = run
        .trace
        .into_iter()
        .map(|mut s| {
            s.x[1] *= k40;
            s
        })
        .collect();
    Ok(MatchResult {
        seed_index,
        lens,
        record,
        trace,
        iterations: run.iterations,
        evaluations: run.evaluations,
        converged: run.converged,
        seed_scan,
    })
}
