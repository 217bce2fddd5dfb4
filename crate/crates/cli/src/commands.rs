//! The subcommands. Each builds its artifacts in memory and returns them
//! with a JSON summary; writing is left to the caller.

use pillar_lens::geometry::{lens_height, sag};
use pillar_lens::optimize::{
    evaluate_design, family_scan, match_fiber, plateau_half_width, simulate_design, sweep_k, sweep_k4,
    tolerance_height, tolerance_offset, SweepRecord,
};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{farfield_csv, fmt_num, sweep_csv, sweep_row, table_csv, to_json, SWEEP_HEADER};
use crate::CliError;

/// Artifacts of one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub summary: Value,
}

impl Outcome {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

/// Commands in the order they are listed by `--help`.
pub const COMMANDS: &[&str] = &[
    "profile",
    "simulate",
    "sweep-k4",
    "sweep-k",
    "family",
    "match-fiber",
    "tolerance-offset",
    "tolerance-height",
];

pub fn run(command: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        "profile" => profile(cfg),
        "simulate" => simulate(cfg),
        "sweep-k4" => cmd_sweep_k4(cfg),
        "sweep-k" => cmd_sweep_k(cfg),
        "family" => family(cfg),
        "match-fiber" => match_cmd(cfg),
        "tolerance-offset" => tol_offset(cfg),
        "tolerance-height" => tol_height(cfg),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn record_json(rec: &SweepRecord) -> Value {
    let s = &rec.stats;
    let c = &rec.coupling;
    json!({
        "R": rec.lens.map(|l| l.radius),
        "k": rec.lens.map(|l| l.conic),
        "k4": rec.lens.map(|l| l.k4),
        "offset_x": rec.lens.map(|l| l.offset_x),
        "dH": rec.height_error,
        "lens_height": rec.lens_height,
        "mfd": s.mfd,
        "na": s.na,
        "eta014": s.power_in_na014,
        "gaussianity": s.gaussianity,
        "bimodal": s.bimodal,
        "eta_na": c.eta_na,
        "eta_overlap": c.eta_overlap,
        "consistency_gap": c.consistency_gap,
        "shortcut_valid": c.shortcut_valid,
    })
}

fn profile(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lens = cfg.require_lens()?;
    let n = cfg.profile_samples;
    let rows = (0..n)
        .map(|i| {
            let x = lens.radius * i as f64 / (n - 1) as f64;
            sag(lens, x).map(|z| vec![x, z])
        })
        .collect::<pillar_lens::Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    out.file("profile.csv", table_csv(&["x", "z"], &rows));
    out.summary = json!({
        "R": lens.radius,
        "k": lens.conic,
        "k4": lens.k4,
        "lens_height": lens_height(lens)?,
        "samples": n,
    });
    Ok(out)
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sim = simulate_design(cfg.lens.as_ref(), &cfg.ctx)?;
    let mut out = Outcome::default();
    out.file("design.csv", sweep_csv([&sim.record]));
    if !cfg.summary_only {
        let (csv, meta) = farfield_csv(&sim.far);
        out.file("farfield.csv", csv);
        out.file("farfield.json", to_json(&meta));
    }
    let mut summary = record_json(&sim.record);
    summary["fiber_implied_na"] = json!(cfg.ctx.fiber.consistency_check());
    summary["evanescent_loss"] = json!(sim.far.evanescent_loss());
    out.summary = summary;
    Ok(out)
}

fn cmd_sweep_k4(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lens = cfg.require_lens()?;
    let records = sweep_k4(lens.radius, lens.conic, &cfg.sweep_k4, &cfg.ctx)?;
    let bare = evaluate_design(None, &cfg.ctx)?;
    let best = records
        .iter()
        .fold(&records[0], |a, b| if b.eta014() > a.eta014() { b } else { a });
    let mut out = Outcome::default();
    out.file("sweep_k4.csv", sweep_csv(&records));
    out.summary = json!({
        "R": lens.radius,
        "k": lens.conic,
        "points": records.len(),
        "best_k4": best.lens.map(|l| l.k4),
        "best_eta014": best.eta014(),
        "bare_eta014": bare.eta014(),
        "first_bimodal_k4": records.iter().find(|r| r.stats.bimodal).and_then(|r| r.lens.map(|l| l.k4)),
    });
    Ok(out)
}

fn evaluations_csv(groups: &[(f64, &[(f64, f64)])], label: &str) -> String {
    let rows: Vec<Vec<f64>> = groups
        .iter()
        .flat_map(|(key, evals)| evals.iter().map(move |(k4, eta)| vec![*key, *k4, *eta]))
        .collect();
    table_csv(&[label, "k4", "eta014"], &rows)
}

fn cmd_sweep_k(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lens = cfg.require_lens()?;
    let optima = sweep_k(lens.radius, &cfg.sweep_k, cfg.bracket, &cfg.ctx)?;
    let mut out = Outcome::default();
    out.file("sweep_k.csv", sweep_csv(optima.iter().map(|o| &o.best.record)));
    if !cfg.summary_only {
        let groups: Vec<(f64, &[(f64, f64)])> = optima.iter().map(|o| (o.conic, o.best.evaluations.as_slice())).collect();
        out.file("sweep_k_evaluations.csv", evaluations_csv(&groups, "k"));
    }
    let best = optima
        .iter()
        .fold(&optima[0], |a, b| if b.best.record.eta014() > a.best.record.eta014() { b } else { a });
    out.summary = json!({
        "R": lens.radius,
        "best_k": best.conic,
        "per_k": optima.iter().map(|o| json!({"k": o.conic, "k4": o.best.k4, "eta014": o.best.record.eta014()})).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn family(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scan = family_scan(&cfg.family_radii, &cfg.ctx, &cfg.family)?;
    let mut out = Outcome::default();
    out.file("family.csv", sweep_csv(scan.points.iter().map(|p| &p.best.record)));
    if !cfg.summary_only {
        let groups: Vec<(f64, &[(f64, f64)])> = scan.points.iter().map(|p| (p.radius, p.best.evaluations.as_slice())).collect();
        out.file("family_evaluations.csv", evaluations_csv(&groups, "R"));
    }
    out.summary = json!({
        "fit": scan.fit,
        "warm": scan.points.iter().map(|p| p.warm).collect::<Vec<_>>(),
        "k4": scan.points.iter().map(|p| p.best.k4).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn match_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = match_fiber(&cfg.ctx, &cfg.matching)?;
    let bare = evaluate_design(None, &cfg.ctx)?;
    let mut out = Outcome::default();
    out.file("match.csv", sweep_csv([&m.record]));
    out.file("match_seed.csv", sweep_csv(m.seed_scan.points.iter().map(|p| &p.best.record)));
    let trace: Vec<Vec<f64>> = m
        .trace
        .iter()
        .map(|s| vec![s.iteration as f64, s.x[0], s.x[1], s.value, s.best_value])
        .collect();
    out.file(
        "match_trace.csv",
        table_csv(&["iteration", "R", "k4", "eta_overlap", "best_eta_overlap"], &trace),
    );
    let seed = &m.seed_scan.points[m.seed_index];
    out.summary = json!({
        "final": record_json(&m.record),
        "seed": {"R": seed.radius, "k4": seed.best.k4, "eta_na": seed.best.record.coupling.eta_na},
        "bare": record_json(&bare),
        "converged": m.converged,
        "iterations": m.iterations,
        "evaluations": m.evaluations,
    });
    Ok(out)
}

/// Plateau summary shared by both tolerance scans.
fn plateau_json(xs: &[f64], records: &[&SweepRecord]) -> Result<Value, CliError> {
    let eta_na: Vec<f64> = records.iter().map(|r| r.coupling.eta_na).collect();
    let overlap: Vec<f64> = records.iter().map(|r| r.coupling.eta_overlap).collect();
    let (l1, r1) = plateau_half_width(xs, &eta_na, 0.9)?;
    let (l2, r2) = plateau_half_width(xs, &overlap, 0.9)?;
    let mut asym: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if let Some(j) = xs.iter().position(|&y| (y + x).abs() < 1e-12) {
            asym = asym.max((eta_na[i] - eta_na[j]).abs()).max((overlap[i] - overlap[j]).abs());
        }
    }
    Ok(json!({
        "eta_na_plateau": [l1, r1],
        "eta_overlap_plateau": [l2, r2],
        "max_asymmetry": asym,
    }))
}

fn tol_offset(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lens = cfg.require_lens()?;
    let records = tolerance_offset(lens, &cfg.offsets, &cfg.ctx)?;
    let mut out = Outcome::default();
    out.file("tolerance_offset.csv", sweep_csv(&records));
    let refs: Vec<&SweepRecord> = records.iter().collect();
    out.summary = plateau_json(&cfg.offsets, &refs)?;
    Ok(out)
}

fn tol_height(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lens = cfg.require_lens()?;
    let entries = tolerance_height(lens, &cfg.height_errors, &cfg.ctx)?;
    let mut csv = format!("{SWEEP_HEADER},dH_percent\n");
    let mut xs = Vec::new();
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for e in &entries {
        match &e.outcome {
            Ok(rec) => {
                csv.push_str(&format!("{},{}\n", sweep_row(rec), fmt_num(e.percent)));
                xs.push(e.dh);
                ok.push(rec);
            }
            Err(msg) => skipped.push(json!({"dH": e.dh, "dH_percent": e.percent, "error": msg})),
        }
    }
    let mut out = Outcome::default();
    out.file("tolerance_height.csv", csv);
    let mut summary = if xs.contains(&0.0) { plateau_json(&xs, &ok)? } else { json!({}) };
    summary["lens_height"] = json!(lens_height(lens)?);
    summary["skipped"] = Value::Array(skipped);
    out.summary = summary;
    Ok(out)
}
