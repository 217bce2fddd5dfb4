//! CSV and JSON artifact writers.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use pillar_lens::analysis::na_1e2;
use pillar_lens::optimize::SweepRecord;
use pillar_lens::wave::FarFieldMap;
use serde::Serialize;

/// Significant digits of every number written to CSV.
pub const SIG_DIGITS: usize = 9;

/// Format with [`SIG_DIGITS`] significant digits, trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", SIG_DIGITS - 1, v);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

/// Column order of every sweep CSV.
pub const SWEEP_HEADER: &str = "R,k,k4,offset_x,dH,mfd,na,eta014,gaussianity,bimodal,eta_na,eta_overlap";

/// One sweep CSV row (no trailing newline). The bare pillar has empty lens
/// columns.
pub fn sweep_row(rec: &SweepRecord) -> String {
    let mut row = String::new();
    match &rec.lens {
        Some(l) => {
            let _ = write!(row, "{},{},{},{}", fmt_num(l.radius), fmt_num(l.conic), fmt_num(l.k4), fmt_num(l.offset_x));
        }
        None => row.push_str(",,,"),
    }
    let s = &rec.stats;
    let c = &rec.coupling;
    let _ = write!(
        row,
        ",{},{},{},{},{},{},{},{}",
        fmt_num(rec.height_error),
        fmt_num(s.mfd),
        fmt_num(s.na),
        fmt_num(s.power_in_na014),
        fmt_num(s.gaussianity),
        s.bimodal,
        fmt_num(c.eta_na),
        fmt_num(c.eta_overlap)
    );
    row
}

pub fn sweep_csv<'a>(records: impl IntoIterator<Item = &'a SweepRecord>) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&sweep_row(r));
        out.push('\n');
    }
    out
}

/// Generic numeric table.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Far-field metadata written next to the intensity CSV.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FarFieldSidecar {
    pub dna: f64,
    pub wavelength: f64,
    pub half: usize,
    pub side: usize,
    pub peak_intensity: f64,
    pub total_power: f64,
    pub source_power: f64,
    pub evanescent_loss: f64,
}

/// Far-field CSV (`nax,nay,intensity`, row-major, peak = 1) and its
/// sidecar.
pub fn farfield_csv(map: &FarFieldMap) -> (String, FarFieldSidecar) {
    let peak = map.peak();
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let side = map.side();
    let mut out = String::with_capacity(side * side * 32);
    out.push_str("nax,nay,intensity\n");
    for iy in 0..side {
        let nay = fmt_num(map.na(iy));
        for ix in 0..side {
            let _ = writeln!(out, "{},{},{}", fmt_num(map.na(ix)), nay, fmt_num(map.get(ix, iy) * scale));
        }
    }
    let meta = FarFieldSidecar {
        dna: map.dna(),
        wavelength: map.wavelength(),
        half: map.half(),
        side,
        peak_intensity: peak,
        total_power: map.total_power(),
        source_power: map.source_power(),
        evanescent_loss: map.evanescent_loss(),
    };
    (out, meta)
}

/// Write the far-field CSV and `<stem>.json` sidecar into `dir`.
pub fn export_farfield(map: &FarFieldMap, dir: &Path, stem: &str) -> io::Result<Vec<PathBuf>> {
    let (csv, meta) = farfield_csv(map);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&json_path, to_json(&meta))?;
    Ok(vec![csv_path, json_path])
}

/// Rebuild a (peak-normalised) far-field map from an exported CSV.
pub fn read_farfield(csv: &str, meta: &FarFieldSidecar) -> Result<FarFieldMap, String> {
    let mut values = Vec::with_capacity(meta.side * meta.side);
    for (i, line) in csv.lines().enumerate().skip(1) {
        let v = line
            .rsplit(',')
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| format!("bad far-field row {}", i + 1))?;
        values.push(v);
    }
    FarFieldMap::from_samples(meta.half, meta.dna, meta.wavelength, values).map_err(|e| e.to_string())
}

/// NA of a re-imported far-field export.
pub fn exported_na(csv: &str, meta: &FarFieldSidecar) -> Result<f64, String> {
    let map = read_farfield(csv, meta)?;
    na_1e2(&map).map_err(|e| e.to_string())
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}
