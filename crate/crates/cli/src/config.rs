//! Run configuration: flat `key = value` files, flag overrides and
//! validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use pillar_lens::analysis::AnalysisConfig;
use pillar_lens::coupling::FiberSpec;
use pillar_lens::geometry::AsphericLens;
use pillar_lens::optimize::{FamilyOptions, MatchConfig, SimContext};
use pillar_lens::wave::{LensModel, SourceSpec};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PILLAR_LENS_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "pillar-lens-out";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Every recognised key with its built-in default, in manifest order.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("grid.N", "512"),
    ("grid.pitch", "0.1"),
    ("grid.pad_factor", "4"),
    ("source.mfd", "1.5"),
    ("source.wavelength", "1.3"),
    ("source.pillar_diameter", "1.9"),
    ("fiber.preset", "smf28"),
    ("fiber.mfd", ""),
    ("fiber.na", ""),
    ("fiber.wavelength", ""),
    ("model.kind", "multi_slice"),
    ("model.slice", "0.1"),
    ("monitor.gap", "1"),
    ("analysis.gaussianity_threshold", "0.95"),
    ("analysis.na_cut", "0.14"),
    ("lens.R", "5.7"),
    ("lens.k", "0"),
    ("lens.k4", "0.00375"),
    ("lens.n", "1.45"),
    ("lens.offset_x", "0"),
    ("lens.offset_y", "0"),
    ("lens.bare", "false"),
    ("profile.samples", "25"),
    ("sweep.k4", "0:1.5:31"),
    ("sweep.k", "-1.5,-1,-0.5,0"),
    ("sweep.bracket", "0,1"),
    ("family.R", "1.2:3:8"),
    ("family.reference_R", "2"),
    ("family.reference_k4", "0.14"),
    ("family.warm_start", "true"),
    ("match.R", "4,5,6,7,8,9"),
    ("match.max_iters", "200"),
    ("match.tolerance", "1e-4"),
    ("match.radius_step", "0.5"),
    ("match.k4_step", "0.15"),
    ("tolerance.offsets", "-1:1:21"),
    ("tolerance.dH", "-1.5:1.5:13"),
];

/// Resolved `key -> value` text, defaults expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawConfig(BTreeMap<String, String>);

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig(DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
    }
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.0.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(ConfigError::UnknownKey(key.to_string())),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.0
    }

    /// Apply a `key = value` file. Later lines win.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    path: origin.to_string(),
                    line: i + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    path: origin.to_string(),
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            self.set(key, value).map_err(|e| ConfigError::Syntax {
                path: origin.to_string(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Apply `key=value` overrides from the command line.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        for p in pairs {
            let (k, v) = p.split_once('=').ok_or_else(|| ConfigError::Value {
                key: p.clone(),
                msg: "override must look like key=value".into(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.get(key))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.get(key).parse().map_err(|_| ConfigError::Value {
            key: key.to_string(),
            msg: format!("expected a non-negative integer, got `{}`", self.get(key)),
        })
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(ConfigError::Value {
                key: key.to_string(),
                msg: format!("expected true or false, got `{other}`"),
            }),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            "" => Ok(None),
            v => parse_f64(key, v).map(Some),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.get(key))
    }
}

fn parse_f64(key: &str, text: &str) -> Result<f64> {
    let v: f64 = text.trim().parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        msg: format!("expected a number, got `{text}`"),
    })?;
    if !v.is_finite() {
        return Err(ConfigError::Value {
            key: key.to_string(),
            msg: "must be finite".into(),
        });
    }
    Ok(v)
}

/// A comma-separated list, or `start:stop:count` for evenly spaced values
/// including both ends.
pub fn parse_list(key: &str, text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let a = parse_f64(key, parts[0])?;
        let b = parse_f64(key, parts[1])?;
        let n: usize = parts[2].trim().parse().map_err(|_| ConfigError::Value {
            key: key.to_string(),
            msg: format!("bad count in `{text}`"),
        })?;
        return match n {
            0 => Err(ConfigError::Value { key: key.to_string(), msg: "count must be positive".into() }),
            1 => Ok(vec![a]),
            _ => Ok((0..n)
                .map(|i| {
                    let v = a + (b - a) * i as f64 / (n - 1) as f64;
                    // keep exact zeros so grids can be checked for the origin
                    if v.abs() < 1e-12 * (a.abs() + b.abs()) { 0.0 } else { v }
                })
                .collect()),
        };
    }
    if text.is_empty() {
        return Err(ConfigError::Value { key: key.to_string(), msg: "empty list".into() });
    }
    text.split(',').map(|s| parse_f64(key, s)).collect()
}

/// A fully parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub ctx: SimContext,
    /// `None` for the bare pillar.
    pub lens: Option<AsphericLens>,
    pub profile_samples: usize,
    pub sweep_k4: Vec<f64>,
    pub sweep_k: Vec<f64>,
    pub bracket: (f64, f64),
    pub family_radii: Vec<f64>,
    pub family: FamilyOptions,
    pub matching: MatchConfig,
    pub offsets: Vec<f64>,
    pub height_errors: Vec<f64>,
    pub output_dir: PathBuf,
    /// 0 means all available cores.
    pub workers: usize,
    pub summary_only: bool,
}

impl fmt::Display for RawConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn invalid(e: pillar_lens::Error) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig, output_dir: PathBuf, workers: usize, summary_only: bool) -> Result<Self> {
        let wavelength = raw.f64("source.wavelength")?;
        let source = SourceSpec {
            mfd: raw.f64("source.mfd")?,
            wavelength,
            pillar_diameter: raw.f64("source.pillar_diameter")?,
        };
        let preset = raw.get("fiber.preset");
        let mut fiber = FiberSpec::preset(preset).ok_or_else(|| ConfigError::Value {
            key: "fiber.preset".into(),
            msg: format!("unknown fibre preset `{preset}`"),
        })?;
        if let Some(v) = raw.opt_f64("fiber.mfd")? {
            fiber.mfd = v;
            fiber.name = "custom".into();
        }
        if let Some(v) = raw.opt_f64("fiber.na")? {
            fiber.na = v;
            fiber.name = "custom".into();
        }
        if let Some(v) = raw.opt_f64("fiber.wavelength")? {
            fiber.wavelength = v;
        }
        let model = match raw.get("model.kind") {
            "multi_slice" => LensModel::MultiSlice { slice: raw.f64("model.slice")? },
            "thin_element" => LensModel::ThinElement,
            other => {
                return Err(ConfigError::Value {
                    key: "model.kind".into(),
                    msg: format!("expected multi_slice or thin_element, got `{other}`"),
                })
            }
        };
        let ctx = SimContext {
            n: raw.usize("grid.N")?,
            pitch: raw.f64("grid.pitch")?,
            pad_factor: raw.usize("grid.pad_factor")?,
            source,
            fiber,
            model,
            monitor_gap: raw.f64("monitor.gap")?,
            analysis: AnalysisConfig {
                gaussianity_threshold: raw.f64("analysis.gaussianity_threshold")?,
                na_cut: raw.f64("analysis.na_cut")?,
            },
        };
        ctx.validate().map_err(invalid)?;

        let lens = if raw.bool("lens.bare")? {
            None
        } else {
            let n_lens = raw.f64("lens.n")?;
            let (ox, oy) = (raw.f64("lens.offset_x")?, raw.f64("lens.offset_y")?);
            let lens = AsphericLens::new(raw.f64("lens.R")?, raw.f64("lens.k")?, raw.f64("lens.k4")?)
                .and_then(|l| l.with_index(n_lens))
                .and_then(|l| l.with_offset(ox, oy))
                .map_err(invalid)?;
            Some(lens)
        };

        let bracket = raw.list("sweep.bracket")?;
        if bracket.len() != 2 {
            return Err(ConfigError::Value {
                key: "sweep.bracket".into(),
                msg: "expected two values lo,hi".into(),
            });
        }
        let family = FamilyOptions {
            reference_radius: raw.f64("family.reference_R")?,
            reference_k4: raw.f64("family.reference_k4")?,
            warm_start: raw.bool("family.warm_start")?,
            ..FamilyOptions::default()
        };
        let matching = MatchConfig {
            radii: raw.list("match.R")?,
            family: family.clone(),
            max_iters: raw.usize("match.max_iters")?,
            tolerance: raw.f64("match.tolerance")?,
            radius_step: raw.f64("match.radius_step")?,
            k4_step: raw.f64("match.k4_step")?,
        };
        let profile_samples = raw.usize("profile.samples")?;
        if profile_samples < 2 {
            return Err(ConfigError::Value {
                key: "profile.samples".into(),
                msg: "need at least 2 samples".into(),
            });
        }
        Ok(RunConfig {
            lens,
            profile_samples,
            sweep_k4: raw.list("sweep.k4")?,
            sweep_k: raw.list("sweep.k")?,
            bracket: (bracket[0], bracket[1]),
            family_radii: raw.list("family.R")?,
            family,
            matching,
            offsets: raw.list("tolerance.offsets")?,
            height_errors: raw.list("tolerance.dH")?,
            ctx,
            raw,
            output_dir,
            workers,
            summary_only,
        })
    }

    /// The lens, or a validation error for commands that need one.
    pub fn require_lens(&self) -> Result<&AsphericLens> {
        self.lens
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("this command needs a lens; unset lens.bare".into()))
    }
}

/// Default output directory: the environment variable if set.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(raw: RawConfig) -> Result<RunConfig> {
        RunConfig::from_raw(raw, PathBuf::from("out"), 1, false)
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = build(RawConfig::default()).unwrap();
        assert_eq!(cfg.ctx.n, 512);
        assert_eq!(cfg.ctx.pitch, 0.1);
        assert_eq!(cfg.ctx.fiber.name, "smf28");
        assert_eq!(cfg.ctx.source.mfd, 1.5);
        assert_eq!(cfg.sweep_k4.len(), 31);
        assert_eq!(cfg.offsets[10], 0.0);
    }

    #[test]
    fn file_parsing_with_comments_and_dotted_keys() {
        let mut raw = RawConfig::default();
        raw.apply_text("# comment\n\ngrid.N = 256  # trailing\nlens.k4=0.1\n", "test").unwrap();
        assert_eq!(raw.get("grid.N"), "256");
        assert_eq!(raw.get("lens.k4"), "0.1");
    }

    #[test]
    fn unknown_key_is_reported_with_line() {
        let mut raw = RawConfig::default();
        let err = raw.apply_text("grid.N = 256\nlens.kk4 = 1\n", "cfg.txt").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cfg.txt:2") && msg.contains("lens.kk4"), "{msg}");
        assert!(matches!(raw.apply_text("novalue\n", "x"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        let mut raw = RawConfig::default();
        raw.set("grid.pitch", "0.7").unwrap();
        assert!(matches!(build(raw), Err(ConfigError::Invalid(m)) if m.contains("pitch")));
    }

    #[test]
    fn negative_k4_is_rejected() {
        let mut raw = RawConfig::default();
        raw.set("lens.k4", "-0.1").unwrap();
        assert!(matches!(build(raw), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn fibre_overrides() {
        let mut raw = RawConfig::default();
        raw.set("fiber.na", "0.09").unwrap();
        let cfg = build(raw).unwrap();
        assert_eq!(cfg.ctx.fiber.na, 0.09);
        assert_eq!(cfg.ctx.fiber.mfd, 9.2);
        let mut raw = RawConfig::default();
        raw.set("fiber.preset", "nope").unwrap();
        assert!(build(raw).is_err());
    }

    #[test]
    fn list_syntax() {
        assert_eq!(parse_list("x", "1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_list("x", "0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_list("x", "-1:1:21").unwrap()[10], 0.0);
        assert!(parse_list("x", "0:1:0").is_err());
        assert!(parse_list("x", "a,b").is_err());
    }

    #[test]
    fn rendering_round_trips() {
        let mut raw = RawConfig::default();
        raw.set("lens.R", "7.1").unwrap();
        let mut back = RawConfig::default();
        back.apply_text(&raw.to_string(), "rendered").unwrap();
        assert_eq!(raw, back);
    }
}
