//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # Configuration 1
//! L      = 19
//! p_gen  = 0.3
//! e_init = 0.05
//! e_swap = 0.05, 0.03, 0.01, 0.005
//! w_thr  = 0..=10, 85
//! ```
//!
//! Required keys: `L`, `p_gen`, `e_init`, `e_swap`, `w_thr`. Lists are
//! comma separated; `w_thr` also accepts inclusive ranges `a..=b`.
//! Optional keys and defaults:
//!
//! | key | default |
//! |-----|---------|
//! | `trials` | 100000 |
//! | `seed` | 0 |
//! | `weighting` | `uniform` (or `per-qubit`) |
//! | `min_distance` | 3 |
//! | `route_weight` | `squared-manhattan` (or `manhattan`) |
//! | `hardware` | `free-space` (`cavity`, `long-distance`) |
//! | `eta_ph`, `eta_det`, `eta_cov`, `alpha`, `length_km`, `gamma`, `tau_arr`, `tau_meas` | from `hardware` |
//! | `fiber_loss` | `decibel` (or `natural-exp`) |
//! | `attempts` | `continuous` (or `floor`) |
//! | `distill_n`, `distill_d` | 11, 5 |
//! | `target_p_gen` | 0.3 |
//! | `target_e_post` | 1e-13 |
//! | `e_log`, `p_log` | unset; fixes the operating point used by `rates` |
//!
//! Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::DEFAULT_MIN_DISTANCE;
use crate::decode::Weighting;
use crate::experiment::ProtocolConfig;
use crate::rates::{AttemptCount, DistillationSpec, FiberLoss, HardwareParams, HardwarePreset};
use crate::rearrange::{PlacementOptions, RouteWeight};

/// Trial count used when `trials` is not given.
pub const DEFAULT_TRIALS: usize = 100_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` already set on line {first}")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("missing required key `{key}`")]
    Missing { key: &'static str },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    Invalid { line: usize, key: String, reason: String },
}

const KEYS: &[&str] = &[
    "L",
    "p_gen",
    "e_init",
    "e_swap",
    "w_thr",
    "trials",
    "seed",
    "weighting",
    "min_distance",
    "route_weight",
    "hardware",
    "eta_ph",
    "eta_det",
    "eta_cov",
    "alpha",
    "length_km",
    "gamma",
    "tau_arr",
    "tau_meas",
    "fiber_loss",
    "attempts",
    "distill_n",
    "distill_d",
    "target_p_gen",
    "target_e_post",
    "e_log",
    "p_log",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid_size: usize,
    pub p_gen: f64,
    pub e_init: f64,
    pub e_swaps: Vec<f64>,
    pub w_thrs: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub weighting: Weighting,
    pub min_distance: usize,
    pub route_weight: RouteWeight,
    /// Preset the hardware parameters started from.
    pub hardware_preset: HardwarePreset,
    pub hardware: HardwareParams,
    pub distillation: DistillationSpec,
    pub target_p_gen: f64,
    pub target_e_post: f64,
    /// `(e_log, p_log)` supplied directly instead of from a sweep.
    pub operating_point: Option<(f64, f64)>,
}

impl ExperimentConfig {
    pub fn protocol(&self) -> ProtocolConfig {
        let mut p = ProtocolConfig::new(self.grid_size, self.p_gen, self.e_init).expect("validated at parse time");
        p.placement = PlacementOptions {
            min_distance: self.min_distance,
            route_weight: self.route_weight,
        };
        p.weighting = self.weighting;
        p
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.parse()
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Fields<'a> {
    map: BTreeMap<&'a str, Entry<'a>>,
}

fn invalid(line: usize, key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        line,
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl<'a> Fields<'a> {
    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<(usize, T)>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((e.line, v)))
                .map_err(|_| invalid(e.line, key, format!("cannot parse `{}`", e.value))),
        }
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<(usize, T), ConfigError> {
        self.get(key)?.ok_or(ConfigError::Missing { key })
    }

    fn probability(&self, key: &'static str, default: Option<f64>) -> Result<f64, ConfigError> {
        let (line, v) = match (self.get::<f64>(key)?, default) {
            (Some(x), _) => x,
            (None, Some(d)) => return Ok(d),
            (None, None) => return Err(ConfigError::Missing { key }),
        };
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(line, key, format!("{v} is outside [0, 1]")));
        }
        Ok(v)
    }

    fn non_negative(&self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        match self.get::<f64>(key)? {
            None => Ok(default),
            Some((line, v)) if !(v >= 0.0 && v.is_finite()) => Err(invalid(line, key, format!("{v} must be non-negative"))),
            Some((_, v)) => Ok(v),
        }
    }

    fn choice<T>(&self, key: &'static str, default: T, options: &[(&str, T)]) -> Result<T, ConfigError>
    where
        T: Copy,
    {
        let Some(e) = self.map.get(key) else {
            return Ok(default);
        };
        options
            .iter()
            .find(|(name, _)| *name == e.value)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                invalid(e.line, key, format!("expected one of {}", names.join(", ")))
            })
    }
}

fn parse_thresholds(line: usize, value: &str) -> Result<Vec<usize>, ConfigError> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..=") {
            let (a, b): (usize, usize) = match (a.trim().parse(), b.trim().parse()) {
                (Ok(a), Ok(b)) if a <= b => (a, b),
                _ => return Err(invalid(line, "w_thr", format!("bad range `{item}`"))),
            };
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| invalid(line, "w_thr", format!("cannot parse `{item}`")))?);
        }
    }
    Ok(out)
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<&str, Entry> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(&key) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            };
            if let Some(first) = map.get(key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                    first: first.line,
                });
            }
            map.insert(key, Entry { line, value });
        }
        let f = Fields { map };

        let (l_line, grid_size) = f.required::<usize>("L")?;
        if grid_size < crate::lattice::MIN_GRID_SIZE {
            return Err(invalid(l_line, "L", format!("grid size {grid_size} is below 5")));
        }
        let p_gen = f.probability("p_gen", None)?;
        let e_init = f.probability("e_init", None)?;

        let (line, raw) = f.required::<String>("e_swap")?;
        let e_swaps = raw
            .split(',')
            .map(|s| {
                let v: f64 = s.trim().parse().map_err(|_| invalid(line, "e_swap", format!("cannot parse `{}`", s.trim())))?;
                if (0.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(invalid(line, "e_swap", format!("{v} is outside [0, 1]")))
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let (line, raw) = f.required::<String>("w_thr")?;
        let w_thrs = parse_thresholds(line, &raw)?;

        let trials = match f.get::<usize>("trials")? {
            Some((line, 0)) => return Err(invalid(line, "trials", "must be at least 1")),
            Some((_, n)) => n,
            None => DEFAULT_TRIALS,
        };
        let seed = f.get::<u64>("seed")?.map_or(0, |(_, s)| s);
        let weighting = f.choice(
            "weighting",
            Weighting::Uniform,
            &[("uniform", Weighting::Uniform), ("per-qubit", Weighting::PerQubit)],
        )?;
        let min_distance = match f.get::<usize>("min_distance")? {
            Some((line, d)) if d < 2 => return Err(invalid(line, "min_distance", "must be at least 2")),
            Some((_, d)) => d,
            None => DEFAULT_MIN_DISTANCE,
        };
        let route_weight = f.choice(
            "route_weight",
            RouteWeight::SquaredManhattan,
            &[
                ("squared-manhattan", RouteWeight::SquaredManhattan),
                ("manhattan", RouteWeight::Manhattan),
            ],
        )?;

        let preset = f.choice(
            "hardware",
            HardwarePreset::FreeSpace,
            &HardwarePreset::ALL.map(|p| (p.name(), p)),
        )?;
        let base = preset.params();
        let hardware = HardwareParams {
            eta_ph: f.probability("eta_ph", Some(base.eta_ph))?,
            eta_det: f.probability("eta_det", Some(base.eta_det))?,
            eta_cov: f.probability("eta_cov", Some(base.eta_cov))?,
            alpha: f.non_negative("alpha", base.alpha)?,
            length_km: f.non_negative("length_km", base.length_km)?,
            gamma: f.non_negative("gamma", base.gamma)?,
            tau_arr: f.non_negative("tau_arr", base.tau_arr)?,
            tau_meas: f.non_negative("tau_meas", base.tau_meas)?,
            fiber_loss: f.choice(
                "fiber_loss",
                base.fiber_loss,
                &[("decibel", FiberLoss::Decibel), ("natural-exp", FiberLoss::NaturalExp)],
            )?,
            attempts: f.choice(
                "attempts",
                base.attempts,
                &[("continuous", AttemptCount::Continuous), ("floor", AttemptCount::Floor)],
            )?,
        };

        let n = f.get::<u32>("distill_n")?;
        let d = f.get::<u32>("distill_d")?;
        let line = n.map(|x| x.0).or(d.map(|x| x.0)).unwrap_or(0);
        let distillation = DistillationSpec::new(n.map_or(11, |x| x.1), d.map_or(5, |x| x.1))
            .map_err(|e| invalid(line, "distill_n", e.to_string()))?;

        let target_p_gen = f.probability("target_p_gen", Some(0.3))?;
        let target_e_post = f.probability("target_e_post", Some(1e-13))?;
        let operating_point = match (f.get::<f64>("e_log")?, f.get::<f64>("p_log")?) {
            (None, None) => None,
            (Some((_, e)), Some((_, p))) => {
                let e = f.probability("e_log", Some(e))?;
                let p = f.probability("p_log", Some(p))?;
                Some((e, p))
            }
            (Some((line, _)), None) => return Err(invalid(line, "e_log", "`p_log` must be given as well")),
            (None, Some((line, _))) => return Err(invalid(line, "p_log", "`e_log` must be given as well")),
        };

        Ok(ExperimentConfig {
            grid_size,
            p_gen,
            e_init,
            e_swaps,
            w_thrs,
            trials,
            seed,
            weighting,
            min_distance,
            route_weight,
            hardware_preset: preset,
            hardware,
            distillation,
            target_p_gen,
            target_e_post,
            operating_point,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG_1: &str = "\
# Configuration 1
L = 19
p_gen = 0.3
e_init = 0.05
e_swap = 0.05, 0.03, 0.01, 0.005
w_thr = 0..=3, 5, 85
";

    #[test]
    fn parses_configuration_one() {
        let c: ExperimentConfig = CONFIG_1.parse().unwrap();
        assert_eq!((c.p_gen, c.grid_size, c.e_init), (0.3, 19, 0.05));
        assert_eq!(c.e_swaps, vec![0.05, 0.03, 0.01, 0.005]);
        assert_eq!(c.w_thrs, vec![0, 1, 2, 3, 5, 85]);
        assert_eq!(c.trials, 100_000);
        assert_eq!(c.weighting, Weighting::Uniform);
        assert_eq!(c.min_distance, 3);
        assert_eq!(c.distillation, DistillationSpec { n: 11, d: 5 });
        assert_eq!(c.hardware, HardwarePreset::FreeSpace.params());
        assert_eq!(c.protocol(), ProtocolConfig::configuration_1());
    }

    #[test]
    fn missing_key_is_named() {
        let text = CONFIG_1.replace("e_init = 0.05\n", "");
        let err = text.parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(err, ConfigError::Missing { key: "e_init" }));
        assert!(err.to_string().contains("e_init"));
    }

    #[test]
    fn out_of_range_probability() {
        let text = CONFIG_1.replace("p_gen = 0.3", "p_gen = 1.5");
        let err = text.parse::<ExperimentConfig>().unwrap_err();
        match err {
            ConfigError::Invalid { line, key, .. } => {
                assert_eq!(line, 3);
                assert_eq!(key, "p_gen");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_duplicate_and_syntax_errors() {
        let err = format!("{CONFIG_1}colour = red\n").parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 7, .. }));
        let err = format!("{CONFIG_1}L = 21\n").parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 7, first: 2, .. }));
        let err = format!("{CONFIG_1}nonsense\n").parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 7, .. }));
        let err = CONFIG_1.replace("w_thr = 0..=3", "w_thr = 4..=3").parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
    }

    #[test]
    fn hardware_overrides() {
        let text = format!("{CONFIG_1}hardware = long-distance\neta_ph = 0.48\nweighting = per-qubit\n");
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.hardware.eta_ph, 0.48);
        assert_eq!(c.hardware.length_km, 33.0);
        assert_eq!(c.weighting, Weighting::PerQubit);
        let bad = format!("{CONFIG_1}hardware = moon\n").parse::<ExperimentConfig>();
        assert!(bad.is_err());
    }
}
