//! Flat `key = value` experiment configuration.
//!
//! Layers are merged in order: preset, `--config` file, then individual
//! overrides. Later layers win key by key.

use std::collections::BTreeMap;
use std::path::PathBuf;

use cachewire::costmodel::CostRates;
use cachewire::lrumodel::{ItemSizes, NetworkConfig};
use cachewire::ratecore::DistortionBudget;

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "mode",
    "N",
    "M",
    "Nc",
    "Nbar",
    "Lc",
    "total_storage",
    "B",
    "alpha",
    "gamma",
    "eps",
    "eps1",
    "eps2",
    "xi_up",
    "xi_int",
    "xi_ext",
    "sweep",
    "values",
    "trace",
    "rounds",
    "n_requests",
    "seed",
    "policy",
    "refresh_internal",
];

/// Keys a sweep may vary.
pub const SWEEP_AXES: &[&str] = &[
    "N", "M", "Nc", "Nbar", "Lc", "B", "alpha", "gamma", "eps", "eps1", "eps2", "xi_up", "xi_int",
    "xi_ext",
];

const PRESETS: &[(&str, &str)] = &[
    ("fig2-movielens", include_str!("../presets/fig2-movielens.cfg")),
    ("fig2-synthetic", include_str!("../presets/fig2-synthetic.cfg")),
    ("fig3", include_str!("../presets/fig3.cfg")),
    ("fig4", include_str!("../presets/fig4.cfg")),
    ("fig6-left", include_str!("../presets/fig6-left.cfg")),
    ("fig6-right", include_str!("../presets/fig6-right.cfg")),
    ("fig7", include_str!("../presets/fig7.cfg")),
    ("fig8", include_str!("../presets/fig8.cfg")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Raw key/value layers before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Merges a `key = value` text; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_error(format!("{origin}:{}: expected key = value, got `{line}`", n + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| config_error(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Merges one `key=value` override.
    pub fn merge_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| config_error(format!("override `{pair}` is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(config_error(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Rebuilds the text form, sorted by key.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Rate,
    Cost,
    Optimize,
    Simulate,
    Sweep,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "rate" => Ok(Mode::Rate),
            "cost" => Ok(Mode::Cost),
            "optimize" => Ok(Mode::Optimize),
            "simulate" => Ok(Mode::Simulate),
            "sweep" => Ok(Mode::Sweep),
            other => Err(config_error(format!(
                "invalid mode `{other}` (expected rate, cost, optimize, simulate or sweep)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Rate => "rate",
            Mode::Cost => "cost",
            Mode::Optimize => "optimize",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
        }
    }
}

/// Copies stored per download.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Copies {
    Fixed(u32),
    /// `round(log2 Nc)`, at least 1.
    Log2,
}

impl Copies {
    pub fn resolve(self, n_caches: u32) -> u32 {
        match self {
            Copies::Fixed(n) => n,
            Copies::Log2 => ((n_caches as f64).log2().round() as u32).clamp(1, n_caches.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n_users: Option<u64>,
    pub n_items: usize,
    pub n_caches: u32,
    pub copies: Copies,
    pub cache_capacity: Option<usize>,
    pub total_storage: Option<usize>,
    pub item_size: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub xi_up: f64,
    pub xi_int: f64,
    pub xi_ext: f64,
    pub sweep: Option<String>,
    pub values: Vec<f64>,
    pub trace: Option<PathBuf>,
    pub rounds: u32,
    pub n_requests: u64,
    pub seed: u64,
    pub policy: PolicyChoice,
    pub refresh_internal: bool,
}

fn number<T: std::str::FromStr>(raw: &RawConfig, key: &str) -> Result<Option<T>, CliError> {
    match raw.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| config_error(format!("`{key}` = `{v}` is not a valid number"))),
    }
}

/// Parses an integer that may be written in float notation (`1e4`).
fn count(raw: &RawConfig, key: &str) -> Result<Option<u64>, CliError> {
    let Some(v) = number::<f64>(raw, key)? else {
        return Ok(None);
    };
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
        return Err(config_error(format!("`{key}` must be a non-negative integer, got {v}")));
    }
    Ok(Some(v as u64))
}

/// Sweep values: a comma list, or `start:end[:step]` (inclusive).
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || config_error(format!("`values` = `{text}` is not a list or range"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.contains(':') {
            let bounds: Vec<f64> = part
                .split(':')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            let (start, end, step) = match bounds[..] {
                [a, b] => (a, b, 1.0),
                [a, b, s] => (a, b, s),
                _ => return Err(bad()),
            };
            if step.is_nan() || step <= 0.0 || end < start {
                return Err(bad());
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            out.extend((0..=n).map(|k| start + k as f64 * step));
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(config_error("sweep values must be finite and positive"));
    }
    Ok(out)
}

fn parse_bool(raw: &RawConfig, key: &str, default: bool) -> Result<bool, CliError> {
    match raw.get(key) {
        None => Ok(default),
        Some("true" | "1" | "yes" | "on") => Ok(true),
        Some("false" | "0" | "no" | "off") => Ok(false),
        Some(v) => Err(config_error(format!("`{key}` = `{v}` is not a boolean"))),
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mode = Mode::parse(raw.get("mode").ok_or_else(|| config_error("`mode` is required"))?)?;
        let eps = number::<f64>(raw, "eps")?;
        let copies = match raw.get("Nbar") {
            None => Copies::Fixed(1),
            Some("log2") => Copies::Log2,
            Some(_) => Copies::Fixed(count(raw, "Nbar")?.unwrap_or(1) as u32),
        };
        let policy = match raw.get("policy") {
            None | Some("empirical") => PolicyChoice::Empirical,
            Some("analytic") => PolicyChoice::Analytic,
            Some(v) => {
                return Err(config_error(format!(
                    "`policy` = `{v}` (expected analytic or empirical)"
                )))
            }
        };
        let values = match raw.get("values") {
            Some(v) => parse_values(v)?,
            None => Vec::new(),
        };
        let cfg = Self {
            mode,
            n_users: count(raw, "N")?,
            n_items: count(raw, "M")?.unwrap_or(1000) as usize,
            n_caches: count(raw, "Nc")?.unwrap_or(1) as u32,
            copies,
            cache_capacity: count(raw, "Lc")?.map(|v| v as usize),
            total_storage: count(raw, "total_storage")?.map(|v| v as usize),
            item_size: number(raw, "B")?.unwrap_or(1e5),
            alpha: number(raw, "alpha")?.unwrap_or(0.7),
            gamma: number(raw, "gamma")?.unwrap_or(1.0),
            eps1: number(raw, "eps1")?.or(eps).unwrap_or(1e-4),
            eps2: number(raw, "eps2")?.or(eps).unwrap_or(1e-4),
            xi_up: number(raw, "xi_up")?.unwrap_or(1.0),
            xi_int: number(raw, "xi_int")?.unwrap_or(1.0),
            xi_ext: number(raw, "xi_ext")?.unwrap_or(5.0),
            sweep: raw.get("sweep").map(str::to_string),
            values,
            trace: raw.get("trace").map(PathBuf::from),
            rounds: count(raw, "rounds")?.unwrap_or(1) as u32,
            n_requests: count(raw, "n_requests")?.unwrap_or(100_000),
            seed: count(raw, "seed")?.unwrap_or(1),
            policy,
            refresh_internal: parse_bool(raw, "refresh_internal", true)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(axis) = &self.sweep {
            if !SWEEP_AXES.contains(&axis.as_str()) {
                return Err(config_error(format!("cannot sweep over `{axis}`")));
            }
            if self.values.is_empty() {
                return Err(config_error("a sweep needs `values`"));
            }
        }
        if self.mode == Mode::Sweep && self.sweep.is_none() {
            return Err(config_error("mode=sweep needs `sweep` and `values`"));
        }
        if self.cache_capacity.is_some() && self.total_storage.is_some() {
            return Err(config_error("set either `Lc` or `total_storage`, not both"));
        }
        let sweeps_lc = self.sweep.as_deref() == Some("Lc");
        if self.cache_capacity.is_none() && self.total_storage.is_none() && !sweeps_lc {
            return Err(config_error("`Lc` (or `total_storage`) is required"));
        }
        if self.rounds == 0 {
            return Err(config_error("`rounds` must be at least 1"));
        }
        self.budget()?;
        self.cost_rates()?;
        Ok(())
    }

    /// Applies one sweep value to a copy of this config.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        let int = || -> Result<u64, CliError> {
            if value.fract() != 0.0 {
                return Err(config_error(format!("sweep over `{axis}` needs integers, got {value}")));
            }
            Ok(value as u64)
        };
        match axis {
            "N" => cfg.n_users = Some(int()?),
            "M" => cfg.n_items = int()? as usize,
            "Nc" => cfg.n_caches = int()? as u32,
            "Nbar" => cfg.copies = Copies::Fixed(int()? as u32),
            "Lc" => {
                cfg.cache_capacity = Some(int()? as usize);
                cfg.total_storage = None;
            }
            "B" => cfg.item_size = value,
            "alpha" => cfg.alpha = value,
            "gamma" => cfg.gamma = value,
            "eps" => {
                cfg.eps1 = value;
                cfg.eps2 = value;
            }
            "eps1" => cfg.eps1 = value,
            "eps2" => cfg.eps2 = value,
            "xi_up" => cfg.xi_up = value,
            "xi_int" => cfg.xi_int = value,
            "xi_ext" => cfg.xi_ext = value,
            other => return Err(config_error(format!("cannot sweep over `{other}`"))),
        }
        Ok(cfg)
    }

    pub fn budget(&self) -> Result<DistortionBudget, CliError> {
        Ok(DistortionBudget::new(self.eps1, self.eps2)?)
    }

    pub fn cost_rates(&self) -> Result<CostRates, CliError> {
        Ok(CostRates::new(self.xi_up, self.xi_int, self.xi_ext)?)
    }

    pub fn capacity(&self) -> Result<usize, CliError> {
        match (self.cache_capacity, self.total_storage) {
            (Some(lc), _) => Ok(lc),
            (None, Some(total)) => {
                let nc = self.n_caches.max(1) as usize;
                if total % nc != 0 {
                    return Err(config_error(format!(
                        "total_storage={total} is not divisible by Nc={nc}"
                    )));
                }
                Ok(total / nc)
            }
            (None, None) => Err(config_error("`Lc` (or `total_storage`) is required")),
        }
    }

    /// Network parameters with `n_users` defaulting to `default_users`.
    pub fn network_with_users(&self, default_users: u64) -> Result<NetworkConfig, CliError> {
        let net = NetworkConfig {
            n_users: self.n_users.unwrap_or(default_users),
            n_items: self.n_items,
            n_caches: self.n_caches,
            n_copies: self.copies.resolve(self.n_caches),
            cache_capacity: self.capacity()?,
            item_size: ItemSizes::Uniform(self.item_size),
            zipf_alpha: self.alpha,
            request_rate_per_user: self.gamma,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn network(&self) -> Result<NetworkConfig, CliError> {
        self.network_with_users(1000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[&str]) -> RawConfig {
        let mut r = RawConfig::new();
        for p in pairs {
            r.merge_pair(p).unwrap();
        }
        r
    }

    #[test]
    fn every_preset_parses() {
        for name in preset_names() {
            let mut r = RawConfig::new();
            r.merge_text(preset_text(name).unwrap(), name).unwrap();
            ExperimentConfig::from_raw(&r).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn later_layers_win() {
        let mut r = RawConfig::new();
        r.merge_text("mode = rate\nLc = 10 # comment\neps = 0.1\n", "file").unwrap();
        r.merge_pair("Lc=20").unwrap();
        r.merge_pair("eps1=0.2").unwrap();
        let c = ExperimentConfig::from_raw(&r).unwrap();
        assert_eq!(c.cache_capacity, Some(20));
        assert_eq!((c.eps1, c.eps2), (0.2, 0.1));
    }

    #[test]
    fn rejects_bad_input() {
        let mut r = RawConfig::new();
        assert!(r.merge_pair("bogus=1").is_err());
        assert!(r.merge_text("mode rate", "x").is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=frobnicate", "Lc=1"])).is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=rate"])).is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=rate", "Lc=x"])).is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=sweep", "Lc=1"])).is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=rate", "Lc=1", "eps=0.7"])).is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=rate", "Lc=1", "xi_ext=0.5"])).is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=sweep", "Lc=1", "sweep=mode", "values=1"])).is_err());
        assert!(ExperimentConfig::from_raw(&raw(&["mode=sweep", "Lc=1", "sweep=Nc", "values=0,1"])).is_err());
    }

    #[test]
    fn values_and_ranges() {
        assert_eq!(parse_values("1,2, 5").unwrap(), vec![1.0, 2.0, 5.0]);
        assert_eq!(parse_values("1:4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_values("0.5:1.5:0.5,10").unwrap(), vec![0.5, 1.0, 1.5, 10.0]);
        assert!(parse_values("3:1").is_err());
        assert_eq!(parse_values("1:100").unwrap().len(), 100);
    }

    #[test]
    fn log2_copies() {
        assert_eq!(Copies::Log2.resolve(1), 1);
        assert_eq!(Copies::Log2.resolve(2), 1);
        assert_eq!(Copies::Log2.resolve(3), 2);
        assert_eq!(Copies::Log2.resolve(10), 3);
        assert_eq!(Copies::Log2.resolve(100), 7);
    }

    #[test]
    fn storage_split() {
        let c = ExperimentConfig::from_raw(&raw(&["mode=cost", "total_storage=5000", "M=10000"])).unwrap();
        assert_eq!(c.with_axis("Nc", 25.0).unwrap().capacity().unwrap(), 200);
        assert!(c.with_axis("Nc", 3.0).unwrap().capacity().is_err());
        assert!(c.with_axis("Nc", 2.5).is_err());
    }
}
