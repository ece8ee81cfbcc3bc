//! Run configuration: flat `key = value` text or a flat JSON object, with
//! `FOCKSYNC_<KEY>` environment overrides. Rates are in units of `gamma_a`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use focksync::{ModelParams, TruncationPolicy};
use serde::Serialize;

pub const ENV_PREFIX: &str = "FOCKSYNC_";

/// Every accepted key with its default (empty = unset).
const KEYS: &[(&str, &str)] = &[
    ("gamma_a", "1"),
    ("epsilon", "20"),
    ("n0", "10"),
    ("alpha_a", ""),
    ("delta", "0"),
    ("f", "0"),
    ("theta", "0"),
    ("e_tilde", "0"),
    ("gamma_b", "50"),
    ("alpha_b", "1"),
    ("elimination_factor", "2"),
    ("m", ""),
    ("max_dim", "200"),
    ("truncation_tol", "1e-8"),
    ("m_a", "12"),
    ("m_b", "5"),
    ("delta_grid", "-0.3:0.3:15"),
    ("f_grid", "0:3:15"),
    ("wigner_radius", "5"),
    ("wigner_points", "0"),
    ("phase_points", "256"),
    ("dq", "0.02"),
    ("window_fraction", "0.1"),
    ("sde_dt", ""),
    ("sde_t", "2000"),
    ("sde_traj", "64"),
    ("seed", "1"),
];

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub m: Option<usize>,
    pub max_dim: usize,
    pub truncation_tol: f64,
    pub m_a: usize,
    pub m_b: usize,
    pub elimination_factor: f64,
    pub delta_grid: Vec<f64>,
    pub f_grid: Vec<f64>,
    pub wigner_radius: f64,
    pub wigner_points: usize,
    pub phase_points: usize,
    pub dq: f64,
    pub window_fraction: f64,
    pub sde_dt: Option<f64>,
    pub sde_t: f64,
    pub sde_traj: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            initial: self.m,
            tol: self.truncation_tol,
            max_dim: self.max_dim,
            auto_grow: self.m.is_none(),
        }
    }
}

/// Raw values after file, environment and defaults have been merged.
pub type RawConfig = BTreeMap<String, String>;

fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

pub fn parse_text(text: &str) -> Result<RawConfig> {
    let mut out = RawConfig::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
        out.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_json(text: &str) -> Result<RawConfig> {
    let value: serde_json::Value = serde_json::from_str(text).context("invalid JSON config")?;
    let obj = value.as_object().ok_or_else(|| anyhow!("JSON config must be an object"))?;
    let mut out = RawConfig::new();
    for (k, v) in obj {
        let s = match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => b.to_string(),
            serde_json::Value::Null => String::new(),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|x| match x {
                    serde_json::Value::Number(n) => Ok(n.to_string()),
                    _ => Err(anyhow!("key {k}: arrays must hold numbers")),
                })
                .collect::<Result<Vec<_>>>()?
                .join(","),
            serde_json::Value::Object(_) => bail!("key {k}: nested objects are not supported"),
        };
        out.insert(k.to_ascii_lowercase(), s);
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if json {
        parse_json(&text)
    } else {
        parse_text(&text)
    }
}

/// Applies `FOCKSYNC_<KEY>` overrides from `vars`.
pub fn apply_env<I: IntoIterator<Item = (String, String)>>(raw: &mut RawConfig, vars: I) {
    for (k, v) in vars {
        if let Some(key) = k.strip_prefix(ENV_PREFIX) {
            let key = key.to_ascii_lowercase();
            if is_known(&key) {
                raw.insert(key, v);
            }
        }
    }
}

/// `a:b:n` (inclusive, n points) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        bail!("grid is empty");
    }
    let parts: Vec<&str> = s.split(':').collect();
    let grid = if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse()?;
        let b: f64 = parts[1].trim().parse()?;
        let n: usize = parts[2].trim().parse()?;
        match n {
            0 => bail!("grid `{s}` has no points"),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else if parts.len() == 1 {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("bad grid value `{t}`: {e}")))
            .collect::<Result<Vec<_>>>()?
    } else {
        bail!("grid `{s}` must be a:b:n or a comma list");
    };
    if grid.iter().any(|v| !v.is_finite()) {
        bail!("grid `{s}` has non-finite values");
    }
    Ok(grid)
}

fn get<'a>(raw: &'a RawConfig, key: &str) -> &'a str {
    raw.get(key).map(String::as_str).unwrap_or("")
}

fn num<T: std::str::FromStr>(raw: &RawConfig, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let v = get(raw, key);
    v.parse::<T>().map_err(|e| anyhow!("key {key}: cannot parse `{v}`: {e}"))
}

fn opt<T: std::str::FromStr>(raw: &RawConfig, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if get(raw, key).is_empty() {
        Ok(None)
    } else {
        num(raw, key).map(Some)
    }
}

/// Fills defaults, validates and builds the typed configuration.
pub fn build(mut raw: RawConfig) -> Result<RunConfig> {
    if let Some(k) = raw.keys().find(|k| !is_known(k)) {
        bail!("unknown config key `{k}`");
    }
    for (k, d) in KEYS {
        raw.entry(k.to_string()).or_insert_with(|| d.to_string());
    }
    let gamma_a: f64 = num(&raw, "gamma_a")?;
    let epsilon: f64 = num(&raw, "epsilon")?;
    let alpha: Option<f64> = opt(&raw, "alpha_a")?;
    let n0: Option<usize> = opt(&raw, "n0")?;
    let mut model = if epsilon > 0.0 && alpha.is_none() {
        let n0 = n0.ok_or_else(|| anyhow!("set n0 or alpha_a when epsilon > 0"))?;
        ModelParams::fock(n0, epsilon).map_err(|e| anyhow!("{e}"))?
    } else {
        let mut p = ModelParams::coherent(0.0, 0.0, 0.0);
        p.epsilon = epsilon;
        p.n0 = n0;
        if let Some(a) = alpha {
            p.alpha_a = a;
            p.alpha_b = a;
        }
        p
    };
    model.gamma_a = gamma_a;
    model.delta = num(&raw, "delta")?;
    model.f = num(&raw, "f")?;
    model.theta = num(&raw, "theta")?;
    model.e_tilde = num(&raw, "e_tilde")?;
    model.gamma_b = num(&raw, "gamma_b")?;
    model.alpha_b = num(&raw, "alpha_b")?;
    model.validate().map_err(|e| anyhow!("{e}"))?;

    let cfg = RunConfig {
        model,
        m: opt(&raw, "m")?,
        max_dim: num(&raw, "max_dim")?,
        truncation_tol: num(&raw, "truncation_tol")?,
        m_a: num(&raw, "m_a")?,
        m_b: num(&raw, "m_b")?,
        elimination_factor: num(&raw, "elimination_factor")?,
        delta_grid: parse_grid(get(&raw, "delta_grid")).context("delta_grid")?,
        f_grid: parse_grid(get(&raw, "f_grid")).context("f_grid")?,
        wigner_radius: num(&raw, "wigner_radius")?,
        wigner_points: num(&raw, "wigner_points")?,
        phase_points: num(&raw, "phase_points")?,
        dq: num(&raw, "dq")?,
        window_fraction: num(&raw, "window_fraction")?,
        sde_dt: opt(&raw, "sde_dt")?,
        sde_t: num(&raw, "sde_t")?,
        sde_traj: num(&raw, "sde_traj")?,
        seed: num(&raw, "seed")?,
    };
    if cfg.m.is_some_and(|m| m < 2) || cfg.max_dim < 2 || cfg.m_a < 2 || cfg.m_b < 2 {
        bail!("truncations must be at least 2");
    }
    if !(cfg.truncation_tol > 0.0) || !(cfg.dq > 0.0) || !(cfg.sde_t > 0.0) || !(cfg.elimination_factor > 0.0) {
        bail!("truncation_tol, dq, sde_t and elimination_factor must be positive");
    }
    if cfg.sde_dt.is_some_and(|dt| !(dt > 0.0)) {
        bail!("sde_dt must be positive");
    }
    if cfg.sde_traj == 0 || cfg.phase_points == 0 {
        bail!("sde_traj and phase_points must be positive");
    }
    if !(cfg.window_fraction > 0.0 && cfg.window_fraction <= 1.0) {
        bail!("window_fraction must lie in (0, 1]");
    }
    if cfg.f_grid.iter().any(|&f| f < 0.0) {
        bail!("f_grid values must be >= 0");
    }
    Ok(cfg)
}
