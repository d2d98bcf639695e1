//! Flat `key = value` run settings: config file, command-line overrides, and
//! the manifest written back out.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use cwsim_core::{ModelConfig, Sector, Spin};

/// Every key a config file may set, in manifest order.
pub const KEYS: &[&str] = &[
    "spin",
    "N",
    "J2",
    "J4",
    "g",
    "T",
    "Gamma",
    "sector",
    "sector_tilde",
    "delta_g_std",
    "seed",
    "gamma",
    "tau_max",
    "dt",
    "snapshots",
    "pmin",
    "t_dc",
    "relax_tau",
    "safety",
    "checkpoints",
];

/// Keys the manifest adds; accepted and ignored on input so a manifest can be
/// fed back as a config.
const MANIFEST_ONLY: &[&str] = &["command", "version", "config_hash", "out"];

fn canonical(key: &str) -> Option<&'static str> {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    let alias = match k.as_str() {
        "n" => "N",
        "j2" => "J2",
        "j4" => "J4",
        "t" | "temperature" => "T",
        "gamma_cutoff" | "cutoff" => "Gamma",
        "rng_seed" => "seed",
        _ => "",
    };
    if !alias.is_empty() {
        return Some(alias);
    }
    // "Gamma" (cutoff) and "gamma" (bath coupling) differ only by case
    if key.trim() == "Gamma" {
        return Some("Gamma");
    }
    KEYS.iter().copied().find(|&c| c == k)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            if MANIFEST_ONLY.contains(&key.trim()) {
                continue;
            }
            let key = canonical(key)
                .ok_or_else(|| anyhow!("line {}: unknown key `{}`", lineno + 1, key.trim()))?;
            s.values.insert(key, value.trim().to_string());
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Settings::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let k = canonical(key).ok_or_else(|| anyhow!("unknown key `{key}`"))?;
        self.values.insert(k, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| anyhow!("`{key}`: cannot parse `{v}`")),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num::<f64>(key)?.unwrap_or(default))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.num::<f64>(key)
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) if v.trim().is_empty() => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| anyhow!("`{key}`: cannot parse `{x}`"))
                })
                .collect(),
        }
    }

    /// Model parameters, defaulting to the reference couplings.
    pub fn model(&self) -> Result<ModelConfig> {
        let spin = match self.get("spin") {
            Some(v) => v.parse::<Spin>()?,
            None => Spin::One,
        };
        let base = match spin {
            Spin::One => ModelConfig::default(),
            Spin::Half => ModelConfig::spin_half(),
        };
        let sector = match self.get("sector") {
            Some(v) => Sector::parse(v, spin)?,
            None => base.sector,
        };
        let cfg = ModelConfig {
            spin,
            n: self.num("N")?.unwrap_or(base.n),
            j2: self.f64_or("J2", base.j2)?,
            j4: self.f64_or("J4", base.j4)?,
            g: self.f64_or("g", base.g)?,
            temperature: self.f64_or("T", base.temperature)?,
            cutoff: self.f64_or("Gamma", base.cutoff)?,
            sector,
            delta_g_std: self.f64_or("delta_g_std", base.delta_g_std)?,
            seed: self.num("seed")?.unwrap_or(base.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sector_tilde(&self, cfg: &ModelConfig) -> Result<Sector> {
        match self.get("sector_tilde") {
            Some(v) => Ok(Sector::parse(v, cfg.spin)?),
            None if cfg.sector.label() == 0 => Ok(Sector::new(1)),
            None => Ok(Sector::new(0)),
        }
    }

    /// Settings with every model key filled in from its resolved value.
    pub fn resolved(&self) -> Result<Settings> {
        let cfg = self.model()?;
        let mut out = self.clone();
        let sector = cfg.sector.value(cfg.spin);
        let pairs = [
            ("spin", cfg.spin.to_string()),
            ("N", cfg.n.to_string()),
            ("J2", crate::csv::fmt_num(cfg.j2)),
            ("J4", crate::csv::fmt_num(cfg.j4)),
            ("g", crate::csv::fmt_num(cfg.g)),
            ("T", crate::csv::fmt_num(cfg.temperature)),
            ("Gamma", crate::csv::fmt_num(cfg.cutoff)),
            ("sector", crate::csv::fmt_num(sector)),
            ("delta_g_std", crate::csv::fmt_num(cfg.delta_g_std)),
            ("seed", cfg.seed.to_string()),
        ];
        for (k, v) in pairs {
            out.values.insert(k, v);
        }
        Ok(out)
    }

    /// `key = value` lines in fixed key order.
    pub fn to_text(&self) -> String {
        let mut text = String::new();
        for key in KEYS {
            if let Some(v) = self.values.get(key) {
                text.push_str(&format!("{key} = {v}\n"));
            }
        }
        text
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Contents of `manifest.txt`; readable back as a config file.
pub fn manifest(command: &str, settings: &Settings, out: &Path) -> String {
    format!(
        "# cwsim run manifest\ncommand = {command}\nversion = {}\nout = {}\nconfig_hash = {}\n{}",
        env!("CARGO_PKG_VERSION"),
        out.display(),
        settings.hash(),
        settings.to_text()
    )
}

pub fn ensure_positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("`{name}` must be positive, got {v}");
    }
    Ok(v)
}
