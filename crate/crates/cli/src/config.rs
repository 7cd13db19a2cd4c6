//! Run configuration: defaults, key=value file parsing, flag overrides,
//! and the digest stamped into every report.
//!
//! A run is determined by exactly two textual artifacts: the inputs on the
//! command line and the configuration. No environment variables are read.

use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub tol_zero: f64,
    pub tol_on_surface: f64,
    pub newton_tol: f64,
    pub jet_order: usize,
    pub resonance_max_den: u32,
    pub resonance_tol: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub seed_grid: usize,
    pub equilibria_grid: usize,
    pub criminant_samples: usize,
    pub tol_clairaut: f64,
    pub tol_reduced: f64,
    pub dara_order: usize,
    pub max_arclength_factor: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol_zero: 1e-9,
            tol_on_surface: 1e-8,
            newton_tol: 1e-12,
            jet_order: 7,
            resonance_max_den: 12,
            resonance_tol: 1e-6,
            min_step: 1e-6,
            max_step: 1e-1,
            seed_grid: 8,
            equilibria_grid: 10,
            criminant_samples: 64,
            tol_clairaut: 1e-6,
            tol_reduced: 1e-3,
            dara_order: 4,
            max_arclength_factor: 4.0,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {}", path.display(), e)))?;
        let mut config = Config::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value", lineno + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |what: &str| ConfigError(format!("{}: invalid value '{}'", what, value));
        match key {
            "tol_zero" => self.tol_zero = value.parse().map_err(|_| bad(key))?,
            "tol_on_surface" => self.tol_on_surface = value.parse().map_err(|_| bad(key))?,
            "newton_tol" => self.newton_tol = value.parse().map_err(|_| bad(key))?,
            "jet_order" => self.jet_order = value.parse().map_err(|_| bad(key))?,
            "resonance_max_den" => self.resonance_max_den = value.parse().map_err(|_| bad(key))?,
            "resonance_tol" => self.resonance_tol = value.parse().map_err(|_| bad(key))?,
            "min_step" => self.min_step = value.parse().map_err(|_| bad(key))?,
            "max_step" => self.max_step = value.parse().map_err(|_| bad(key))?,
            "seed_grid" => self.seed_grid = value.parse().map_err(|_| bad(key))?,
            "equilibria_grid" => self.equilibria_grid = value.parse().map_err(|_| bad(key))?,
            "criminant_samples" => self.criminant_samples = value.parse().map_err(|_| bad(key))?,
            "tol_clairaut" => self.tol_clairaut = value.parse().map_err(|_| bad(key))?,
            "tol_reduced" => self.tol_reduced = value.parse().map_err(|_| bad(key))?,
            "dara_order" => self.dara_order = value.parse().map_err(|_| bad(key))?,
            "max_arclength_factor" => {
                self.max_arclength_factor = value.parse().map_err(|_| bad(key))?
            }
            other => return Err(ConfigError(format!("unknown key '{}'", other))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positives: [(&str, f64); 9] = [
            ("tol_zero", self.tol_zero),
            ("tol_on_surface", self.tol_on_surface),
            ("newton_tol", self.newton_tol),
            ("resonance_tol", self.resonance_tol),
            ("min_step", self.min_step),
            ("max_step", self.max_step),
            ("tol_clairaut", self.tol_clairaut),
            ("tol_reduced", self.tol_reduced),
            ("max_arclength_factor", self.max_arclength_factor),
        ];
        for (name, value) in positives {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError(format!("{} must be positive", name)));
            }
        }
        if self.jet_order < 7 {
            return Err(ConfigError(
                "jet_order must be at least 7 (required by the umbrella analysis)".into(),
            ));
        }
        if self.min_step >= self.max_step {
            return Err(ConfigError("min_step must be below max_step".into()));
        }
        Ok(())
    }

    /// Canonical listing the digest is computed over.
    pub fn canonical(&self) -> String {
        format!(
            "criminant_samples={}\ndara_order={}\nequilibria_grid={}\njet_order={}\n\
             max_arclength_factor={:?}\nmax_step={:?}\nmin_step={:?}\nnewton_tol={:?}\n\
             resonance_max_den={}\nresonance_tol={:?}\nseed_grid={}\ntol_clairaut={:?}\n\
             tol_on_surface={:?}\ntol_reduced={:?}\ntol_zero={:?}\n",
            self.criminant_samples,
            self.dara_order,
            self.equilibria_grid,
            self.jet_order,
            self.max_arclength_factor,
            self.max_step,
            self.min_step,
            self.newton_tol,
            self.resonance_max_den,
            self.resonance_tol,
            self.seed_grid,
            self.tol_clairaut,
            self.tol_on_surface,
            self.tol_reduced,
            self.tol_zero,
        )
    }

    /// FNV-1a over the canonical listing.
    pub fn digest(&self) -> String {
        let mut hash: u64 = 0xcbf29ce484222325;
        for byte in self.canonical().bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{:016x}", hash)
    }

    pub fn classify_config(&self) -> iode_core::classify::ClassifyConfig<f64> {
        iode_core::classify::ClassifyConfig {
            tol_zero: self.tol_zero,
            tol_on_surface: self.tol_on_surface,
            resonance_max_den: self.resonance_max_den,
            resonance_tol: self.resonance_tol,
        }
    }

    pub fn trace_options(&self) -> iode_core::surface::TraceOptions<f64> {
        iode_core::surface::TraceOptions {
            newton_tol: self.newton_tol,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.digest(), b.digest());
        b.set("tol_zero", "1e-8").unwrap();
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn jet_order_floor_enforced() {
        let mut c = Config::default();
        c.set("jet_order", "5").unwrap();
        assert!(c.validate().is_err());
    }
}
