use std::path::Path;

use floqlin::classical::ModelParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a run depends on. Serialized into every metadata file and
/// hashed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelParams,
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub i_max: f64,
    pub delta2_max: f64,
    /// Points per axis of the phase diagram, or `F²` samples of a
    /// bifurcation scan.
    pub resolution: usize,
    pub f2_min: f64,
    pub f2_max: f64,
    pub n_grid: usize,
    pub t_max: f64,
    pub n_points: usize,
    pub simulate: bool,
    /// `None` until resolved from the classical amplitude.
    pub grid_half_width: Option<f64>,
    pub grid_points: usize,
    pub n_theta: usize,
    /// `None` until resolved from the classical amplitude.
    pub n_max: Option<usize>,
    pub steady_tol: f64,
    pub n_traj: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub window_start: Option<f64>,
    pub oracle: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            i_max: 2.0,
            delta2_max: 1.0,
            resolution: 200,
            f2_min: 0.0,
            f2_max: 0.5,
            n_grid: 1024,
            t_max: 200.0,
            n_points: 401,
            simulate: false,
            grid_half_width: None,
            grid_points: 201,
            n_theta: 256,
            n_max: None,
            steady_tol: 1e-9,
            n_traj: 1000,
            dt: 1e-3,
            t_end: 40.0,
            seed: 1,
            window_start: None,
            oracle: false,
        }
    }
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            model: ModelParams {
                f: 0.1f64.sqrt(),
                delta: 0.4f64.sqrt(),
                gamma: 0.1,
            },
            options: Options::default(),
        }
    }

    /// Reads either a bare config or a metadata file carrying one under
    /// `"config"`.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| format!("config {} is not JSON: {e}", path.display()))?;
        let inner = match value.get("config") {
            Some(c) => c.clone(),
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Decimal or `sqrt:x` literal.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = if let Some(rest) = s.strip_prefix("sqrt:") {
        let x: f64 = rest
            .trim()
            .parse()
            .map_err(|e| format!("bad number in {s:?}: {e}"))?;
        if x < 0.0 {
            return Err(format!("negative argument in {s:?}"));
        }
        x.sqrt()
    } else {
        s.parse().map_err(|e| format!("bad number {s:?}: {e}"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_literals() {
        assert_eq!(parse_real("sqrt:0.4").unwrap(), 0.4f64.sqrt());
        assert_eq!(parse_real("0.25").unwrap(), 0.25);
        assert!(parse_real("sqrt:-1").is_err());
        assert!(parse_real("inf").is_err());
        assert!(parse_real("abc").is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut c = RunConfig::new("compare");
        c.options.grid_half_width = Some(0.1 + 0.2);
        let back: RunConfig = serde_json::from_str(&c.canonical_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sha256(), c.sha256());
    }
}
