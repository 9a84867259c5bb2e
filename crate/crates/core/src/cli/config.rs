//! Run configuration: a flat TOML document with `[geometry]`, `[budget]` and
//! `[sweep]` tables. Every key is optional; missing keys take the reference
//! values. Angles are radians.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryParams, LinkGeometry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

/// Power, noise and RNG settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetConfig {
    /// `|s_l|²`, applied to every mode.
    pub mode_power: f64,
    /// `σ²`, applied to every receive element.
    pub noise_variance: f64,
    pub seed: u64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            mode_power: 1.0,
            noise_variance: 0.01,
            seed: 0,
        }
    }
}

/// Optional sweep overrides; unset fields fall back to the experiment's grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

pub const SWEEP_VARIABLES: [&str; 4] = ["phi", "theta", "distance", "n_elements"];

impl SweepSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(v) = &self.variable {
            if !SWEEP_VARIABLES.contains(&v.as_str()) {
                return Err(invalid(
                    "variable",
                    format!("unknown sweep variable `{v}`, expected one of {SWEEP_VARIABLES:?}"),
                ));
            }
        }
        if let Some(steps) = self.steps {
            if steps == 0 {
                return Err(invalid("steps", "must be >= 1".into()));
            }
        }
        for (name, v) in [("start", self.start), ("stop", self.stop)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(invalid(name, format!("must be finite, got {v}")));
                }
            }
        }
        if let (Some(a), Some(b)) = (self.start, self.stop) {
            if a > b {
                return Err(invalid("start", format!("start {a} exceeds stop {b}")));
            }
        }
        Ok(())
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: LinkGeometry,
    pub budget: BudgetConfig,
    pub sweep: Option<SweepSpec>,
}

/// Parsed configuration together with the keys that were filled from defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub defaulted: Vec<&'static str>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    n_tx: Option<usize>,
    n_rx: Option<usize>,
    radius_tx_m: Option<f64>,
    radius_rx_m: Option<f64>,
    distance_m: Option<f64>,
    theta_rad: Option<f64>,
    phi_rad: Option<f64>,
    alpha_tx_rad: Option<f64>,
    alpha_rx_rad: Option<f64>,
    wavelength_m: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    mode_power: Option<f64>,
    noise_variance: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    budget: RawBudget,
    sweep: Option<SweepSpec>,
}

#[derive(Serialize)]
struct EmitGeometry {
    n_tx: usize,
    n_rx: usize,
    radius_tx_m: f64,
    radius_rx_m: f64,
    distance_m: f64,
    theta_rad: f64,
    phi_rad: f64,
    alpha_tx_rad: f64,
    alpha_rx_rad: f64,
    wavelength_m: f64,
    beta: f64,
}

#[derive(Serialize)]
struct EmitConfig<'a> {
    geometry: EmitGeometry,
    budget: &'a BudgetConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<&'a SweepSpec>,
}

fn invalid(field: &str, message: String) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message,
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn reject_degrees(text: &str) -> Result<(), ConfigError> {
    for (i, line) in text.lines().enumerate() {
        let key = line.split('=').next().unwrap_or("").trim();
        if !key.starts_with('#') && key.ends_with("_deg") {
            return Err(ConfigError::Parse {
                line: i + 1,
                message: format!(
                    "key `{key}`: angles must be given in radians (use the `_rad` keys)"
                ),
            });
        }
    }
    Ok(())
}

/// Parse with the reference defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    load_config(text, &GeometryParams::default()).map(|c| c.config)
}

/// Parse, filling missing geometry keys from `defaults`.
pub fn load_config(text: &str, defaults: &GeometryParams) -> Result<LoadedConfig, ConfigError> {
    reject_degrees(text)?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().trim().to_string(),
    })?;

    let mut defaulted = Vec::new();
    macro_rules! pick {
        ($raw:expr, $key:literal, $default:expr) => {
            match $raw {
                Some(v) => v,
                None => {
                    defaulted.push($key);
                    $default
                }
            }
        };
    }

    let rg = raw.geometry;
    let params = GeometryParams {
        n_tx: pick!(rg.n_tx, "n_tx", defaults.n_tx),
        n_rx: pick!(rg.n_rx, "n_rx", defaults.n_rx),
        radius_tx: pick!(rg.radius_tx_m, "radius_tx_m", defaults.radius_tx),
        radius_rx: pick!(rg.radius_rx_m, "radius_rx_m", defaults.radius_rx),
        center_distance: pick!(rg.distance_m, "distance_m", defaults.center_distance),
        bearing_theta: pick!(rg.theta_rad, "theta_rad", defaults.bearing_theta),
        tilt_phi: pick!(rg.phi_rad, "phi_rad", defaults.tilt_phi),
        offset_alpha_tx: pick!(rg.alpha_tx_rad, "alpha_tx_rad", defaults.offset_alpha_tx),
        offset_alpha_rx: pick!(rg.alpha_rx_rad, "alpha_rx_rad", defaults.offset_alpha_rx),
        wavelength: pick!(rg.wavelength_m, "wavelength_m", defaults.wavelength),
        beta: pick!(rg.beta, "beta", defaults.beta),
    };
    let geometry = LinkGeometry::new(params).map_err(|e| match e {
        crate::Error::InvalidParameter { field, reason } => invalid(config_key(field), reason),
        other => invalid("geometry", other.to_string()),
    })?;

    let fallback = BudgetConfig::default();
    let rb = raw.budget;
    let budget = BudgetConfig {
        mode_power: pick!(rb.mode_power, "mode_power", fallback.mode_power),
        noise_variance: pick!(rb.noise_variance, "noise_variance", fallback.noise_variance),
        seed: pick!(rb.seed, "seed", fallback.seed),
    };
    if !(budget.mode_power.is_finite() && budget.mode_power >= 0.0) {
        return Err(invalid(
            "mode_power",
            format!("must be finite and >= 0, got {}", budget.mode_power),
        ));
    }
    if !(budget.noise_variance.is_finite() && budget.noise_variance >= 0.0) {
        return Err(invalid(
            "noise_variance",
            format!("must be finite and >= 0, got {}", budget.noise_variance),
        ));
    }
    if let Some(s) = &raw.sweep {
        s.validate()?;
    }

    Ok(LoadedConfig {
        config: RunConfig {
            geometry,
            budget,
            sweep: raw.sweep,
        },
        defaulted,
    })
}

fn config_key(field: &str) -> &'static str {
    match field {
        "n_tx" => "n_tx",
        "n_rx" => "n_rx",
        "radius_tx" => "radius_tx_m",
        "radius_rx" => "radius_rx_m",
        "center_distance" => "distance_m",
        "bearing_theta" => "theta_rad",
        "tilt_phi" => "phi_rad",
        "offset_alpha_tx" => "alpha_tx_rad",
        "offset_alpha_rx" => "alpha_rx_rad",
        "wavelength" => "wavelength_m",
        "beta" => "beta",
        _ => "geometry",
    }
}

impl RunConfig {
    /// The resolved configuration as a TOML document that [`parse_config`]
    /// reads back into an equal value.
    pub fn to_toml(&self) -> String {
        let p = self.geometry.params();
        let emit = EmitConfig {
            geometry: EmitGeometry {
                n_tx: p.n_tx,
                n_rx: p.n_rx,
                radius_tx_m: p.radius_tx,
                radius_rx_m: p.radius_rx,
                distance_m: p.center_distance,
                theta_rad: p.bearing_theta,
                phi_rad: p.tilt_phi,
                alpha_tx_rad: p.offset_alpha_tx,
                alpha_rx_rad: p.offset_alpha_rx,
                wavelength_m: p.wavelength,
                beta: p.beta,
            },
            budget: &self.budget,
            sweep: self.sweep.as_ref(),
        };
        toml::to_string(&emit).expect("configuration values are always representable in TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn empty_document_gives_reference_link() {
        let c = parse_config("").unwrap();
        let p = c.geometry.params();
        assert_eq!(p, GeometryParams::default());
        assert_eq!((p.n_tx, p.n_rx), (10, 10));
        assert_eq!(p.wavelength, 0.1);
        assert_eq!(
            (p.radius_tx, p.radius_rx, p.center_distance),
            (0.1, 0.1, 1.0)
        );
        assert_eq!(p.beta, 4.0 * PI);
        assert_eq!(c.budget, BudgetConfig::default());
        assert_eq!(c.sweep, None);
    }

    #[test]
    fn zero_elements_rejected() {
        let e = parse_config("[geometry]\nn_tx = 0\n").unwrap_err();
        assert!(
            matches!(&e, ConfigError::Validation { field, .. } if field == "n_tx"),
            "{e}"
        );
    }

    #[test]
    fn tilt_in_radians() {
        let c = parse_config("[geometry]\nphi_rad = 1.0471975512\n").unwrap();
        assert!((c.geometry.tilt_phi() - PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn unknown_key_named_with_line() {
        let e = parse_config("[geometry]\nn_tx = 8\nradius = 0.2\n").unwrap_err();
        match e {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("radius"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let e = parse_config("[antenna]\ngain = 1\n").unwrap_err();
        assert!(e.to_string().contains("antenna"), "{e}");
    }

    #[test]
    fn degrees_rejected() {
        let e = parse_config("[geometry]\nphi_deg = 60\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }));
        assert!(e.to_string().contains("radians"));
    }

    #[test]
    fn syntax_error_reports_line() {
        let e = parse_config("[budget]\nseed = 1\nnoise_variance = = 2\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn sweep_validation() {
        assert!(parse_config("[sweep]\nsteps = 0\n").is_err());
        assert!(parse_config("[sweep]\nstart = 1.0\nstop = 0.5\n").is_err());
        assert!(parse_config("[sweep]\nvariable = \"gamma\"\n").is_err());
        let c =
            parse_config("[sweep]\nvariable = \"phi\"\nstart = 0\nstop = 1\nsteps = 5\n").unwrap();
        assert_eq!(c.sweep.unwrap().steps, Some(5));
    }

    #[test]
    fn integers_accepted_for_reals() {
        let c = parse_config("[geometry]\ndistance_m = 2\n").unwrap();
        assert_eq!(c.geometry.center_distance(), 2.0);
    }

    #[test]
    fn defaults_recorded() {
        let l = load_config("[geometry]\nn_tx = 12\n", &GeometryParams::default()).unwrap();
        assert!(!l.defaulted.contains(&"n_tx"));
        assert!(l.defaulted.contains(&"n_rx"));
        assert!(l.defaulted.contains(&"seed"));
    }

    #[test]
    fn round_trip() {
        let text = "[geometry]\nn_tx = 12\ntheta_rad = -1.0\nphi_rad = 0.3\n[budget]\nseed = 99\nnoise_variance = 0.5\n[sweep]\nstart = 0.1\nsteps = 7\n";
        let c = parse_config(text).unwrap();
        let back = parse_config(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }
}
