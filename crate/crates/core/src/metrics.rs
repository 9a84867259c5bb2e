//! Spectrum efficiency of the mode-decomposition receiver.
//!
//! After decomposition, mode `l` carries `M h s_l` plus noise of variance
//! `Σ_m σ_m² / |C_{m,l}|²`, so
//!
//! ```text
//! SE = Σ_l log2(1 + M² |h|² |s_l|² / Σ_m (σ_m² / |C_{m,l}|²))
//! ```
//!
//! Inter-mode leakage for `φ > 0` is not counted as interference.

use rayon::prelude::*;

use crate::channel::ModeGainFactors;
use crate::error::{Error, Result};
use crate::geometry::LinkGeometry;
use crate::transceiver::{NoiseModel, OBSERVABILITY_FLOOR};

/// Transmit power per mode and receiver noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    mode_powers: Vec<f64>,
    noise: NoiseModel,
}

impl LinkBudget {
    pub fn new(mode_powers: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        if let Some(p) = mode_powers.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidParameter {
                field: "mode_power",
                reason: format!("must be finite and >= 0, got {p}"),
            });
        }
        Ok(Self { mode_powers, noise })
    }

    /// Same power on every mode and the same variance on every element.
    pub fn uniform(
        g: &LinkGeometry,
        mode_power: f64,
        noise_variance: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::new(
            vec![mode_power; g.mode_index_set().len()],
            NoiseModel::uniform(g.n_rx(), noise_variance, seed)?,
        )
    }

    pub fn mode_powers(&self) -> &[f64] {
        &self.mode_powers
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn check(&self, g: &LinkGeometry) -> Result<()> {
        let modes = g.mode_index_set().len();
        if self.mode_powers.len() != modes {
            return Err(Error::LengthMismatch {
                expected: modes,
                actual: self.mode_powers.len(),
            });
        }
        if self.noise.len() != g.n_rx() {
            return Err(Error::LengthMismatch {
                expected: g.n_rx(),
                actual: self.noise.len(),
            });
        }
        Ok(())
    }
}

/// `Σ_m σ_m² / |C_{m,l0}|²` using precomputed factors.
pub fn aggregate_noise_variance_with(
    factors: &ModeGainFactors,
    l0: i32,
    noise: &NoiseModel,
) -> Result<f64> {
    if noise.len() != factors.n_rx() {
        return Err(Error::LengthMismatch {
            expected: factors.n_rx(),
            actual: noise.len(),
        });
    }
    let mut total = 0.0;
    for (m, var) in noise.variances().iter().enumerate() {
        let magnitude = factors.c_factor(m, l0)?.norm();
        if magnitude < OBSERVABILITY_FLOOR {
            return Err(Error::ModeUnobservable {
                m,
                l: l0,
                magnitude,
            });
        }
        total += var / (magnitude * magnitude);
    }
    Ok(total)
}

/// Variance of the decomposed noise on mode `l0`.
pub fn aggregate_noise_variance(g: &LinkGeometry, l0: i32, noise: &NoiseModel) -> Result<f64> {
    aggregate_noise_variance_with(&ModeGainFactors::new(g)?, l0, noise)
}

/// Per-mode SNR `M²|h|²|s_l|² / Σ_m σ_m²/|C_{m,l}|²`, in mode-set order.
pub fn mode_snrs(g: &LinkGeometry, budget: &LinkBudget) -> Result<Vec<f64>> {
    budget.check(g)?;
    let factors = ModeGainFactors::new(g)?;
    let m = g.n_rx() as f64;
    let gain = m * m * factors.h().norm_sqr();
    g.mode_index_set()
        .iter()
        .zip(budget.mode_powers())
        .map(|(l, &power)| {
            let noise = aggregate_noise_variance_with(&factors, l, budget.noise())?;
            Ok(if power == 0.0 {
                0.0
            } else if noise == 0.0 {
                f64::INFINITY
            } else {
                gain * power / noise
            })
        })
        .collect()
}

/// Spectrum efficiency in bit/s/Hz.
pub fn spectrum_efficiency(g: &LinkGeometry, budget: &LinkBudget) -> Result<f64> {
    Ok(mode_snrs(g, budget)?
        .into_iter()
        .map(|snr| snr.ln_1p() / std::f64::consts::LN_2)
        .sum())
}

/// Geometry parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    Phi,
    Theta,
    Distance,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Phi => "phi",
            SweepVariable::Theta => "theta",
            SweepVariable::Distance => "distance",
        }
    }

    pub fn apply(self, template: &LinkGeometry, value: f64) -> Result<LinkGeometry> {
        match self {
            SweepVariable::Phi => template.with_tilt(value),
            SweepVariable::Theta => template.with_bearing(value),
            SweepVariable::Distance => template.with_distance(value),
        }
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "phi" => Ok(SweepVariable::Phi),
            "theta" => Ok(SweepVariable::Theta),
            "distance" => Ok(SweepVariable::Distance),
            other => Err(format!(
                "unknown sweep variable `{other}` (expected phi, theta or distance)"
            )),
        }
    }
}

/// One sweep sample; failed points are kept as gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub spectrum_efficiency: Result<f64>,
}

/// Spectrum efficiency at each grid value, in grid order.
pub fn se_sweep(
    template: &LinkGeometry,
    variable: SweepVariable,
    grid: &[f64],
    budget: &LinkBudget,
) -> Vec<SweepPoint> {
    grid.par_iter()
        .map(|&value| SweepPoint {
            value,
            spectrum_efficiency: variable
                .apply(template, value)
                .and_then(|g| spectrum_efficiency(&g, budget)),
        })
        .collect()
}
