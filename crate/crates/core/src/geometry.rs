//! Geometry of two parallel, non-coaxial uniform circular arrays.
//!
//! The transmit UCA lies in the plane `z = 0`, centred on the origin. The
//! receive UCA lies in the parallel plane `z = d cos φ`; its centre is offset
//! laterally by `d sin φ` along the bearing `θ`. Element coordinates follow
//! the cross-term form of the projected distance, which puts the receive
//! centre at `(-d sinφ cosθ, -d sinφ sinθ, d cosφ)`. Every closed form in
//! [`crate::channel`] is derived from that same expression.
//!
//! Element indices are zero-based throughout: transmit element `n` sits at
//! azimuth `2πn/N + α_r`, receive element `m` at `2πm/M + a_R`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};

/// Below this the shared denominator of `sin ζ_m` / `cos ζ_m` is treated as zero.
pub const ZETA_DEGENERACY_TOLERANCE: f64 = 1e-15;

/// Ratio `d / max(r, R)` under which the far-field advisory is raised.
pub const FAR_FIELD_RATIO: f64 = 5.0;

const TILT_SLACK: f64 = 1e-12;

/// Raw link parameters, before validation.
///
/// `Default` gives the reference link used throughout the experiments:
/// `N = M = 10`, `λ = 0.1 m`, `r = R = λ`, `d = 10λ`, all angles zero and
/// `β = 4π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    /// Number of transmit elements `N`.
    pub n_tx: usize,
    /// Number of receive elements `M`.
    pub n_rx: usize,
    /// Transmit radius `r` in metres.
    pub radius_tx: f64,
    /// Receive radius `R` in metres.
    pub radius_rx: f64,
    /// Centre-to-centre distance `d` in metres.
    pub center_distance: f64,
    /// Bearing `θ` of the lateral offset, radians.
    pub bearing_theta: f64,
    /// Tilt `φ` between the z-axis and the centre-to-centre line, radians.
    pub tilt_phi: f64,
    /// Rotation `α_r` of the first transmit element, radians.
    pub offset_alpha_tx: f64,
    /// Rotation `a_R` of the first receive element, radians.
    pub offset_alpha_rx: f64,
    /// Carrier wavelength `λ` in metres.
    pub wavelength: f64,
    /// Lumped antenna constant `β`.
    pub beta: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            n_tx: 10,
            n_rx: 10,
            radius_tx: 0.1,
            radius_rx: 0.1,
            center_distance: 1.0,
            bearing_theta: 0.0,
            tilt_phi: 0.0,
            offset_alpha_tx: 0.0,
            offset_alpha_rx: 0.0,
            wavelength: 0.1,
            beta: 4.0 * PI,
        }
    }
}

/// A validated link geometry. Angles are stored in canonical ranges:
/// `θ, α_r, a_R ∈ [0, 2π)` and `φ ∈ [0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    p: GeometryParams,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be finite and > 0, got {v}"),
        })
    }
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be finite, got {v}"),
        })
    }
}

fn normalize_tilt(phi: f64) -> Result<f64> {
    if (0.0..=FRAC_PI_2).contains(&phi) {
        return Ok(phi);
    }
    if (-TILT_SLACK..0.0).contains(&phi) {
        return Ok(0.0);
    }
    let w = wrap_angle(phi);
    if w <= FRAC_PI_2 {
        Ok(w)
    } else if w <= FRAC_PI_2 + TILT_SLACK {
        Ok(FRAC_PI_2)
    } else if w >= TAU - TILT_SLACK {
        Ok(0.0)
    } else {
        Err(Error::InvalidParameter {
            field: "tilt_phi",
            reason: format!("must lie in [0, pi/2] (mod 2pi), got {phi}"),
        })
    }
}

impl LinkGeometry {
    pub fn new(params: GeometryParams) -> Result<Self> {
        let mut p = params;
        if p.n_tx == 0 {
            return Err(Error::InvalidParameter {
                field: "n_tx",
                reason: "must be >= 1".into(),
            });
        }
        if p.n_rx == 0 {
            return Err(Error::InvalidParameter {
                field: "n_rx",
                reason: "must be >= 1".into(),
            });
        }
        positive("radius_tx", p.radius_tx)?;
        positive("radius_rx", p.radius_rx)?;
        positive("center_distance", p.center_distance)?;
        positive("wavelength", p.wavelength)?;
        positive("beta", p.beta)?;
        finite("bearing_theta", p.bearing_theta)?;
        finite("tilt_phi", p.tilt_phi)?;
        finite("offset_alpha_tx", p.offset_alpha_tx)?;
        finite("offset_alpha_rx", p.offset_alpha_rx)?;

        p.bearing_theta = wrap_angle(p.bearing_theta);
        p.offset_alpha_tx = wrap_angle(p.offset_alpha_tx);
        p.offset_alpha_rx = wrap_angle(p.offset_alpha_rx);
        p.tilt_phi = normalize_tilt(p.tilt_phi)?;
        Ok(Self { p })
    }

    /// The normalized parameters.
    pub fn params(&self) -> GeometryParams {
        self.p
    }

    pub fn n_tx(&self) -> usize {
        self.p.n_tx
    }
    pub fn n_rx(&self) -> usize {
        self.p.n_rx
    }
    pub fn radius_tx(&self) -> f64 {
        self.p.radius_tx
    }
    pub fn radius_rx(&self) -> f64 {
        self.p.radius_rx
    }
    pub fn center_distance(&self) -> f64 {
        self.p.center_distance
    }
    pub fn bearing_theta(&self) -> f64 {
        self.p.bearing_theta
    }
    pub fn tilt_phi(&self) -> f64 {
        self.p.tilt_phi
    }
    pub fn offset_alpha_tx(&self) -> f64 {
        self.p.offset_alpha_tx
    }
    pub fn offset_alpha_rx(&self) -> f64 {
        self.p.offset_alpha_rx
    }
    pub fn wavelength(&self) -> f64 {
        self.p.wavelength
    }
    pub fn beta(&self) -> f64 {
        self.p.beta
    }

    /// True when `d < 5·max(r, R)`: the far-field closed forms are then
    /// unreliable. Advisory only.
    pub fn far_field_warning(&self) -> bool {
        self.p.center_distance < FAR_FIELD_RATIO * self.p.radius_tx.max(self.p.radius_rx)
    }

    /// Separation of the two array planes, `d cos φ`.
    pub fn plane_separation(&self) -> f64 {
        self.p.center_distance * self.p.tilt_phi.cos()
    }

    /// Lateral offset of the receive centre, `d sin φ`.
    pub fn lateral_offset(&self) -> f64 {
        self.p.center_distance * self.p.tilt_phi.sin()
    }

    /// `sqrt(d² + r² + R²)`, the common range used by the far-field model.
    pub fn range_scale(&self) -> f64 {
        let p = &self.p;
        (p.center_distance * p.center_distance
            + p.radius_tx * p.radius_tx
            + p.radius_rx * p.radius_rx)
            .sqrt()
    }

    /// Basic angle `2πn/N` of transmit element `n`.
    pub fn tx_basic_angle(&self, n: usize) -> f64 {
        assert!(n < self.p.n_tx, "tx index {n} out of range");
        TAU * n as f64 / self.p.n_tx as f64
    }

    /// Basic angle `ψ_m = 2πm/M` of receive element `m`.
    pub fn rx_basic_angle(&self, m: usize) -> f64 {
        assert!(m < self.p.n_rx, "rx index {m} out of range");
        TAU * m as f64 / self.p.n_rx as f64
    }

    /// Azimuth `2πn/N + α_r` of transmit element `n`.
    pub fn tx_azimuth(&self, n: usize) -> f64 {
        self.tx_basic_angle(n) + self.p.offset_alpha_tx
    }

    /// Azimuth `ψ_m + a_R` of receive element `m`.
    pub fn rx_azimuth(&self, m: usize) -> f64 {
        self.rx_basic_angle(m) + self.p.offset_alpha_rx
    }

    pub fn mode_index_set(&self) -> ModeIndexSet {
        ModeIndexSet::for_elements(self.p.n_tx)
    }

    /// Cartesian coordinates of every transmit and receive element.
    pub fn element_positions(&self) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
        let p = &self.p;
        let tx = (0..p.n_tx)
            .map(|n| {
                let a = self.tx_azimuth(n);
                [p.radius_tx * a.cos(), p.radius_tx * a.sin(), 0.0]
            })
            .collect();
        let lat = self.lateral_offset();
        let (sin_t, cos_t) = p.bearing_theta.sin_cos();
        let z = self.plane_separation();
        let rx = (0..p.n_rx)
            .map(|m| {
                let a = self.rx_azimuth(m);
                [
                    p.radius_rx * a.cos() - lat * cos_t,
                    p.radius_rx * a.sin() - lat * sin_t,
                    z,
                ]
            })
            .collect();
        (tx, rx)
    }

    /// The three cosine cross-terms shared by the distance expressions:
    /// `(rR cos(ψ+a_R-φ_n-α_r), R·d sinφ cos(ψ+a_R-θ), r·d sinφ cos(φ_n+α_r-θ))`.
    fn cross_terms(&self, m: usize, n: usize) -> (f64, f64, f64) {
        let p = &self.p;
        let rx = self.rx_azimuth(m);
        let tx = self.tx_azimuth(n);
        let lat = self.lateral_offset();
        (
            p.radius_tx * p.radius_rx * (rx - tx).cos(),
            p.radius_rx * lat * (rx - p.bearing_theta).cos(),
            p.radius_tx * lat * (tx - p.bearing_theta).cos(),
        )
    }

    /// Distance in the receive plane between the projection of transmit
    /// element `n` and receive element `m`.
    pub fn projected_distance(&self, m: usize, n: usize) -> f64 {
        let p = &self.p;
        let lat = self.lateral_offset();
        let (rr, rd, td) = self.cross_terms(m, n);
        let sq =
            p.radius_rx * p.radius_rx + p.radius_tx * p.radius_tx + lat * lat - 2.0 * rr - 2.0 * rd
                + 2.0 * td;
        sq.max(0.0).sqrt()
    }

    /// Euclidean distance `d_mn` between transmit element `n` and receive element `m`.
    pub fn exact_distance(&self, m: usize, n: usize) -> f64 {
        self.projected_distance(m, n).hypot(self.plane_separation())
    }

    /// First-order far-field expansion of `d_mn` around `sqrt(d² + r² + R²)`.
    pub fn approx_distance(&self, m: usize, n: usize) -> f64 {
        let s = self.range_scale();
        let (rr, rd, td) = self.cross_terms(m, n);
        s - (rr + rd - td) / s
    }

    /// Numerators `(sin ζ_m · D_m, cos ζ_m · D_m)` of the auxiliary angle.
    pub(crate) fn zeta_numerators(&self, m: usize) -> (f64, f64) {
        let u = self.rx_azimuth(m) - self.p.bearing_theta;
        let lat = self.lateral_offset();
        (self.p.radius_rx - lat * u.cos(), lat * u.sin())
    }

    /// `D_m = sqrt(R² + d² sin²φ - 2R·d sinφ cos(ψ_m + a_R - θ))`, the distance
    /// from the receive element to the foot of the transmit axis in the
    /// receive plane.
    pub fn zeta_denominator(&self, m: usize) -> f64 {
        let (s, c) = self.zeta_numerators(m);
        s.hypot(c)
    }

    /// Auxiliary angle `ζ_m ∈ (-π, π]`, defined by
    /// `sin ζ_m = (R - d sinφ cos u)/D_m` and `cos ζ_m = d sinφ sin u / D_m`
    /// with `u = ψ_m + a_R - θ`.
    pub fn zeta(&self, m: usize) -> Result<f64> {
        let (s, c) = self.zeta_numerators(m);
        let denominator = s.hypot(c);
        if denominator <= ZETA_DEGENERACY_TOLERANCE {
            return Err(Error::DegenerateGeometry { m, denominator });
        }
        Ok(s.atan2(c))
    }

    pub fn with_tilt(&self, phi: f64) -> Result<Self> {
        Self::new(GeometryParams {
            tilt_phi: phi,
            ..self.p
        })
    }

    pub fn with_bearing(&self, theta: f64) -> Result<Self> {
        Self::new(GeometryParams {
            bearing_theta: theta,
            ..self.p
        })
    }

    pub fn with_distance(&self, d: f64) -> Result<Self> {
        Self::new(GeometryParams {
            center_distance: d,
            ..self.p
        })
    }

    pub fn with_n_tx(&self, n_tx: usize) -> Result<Self> {
        Self::new(GeometryParams { n_tx, ..self.p })
    }
}

/// Contiguous range of OAM modes `l` a UCA of `N` elements can launch.
///
/// Bounds are `⌊(2-N)/2⌋` and `⌊N/2⌋`, where the floor of a negative value
/// rounds toward zero. For odd `N` this yields `N - 1` modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeIndexSet {
    lower: i32,
    upper: i32,
}

impl ModeIndexSet {
    pub fn for_elements(n: usize) -> Self {
        assert!(n >= 1, "a UCA needs at least one element");
        let n = n as i32;
        // Integer division truncates toward zero, which is exactly the
        // two-sided floor rule.
        Self {
            lower: (2 - n) / 2,
            upper: n / 2,
        }
    }

    pub fn lower(&self) -> i32 {
        self.lower
    }

    pub fn upper(&self) -> i32 {
        self.upper
    }

    pub fn len(&self) -> usize {
        (self.upper - self.lower + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, l: i32) -> bool {
        (self.lower..=self.upper).contains(&l)
    }

    /// Position of mode `l` within the set.
    pub fn index_of(&self, l: i32) -> Option<usize> {
        self.contains(l).then(|| (l - self.lower) as usize)
    }

    pub fn mode_at(&self, i: usize) -> i32 {
        assert!(i < self.len());
        self.lower + i as i32
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = i32> + Clone {
        self.lower..self.upper + 1
    }

    pub fn to_vec(&self) -> Vec<i32> {
        self.iter().collect()
    }
}
