//! Element-to-element and per-mode channel gains.
//!
//! Free-space gain between two elements at distance `d_mn`:
//! `h_mn = β λ e^{-j2π d_mn/λ} / (4π d_mn)`.
//!
//! In the far field the denominator is replaced by `S = sqrt(d² + r² + R²)`
//! and the phase by the first-order expansion of `d_mn`, which factors as
//!
//! ```text
//! h_mn ≈ A_m · exp(+j B_m sin(φ_n + α_r - ψ_m - a_R + ζ_m))
//! A_m  = βλ/(4πS) · e^{-j2πS/λ} · e^{+j2π R d sinφ cos(ψ_m + a_R - θ)/(λS)}
//! B_m  = 2π r D_m / (λS)
//! ```
//!
//! with `D_m` and `ζ_m` from [`LinkGeometry::zeta_denominator`] and
//! [`LinkGeometry::zeta`]. Summing over a full UCA turns the exponential of a
//! sine into a Bessel function, giving the per-mode gain
//!
//! ```text
//! h̃_ml = h · (-1)^l e^{j(ψ_m + a_R - ζ_m) l} · C_{m,l}
//! h     = √N βλ/(4πS) · e^{-j2πS/λ}
//! C_{m,l} = e^{+j2π R d sinφ cos(ψ_m + a_R - θ)/(λS)} · J_l(B_m)
//! ```
//!
//! The `(-1)^l` comes from `J_l(-B) = (-1)^l J_l(B)`: the sine term enters the
//! expanded phase with a positive sign.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{LinkGeometry, ModeIndexSet};
use crate::specfun::bessel_j;

const CASE_TOLERANCE: f64 = 1e-12;

/// Floor applied to `|closed - direct|` before taking `log10`.
pub const ERROR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelVariant {
    /// Spherical-wave gains with the exact element distances.
    Exact,
    /// Far-field factorization `A_m · exp(j B_m sin(..))`.
    FarField,
}

impl ChannelVariant {
    pub fn name(self) -> &'static str {
        match self {
            ChannelVariant::Exact => "exact",
            ChannelVariant::FarField => "farfield",
        }
    }
}

/// `M × N` matrix of element-to-element gains `h_mn` (row = receive element).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    variant: ChannelVariant,
    gains: Array2<Complex64>,
}

impl ChannelMatrix {
    pub fn exact(g: &LinkGeometry) -> Self {
        let gains =
            Array2::from_shape_fn((g.n_rx(), g.n_tx()), |(m, n)| exact_channel_gain(g, m, n));
        Self {
            variant: ChannelVariant::Exact,
            gains,
        }
    }

    pub fn far_field(g: &LinkGeometry) -> Result<Self> {
        let f = FarFieldFactors::new(g)?;
        let gains = Array2::from_shape_fn((g.n_rx(), g.n_tx()), |(m, n)| f.gain(g, m, n));
        Ok(Self {
            variant: ChannelVariant::FarField,
            gains,
        })
    }

    pub fn build(g: &LinkGeometry, variant: ChannelVariant) -> Result<Self> {
        match variant {
            ChannelVariant::Exact => Ok(Self::exact(g)),
            ChannelVariant::FarField => Self::far_field(g),
        }
    }

    pub fn variant(&self) -> ChannelVariant {
        self.variant
    }

    pub fn gains(&self) -> &Array2<Complex64> {
        &self.gains
    }

    pub fn n_rx(&self) -> usize {
        self.gains.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.gains.ncols()
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.gains[(m, n)]
    }
}

/// `M × L` matrix of per-mode gains `h̃_ml`, columns ordered as the mode set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeChannelMatrix {
    modes: ModeIndexSet,
    gains: Array2<Complex64>,
}

impl ModeChannelMatrix {
    /// Bessel closed form for every `(m, l)`.
    pub fn closed_form(g: &LinkGeometry) -> Result<Self> {
        let factors = ModeGainFactors::new(g)?;
        let modes = g.mode_index_set();
        let gains = Array2::from_shape_fn((g.n_rx(), modes.len()), |(m, i)| {
            let l = modes.mode_at(i);
            factors.h * factors.mode_rotation(m, l) * factors.c[(m, i)]
        });
        Ok(Self { modes, gains })
    }

    /// Finite DFT of an element channel: `(1/√N) Σ_n h_mn e^{j(φ_n + α_r) l}`.
    pub fn from_elements(channel: &ChannelMatrix, g: &LinkGeometry) -> Result<Self> {
        if channel.n_tx() != g.n_tx() {
            return Err(Error::LengthMismatch {
                expected: g.n_tx(),
                actual: channel.n_tx(),
            });
        }
        if channel.n_rx() != g.n_rx() {
            return Err(Error::LengthMismatch {
                expected: g.n_rx(),
                actual: channel.n_rx(),
            });
        }
        let modes = g.mode_index_set();
        let gains = Array2::from_shape_fn((g.n_rx(), modes.len()), |(m, i)| {
            mode_dft(g, channel.gains.row(m).iter().copied(), modes.mode_at(i))
        });
        Ok(Self { modes, gains })
    }

    pub fn modes(&self) -> ModeIndexSet {
        self.modes
    }

    pub fn gains(&self) -> &Array2<Complex64> {
        &self.gains
    }

    pub fn n_rx(&self) -> usize {
        self.gains.nrows()
    }

    /// `h̃_ml`, or `None` when `l` is outside the mode set.
    pub fn gain(&self, m: usize, l: i32) -> Option<Complex64> {
        self.modes.index_of(l).map(|i| self.gains[(m, i)])
    }
}

fn mode_dft(g: &LinkGeometry, row: impl Iterator<Item = Complex64>, l: i32) -> Complex64 {
    let sum: Complex64 = row
        .enumerate()
        .map(|(n, h)| h * Complex64::cis(g.tx_azimuth(n) * l as f64))
        .sum();
    sum / (g.n_tx() as f64).sqrt()
}

/// Per-receive-element far-field quantities: `A_m`, `B_m`, `ζ_m`.
#[derive(Debug, Clone)]
struct FarFieldFactors {
    a: Vec<Complex64>,
    b: Vec<f64>,
    zeta: Vec<f64>,
    /// Unimodular part of `A_m` that also appears in `C_{m,l}`.
    lateral_phase: Vec<Complex64>,
}

impl FarFieldFactors {
    fn new(g: &LinkGeometry) -> Result<Self> {
        let s = g.range_scale();
        let lambda = g.wavelength();
        let common = common_gain(g);
        let lat = g.lateral_offset();
        let mut out = Self {
            a: Vec::with_capacity(g.n_rx()),
            b: Vec::with_capacity(g.n_rx()),
            zeta: Vec::with_capacity(g.n_rx()),
            lateral_phase: Vec::with_capacity(g.n_rx()),
        };
        for m in 0..g.n_rx() {
            let zeta = g.zeta(m)?;
            let u = g.rx_azimuth(m) - g.bearing_theta();
            let lateral = Complex64::cis(TAU * g.radius_rx() * lat * u.cos() / (lambda * s));
            out.a.push(common * lateral);
            out.b
                .push(TAU * g.radius_tx() * g.zeta_denominator(m) / (lambda * s));
            out.zeta.push(zeta);
            out.lateral_phase.push(lateral);
        }
        Ok(out)
    }

    fn gain(&self, g: &LinkGeometry, m: usize, n: usize) -> Complex64 {
        let arg = g.tx_azimuth(n) - g.rx_azimuth(m) + self.zeta[m];
        self.a[m] * Complex64::cis(self.b[m] * arg.sin())
    }
}

/// `βλ/(4πS) · e^{-j2πS/λ}`.
fn common_gain(g: &LinkGeometry) -> Complex64 {
    let s = g.range_scale();
    let lambda = g.wavelength();
    Complex64::from_polar(g.beta() * lambda / (4.0 * PI * s), -TAU * s / lambda)
}

/// Factors of the per-mode closed form: `h`, `A_m`, `B_m`, `C_{m,l}`.
#[derive(Debug, Clone)]
pub struct ModeGainFactors {
    h: Complex64,
    far: FarFieldFactors,
    rx_azimuth: Vec<f64>,
    modes: ModeIndexSet,
    /// `C_{m,l}` over the mode set.
    c: Array2<Complex64>,
}

impl ModeGainFactors {
    pub fn new(g: &LinkGeometry) -> Result<Self> {
        let far = FarFieldFactors::new(g)?;
        let modes = g.mode_index_set();
        let mut c = Array2::zeros((g.n_rx(), modes.len()));
        for m in 0..g.n_rx() {
            for (i, l) in modes.iter().enumerate() {
                c[(m, i)] = far.lateral_phase[m] * bessel_j(l, far.b[m])?;
            }
        }
        Ok(Self {
            h: common_gain(g) * (g.n_tx() as f64).sqrt(),
            rx_azimuth: (0..g.n_rx()).map(|m| g.rx_azimuth(m)).collect(),
            far,
            modes,
            c,
        })
    }

    pub fn n_rx(&self) -> usize {
        self.rx_azimuth.len()
    }

    pub fn modes(&self) -> ModeIndexSet {
        self.modes
    }

    /// `h = √N βλ/(4πS) e^{-j2πS/λ}`.
    pub fn h(&self) -> Complex64 {
        self.h
    }

    pub fn a_factor(&self, m: usize) -> Complex64 {
        self.far.a[m]
    }

    pub fn b_factor(&self, m: usize) -> f64 {
        self.far.b[m]
    }

    pub fn zeta(&self, m: usize) -> f64 {
        self.far.zeta[m]
    }

    /// `C_{m,l}`; any `|l| ≤ 64` is accepted, not only the mode set.
    pub fn c_factor(&self, m: usize, l: i32) -> Result<Complex64> {
        match self.modes.index_of(l) {
            Some(i) => Ok(self.c[(m, i)]),
            None => Ok(self.far.lateral_phase[m] * bessel_j(l, self.far.b[m])?),
        }
    }

    /// `(-1)^l e^{j(ψ_m + a_R - ζ_m) l}`.
    pub fn mode_rotation(&self, m: usize, l: i32) -> Complex64 {
        let r = Complex64::cis((self.rx_azimuth[m] - self.far.zeta[m]) * l as f64);
        if l % 2 == 0 {
            r
        } else {
            -r
        }
    }

    /// Closed-form `h̃_ml`.
    pub fn mode_gain(&self, m: usize, l: i32) -> Result<Complex64> {
        Ok(self.h * self.mode_rotation(m, l) * self.c_factor(m, l)?)
    }
}

/// Exact free-space gain from transmit element `n` to receive element `m`.
pub fn exact_channel_gain(g: &LinkGeometry, m: usize, n: usize) -> Complex64 {
    let d = g.exact_distance(m, n);
    let lambda = g.wavelength();
    Complex64::from_polar(g.beta() * lambda / (4.0 * PI * d), -TAU * d / lambda)
}

/// Far-field gain `A_m exp(j B_m sin(φ_n + α_r - ψ_m - a_R + ζ_m))`.
pub fn farfield_channel_gain(g: &LinkGeometry, m: usize, n: usize) -> Result<Complex64> {
    let zeta = g.zeta(m)?;
    let s = g.range_scale();
    let lambda = g.wavelength();
    let u = g.rx_azimuth(m) - g.bearing_theta();
    let a = common_gain(g)
        * Complex64::cis(TAU * g.radius_rx() * g.lateral_offset() * u.cos() / (lambda * s));
    let b = TAU * g.radius_tx() * g.zeta_denominator(m) / (lambda * s);
    let arg = g.tx_azimuth(n) - g.rx_azimuth(m) + zeta;
    Ok(a * Complex64::cis(b * arg.sin()))
}

/// Per-mode gain by direct summation of the far-field element gains.
pub fn mode_gain_direct(g: &LinkGeometry, m: usize, l: i32) -> Result<Complex64> {
    let row = (0..g.n_tx())
        .map(|n| farfield_channel_gain(g, m, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(mode_dft(g, row.into_iter(), l))
}

/// Per-mode gain from the Bessel closed form.
pub fn mode_gain_closed(g: &LinkGeometry, m: usize, l: i32) -> Result<Complex64> {
    ModeGainFactors::new(g)?.mode_gain(m, l)
}

/// Coaxial case (`φ = 0`): `h J_l(2πrR/(λS)) (-1)^l e^{j(ψ_m + a_R - π/2) l}`.
pub fn mode_gain_aligned(g: &LinkGeometry, m: usize, l: i32) -> Result<Complex64> {
    if g.tilt_phi().abs() > CASE_TOLERANCE {
        return Err(Error::CaseMismatch("coaxial form requires tilt_phi = 0"));
    }
    let s = g.range_scale();
    let b = TAU * g.radius_tx() * g.radius_rx() / (g.wavelength() * s);
    let h = common_gain(g) * (g.n_tx() as f64).sqrt();
    let rotation = Complex64::cis((g.rx_azimuth(m) + FRAC_PI_2) * l as f64);
    Ok(h * bessel_j(l, b)? * rotation)
}

/// Coplanar case (`φ = π/2`, `θ = a_R`): returns `(B_m, C_{m,l})` from
/// `B_m = 2πr sqrt(R² + d² - 2Rd cos ψ_m)/(λS)` and
/// `C_{m,l} = e^{j2πRd cos ψ_m/(λS)} J_l(B_m)`.
pub fn coplanar_factors(g: &LinkGeometry, m: usize, l: i32) -> Result<(f64, Complex64)> {
    if (g.tilt_phi() - FRAC_PI_2).abs() > CASE_TOLERANCE {
        return Err(Error::CaseMismatch(
            "coplanar form requires tilt_phi = pi/2",
        ));
    }
    let skew = (g.bearing_theta() - g.offset_alpha_rx()).rem_euclid(TAU);
    if skew.min(TAU - skew) > CASE_TOLERANCE {
        return Err(Error::CaseMismatch(
            "coplanar form requires bearing_theta = offset_alpha_rx",
        ));
    }
    let (r, big_r, d) = (g.radius_tx(), g.radius_rx(), g.center_distance());
    let s = g.range_scale();
    let lambda = g.wavelength();
    let psi = g.rx_basic_angle(m);
    let b = TAU * r * (big_r * big_r + d * d - 2.0 * big_r * d * psi.cos()).sqrt() / (lambda * s);
    let c = Complex64::cis(TAU * big_r * d * psi.cos() / (lambda * s)) * bessel_j(l, b)?;
    Ok((b, c))
}

/// `log10 |h̃_closed - h̃_direct|`, floored at [`ERROR_FLOOR`].
pub fn approximation_error(g: &LinkGeometry, m: usize, l: i32) -> Result<f64> {
    let diff = mode_gain_closed(g, m, l)? - mode_gain_direct(g, m, l)?;
    Ok(diff.norm().max(ERROR_FLOOR).log10())
}

/// Worst case of [`approximation_error`] over receive elements, with the
/// closed-form factors shared across `m`.
pub fn max_approximation_error(g: &LinkGeometry, l: i32) -> Result<f64> {
    let factors = ModeGainFactors::new(g)?;
    let far = ChannelMatrix::far_field(g)?;
    let mut worst = f64::NEG_INFINITY;
    for m in 0..g.n_rx() {
        let direct = mode_dft(g, far.gains.row(m).iter().copied(), l);
        let diff = factors.mode_gain(m, l)? - direct;
        worst = worst.max(diff.norm().max(ERROR_FLOOR).log10());
    }
    Ok(worst)
}
