//! OAM transmit synthesis, propagation and mode-decomposition receiving.
//!
//! The receiver isolates mode `l0` by weighting every element sample with
//! `C_{m,l0}^{-1}` and the conjugate mode rotation, then summing over the
//! ring. With `φ = 0` the ring sum is an exact DFT and every mode comes out
//! clean; for `φ > 0` the m-dependent `ζ_m` and `B_m` leave residual
//! inter-mode leakage, quantified by [`crosstalk_matrix`].

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{ChannelMatrix, ModeChannelMatrix, ModeGainFactors};
use crate::error::{Error, Result};
use crate::geometry::{LinkGeometry, ModeIndexSet};

/// Below this `|C_{m,l}|` the per-element inversion is refused.
pub const OBSERVABILITY_FLOOR: f64 = 1e-12;

const SYMBOL_STREAM: u64 = u64::MAX;

/// One complex symbol per OAM mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSymbolVector {
    modes: ModeIndexSet,
    symbols: Vec<Complex64>,
}

impl ModeSymbolVector {
    pub fn new(modes: ModeIndexSet, symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.len() != modes.len() {
            return Err(Error::LengthMismatch {
                expected: modes.len(),
                actual: symbols.len(),
            });
        }
        if let Some(s) = symbols.iter().find(|s| !s.norm_sqr().is_finite()) {
            return Err(Error::InvalidParameter {
                field: "symbols",
                reason: format!("non-finite symbol {s}"),
            });
        }
        Ok(Self { modes, symbols })
    }

    pub fn zeros(modes: ModeIndexSet) -> Self {
        Self {
            modes,
            symbols: vec![Complex64::new(0.0, 0.0); modes.len()],
        }
    }

    /// All zero except `s_l = value`.
    pub fn single(modes: ModeIndexSet, l: i32, value: Complex64) -> Result<Self> {
        let i = modes.index_of(l).ok_or(Error::InvalidParameter {
            field: "mode",
            reason: format!("mode {l} outside [{}, {}]", modes.lower(), modes.upper()),
        })?;
        let mut v = Self::zeros(modes);
        v.symbols[i] = value;
        Ok(v)
    }

    /// Unit-modulus symbols with seeded uniform phases.
    pub fn random_unit_power(modes: ModeIndexSet, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SYMBOL_STREAM);
        let symbols = (0..modes.len())
            .map(|_| Complex64::cis(TAU * rng.random::<f64>()))
            .collect();
        Self { modes, symbols }
    }

    pub fn modes(&self) -> ModeIndexSet {
        self.modes
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn get(&self, l: i32) -> Option<Complex64> {
        self.modes.index_of(l).map(|i| self.symbols[i])
    }

    /// `Σ_l |s_l|²`.
    pub fn energy(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

/// Complex samples across the elements of one array.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSignalVector {
    pub side: Side,
    pub samples: Vec<Complex64>,
}

impl ElementSignalVector {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Independent circular complex Gaussian noise per receive element.
///
/// Draws are a pure function of `(seed, trial, element)`: each trial owns a
/// ChaCha stream and elements consume it in order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    variances: Vec<f64>,
    seed: u64,
}

impl NoiseModel {
    pub fn new(variances: Vec<f64>, seed: u64) -> Result<Self> {
        if let Some(v) = variances.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter {
                field: "noise_variance",
                reason: format!("must be finite and >= 0, got {v}"),
            });
        }
        Ok(Self { variances, seed })
    }

    pub fn uniform(n_rx: usize, variance: f64, seed: u64) -> Result<Self> {
        Self::new(vec![variance; n_rx], seed)
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    /// One realization `z_m` for every element, for the given trial.
    pub fn draw(&self, trial: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        self.variances
            .iter()
            .map(|&var| {
                let scale = (0.5 * var).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * scale
            })
            .collect()
    }
}

/// Output of the mode-decomposition receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct DemuxOutput {
    pub modes: ModeIndexSet,
    /// `y_{l0} = Σ_m y_{m,l0}`.
    pub per_mode: Vec<Complex64>,
    /// `y_{m,l0}`, rows are receive elements.
    pub per_element_terms: Array2<Complex64>,
    /// `ŝ_{l0} = y_{l0} / (M h)`.
    pub estimated_symbols: Vec<Complex64>,
}

impl DemuxOutput {
    pub fn estimate(&self, l: i32) -> Option<Complex64> {
        self.modes.index_of(l).map(|i| self.estimated_symbols[i])
    }
}

/// `x_n = (1/√N) Σ_l s_l e^{j(φ_n + α_r) l}`.
pub fn synthesize_transmit(
    symbols: &ModeSymbolVector,
    g: &LinkGeometry,
) -> Result<ElementSignalVector> {
    let modes = g.mode_index_set();
    if symbols.modes != modes {
        return Err(Error::LengthMismatch {
            expected: modes.len(),
            actual: symbols.symbols.len(),
        });
    }
    let norm = 1.0 / (g.n_tx() as f64).sqrt();
    let samples = (0..g.n_tx())
        .map(|n| {
            let az = g.tx_azimuth(n);
            modes
                .iter()
                .zip(&symbols.symbols)
                .map(|(l, s)| s * Complex64::cis(az * l as f64))
                .sum::<Complex64>()
                * norm
        })
        .collect();
    Ok(ElementSignalVector {
        side: Side::Tx,
        samples,
    })
}

fn add_noise(samples: &mut [Complex64], noise: Option<(&NoiseModel, u64)>) -> Result<()> {
    if let Some((model, trial)) = noise {
        if model.len() != samples.len() {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                actual: model.len(),
            });
        }
        for (y, z) in samples.iter_mut().zip(model.draw(trial)) {
            *y += z;
        }
    }
    Ok(())
}

/// `y_m = Σ_n h_mn x_n + z_m`.
pub fn propagate(
    tx: &ElementSignalVector,
    channel: &ChannelMatrix,
    noise: Option<(&NoiseModel, u64)>,
) -> Result<ElementSignalVector> {
    if tx.side != Side::Tx || tx.samples.len() != channel.n_tx() {
        return Err(Error::LengthMismatch {
            expected: channel.n_tx(),
            actual: tx.samples.len(),
        });
    }
    let mut samples: Vec<Complex64> = channel
        .gains()
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&tx.samples).map(|(h, x)| h * x).sum())
        .collect();
    add_noise(&mut samples, noise)?;
    Ok(ElementSignalVector {
        side: Side::Rx,
        samples,
    })
}

/// Mode-domain model of the received signal: `y_m = Σ_l h̃_ml s_l + z_m`.
pub fn propagate_modes(
    symbols: &ModeSymbolVector,
    channel: &ModeChannelMatrix,
    noise: Option<(&NoiseModel, u64)>,
) -> Result<ElementSignalVector> {
    if symbols.modes != channel.modes() {
        return Err(Error::LengthMismatch {
            expected: channel.modes().len(),
            actual: symbols.symbols.len(),
        });
    }
    let mut samples: Vec<Complex64> = channel
        .gains()
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&symbols.symbols).map(|(h, s)| h * s).sum())
        .collect();
    add_noise(&mut samples, noise)?;
    Ok(ElementSignalVector {
        side: Side::Rx,
        samples,
    })
}

/// Receive weight `C_{m,l0}^{-1} · conj(rotation_{m,l0})` for one element.
fn demux_weight(factors: &ModeGainFactors, m: usize, l0: i32) -> Result<Complex64> {
    let c = factors.c_factor(m, l0)?;
    let magnitude = c.norm();
    if magnitude < OBSERVABILITY_FLOOR {
        return Err(Error::ModeUnobservable {
            m,
            l: l0,
            magnitude,
        });
    }
    Ok(factors.mode_rotation(m, l0).conj() / c)
}

/// Decompose a single mode: returns `(y_{m,l0} for all m, y_{l0}, ŝ_{l0})`.
pub fn demultiplex_mode(
    rx: &ElementSignalVector,
    factors: &ModeGainFactors,
    l0: i32,
) -> Result<(Vec<Complex64>, Complex64, Complex64)> {
    if rx.side != Side::Rx || rx.samples.len() != factors.n_rx() {
        return Err(Error::LengthMismatch {
            expected: factors.n_rx(),
            actual: rx.samples.len(),
        });
    }
    let terms = rx
        .samples
        .iter()
        .enumerate()
        .map(|(m, y)| Ok(y * demux_weight(factors, m, l0)?))
        .collect::<Result<Vec<_>>>()?;
    let total: Complex64 = terms.iter().sum();
    let estimate = total / (factors.h() * factors.n_rx() as f64);
    Ok((terms, total, estimate))
}

/// Mode decomposition over the full mode set, using precomputed factors.
pub fn demultiplex_with(
    rx: &ElementSignalVector,
    factors: &ModeGainFactors,
) -> Result<DemuxOutput> {
    let modes = factors.modes();
    let mut terms = Array2::zeros((factors.n_rx(), modes.len()));
    let mut per_mode = Vec::with_capacity(modes.len());
    let mut estimated = Vec::with_capacity(modes.len());
    for (i, l0) in modes.iter().enumerate() {
        let (t, y, s) = demultiplex_mode(rx, factors, l0)?;
        for (m, v) in t.into_iter().enumerate() {
            terms[(m, i)] = v;
        }
        per_mode.push(y);
        estimated.push(s);
    }
    Ok(DemuxOutput {
        modes,
        per_mode,
        per_element_terms: terms,
        estimated_symbols: estimated,
    })
}

pub fn demultiplex(rx: &ElementSignalVector, g: &LinkGeometry) -> Result<DemuxOutput> {
    demultiplex_with(rx, &ModeGainFactors::new(g)?)
}

/// Receiver response to every transmitted mode: entry `(l0, l)` is the
/// estimate `ŝ_{l0}` produced by a unit symbol on mode `l` alone, through the
/// given mode channel.
pub fn crosstalk_matrix_for(
    factors: &ModeGainFactors,
    channel: &ModeChannelMatrix,
) -> Result<Array2<Complex64>> {
    let modes = factors.modes();
    if channel.modes() != modes || channel.n_rx() != factors.n_rx() {
        return Err(Error::LengthMismatch {
            expected: modes.len(),
            actual: channel.modes().len(),
        });
    }
    let scale = factors.h() * factors.n_rx() as f64;
    let mut out = Array2::zeros((modes.len(), modes.len()));
    for (i0, l0) in modes.iter().enumerate() {
        let weights = (0..factors.n_rx())
            .map(|m| demux_weight(factors, m, l0))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..modes.len() {
            let acc: Complex64 = weights
                .iter()
                .enumerate()
                .map(|(m, w)| channel.gains()[(m, i)] * w)
                .sum();
            out[(i0, i)] = acc / scale;
        }
    }
    Ok(out)
}

/// Crosstalk through the Bessel closed-form mode channel.
pub fn crosstalk_matrix(g: &LinkGeometry) -> Result<Array2<Complex64>> {
    let factors = ModeGainFactors::new(g)?;
    let channel = ModeChannelMatrix::closed_form(g)?;
    crosstalk_matrix_for(&factors, &channel)
}

/// Largest off-diagonal magnitude of a crosstalk matrix.
pub fn max_leakage(crosstalk: &Array2<Complex64>) -> f64 {
    crosstalk
        .indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

/// `(1/M) Σ_m e^{j2π m Δl / M}`: equals 1 for `Δl ≡ 0 (mod M)` and 0 otherwise.
pub fn ring_orthogonality(n_rx: usize, delta_l: i32) -> Complex64 {
    let sum: Complex64 = (0..n_rx)
        .map(|m| Complex64::cis(TAU * m as f64 * delta_l as f64 / n_rx as f64))
        .sum();
    sum / n_rx as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryParams;
    use std::f64::consts::PI;

    fn geometry(n: usize, phi: f64) -> LinkGeometry {
        LinkGeometry::new(GeometryParams {
            n_tx: n,
            n_rx: n,
            tilt_phi: phi,
            ..Default::default()
        })
        .unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_mode_synthesis() {
        let g = geometry(4, 0.0);
        let s = ModeSymbolVector::single(g.mode_index_set(), 0, c(1.0, 0.0)).unwrap();
        let x = synthesize_transmit(&s, &g).unwrap();
        assert_eq!(x.side, Side::Tx);
        for v in &x.samples {
            assert!((v - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_spatial_frequency() {
        let g = geometry(4, 0.0);
        let s = ModeSymbolVector::single(g.mode_index_set(), 1, c(1.0, 0.0)).unwrap();
        let x = synthesize_transmit(&s, &g).unwrap();
        for (n, v) in x.samples.iter().enumerate() {
            let want = Complex64::cis(PI * n as f64 / 2.0) * 0.5;
            assert!((v - want).norm() < 1e-15);
        }
    }

    #[test]
    fn symbol_length_checked() {
        let g = geometry(4, 0.0);
        assert!(matches!(
            ModeSymbolVector::new(g.mode_index_set(), vec![c(1.0, 0.0); 3]),
            Err(Error::LengthMismatch {
                expected: 4,
                actual: 3
            })
        ));
        let other = ModeSymbolVector::zeros(ModeIndexSet::for_elements(6));
        assert!(synthesize_transmit(&other, &g).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let g = geometry(10, 0.4);
        let x = synthesize_transmit(&ModeSymbolVector::zeros(g.mode_index_set()), &g).unwrap();
        let y = propagate(&x, &ChannelMatrix::exact(&g), None).unwrap();
        assert!(y.samples.iter().all(|v| *v == c(0.0, 0.0)));
        assert_eq!(y.side, Side::Rx);
    }

    #[test]
    fn single_mode_reaches_element_as_mode_gain() {
        let g = LinkGeometry::new(GeometryParams {
            tilt_phi: 0.5,
            offset_alpha_tx: 0.3,
            ..Default::default()
        })
        .unwrap();
        let ch = ChannelMatrix::far_field(&g).unwrap();
        let modes = ModeChannelMatrix::from_elements(&ch, &g).unwrap();
        for l0 in g.mode_index_set().iter() {
            let s = ModeSymbolVector::single(g.mode_index_set(), l0, c(1.0, 0.0)).unwrap();
            let y = propagate(&synthesize_transmit(&s, &g).unwrap(), &ch, None).unwrap();
            for m in 0..10 {
                assert!((y.samples[m] - modes.gain(m, l0).unwrap()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_is_reproducible_per_trial() {
        let n = NoiseModel::uniform(8, 0.3, 42).unwrap();
        assert_eq!(n.draw(5), n.draw(5));
        assert_ne!(n.draw(5), n.draw(6));
        let other = NoiseModel::uniform(8, 0.3, 43).unwrap();
        assert_ne!(n.draw(5), other.draw(5));
        let silent = NoiseModel::uniform(8, 0.0, 42).unwrap();
        assert!(silent.draw(0).iter().all(|z| z.norm() == 0.0));
        assert!(NoiseModel::new(vec![1.0, -1.0], 0).is_err());
    }

    #[test]
    fn noise_variance_monte_carlo() {
        let noise = NoiseModel::uniform(4, 1.0, 7).unwrap();
        let trials = 10_000;
        let mut acc = [0.0; 4];
        for t in 0..trials {
            for (a, z) in acc.iter_mut().zip(noise.draw(t)) {
                *a += z.norm_sqr();
            }
        }
        for a in acc {
            let var = a / trials as f64;
            assert!((var - 1.0).abs() < 0.05, "{var}");
        }
    }

    #[test]
    fn unobservable_mode_is_reported() {
        // B_m -> 0 makes J_l(B_m) vanish for every l != 0.
        let g = LinkGeometry::new(GeometryParams {
            radius_tx: 1e-20,
            ..Default::default()
        })
        .unwrap();
        let f = ModeGainFactors::new(&g).unwrap();
        let rx = ElementSignalVector {
            side: Side::Rx,
            samples: vec![c(1.0, 0.0); 10],
        };
        assert!(demultiplex_mode(&rx, &f, 0).is_ok());
        assert!(matches!(
            demultiplex_mode(&rx, &f, 1),
            Err(Error::ModeUnobservable { m: 0, l: 1, .. })
        ));
        assert!(matches!(
            demultiplex(&rx, &g),
            Err(Error::ModeUnobservable { .. })
        ));
        assert!(matches!(
            crosstalk_matrix(&g),
            Err(Error::ModeUnobservable { .. })
        ));
    }

    #[test]
    fn ring_kernel() {
        for m in [4usize, 7, 10] {
            for dl in -(m as i32) + 1..m as i32 {
                let k = ring_orthogonality(m, dl);
                let want = if dl == 0 { 1.0 } else { 0.0 };
                assert!((k - c(want, 0.0)).norm() < 1e-12, "M={m} dl={dl}");
            }
        }
    }
}
