//! Integer-order Bessel functions of the first kind.
//!
//! `J_l(x) = (1/2π) ∫_0^{2π} e^{jlτ} e^{-jx sin τ} dτ`. Production values come
//! from the ascending series (small `x`) or Miller's backward recurrence
//! normalized by `J_0 + 2 Σ J_{2k} = 1`. The integral itself, evaluated by the
//! trapezoidal rule, is kept as an independent oracle.

use std::f64::consts::TAU;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported `|l|`.
pub const MAX_ORDER: i32 = 64;

const SERIES_LIMIT: f64 = 1.0;
const RESCALE_ABOVE: f64 = 1e250;

/// Bessel order with `|l| ≤ 64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BesselOrder(i32);

impl BesselOrder {
    pub fn new(order: i32) -> Result<Self> {
        if order.abs() > MAX_ORDER {
            Err(Error::OrderOutOfRange(order))
        } else {
            Ok(Self(order))
        }
    }

    pub fn get(self) -> i32 {
        self.0
    }
}

/// `J_order(x)` for integer `order` and real `x`.
pub fn bessel_j(order: i32, x: f64) -> Result<f64> {
    let order = BesselOrder::new(order)?.get();
    let n = order.unsigned_abs();
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
    let mut flip = false;
    if order < 0 && n % 2 == 1 {
        flip = !flip;
    }
    if x < 0.0 && n % 2 == 1 {
        flip = !flip;
    }
    let v = jn_nonneg(n, x.abs());
    Ok(if flip { -v } else { v })
}

fn jn_nonneg(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x.is_nan() {
        return f64::NAN;
    }
    if x < SERIES_LIMIT {
        series(n, x)
    } else {
        miller(n, x)
    }
}

/// `Σ_k (-1)^k (x/2)^{2k+n} / (k! (n+k)!)`.
fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = half * half;
    let mut sum = term;
    for k in 1..200u32 {
        term *= -q / (k as f64 * (n + k) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() * 1e-3 {
            break;
        }
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let top = n.max(x.ceil() as u32);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as u32;
    start += start % 2;

    let mut above = 0.0; // J_{k+1}
    let mut current = 1e-30; // J_k, arbitrary scale
    let mut norm = 2.0 * current; // start is even
    let mut picked = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx == n {
            picked = current;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            current *= s;
            above *= s;
            norm *= s;
            picked *= s;
        }
    }
    norm += current;
    picked / norm
}

/// Trapezoidal evaluation of the real part of the defining integral with
/// `nodes` equally spaced samples on `[0, 2π)`.
///
/// The integrand `cos(lτ - x sin τ)` is symmetric about `τ = π`, so only half
/// the nodes are evaluated.
///
/// # Panics
/// If `nodes < 1024`.
pub fn bessel_j_quadrature(order: i32, x: f64, nodes: usize) -> f64 {
    assert!(
        nodes >= 1024,
        "quadrature needs at least 1024 nodes, got {nodes}"
    );
    let l = order as f64;
    let step = TAU / nodes as f64;
    let f = |k: usize| {
        let tau = step * k as f64;
        (l * tau - x * tau.sin()).cos()
    };
    let mut sum = f(0);
    let half = nodes / 2;
    let paired_end = if nodes.is_multiple_of(2) {
        sum += f(half);
        half
    } else {
        half + 1
    };
    let mut pairs = 0.0;
    for k in 1..paired_end {
        pairs += f(k);
    }
    (sum + 2.0 * pairs) / nodes as f64
}

/// [`bessel_j_quadrature`] for every order in `orders` at once, sharing the
/// node evaluations. `e^{jlτ}` is advanced by repeated multiplication, which
/// costs a few ulps per order step.
///
/// # Panics
/// If `nodes < 1024`.
pub fn bessel_j_quadrature_orders(orders: RangeInclusive<i32>, x: f64, nodes: usize) -> Vec<f64> {
    assert!(
        nodes >= 1024,
        "quadrature needs at least 1024 nodes, got {nodes}"
    );
    let (lo, hi) = (*orders.start(), *orders.end());
    if lo > hi {
        return Vec::new();
    }
    let count = (hi - lo + 1) as usize;
    let step = TAU / nodes as f64;
    let mut acc = vec![0.0; count];
    let mut add = |k: usize, weight: f64| {
        let tau = step * k as f64;
        let (s, c) = (lo as f64 * tau - x * tau.sin()).sin_cos();
        let mut term = Complex64::new(c, s);
        let rot = Complex64::cis(tau);
        for a in acc.iter_mut() {
            *a += weight * term.re;
            term *= rot;
        }
    };
    add(0, 1.0);
    let half = nodes / 2;
    let paired_end = if nodes.is_multiple_of(2) {
        add(half, 1.0);
        half
    } else {
        half + 1
    };
    for k in 1..paired_end {
        add(k, 2.0);
    }
    acc.into_iter().map(|a| a / nodes as f64).collect()
}
