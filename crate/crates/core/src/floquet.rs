//! High-frequency description of a chain whose central segment is driven by
//! `μ0 cos(ωt) Σ n_i`.
//!
//! In the frame co-rotating with the drive, a bond with one driven end picks
//! up `e^{±i(μ0/ω) sin ωt}` and a central pairing bond `e^{2i(μ0/ω) sin ωt}`.
//! Keeping only the static Fourier component multiplies these amplitudes by
//! `J0(μ0/ω)` and `J0(2μ0/ω)`. Central hopping is untouched because both of
//! its ends rotate together.

use std::f64::consts::{FRAC_PI_4, PI};

use thiserror::Error;

use crate::chain::{ChainConfig, ConfigError, DriveParams, ValidatedConfig};
use crate::scalar::Real;

/// Largest index accepted by [`bessel_j0_zero`].
pub const MAX_ZERO_INDEX: usize = 20;
/// `|J0|` values at or below this are snapped to an exact zero when
/// renormalizing amplitudes.
pub const J0_ZERO_SNAP: f64 = 1e-10;
/// The drive frequency should exceed this multiple of every central amplitude.
pub const HIGH_FREQUENCY_FACTOR: f64 = 10.0;

const SERIES_LIMIT: f64 = 12.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error("J0 target {0} outside (0, 1]")]
    TargetOutOfRange(f64),
    #[error("zero index {0} outside 1..={MAX_ZERO_INDEX}")]
    ZeroIndexOutOfRange(usize),
}

/// Zeroth-order Bessel function of the first kind.
///
/// Power series for `|x| <= 12`, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        let q = -0.25 * x * x;
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut k = 1.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) || k < 4.0 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
            if k > 200.0 {
                break;
            }
        }
        sum
    } else {
        let (p, q) = hankel_pq(x);
        let chi = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Asymptotic `P0(x)`, `Q0(x)`, truncated at the smallest term.
fn hankel_pq(x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..200u32 {
        if k > 0 {
            let kk = f64::from(k);
            a *= (2.0 * kk - 1.0).powi(2) / (8.0 * kk * x);
        }
        if a.abs() > prev {
            break;
        }
        prev = a.abs();
        // P = 1 - a2 + a4 - .., Q = -a1 + a3 - ..
        if k % 2 == 0 {
            p += if (k / 2) % 2 == 0 { a } else { -a };
        } else {
            q += if k.div_ceil(2) % 2 == 0 { a } else { -a };
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `n`-th positive zero of `J0`, bracketed on `((n - 1/2)π, nπ)`.
pub fn bessel_j0_zero(n: usize) -> Result<f64, FloquetError> {
    if n == 0 || n > MAX_ZERO_INDEX {
        return Err(FloquetError::ZeroIndexOutOfRange(n));
    }
    let nf = n as f64;
    Ok(bisect(bessel_j0, (nf - 0.5) * PI, nf * PI))
}

/// Drive ratio `x ∈ [0, j_{0,1}]` with `J0(x) = target`.
pub fn invert_j0(target: f64) -> Result<f64, FloquetError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(FloquetError::TargetOutOfRange(target));
    }
    if target == 1.0 {
        return Ok(0.0);
    }
    let first = bessel_j0_zero(1)?;
    Ok(bisect(|x| bessel_j0(x) - target, 0.0, first))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FloquetWarning {
    /// `ω` is below [`HIGH_FREQUENCY_FACTOR`] times the largest central amplitude.
    LowFrequency { omega: f64, required: f64 },
}

impl std::fmt::Display for FloquetWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FloquetWarning::LowFrequency { omega, required } => write!(
                f,
                "drive frequency {omega} is below {required}; the high-frequency description may be inaccurate"
            ),
        }
    }
}

/// Time-averaged chain of a driven configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveConfig<T> {
    pub base: ChainConfig<T>,
    pub config: ChainConfig<T>,
    /// `J0(μ0/ω)`, applied to every bond that crosses a junction.
    pub j0_boundary: T,
    /// `J0(2μ0/ω)`, applied to central pairing.
    pub j0_pairing: T,
    pub warnings: Vec<FloquetWarning>,
}

impl<T: Real> EffectiveConfig<T> {
    /// Validates the effective chain, allowing the signed amplitudes that
    /// negative Bessel factors produce.
    pub fn validated(&self) -> Result<ValidatedConfig<T>, ConfigError> {
        ValidatedConfig::new_signed(self.config)
    }
}

fn snapped_j0<T: Real>(x: f64) -> T {
    let j = bessel_j0(x);
    T::lit(if j.abs() <= J0_ZERO_SNAP { 0.0 } else { j })
}

/// Bessel-renormalized chain for a drive on the central sites.
pub fn effective_config<T: Real>(config: &ChainConfig<T>, drive: &DriveParams<T>) -> EffectiveConfig<T> {
    let ratio = drive.ratio().as_f64();
    let j0_boundary: T = snapped_j0(ratio);
    let j0_pairing: T = snapped_j0(2.0 * ratio);

    let mut eff = *config;
    eff.center.delta *= j0_pairing;
    eff.center.delta2 *= j0_pairing;
    let j = &mut eff.junction;
    for amp in [&mut j.t1, &mut j.t2, &mut j.t1p, &mut j.t2p, &mut j.delta1, &mut j.delta2] {
        *amp *= j0_boundary;
    }

    let c = &config.center;
    let scale = c.mu.abs().max(c.t.abs()).max(c.delta.abs()).as_f64();
    let required = HIGH_FREQUENCY_FACTOR * scale;
    let omega = drive.omega.as_f64();
    let mut warnings = Vec::new();
    if omega < required {
        let w = FloquetWarning::LowFrequency { omega, required };
        log::warn!("{w}");
        warnings.push(w);
    }
    EffectiveConfig { base: *config, config: eff, j0_boundary, j0_pairing, warnings }
}
