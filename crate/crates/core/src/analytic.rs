//! Closed-form and semi-analytic estimates of the Majorana coupling through
//! a gapped central segment.
//!
//! * [`coupling_eq12`]: second-order Schrieffer-Wolff result
//!   `ε = t1 t2 / sqrt(μ² + Δ² - t²) · e^{-N/ξ}`.
//! * [`coupling_boundary_pairing`]: the same with `t1 t2 -> (t1+Δ1)(t2+Δ2)`.
//! * [`coupling_longrange`]: residue sum over the decaying roots of the
//!   quartic characteristic polynomial of a chain with next-nearest terms.
//! * [`sw_coupling_ksum`]: the Schrieffer-Wolff momentum sum evaluated on a
//!   dense grid, normalized once against [`coupling_eq12`].

use nalgebra::{Complex, DMatrix};
use serde::Serialize;
use thiserror::Error;

use crate::chain::{CenterParams, JunctionParams};
use crate::scalar::Real;

/// Roots closer than this are treated as coincident.
pub const ROOT_COINCIDENCE_TOL: f64 = 1e-7;
/// Roots within this distance of the unit circle make the residue sum ill-defined.
pub const UNIT_CIRCLE_TOL: f64 = 1e-9;
/// Points per central site in the momentum grid of [`sw_coupling_ksum`].
pub const KSUM_OVERSAMPLING: usize = 64;
/// Normalization of the momentum sum, fixed by matching [`coupling_eq12`] at
/// `μ = 8, Δ = 5, t = t1 = t2 = 1, N = 12`.
pub const SW_KSUM_NORMALIZATION: f64 = 3.969_406_409_179_032_6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("formula outside its domain: {0}")]
    Domain(&'static str),
    #[error("gapless point: E_k = {energy:e} at k = {k}")]
    GaplessPoint { k: f64, energy: f64 },
    #[error("roots {a} and {b} coincide within {tol:e}")]
    DegenerateRoots { a: String, b: String, tol: f64 },
    #[error("root {root} lies on the unit circle; the central segment is gapless")]
    BoundaryRoot { root: String },
    #[error("nearest-neighbour formula applied to a chain with next-nearest terms")]
    LongRangeUnsupported,
    #[error("need at least one central bond")]
    NoBonds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eq12,
    Eq12BoundaryPairing,
    LongrangeResidue,
    SwKsum,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Eq12 => "eq12",
            Method::Eq12BoundaryPairing => "eq12_boundary_pairing",
            Method::LongrangeResidue => "longrange_residue",
            Method::SwKsum => "sw_ksum",
        }
    }
}

/// `E_k`, `u_k`, `v_k` of the homogeneous central chain at wavenumber `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkSpectrumPoint<T> {
    pub k: T,
    pub energy: T,
    pub u: T,
    pub v: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEstimate<T: Real> {
    pub epsilon: T,
    pub method: Method,
    pub coherence_length: Option<T>,
    pub roots: Option<QuarticRoots<T>>,
}

/// Roots of the characteristic polynomial of the central chain.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticRoots<T: Real> {
    /// Finite roots.
    pub roots: Vec<Complex<T>>,
    /// Number of roots sent to infinity by a vanishing leading coefficient.
    pub at_infinity: usize,
    /// Indices into `roots` of the roots strictly inside the unit circle.
    pub inside_unit_circle: Vec<usize>,
    /// Leading nonzero coefficient, needed to normalize residues.
    pub leading: T,
    /// Coefficients from the highest power down, as passed in.
    pub coefficients: Vec<T>,
}

impl<T: Real> QuarticRoots<T> {
    /// `max |P(z)|` over the roots, relative to the coefficient scale.
    pub fn residual(&self) -> T {
        let scale = self.coefficients.iter().fold(T::zero(), |a, c| a.max(c.abs()));
        self.roots
            .iter()
            .map(|z| {
                let r = cabs(*z).max(T::one());
                let deg = self.coefficients.len() as i32 - 1;
                cabs(horner(&self.coefficients, *z)) / (scale * r.powi(deg))
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn inside(&self) -> impl Iterator<Item = Complex<T>> + '_ {
        self.inside_unit_circle.iter().map(|&i| self.roots[i])
    }
}

pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

fn horner<T: Real>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    coeffs
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + Complex::new(c, T::zero()))
}

fn horner_derivative<T: Real>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    let deg = coeffs.len() - 1;
    coeffs[..deg]
        .iter()
        .enumerate()
        .fold(Complex::new(T::zero(), T::zero()), |acc, (i, &c)| {
            acc * z + Complex::new(c * T::from_usize_lossy(deg - i), T::zero())
        })
}

fn fmt_complex<T: Real>(z: Complex<T>) -> String {
    format!("{}{:+}i", z.re.as_f64(), z.im.as_f64())
}

/// Roots of `c[0] z^d + c[1] z^{d-1} + .. + c[d]` from the eigenvalues of the
/// companion matrix, polished with a few Newton steps.
///
/// Leading coefficients that vanish relative to the largest one are counted
/// as roots at infinity.
pub fn polynomial_roots<T: Real>(coefficients: &[T]) -> Result<QuarticRoots<T>, AnalyticError> {
    let scale = coefficients.iter().fold(T::zero(), |a, c| a.max(c.abs()));
    let negligible = scale * T::default_epsilon() * T::lit(16.0);
    let at_infinity = coefficients.iter().take_while(|c| c.abs() <= negligible).count();
    let active = &coefficients[at_infinity.min(coefficients.len())..];
    let zero = Complex::new(T::zero(), T::zero());
    if active.len() <= 1 {
        return Ok(QuarticRoots {
            roots: Vec::new(),
            at_infinity,
            inside_unit_circle: Vec::new(),
            leading: active.first().copied().unwrap_or_else(T::zero),
            coefficients: coefficients.to_vec(),
        });
    }
    let lead = active[0];
    let deg = active.len() - 1;
    let companion = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -active[j + 1] / lead
        } else if i == j + 1 {
            T::one()
        } else {
            T::zero()
        }
    });
    let mut roots: Vec<Complex<T>> = companion.complex_eigenvalues().iter().copied().collect();
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let d = horner_derivative(active, *z);
            if d == zero {
                break;
            }
            let step = horner(active, *z) / d;
            if cabs(step) > T::lit(1e-3) * cabs(*z).max(T::one()) {
                break;
            }
            *z -= step;
        }
    }
    roots.sort_by(|a, b| {
        cabs(*a)
            .partial_cmp(&cabs(*b))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });

    let tol = T::lit(ROOT_COINCIDENCE_TOL);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if cabs(roots[i] - roots[j]) < tol {
                return Err(AnalyticError::DegenerateRoots {
                    a: fmt_complex(roots[i]),
                    b: fmt_complex(roots[j]),
                    tol: ROOT_COINCIDENCE_TOL,
                });
            }
        }
    }
    let circle = T::one() - T::lit(UNIT_CIRCLE_TOL);
    let inside_unit_circle = (0..roots.len()).filter(|&i| cabs(roots[i]) < circle).collect();
    Ok(QuarticRoots {
        roots,
        at_infinity,
        inside_unit_circle,
        leading: lead,
        coefficients: coefficients.to_vec(),
    })
}

/// Roots of `(Δ2-t2) z⁴ + (Δ1-t1) z³ + 2μ z² - (Δ1+t1) z - (Δ2+t2)`.
pub fn quartic_roots<T: Real>(center: &CenterParams<T>) -> Result<QuarticRoots<T>, AnalyticError> {
    let c = center;
    let two = T::lit(2.0);
    polynomial_roots(&[
        c.delta2 - c.t2,
        c.delta - c.t,
        two * c.mu,
        -(c.delta + c.t),
        -(c.delta2 + c.t2),
    ])
}

fn require_nearest<T: Real>(center: &CenterParams<T>) -> Result<(), AnalyticError> {
    if center.has_long_range() {
        Err(AnalyticError::LongRangeUnsupported)
    } else {
        Ok(())
    }
}

/// Quasiparticle energy and coherence factors of the bulk central chain.
pub fn bulk_spectrum<T: Real>(center: &CenterParams<T>, k: T) -> Result<BulkSpectrumPoint<T>, AnalyticError> {
    require_nearest(center)?;
    let hz = center.mu - center.t * k.cos();
    let hy = center.delta * k.sin();
    let energy = (hz * hz + hy * hy).sqrt();
    if energy <= T::lit(1e-12) {
        return Err(AnalyticError::GaplessPoint { k: k.as_f64(), energy: energy.as_f64() });
    }
    let half = T::lit(0.5);
    let ratio = hz / energy;
    Ok(BulkSpectrumPoint {
        k,
        energy,
        u: (half * (T::one() + ratio)).max(T::zero()).sqrt(),
        v: (half * (T::one() - ratio)).max(T::zero()).sqrt(),
    })
}

/// `ξ` with `1/ξ = ln[(Δ - t) / (sqrt(μ² + Δ² - t²) - μ)]`.
///
/// Only the decaying branch is accepted: `Δ > t`, `μ² + Δ² > t²` and a log
/// argument above one.
pub fn coherence_length<T: Real>(mu: T, t: T, delta: T) -> Result<T, AnalyticError> {
    if !(delta > t) {
        return Err(AnalyticError::Domain("requires delta > t"));
    }
    let s2 = mu * mu + delta * delta - t * t;
    if !(s2 > T::zero()) {
        return Err(AnalyticError::Domain("requires mu^2 + delta^2 > t^2"));
    }
    let denom = s2.sqrt() - mu;
    if !(denom > T::zero()) {
        return Err(AnalyticError::Domain("requires sqrt(mu^2 + delta^2 - t^2) > mu"));
    }
    let arg = (delta - t) / denom;
    if !(arg > T::one()) {
        return Err(AnalyticError::Domain("log argument must exceed 1 (decaying solution)"));
    }
    Ok(T::one() / arg.ln())
}

fn eq12_core<T: Real>(prefactor: T, center: &CenterParams<T>, n: usize) -> Result<(T, T), AnalyticError> {
    require_nearest(center)?;
    if n == 0 {
        return Err(AnalyticError::NoBonds);
    }
    let xi = coherence_length(center.mu, center.t, center.delta)?;
    let gap = (center.mu * center.mu + center.delta * center.delta - center.t * center.t).sqrt();
    let eps = prefactor / gap * (-T::from_usize_lossy(n) / xi).exp();
    Ok((eps, xi))
}

/// `ε = t1 t2 / sqrt(μ² + Δ² - t²) · e^{-N/ξ}` for `N` central bonds.
pub fn coupling_eq12<T: Real>(
    t1: T,
    t2: T,
    center: &CenterParams<T>,
    n: usize,
) -> Result<CouplingEstimate<T>, AnalyticError> {
    let (epsilon, xi) = eq12_core(t1 * t2, center, n)?;
    Ok(CouplingEstimate { epsilon, method: Method::Eq12, coherence_length: Some(xi), roots: None })
}

/// [`coupling_eq12`] with the junction product revised to `(t1+Δ1)(t2+Δ2)`.
pub fn coupling_boundary_pairing<T: Real>(
    junction: &JunctionParams<T>,
    center: &CenterParams<T>,
    n: usize,
) -> Result<CouplingEstimate<T>, AnalyticError> {
    let j = junction;
    let (epsilon, xi) = eq12_core((j.t1 + j.delta1) * (j.t2 + j.delta2), center, n)?;
    Ok(CouplingEstimate {
        epsilon,
        method: Method::Eq12BoundaryPairing,
        coherence_length: Some(xi),
        roots: None,
    })
}

/// Residue formula for a central chain with next-nearest terms:
///
/// `ε = Σ_{|z_k|<1} |2 (t1 z_k + t1')(t2 z_k + t2') z_k^{N-1} / P'(z_k)|`
///
/// where `P` is the quartic of [`quartic_roots`] including its leading
/// coefficient, so that dropping the next-nearest terms reproduces
/// [`coupling_eq12`] exactly.
pub fn coupling_longrange<T: Real>(
    junction: &JunctionParams<T>,
    center: &CenterParams<T>,
    n: usize,
) -> Result<CouplingEstimate<T>, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::NoBonds);
    }
    let roots = quartic_roots(center)?;
    let tol = T::lit(UNIT_CIRCLE_TOL);
    if let Some(z) = roots.roots.iter().find(|z| (cabs(**z) - T::one()).abs() <= tol) {
        return Err(AnalyticError::BoundaryRoot { root: fmt_complex(*z) });
    }
    let re = |x: T| Complex::new(x, T::zero());
    let j = junction;
    let mut epsilon = T::zero();
    for &k in &roots.inside_unit_circle {
        let z = roots.roots[k];
        let mut denom = re(roots.leading);
        for (i, w) in roots.roots.iter().enumerate() {
            if i != k {
                denom *= z - *w;
            }
        }
        let num = re(T::lit(2.0)) * (re(j.t1) * z + re(j.t1p)) * (re(j.t2) * z + re(j.t2p)) * z.powi(n as i32 - 1);
        epsilon += cabs(num / denom);
    }
    let coherence_length = coherence_length(center.mu, center.t, center.delta).ok();
    Ok(CouplingEstimate {
        epsilon,
        method: Method::LongrangeResidue,
        coherence_length,
        roots: Some(roots),
    })
}

/// Unnormalized momentum sum `(1/M) Σ_k t1 t2 (u_k + v_k)(u_k - v_k) e^{ikN} / (2 E_k)`
/// over `M = 64 (N + 1)` points `k = 2πm/M`.
pub fn sw_ksum_raw<T: Real>(
    junction: &JunctionParams<T>,
    center: &CenterParams<T>,
    n: usize,
) -> Result<Complex<T>, AnalyticError> {
    require_nearest(center)?;
    let m = KSUM_OVERSAMPLING * (n + 1);
    let two_pi = T::two_pi();
    let mut sum = Complex::new(T::zero(), T::zero());
    let nn = T::from_usize_lossy(n);
    for idx in 0..m {
        let k = two_pi * T::from_usize_lossy(idx) / T::from_usize_lossy(m);
        let p = bulk_spectrum(center, k)?;
        let weight = junction.t1 * junction.t2 * (p.u + p.v) * (p.u - p.v) / (T::lit(2.0) * p.energy);
        let phase = k * nn;
        sum += Complex::new(weight * phase.cos(), weight * phase.sin());
    }
    Ok(sum / Complex::new(T::from_usize_lossy(m), T::zero()))
}

/// Schrieffer-Wolff momentum sum, scaled by [`SW_KSUM_NORMALIZATION`].
pub fn sw_coupling_ksum<T: Real>(
    junction: &JunctionParams<T>,
    center: &CenterParams<T>,
    n: usize,
) -> Result<CouplingEstimate<T>, AnalyticError> {
    let raw = sw_ksum_raw(junction, center, n)?;
    Ok(CouplingEstimate {
        epsilon: T::lit(SW_KSUM_NORMALIZATION) * cabs(raw),
        method: Method::SwKsum,
        coherence_length: coherence_length(center.mu, center.t, center.delta).ok(),
        roots: None,
    })
}
